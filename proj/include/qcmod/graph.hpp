#pragma once

#include "qcmod/space.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <vector>

namespace qcmod {

/// Connected components of the subgraph induced by `subset`, each sorted by node id;
/// components ordered by their smallest member.
inline std::vector<std::vector<NodeId>> subset_components(const DiscreteSpace& space,
                                                          const std::vector<NodeId>& subset) {
    std::vector<char> in(space.size(), 0), seen(space.size(), 0);
    for (NodeId v : subset) in[v] = 1;
    std::vector<std::vector<NodeId>> comps;
    std::vector<NodeId> order = subset;
    std::sort(order.begin(), order.end());
    for (NodeId s : order) {
        if (seen[s]) continue;
        std::vector<NodeId> comp;
        std::queue<NodeId> q;
        q.push(s);
        seen[s] = 1;
        while (!q.empty()) {
            NodeId v = q.front();
            q.pop();
            comp.push_back(v);
            for (auto [w, len] : space.neighbors(v)) {
                (void)len;
                if (in[w] && !seen[w]) {
                    seen[w] = 1;
                    q.push(w);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

inline bool subset_connected(const DiscreteSpace& space, const std::vector<NodeId>& subset) {
    if (subset.empty()) return false;
    return subset_components(space, subset).size() == 1;
}

struct DijkstraResult {
    std::vector<NodeId> path; // empty when no admissible path exists
    double length = std::numeric_limits<double>::infinity();
    bool found = false;
};

/// Multi-source shortest path from `sources` to `targets`. An edge (u,v) may be
/// entered at v only when allow_interior(v) or v is a target; targets absorb.
/// weight(u,v) must be >= 0. Ties are broken toward lexicographically smaller
/// predecessor chains via the (dist, node) ordering, which is deterministic.
inline DijkstraResult shortest_connecting_path(
    const DiscreteSpace& space, const std::vector<NodeId>& sources,
    const std::vector<NodeId>& targets, const std::vector<char>& allow_interior,
    const std::function<double(NodeId, NodeId, double)>& weight) {
    const std::size_t n = space.size();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<NodeId> prev(n, kNoNode);
    std::vector<char> is_target(n, 0);
    for (NodeId t : targets) is_target[t] = 1;

    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    std::vector<NodeId> srcs = sources;
    std::sort(srcs.begin(), srcs.end());
    for (NodeId s : srcs)
        if (dist[s] > 0.0) {
            dist[s] = 0.0;
            pq.push({0.0, s});
        }

    DijkstraResult res;
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v]) continue;
        if (is_target[v]) {
            res.found = true;
            res.length = d;
            for (NodeId c = v; c != kNoNode; c = prev[c]) res.path.push_back(c);
            std::reverse(res.path.begin(), res.path.end());
            return res;
        }
        for (auto [w, sigma] : space.neighbors(v)) {
            if (!allow_interior[w] && !is_target[w]) continue;
            double nd = d + weight(v, w, sigma);
            if (nd < dist[w]) {
                dist[w] = nd;
                prev[w] = v;
                pq.push({nd, w});
            }
        }
    }
    return res;
}

struct ConnectingTree {
    std::vector<double> dist;  // per node; targets hold their arrival distance
    std::vector<NodeId> prev;  // predecessor chain (kNoNode at sources)
    std::vector<NodeId> reached_targets; // in increasing arrival distance
};

/// Full multi-source Dijkstra sweep for separation batches: targets absorb (their
/// edges are not relaxed) and every reached target is recorded, cheapest first.
inline ConnectingTree connecting_tree(const DiscreteSpace& space,
                                      const std::vector<NodeId>& sources,
                                      const std::vector<NodeId>& targets,
                                      const std::vector<char>& allow_interior,
                                      const std::function<double(NodeId, NodeId, double)>& weight) {
    const std::size_t n = space.size();
    ConnectingTree tree;
    tree.dist.assign(n, std::numeric_limits<double>::infinity());
    tree.prev.assign(n, kNoNode);
    std::vector<char> is_target(n, 0);
    for (NodeId t : targets) is_target[t] = 1;

    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    std::vector<NodeId> srcs = sources;
    std::sort(srcs.begin(), srcs.end());
    for (NodeId s : srcs)
        if (tree.dist[s] > 0.0) {
            tree.dist[s] = 0.0;
            pq.push({0.0, s});
        }
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > tree.dist[v]) continue;
        if (is_target[v]) {
            tree.reached_targets.push_back(v);
            continue; // absorbing
        }
        for (auto [w, sigma] : space.neighbors(v)) {
            if (!allow_interior[w] && !is_target[w]) continue;
            double nd = d + weight(v, w, sigma);
            if (nd < tree.dist[w]) {
                tree.dist[w] = nd;
                tree.prev[w] = v;
                pq.push({nd, w});
            }
        }
    }
    return tree;
}

inline std::vector<NodeId> tree_path(const ConnectingTree& tree, NodeId target) {
    std::vector<NodeId> path;
    for (NodeId c = target; c != kNoNode; c = tree.prev[c]) path.push_back(c);
    std::reverse(path.begin(), path.end());
    return path;
}

/// Fewest-hop path between two nodes with deterministic lexicographic tie-breaks.
inline std::vector<NodeId> shortest_hop_path(const DiscreteSpace& space, NodeId from, NodeId to) {
    if (from == to) return {from};
    const std::size_t n = space.size();
    std::vector<NodeId> prev(n, kNoNode);
    std::vector<int> hops(n, -1);
    std::queue<NodeId> q;
    hops[from] = 0;
    q.push(from);
    while (!q.empty()) {
        NodeId v = q.front();
        q.pop();
        if (v == to) break;
        for (auto [w, len] : space.neighbors(v)) {
            (void)len;
            if (hops[w] < 0) {
                hops[w] = hops[v] + 1;
                prev[w] = v;
                q.push(w);
            } else if (hops[w] == hops[v] + 1 && prev[w] != kNoNode &&
                       space.names[v] < space.names[prev[w]]) {
                prev[w] = v; // deterministic reconnection
            }
        }
    }
    if (hops[to] < 0) return {};
    std::vector<NodeId> path;
    for (NodeId c = to; c != kNoNode; c = prev[c]) path.push_back(c);
    std::reverse(path.begin(), path.end());
    return path;
}

} // namespace qcmod
