#pragma once

#include "qcmod/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcmod {

enum class MetricKind {
    euclidean, ///< distance between node coordinates (default for geometric builds)
    graph,     ///< shortest-path distance over edge lengths (all pairs, precomputed)
    table      ///< explicit distance matrix (synthetic witness spaces)
};

struct Edge {
    NodeId u = 0, v = 0;
    double sigma = 0.0;  // length, > 0
    double cond_w = 1.0; // direction weight used by the conductance stencil
};

struct RingSpec {
    Point center{0.0, 0.0, 0.0};
    double r1 = 0.0;
    double r2 = 0.0;
};

struct RegularityReport {
    std::vector<double> radii;
    std::vector<double> ratios;          // mu(B(x0,R)) / R^alpha
    std::vector<double> doubling_ratios; // mu(B(x0,2R)) / mu(B(x0,R))
    double constant = 1.0;               // smallest C >= 1 with 1/C <= ratio <= C
    double min_ratio = 0.0;
    double max_ratio = 0.0;
};

/// Finite weighted graph standing in for a metric measure space: node positions,
/// node measures, edge lengths, and a base distance fixed at build time.
class DiscreteSpace {
public:
    int dim = 2;
    MetricKind metric = MetricKind::euclidean;
    double alpha = 2.0;      // configured Hausdorff dimension
    double mesh_step = 0.0;  // > 0 for grid builds
    std::vector<std::string> names;
    std::vector<Point> coords;
    std::vector<double> mu;
    std::vector<Edge> edges;

    std::size_t size() const { return names.size(); }

    const std::vector<std::pair<NodeId, double>>& neighbors(NodeId v) const { return adj_[v]; }

    NodeId node_by_name(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::invalid_argument("unknown node identifier: " + name);
        return it->second;
    }

    bool has_node(const std::string& name) const { return index_.count(name) != 0; }

    double distance(NodeId a, NodeId b) const {
        check_node(a);
        check_node(b);
        switch (metric) {
        case MetricKind::euclidean: return euclidean(coords[a], coords[b]);
        default: return pair_dist_[a * size() + b];
        }
    }

    /// Distance from a free point to a node. Only the Euclidean metric admits free
    /// points; for graph/table metrics the point must coincide with a node.
    double distance_point(const Point& p, NodeId v) const {
        check_node(v);
        if (metric == MetricKind::euclidean) return euclidean(p, coords[v]);
        NodeId q = node_at(p);
        if (q == kNoNode)
            throw std::invalid_argument("free-point distance requires the Euclidean metric or a point coinciding with a node");
        return distance(q, v);
    }

    NodeId node_at(const Point& p, double tol = 1e-9) const {
        for (NodeId v = 0; v < size(); ++v)
            if (euclidean(p, coords[v]) <= tol) return v;
        return kNoNode;
    }

    NodeId nearest_node(const Point& p) const {
        if (size() == 0) throw std::invalid_argument("empty space");
        NodeId best = 0;
        double bd = euclidean(p, coords[0]);
        for (NodeId v = 1; v < size(); ++v) {
            double d = euclidean(p, coords[v]);
            if (d < bd - 1e-15 || (std::abs(d - bd) <= 1e-15 && names[v] < names[best])) {
                bd = d;
                best = v;
            }
        }
        return best;
    }

    std::vector<NodeId> ball_nodes(const Point& center, double r) const {
        std::vector<NodeId> out;
        for (NodeId v = 0; v < size(); ++v)
            if (distance_point(center, v) < r) out.push_back(v);
        return out;
    }

    std::vector<NodeId> closed_ball_nodes(const Point& center, double r) const {
        std::vector<NodeId> out;
        for (NodeId v = 0; v < size(); ++v)
            if (distance_point(center, v) <= r) out.push_back(v);
        return out;
    }

    double max_edge_length() const {
        double m = 0.0;
        for (const auto& e : edges) m = std::max(m, e.sigma);
        return m;
    }

    // --- construction -----------------------------------------------------

    static DiscreteSpace from_nodes(int dim, MetricKind metric, double alpha,
                                    std::vector<std::string> names, std::vector<Point> coords,
                                    std::vector<double> mu, std::vector<Edge> edges,
                                    std::vector<double> distance_table = {}) {
        DiscreteSpace s;
        s.dim = dim;
        s.metric = metric;
        s.alpha = alpha;
        s.names = std::move(names);
        s.coords = std::move(coords);
        s.mu = std::move(mu);
        s.edges = std::move(edges);
        s.validate_and_finish(std::move(distance_table));
        return s;
    }

    void validate_and_finish(std::vector<double> distance_table) {
        const std::size_t n = names.size();
        if (coords.size() != n || mu.size() != n)
            throw std::invalid_argument("node arrays disagree in length");
        index_.clear();
        for (NodeId v = 0; v < n; ++v) {
            if (!index_.emplace(names[v], v).second)
                throw std::invalid_argument("duplicate node identifier: " + names[v]);
            if (!(mu[v] > 0.0)) throw std::invalid_argument("node measure must be positive: " + names[v]);
        }
        adj_.assign(n, {});
        for (const auto& e : edges) {
            if (e.u >= n || e.v >= n) throw std::invalid_argument("edge endpoint out of range");
            if (e.u == e.v) throw std::invalid_argument("self-loop edge on node " + names[e.u]);
            if (!(e.sigma > 0.0)) throw std::invalid_argument("edge length must be positive");
            adj_[e.u].push_back({e.v, e.sigma});
            adj_[e.v].push_back({e.u, e.sigma});
        }
        for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
        if (metric == MetricKind::table) {
            if (distance_table.size() != n * n)
                throw std::invalid_argument("distance table must be n*n");
            pair_dist_ = std::move(distance_table);
            check_metric_axioms();
        } else if (metric == MetricKind::graph) {
            if (n > 4096) throw std::invalid_argument("graph-metric spaces are capped at 4096 nodes");
            all_pairs_shortest();
        }
    }

    // --- record serialization (line-delimited node/edge tables) ------------

    std::string to_records() const {
        std::string out;
        char buf[256];
        std::snprintf(buf, sizeof(buf), "space dim %d metric %s alpha %.17g step %.17g\n", dim,
                      metric_name(metric), alpha, mesh_step);
        out += buf;
        for (NodeId v = 0; v < size(); ++v) {
            if (dim == 2)
                std::snprintf(buf, sizeof(buf), "node %s %.17g %.17g %.17g\n", names[v].c_str(),
                              coords[v][0], coords[v][1], mu[v]);
            else
                std::snprintf(buf, sizeof(buf), "node %s %.17g %.17g %.17g %.17g\n", names[v].c_str(),
                              coords[v][0], coords[v][1], coords[v][2], mu[v]);
            out += buf;
        }
        for (const auto& e : edges) {
            std::snprintf(buf, sizeof(buf), "edge %s %s %.17g %.17g\n", names[e.u].c_str(),
                          names[e.v].c_str(), e.sigma, e.cond_w);
            out += buf;
        }
        if (metric == MetricKind::table) {
            for (NodeId a = 0; a < size(); ++a)
                for (NodeId b = a + 1; b < size(); ++b) {
                    std::snprintf(buf, sizeof(buf), "dist %s %s %.17g\n", names[a].c_str(),
                                  names[b].c_str(), pair_dist_[a * size() + b]);
                    out += buf;
                }
        }
        return out;
    }

    static const char* metric_name(MetricKind k) {
        switch (k) {
        case MetricKind::euclidean: return "euclidean";
        case MetricKind::graph: return "graph";
        default: return "table";
        }
    }

private:
    std::vector<std::vector<std::pair<NodeId, double>>> adj_;
    std::vector<double> pair_dist_; // graph/table metrics only
    std::map<std::string, NodeId> index_;

    void check_node(NodeId v) const {
        if (v >= size()) throw std::invalid_argument("node id out of range");
    }

    void all_pairs_shortest() {
        const std::size_t n = size();
        pair_dist_.assign(n * n, std::numeric_limits<double>::infinity());
        for (NodeId s = 0; s < n; ++s) {
            auto* dist = &pair_dist_[s * n];
            dist[s] = 0.0;
            using Item = std::pair<double, NodeId>;
            std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
            pq.push({0.0, s});
            while (!pq.empty()) {
                auto [d, v] = pq.top();
                pq.pop();
                if (d > dist[v]) continue;
                for (auto [w, len] : adj_[v])
                    if (d + len < dist[w]) {
                        dist[w] = d + len;
                        pq.push({dist[w], w});
                    }
            }
        }
        for (NodeId a = 0; a < n; ++a)
            for (NodeId b = 0; b < n; ++b)
                if (!std::isfinite(pair_dist_[a * n + b]))
                    throw std::invalid_argument("graph metric undefined: disconnected graph");
    }

    void check_metric_axioms() const {
        const std::size_t n = size();
        for (NodeId a = 0; a < n; ++a) {
            if (pair_dist_[a * n + a] != 0.0) throw std::invalid_argument("distance table: d(x,x) != 0");
            for (NodeId b = 0; b < n; ++b) {
                double dab = pair_dist_[a * n + b];
                if (a != b && !(dab > 0.0)) throw std::invalid_argument("distance table: d(x,y) <= 0 for x != y");
                if (std::abs(dab - pair_dist_[b * n + a]) > 1e-12)
                    throw std::invalid_argument("distance table: not symmetric");
                for (NodeId c = 0; c < n; ++c)
                    if (dab > pair_dist_[a * n + c] + pair_dist_[c * n + b] + 1e-12)
                        throw std::invalid_argument("distance table: triangle inequality fails");
            }
        }
    }
};

// --- grid domains ----------------------------------------------------------

/// Stencil of a 2D grid build. axis4 is the default 4-neighbor lattice; octa8 adds
/// diagonals, knight16 adds knight moves as well. Extra directions shrink the
/// directional bias of staircase path lengths; their conductance weights keep the
/// Laplace stencil consistent with the isotropic Dirichlet energy.
enum class GridNeighborhood { axis4, octa8, knight16 };

struct GridDomainSpec {
    int dim = 2;
    Point lo{0.0, 0.0, 0.0};
    Point hi{1.0, 1.0, 0.0};
    double step = 0.0;
    std::optional<std::pair<Point, double>> clip_ball;    // keep nodes with |x-c| <= r
    std::optional<std::pair<Point, double>> exclude_ball; // drop nodes with |x-c| < r
    std::optional<Point> puncture;                        // drop the nearest lattice node
    double alpha = 0.0;                                   // defaults to dim
    MetricKind metric = MetricKind::euclidean;
    GridNeighborhood neighborhood = GridNeighborhood::axis4; // 2D only beyond axis4
};

/// Lattice discretization of a box (optionally clipped to a ball, punctured, or
/// with a ball removed): 4-/6-neighbor edges of length `step`, node measure step^dim.
inline DiscreteSpace build_grid_domain(const GridDomainSpec& spec) {
    if (!(spec.step > 0.0)) throw std::invalid_argument("grid build: mesh step must be positive");
    if (spec.dim != 2 && spec.dim != 3) throw std::invalid_argument("grid build: dim must be 2 or 3");
    const double h = spec.step;
    const double tol = 1e-9 * std::max(1.0, h);
    std::array<int, 3> count{};
    for (int k = 0; k < spec.dim; ++k) {
        double span = spec.hi[k] - spec.lo[k];
        if (!(span > 0.0)) throw std::invalid_argument("grid build: degenerate bounding box");
        count[k] = static_cast<int>(std::floor(span / h + tol)) + 1;
    }
    if (spec.dim == 2) count[2] = 1;

    auto inside = [&](const Point& p) {
        if (spec.clip_ball && euclidean(p, spec.clip_ball->first) > spec.clip_ball->second + tol)
            return false;
        if (spec.exclude_ball && euclidean(p, spec.exclude_ball->first) < spec.exclude_ball->second - tol)
            return false;
        return true;
    };

    std::vector<std::string> names;
    std::vector<Point> coords;
    std::vector<int> gridToNode;
    gridToNode.assign(static_cast<std::size_t>(count[0]) * count[1] * count[2], -1);
    auto lin = [&](int i, int j, int k) {
        return (static_cast<std::size_t>(k) * count[1] + j) * count[0] + i;
    };

    int punctured_idx = -1;
    if (spec.puncture) {
        // nearest lattice point to the puncture
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < count[2]; ++k)
            for (int j = 0; j < count[1]; ++j)
                for (int i = 0; i < count[0]; ++i) {
                    Point p{spec.lo[0] + i * h, spec.lo[1] + j * h,
                            spec.dim == 3 ? spec.lo[2] + k * h : 0.0};
                    if (!inside(p)) continue;
                    double d = euclidean(p, *spec.puncture);
                    if (d < best) {
                        best = d;
                        punctured_idx = static_cast<int>(lin(i, j, k));
                    }
                }
    }

    char buf[32];
    for (int k = 0; k < count[2]; ++k)
        for (int j = 0; j < count[1]; ++j)
            for (int i = 0; i < count[0]; ++i) {
                Point p{spec.lo[0] + i * h, spec.lo[1] + j * h,
                        spec.dim == 3 ? spec.lo[2] + k * h : 0.0};
                if (!inside(p)) continue;
                if (static_cast<int>(lin(i, j, k)) == punctured_idx) continue;
                gridToNode[lin(i, j, k)] = static_cast<int>(names.size());
                std::snprintf(buf, sizeof(buf), "n%07zu", names.size());
                names.emplace_back(buf);
                coords.push_back(p);
            }
    if (names.empty()) throw std::invalid_argument("grid build: empty node set");

    if (spec.neighborhood != GridNeighborhood::axis4 && spec.dim != 2)
        throw std::invalid_argument("extended grid neighborhoods are 2D only");

    // step offsets (di, dj) with the conductance weight of the direction class;
    // weights satisfy G_axis + 2 G_diag + 10 G_knight = 1 on a unit grid
    std::vector<std::array<int, 2>> offs{{1, 0}, {0, 1}};
    std::vector<double> offw{1.0, 1.0};
    if (spec.neighborhood == GridNeighborhood::octa8) {
        offs = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
        offw = {2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    } else if (spec.neighborhood == GridNeighborhood::knight16) {
        offs = {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}, {1, 2}, {-1, 2}, {-2, 1}};
        offw = {0.5, 0.5, 0.25, 0.25, 0.125, 0.125, 0.125, 0.125};
    }

    std::vector<Edge> edges;
    for (int k = 0; k < count[2]; ++k)
        for (int j = 0; j < count[1]; ++j)
            for (int i = 0; i < count[0]; ++i) {
                int a = gridToNode[lin(i, j, k)];
                if (a < 0) continue;
                for (std::size_t o = 0; o < offs.size(); ++o) {
                    int ii = i + offs[o][0], jj = j + offs[o][1];
                    if (ii < 0 || ii >= count[0] || jj < 0 || jj >= count[1]) continue;
                    int b = gridToNode[lin(ii, jj, k)];
                    if (b < 0) continue;
                    double len = h * std::sqrt(double(offs[o][0] * offs[o][0] +
                                                      offs[o][1] * offs[o][1]));
                    edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b), len, offw[o]});
                }
                if (spec.dim == 3 && k + 1 < count[2]) {
                    int b = gridToNode[lin(i, j, k + 1)];
                    if (b >= 0) edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b), h});
                }
            }

    std::vector<double> mu(names.size(), std::pow(h, spec.dim));
    auto s = DiscreteSpace::from_nodes(spec.dim, spec.metric,
                                       spec.alpha > 0.0 ? spec.alpha : spec.dim, std::move(names),
                                       std::move(coords), std::move(mu), std::move(edges));
    s.mesh_step = h;
    return s;
}

// --- ring / sphere queries ---------------------------------------------------

/// Nodes of the open ring r1 < d(v, center) < r2.
inline std::vector<NodeId> ring_subset(const DiscreteSpace& space, const RingSpec& ring) {
    if (!(ring.r1 > 0.0) || !(ring.r2 > ring.r1) || !std::isfinite(ring.r2))
        throw std::invalid_argument("ring requires 0 < r1 < r2 < inf");
    std::vector<NodeId> out;
    for (NodeId v = 0; v < space.size(); ++v) {
        double d = space.distance_point(ring.center, v);
        if (d > ring.r1 && d < ring.r2) out.push_back(v);
    }
    return out;
}

struct SphereShell {
    std::vector<NodeId> nodes;
    bool thin = false; // empty shell: legal, but flags a too-thin tolerance
};

/// Discrete sphere: the shell of nodes with |d(v,center) - r| <= tol.
inline SphereShell sphere_nodes(const DiscreteSpace& space, const Point& center, double r,
                                double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("sphere shell tolerance must be positive");
    SphereShell shell;
    for (NodeId v = 0; v < space.size(); ++v)
        if (std::abs(space.distance_point(center, v) - r) <= tol) shell.nodes.push_back(v);
    shell.thin = shell.nodes.empty();
    return shell;
}

inline double measure_of(const DiscreteSpace& space, const std::vector<NodeId>& nodes) {
    double m = 0.0;
    for (NodeId v : nodes) m += space.mu[v];
    return m;
}

/// Ball-measure growth probe: mu(B(x0,R))/R^alpha per radius plus the doubling
/// ratios mu(B(x0,2r))/mu(B(x0,r)) used by the FMO funnel hypothesis.
inline RegularityReport ahlfors_probe(const DiscreteSpace& space, const Point& x0,
                                      const std::vector<double>& radii, double alpha) {
    RegularityReport rep;
    for (double r : radii) {
        if (!(r > 0.0)) throw std::invalid_argument("ahlfors probe: radii must be positive");
        double m = measure_of(space, space.ball_nodes(x0, r));
        double m2 = measure_of(space, space.ball_nodes(x0, 2.0 * r));
        rep.radii.push_back(r);
        rep.ratios.push_back(m / std::pow(r, alpha));
        rep.doubling_ratios.push_back(m > 0.0 ? m2 / m : 0.0);
    }
    rep.min_ratio = *std::min_element(rep.ratios.begin(), rep.ratios.end());
    rep.max_ratio = *std::max_element(rep.ratios.begin(), rep.ratios.end());
    rep.constant = std::max({1.0, rep.max_ratio, rep.min_ratio > 0.0 ? 1.0 / rep.min_ratio : 1.0});
    return rep;
}

} // namespace qcmod
