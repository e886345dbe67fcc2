#pragma once

#include "qcmod/graph.hpp"
#include "qcmod/space.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qcmod {

/// Node density rho >= 0 (units 1/length), the admissibility candidate.
using Density = std::vector<double>;

inline void validate_density(const Density& rho, const DiscreteSpace& space) {
    if (rho.size() != space.size()) throw std::invalid_argument("density length mismatch");
    for (double v : rho)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("density values must be finite and nonnegative");
}

/// rho-length of an edge path by the trapezoidal rule: sum of sigma(e)*(rho(u)+rho(v))/2.
inline double path_length(const std::vector<NodeId>& path, const Density& rho,
                          const DiscreteSpace& space) {
    if (path.empty()) throw std::invalid_argument("path length: empty node sequence");
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        NodeId u = path[i], v = path[i + 1];
        double sigma = -1.0;
        for (auto [w, s] : space.neighbors(u))
            if (w == v) {
                sigma = s;
                break;
            }
        if (sigma < 0.0)
            throw std::invalid_argument("path length: nodes " + space.names[u] + " and " +
                                        space.names[v] + " are not adjacent");
        len += sigma * 0.5 * (rho[u] + rho[v]);
    }
    return len;
}

/// A family of discrete paths: either an explicit list or the connecting family
/// Gamma(E, F, G) of paths from E to F with interior in G. Ring-built families
/// carry their RingSpec so nesting arguments can be certified by construction.
struct PathFamily {
    enum class Kind { explicit_paths, connecting };
    Kind kind = Kind::explicit_paths;
    std::vector<std::vector<NodeId>> paths;
    std::vector<NodeId> E, F, G;
    std::optional<RingSpec> ring;
    double shell_tol = 0.0;

    static PathFamily explicit_family(std::vector<std::vector<NodeId>> ps) {
        PathFamily f;
        f.kind = Kind::explicit_paths;
        f.paths = std::move(ps);
        return f;
    }

    static PathFamily connecting(std::vector<NodeId> e, std::vector<NodeId> f,
                                 std::vector<NodeId> g) {
        PathFamily fam;
        fam.kind = Kind::connecting;
        fam.E = std::move(e);
        fam.F = std::move(f);
        fam.G = std::move(g);
        return fam;
    }
};

/// Gamma(S(center,r1), S(center,r2), A(center,r1,r2)) with shells of thickness tol.
inline PathFamily make_ring_family(const DiscreteSpace& space, const RingSpec& ring, double tol) {
    auto s1 = sphere_nodes(space, ring.center, ring.r1, tol);
    auto s2 = sphere_nodes(space, ring.center, ring.r2, tol);
    auto fam = PathFamily::connecting(s1.nodes, s2.nodes, ring_subset(space, ring));
    fam.ring = ring;
    fam.shell_tol = tol;
    return fam;
}

struct thrown_cap_exceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One separation round: the global minimum rho-length plus a batch of violated
/// members (cheapest first, capped), ready to enter the active set.
struct SeparationBatch {
    bool any_member = false;
    double min_length = std::numeric_limits<double>::infinity();
    std::vector<std::vector<NodeId>> violated;
};

/// Separation view of a family: yields the rho-shortest member and, for small
/// instances, the full (dominating) constraint set. Densities live on
/// density_space(), which for image families is the image space.
class FamilyOracle {
public:
    virtual ~FamilyOracle() = default;
    virtual const DiscreteSpace& density_space() const = 0;
    virtual bool family_empty() const = 0;
    virtual DijkstraResult min_path(const Density& rho) const = 0;
    virtual std::vector<std::vector<NodeId>> enumerate_paths(std::size_t path_cap) const = 0;

    /// Default batch separation: the single cheapest member when violated.
    virtual SeparationBatch separate(const Density& rho, double threshold,
                                     std::size_t cap) const {
        SeparationBatch batch;
        auto res = min_path(rho);
        if (!res.found) return batch;
        batch.any_member = true;
        batch.min_length = res.length;
        if (res.length < threshold && cap > 0) batch.violated.push_back(res.path);
        return batch;
    }
};

class ExplicitFamilyOracle final : public FamilyOracle {
public:
    ExplicitFamilyOracle(const DiscreteSpace& space, std::vector<std::vector<NodeId>> paths)
        : space_(space), paths_(std::move(paths)) {
        for (const auto& p : paths_) {
            if (p.empty()) throw std::invalid_argument("explicit family: empty path");
            for (std::size_t i = 0; i + 1 < p.size(); ++i) {
                bool adj = false;
                for (auto [w, s] : space_.neighbors(p[i])) {
                    (void)s;
                    if (w == p[i + 1]) adj = true;
                }
                if (!adj)
                    throw std::invalid_argument("explicit family: disconnected node sequence at " +
                                                space_.names[p[i]]);
            }
        }
    }

    const DiscreteSpace& density_space() const override { return space_; }
    bool family_empty() const override { return paths_.empty(); }

    DijkstraResult min_path(const Density& rho) const override {
        DijkstraResult res;
        for (const auto& p : paths_) {
            double len = path_length(p, rho, space_);
            if (!res.found || len < res.length) {
                res.found = true;
                res.length = len;
                res.path = p;
            }
        }
        return res;
    }

    std::vector<std::vector<NodeId>> enumerate_paths(std::size_t path_cap) const override {
        if (paths_.size() > path_cap) throw thrown_cap_exceeded("explicit family above path cap");
        return paths_;
    }

private:
    const DiscreteSpace& space_;
    std::vector<std::vector<NodeId>> paths_;
};

class ConnectingFamilyOracle final : public FamilyOracle {
public:
    ConnectingFamilyOracle(const DiscreteSpace& space, std::vector<NodeId> E, std::vector<NodeId> F,
                           std::vector<NodeId> G)
        : space_(space), E_(std::move(E)), F_(std::move(F)), G_(std::move(G)) {
        if (E_.empty() || F_.empty())
            throw std::invalid_argument("connecting family: E and F must be nonempty");
        allow_.assign(space_.size(), 0);
        inF_.assign(space_.size(), 0);
        inE_.assign(space_.size(), 0);
        for (NodeId v : G_) allow_[v] = 1;
        for (NodeId v : F_) inF_[v] = 1;
        for (NodeId v : E_) inE_[v] = 1;
    }

    const DiscreteSpace& density_space() const override { return space_; }

    bool family_empty() const override {
        Density zero(space_.size(), 0.0);
        return !min_path(zero).found;
    }

    DijkstraResult min_path(const Density& rho) const override {
        return shortest_connecting_path(space_, E_, F_, allow_,
                                        [&](NodeId u, NodeId v, double sigma) {
                                            return sigma * 0.5 * (rho[u] + rho[v]);
                                        });
    }

    /// One Dijkstra sweep yields a violated path per reached F node.
    SeparationBatch separate(const Density& rho, double threshold,
                             std::size_t cap) const override {
        auto tree = connecting_tree(space_, E_, F_, allow_,
                                    [&](NodeId u, NodeId v, double sigma) {
                                        return sigma * 0.5 * (rho[u] + rho[v]);
                                    });
        SeparationBatch batch;
        for (NodeId f : tree.reached_targets) {
            batch.any_member = true;
            batch.min_length = std::min(batch.min_length, tree.dist[f]);
            if (tree.dist[f] < threshold && batch.violated.size() < cap)
                batch.violated.push_back(tree_path(tree, f));
        }
        return batch;
    }

    /// All simple E->F paths with interior in G, stopped at the first F hit.
    /// Every family member's constraint is dominated by one of these.
    std::vector<std::vector<NodeId>> enumerate_paths(std::size_t path_cap) const override {
        std::vector<std::vector<NodeId>> out;
        std::vector<char> onpath(space_.size(), 0);
        std::vector<NodeId> cur;
        std::vector<NodeId> starts = E_;
        std::sort(starts.begin(), starts.end());
        starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
        for (NodeId s : starts) dfs(s, onpath, cur, out, path_cap);
        return out;
    }

private:
    const DiscreteSpace& space_;
    std::vector<NodeId> E_, F_, G_;
    std::vector<char> allow_, inF_, inE_;

    void dfs(NodeId v, std::vector<char>& onpath, std::vector<NodeId>& cur,
             std::vector<std::vector<NodeId>>& out, std::size_t cap) const {
        cur.push_back(v);
        onpath[v] = 1;
        if (inF_[v]) {
            if (out.size() >= cap) throw thrown_cap_exceeded("connecting family above path cap");
            out.push_back(cur);
        } else {
            for (auto [w, s] : space_.neighbors(v)) {
                (void)s;
                if (!onpath[w] && (allow_[w] || inF_[w])) dfs(w, onpath, cur, out, cap);
            }
        }
        onpath[v] = 0;
        cur.pop_back();
    }
};

inline std::unique_ptr<FamilyOracle> make_oracle(const DiscreteSpace& space,
                                                 const PathFamily& family) {
    if (family.kind == PathFamily::Kind::explicit_paths)
        return std::make_unique<ExplicitFamilyOracle>(space, family.paths);
    return std::make_unique<ConnectingFamilyOracle>(space, family.E, family.F, family.G);
}

struct AdmissibilityReport {
    bool admissible = true;
    bool vacuous = false; // empty family
    std::vector<NodeId> worst_path;
    double worst_length = std::numeric_limits<double>::infinity();
};

inline AdmissibilityReport admissibility_check(const Density& rho, const PathFamily& family,
                                               const DiscreteSpace& space, double tol) {
    validate_density(rho, space);
    auto oracle = make_oracle(space, family);
    AdmissibilityReport rep;
    if (oracle->family_empty()) {
        rep.vacuous = true;
        return rep;
    }
    auto sep = oracle->min_path(rho);
    rep.worst_path = sep.path;
    rep.worst_length = sep.length;
    rep.admissible = sep.length >= 1.0 - tol;
    return rep;
}

} // namespace qcmod
