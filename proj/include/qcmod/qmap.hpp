#pragma once

#include "qcmod/fmo.hpp"
#include "qcmod/modulus.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcmod {

/// A map from source nodes to target-space points: a registered analytic example
/// (evaluated pointwise) or an explicit per-node table. Openness/discreteness are
/// documented properties of the analytic examples, not verified structurally.
struct DiscreteMap {
    enum class Kind { identity, radial_stretch, exp_reciprocal, sinc, table };
    Kind kind = Kind::identity;
    double K = 1.0;            // radial stretch exponent
    std::vector<Point> table;  // per-node images (table maps)

    static DiscreteMap identity() { return {}; }

    static DiscreteMap radial_stretch(double K) {
        if (!(K > 0.0)) throw std::invalid_argument("radial stretch requires K > 0");
        DiscreteMap m;
        m.kind = Kind::radial_stretch;
        m.K = K;
        return m;
    }

    static DiscreteMap exp_reciprocal() {
        DiscreteMap m;
        m.kind = Kind::exp_reciprocal;
        return m;
    }

    static DiscreteMap sinc() {
        DiscreteMap m;
        m.kind = Kind::sinc;
        return m;
    }

    static DiscreteMap from_table(std::vector<Point> images) {
        DiscreteMap m;
        m.kind = Kind::table;
        m.table = std::move(images);
        return m;
    }

    const char* name() const {
        switch (kind) {
        case Kind::identity: return "identity";
        case Kind::radial_stretch: return "radial_stretch";
        case Kind::exp_reciprocal: return "exp_reciprocal";
        case Kind::sinc: return "sinc";
        default: return "table";
        }
    }

    /// Candidate Q of the registered planar p=q=2 examples; an empirical hypothesis
    /// validated per ring, never a claim of sharpness.
    std::optional<double> registered_q() const {
        if (kind == Kind::identity) return 1.0;
        if (kind == Kind::radial_stretch) return K;
        return std::nullopt;
    }

    ExtendedPt eval(const Point& x) const {
        switch (kind) {
        case Kind::identity: return ExtendedPt::finite(x);
        case Kind::radial_stretch: {
            double r = norm(x);
            if (r == 0.0) return ExtendedPt::finite(x);
            return ExtendedPt::finite(std::pow(r, K - 1.0) * x);
        }
        case Kind::exp_reciprocal: {
            auto z = to_complex(x);
            if (z == std::complex<double>(0.0, 0.0))
                throw std::domain_error("exp(1/z) is undefined at z = 0");
            auto w = 1.0 / z;
            if (w.real() > 700.0) return ExtendedPt::infinity();
            return guard(from_complex(std::exp(w)));
        }
        case Kind::sinc: {
            auto z = to_complex(x);
            if (z == std::complex<double>(0.0, 0.0))
                throw std::domain_error("sin(z)/z is undefined at z = 0");
            return guard(from_complex(std::sin(z) / z));
        }
        case Kind::table:
            throw std::domain_error("table maps evaluate on nodes, not free points");
        }
        return ExtendedPt::finite(x);
    }

    ExtendedPt eval_node(const DiscreteSpace& space, NodeId v) const {
        if (kind == Kind::table) {
            if (table.size() != space.size())
                throw std::invalid_argument("table map does not cover every source node");
            return ExtendedPt::finite(table[v]);
        }
        return eval(space.coords[v]);
    }

    bool has_jacobian() const { return kind == Kind::identity || kind == Kind::radial_stretch; }

    /// Volume distortion factor (Jacobian determinant) for pushforward measures.
    double jacobian(const Point& x, int dim) const {
        switch (kind) {
        case Kind::identity: return 1.0;
        case Kind::radial_stretch: {
            double r = norm(x);
            if (r == 0.0) throw std::domain_error("radial stretch jacobian undefined at 0");
            return K * std::pow(r, dim * (K - 1.0));
        }
        default: throw std::domain_error("jacobian not registered for this map");
        }
    }

private:
    static ExtendedPt guard(const Point& p) {
        double n = norm(p);
        if (!std::isfinite(n) || n > 1e150) return ExtendedPt::infinity();
        return ExtendedPt::finite(p);
    }
};

/// Image space carried by the source mesh: nodes f(v), edge lengths between image
/// points, measures mu * |J|. Resolves image rings at every scale the source mesh
/// resolves, which uniform image grids cannot do for contracting maps.
inline DiscreteSpace pushforward_space(const DiscreteMap& map, const DiscreteSpace& source) {
    if (!map.has_jacobian())
        throw std::invalid_argument("pushforward space requires a map with a registered jacobian");
    std::vector<Point> coords(source.size());
    std::vector<double> mu(source.size());
    for (NodeId v = 0; v < source.size(); ++v) {
        auto img = map.eval_node(source, v);
        if (img.at_infinity)
            throw std::invalid_argument("pushforward space: image of node " + source.names[v] +
                                        " is not finite");
        coords[v] = img.p;
        double j = map.jacobian(source.coords[v], source.dim);
        if (!(j > 0.0))
            throw std::invalid_argument("pushforward space: nonpositive jacobian at " +
                                        source.names[v]);
        mu[v] = source.mu[v] * j;
    }
    std::vector<Edge> edges;
    edges.reserve(source.edges.size());
    for (const auto& e : source.edges) {
        double sigma = euclidean(coords[e.u], coords[e.v]);
        if (!(sigma > 0.0))
            throw std::invalid_argument("pushforward space: collapsed edge " + source.names[e.u] +
                                        "-" + source.names[e.v]);
        edges.push_back({e.u, e.v, sigma});
    }
    auto out = DiscreteSpace::from_nodes(source.dim, MetricKind::euclidean, source.alpha,
                                         source.names, std::move(coords), std::move(mu),
                                         std::move(edges));
    return out;
}

namespace detail {

struct SnapTable {
    std::vector<NodeId> snap; // per source node
};

inline SnapTable build_snaps(const DiscreteMap& map, const DiscreteSpace& source,
                             const DiscreteSpace& image) {
    SnapTable t;
    t.snap.resize(source.size());
    // snap tolerance: a point inside a grid region is within one mesh step of a node
    double tol = image.mesh_step > 0.0 ? image.mesh_step : std::numeric_limits<double>::infinity();
    for (NodeId v = 0; v < source.size(); ++v) {
        auto img = map.eval_node(source, v);
        if (img.at_infinity)
            throw std::invalid_argument("image of node " + source.names[v] + " is not finite");
        NodeId w = image.nearest_node(img.p);
        if (euclidean(img.p, image.coords[w]) > tol)
            throw std::invalid_argument("image of node " + source.names[v] +
                                        " falls outside the image space region");
        t.snap[v] = w;
    }
    return t;
}

} // namespace detail

/// Image of one path: nodewise images snapped to the image mesh, consecutive
/// duplicates collapsed, adjacency restored by fewest-hop reconnection.
inline std::vector<NodeId> map_image_path(const DiscreteMap& map, const std::vector<NodeId>& path,
                                          const DiscreteSpace& source, const DiscreteSpace& image) {
    auto snaps = detail::build_snaps(map, source, image);
    std::vector<NodeId> img;
    for (NodeId v : path) {
        NodeId w = snaps.snap[v];
        if (!img.empty() && img.back() == w) continue;
        if (img.empty()) {
            img.push_back(w);
            continue;
        }
        auto seg = shortest_hop_path(image, img.back(), w);
        if (seg.empty())
            throw std::invalid_argument("image space cannot reconnect the snapped path");
        img.insert(img.end(), seg.begin() + 1, seg.end());
    }
    return img;
}

/// Separation view of f(Gamma) for a source connecting/explicit family: constraints
/// are image-node paths, densities live on the image space, and the rho-shortest
/// member is found by source-graph search under image segment weights.
class ImageFamilyOracle final : public FamilyOracle {
public:
    ImageFamilyOracle(const DiscreteMap& map, const PathFamily& family,
                      const DiscreteSpace& source, const DiscreteSpace& image)
        : map_(map), family_(family), source_(source), image_(image),
          snaps_(detail::build_snaps(map, source, image)) {
        source_oracle_ = make_oracle(source_, family_);
    }

    const DiscreteSpace& density_space() const override { return image_; }

    bool family_empty() const override { return source_oracle_->family_empty(); }

    DijkstraResult min_path(const Density& rho) const override {
        if (family_.kind == PathFamily::Kind::explicit_paths) {
            DijkstraResult best;
            for (const auto& sp : family_.paths) {
                auto img = image_of(sp);
                double len = path_length(img, rho, image_);
                if (!best.found || len < best.length) {
                    best.found = true;
                    best.length = len;
                    best.path = img;
                }
            }
            return best;
        }
        std::vector<char> allow(source_.size(), 0);
        for (NodeId v : family_.G) allow[v] = 1;
        auto res = shortest_connecting_path(
            source_, family_.E, family_.F, allow, [&](NodeId u, NodeId v, double sigma) {
                (void)sigma;
                return segment_length(u, v, rho);
            });
        if (!res.found) return res;
        auto img = image_of(res.path);
        DijkstraResult out;
        out.found = true;
        out.path = img;
        out.length = path_length(img, rho, image_);
        return out;
    }

    std::vector<std::vector<NodeId>> enumerate_paths(std::size_t cap) const override {
        auto src = source_oracle_->enumerate_paths(cap);
        std::vector<std::vector<NodeId>> out;
        out.reserve(src.size());
        for (const auto& sp : src) out.push_back(image_of(sp));
        return out;
    }

    SeparationBatch separate(const Density& rho, double threshold,
                             std::size_t cap) const override {
        if (family_.kind == PathFamily::Kind::explicit_paths)
            return FamilyOracle::separate(rho, threshold, cap);
        std::vector<char> allow(source_.size(), 0);
        for (NodeId v : family_.G) allow[v] = 1;
        auto tree = connecting_tree(source_, family_.E, family_.F, allow,
                                    [&](NodeId u, NodeId v, double sigma) {
                                        (void)sigma;
                                        return segment_length(u, v, rho);
                                    });
        SeparationBatch batch;
        for (NodeId f : tree.reached_targets) {
            batch.any_member = true;
            batch.min_length = std::min(batch.min_length, tree.dist[f]);
            if (tree.dist[f] < threshold && batch.violated.size() < cap)
                batch.violated.push_back(image_of(tree_path(tree, f)));
        }
        return batch;
    }

private:
    const DiscreteMap& map_;
    const PathFamily& family_;
    const DiscreteSpace& source_;
    const DiscreteSpace& image_;
    detail::SnapTable snaps_;
    std::unique_ptr<FamilyOracle> source_oracle_;
    mutable std::map<std::pair<NodeId, NodeId>, std::vector<NodeId>> segments_;

    const std::vector<NodeId>& segment(NodeId u, NodeId v) const {
        auto key = std::make_pair(std::min(u, v), std::max(u, v));
        auto it = segments_.find(key);
        if (it != segments_.end()) return it->second;
        auto seg = shortest_hop_path(image_, snaps_.snap[key.first], snaps_.snap[key.second]);
        if (seg.empty())
            throw std::invalid_argument("image space cannot reconnect a snapped edge");
        return segments_.emplace(key, std::move(seg)).first->second;
    }

    double segment_length(NodeId u, NodeId v, const Density& rho) const {
        const auto& seg = segment(u, v);
        if (seg.size() < 2) return 0.0;
        double len = 0.0;
        const auto* fwd = &seg;
        (void)fwd;
        for (std::size_t i = 0; i + 1 < seg.size(); ++i) {
            NodeId a = seg[i], b = seg[i + 1];
            double sigma = 0.0;
            for (auto [w, s] : image_.neighbors(a))
                if (w == b) {
                    sigma = s;
                    break;
                }
            len += sigma * 0.5 * (rho[a] + rho[b]);
        }
        return len;
    }

    std::vector<NodeId> image_of(const std::vector<NodeId>& sp) const {
        std::vector<NodeId> img;
        img.push_back(snaps_.snap[sp.front()]);
        for (std::size_t i = 0; i + 1 < sp.size(); ++i) {
            const auto& seg = segment(sp[i], sp[i + 1]);
            // segment is stored min->max; orient along the traversal
            if (snaps_.snap[sp[i]] == seg.front()) {
                for (std::size_t j = 1; j < seg.size(); ++j) push(img, seg[j]);
            } else {
                for (std::size_t j = seg.size(); j-- > 1;) push(img, seg[j - 1]);
            }
        }
        return img;
    }

    static void push(std::vector<NodeId>& img, NodeId v) {
        if (img.empty() || img.back() != v) img.push_back(v);
    }
};

/// Explicit-family image under the spec's snapping rules.
inline PathFamily map_image_family(const DiscreteMap& map, const PathFamily& family,
                                   const DiscreteSpace& source, const DiscreteSpace& image) {
    if (family.kind != PathFamily::Kind::explicit_paths)
        throw std::invalid_argument(
            "map_image_family materializes explicit families; connecting families go through ImageFamilyOracle");
    std::vector<std::vector<NodeId>> out;
    out.reserve(family.paths.size());
    for (const auto& p : family.paths) out.push_back(map_image_path(map, p, source, image));
    return PathFamily::explicit_family(std::move(out));
}

// --- ring inequality -----------------------------------------------------------------

struct RingTestCase {
    RingSpec ring;      // centered at the test point x0
    EtaProfile eta;     // integrates to 1 over (r1, r2)
    double p = 2.0;
    double q = 2.0;
    ScalarField Q;      // on the source space
    double shell_tol = 0.0; // sphere thickness; defaults to half the mesh step
};

struct RingInequalityResult {
    double lhs = 0.0;
    bool lhs_infinite = false;
    double rhs = 0.0;
    bool holds = false;
    double margin = 0.0; // rhs*(1+tol) - lhs, the slack of the tested inequality
    std::string note;
    ModulusResult modulus;
};

/// One eq-style ring test: lhs = M_p(f(Gamma(S1,S2,A))), rhs = sum over ring nodes of
/// Q(x) eta^q(d(x,x0)) mu(x); holds iff lhs <= rhs*(1+tol).
inline RingInequalityResult ring_inequality_test(const RingTestCase& test, const DiscreteMap& map,
                                                 const DiscreteSpace& space,
                                                 const DiscreteSpace& image, double tol,
                                                 const SolverOptions& opts = {}) {
    if (test.Q.size() != space.size())
        throw std::invalid_argument("ring test: Q must cover every source node");
    double shell_tol = test.shell_tol > 0.0 ? test.shell_tol : 0.5 * space.mesh_step;
    if (!(shell_tol > 0.0)) throw std::invalid_argument("ring test: shell tolerance unavailable");
    if (std::abs(test.eta.r1 - test.ring.r1) > 1e-12 || std::abs(test.eta.r2 - test.ring.r2) > 1e-12)
        throw std::invalid_argument("ring test: eta must be normalized over the test ring");

    auto fam = make_ring_family(space, test.ring, shell_tol);
    if (fam.E.empty() || fam.F.empty())
        throw std::invalid_argument("ring test: empty sphere shell (tolerance too thin)");

    RingInequalityResult out;
    for (NodeId v : fam.G) {
        double d = space.distance_point(test.ring.center, v);
        out.rhs += test.Q[v] * std::pow(test.eta(d), test.q) * space.mu[v];
    }
    ImageFamilyOracle oracle(map, fam, space, image);
    out.modulus = compute_p_modulus(oracle, test.p, opts);
    out.lhs_infinite = out.modulus.infinite;
    out.lhs = out.modulus.value;
    if (out.lhs_infinite) {
        out.holds = false;
        out.note = "image family admits no admissible density (degenerate image)";
    } else {
        out.holds = out.lhs <= out.rhs * (1.0 + tol);
    }
    out.margin = out.rhs * (1.0 + tol) - out.lhs;
    return out;
}

// --- modulus decay probe ----------------------------------------------------------------

struct DecayProbeReport {
    std::vector<double> eps;
    std::vector<double> bound;    // the paper-side funnel quantity per eps
    std::vector<double> observed; // M_p(f(Gamma(S(eps), S(r_outer), A)))
    bool bounded = true;
    bool decreasing_tail = false; // both sequences strictly decreasing over the final 4 steps
    bool partial = false;         // stopped at the mesh limit (empty inner shell)
};

/// Lemma-style decay probe: for each inner radius eps, the observed image-family
/// modulus must stay below the funnel bound
///   F(eps) = (integral of Q psi^q over eps < d < eps0) / I(eps, r_outer)^q,
/// and both sequences must fall toward 0 as eps shrinks dyadically.
inline DecayProbeReport modulus_decay_probe(const DiscreteMap& map, const ScalarField& Q,
                                            const Point& x0, double r_outer,
                                            const std::vector<double>& eps_list,
                                            const PsiProfile& profile, double p, double q,
                                            const DiscreteSpace& space, const DiscreteSpace& image,
                                            double tol, const SolverOptions& opts = {}) {
    if (Q.size() != space.size()) throw std::invalid_argument("decay probe: Q length mismatch");
    if (!(r_outer > 0.0) || r_outer > profile.epsilon0 * (1.0 + 1e-12))
        throw std::invalid_argument("decay probe: need 0 < r_outer <= epsilon0");
    const double eps0 = profile.epsilon0;
    double shell_tol = 0.5 * space.mesh_step;
    if (!(shell_tol > 0.0)) throw std::invalid_argument("decay probe: source space has no mesh step");

    DecayProbeReport rep;
    for (double eps : eps_list) {
        if (!(eps > 0.0) || !(eps < r_outer))
            throw std::invalid_argument("decay probe: inner radii must satisfy 0 < eps < r_outer");
        auto inner = sphere_nodes(space, x0, eps, shell_tol);
        if (inner.nodes.empty()) {
            rep.partial = true; // mesh limit reached
            break;
        }
        RingSpec ring{x0, eps, r_outer};
        auto fam = make_ring_family(space, ring, shell_tol);
        if (fam.E.empty() || fam.F.empty()) {
            rep.partial = true;
            break;
        }
        ImageFamilyOracle oracle(map, fam, space, image);
        auto mod = compute_p_modulus(oracle, p, opts);

        double shell_sum = 0.0;
        for (NodeId v = 0; v < space.size(); ++v) {
            double d = space.distance_point(x0, v);
            if (d > eps && d < eps0) shell_sum += Q[v] * std::pow(profile(d), q) * space.mu[v];
        }
        double I = psi_integral(profile, eps, r_outer);
        if (!(I > 0.0) || !std::isfinite(I))
            throw std::runtime_error("decay probe: I(eps, r_outer) must be positive and finite");
        double bound = shell_sum / std::pow(I, q);

        rep.eps.push_back(eps);
        rep.bound.push_back(bound);
        rep.observed.push_back(mod.infinite ? std::numeric_limits<double>::infinity() : mod.value);
        if (mod.infinite || !(mod.value <= bound * (1.0 + tol))) rep.bounded = false;
    }

    const std::size_t n = rep.eps.size();
    if (n >= 2) {
        std::size_t steps = std::min<std::size_t>(4, n - 1);
        rep.decreasing_tail = true;
        for (std::size_t i = n - steps; i < n; ++i) {
            if (!(rep.bound[i] < rep.bound[i - 1])) rep.decreasing_tail = false;
            if (!(rep.observed[i] < rep.observed[i - 1])) rep.decreasing_tail = false;
        }
    }
    return rep;
}

} // namespace qcmod
