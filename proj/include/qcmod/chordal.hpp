#pragma once

#include "qcmod/graph.hpp"
#include "qcmod/space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qcmod {

/// Parameters of the generalized chordal metric
///   H(x,y) = d(x,y) / ((alpha + beta d^p(x,x0))^(1/p) (alpha + beta d^p(y,x0))^(1/p)).
/// The standard case alpha = beta = 1, p = 2 extends to the point at infinity.
struct ChordalParams {
    NodeId basepoint = 0;
    double alpha = 1.0;
    double beta = 1.0;
    double p = 2.0;

    void validate() const {
        if (!(alpha > 0.0)) throw std::invalid_argument("chordal params: alpha must be > 0");
        if (!(beta >= 0.0)) throw std::invalid_argument("chordal params: beta must be >= 0");
        if (!(p >= 1.0)) throw std::invalid_argument("chordal params: p must be >= 1");
    }

    bool standard() const { return alpha == 1.0 && beta == 1.0 && p == 2.0; }
};

/// A point of the compactified space: a node or the distinguished infinity.
struct XPoint {
    NodeId id = 0;
    bool inf = false;

    static XPoint node(NodeId v) { return {v, false}; }
    static XPoint infinity() { return {0, true}; }

    bool operator==(const XPoint& o) const { return inf == o.inf && (inf || id == o.id); }
};

inline std::string xpoint_name(const DiscreteSpace& space, const XPoint& x) {
    return x.inf ? std::string("inf") : space.names[x.id];
}

inline double chordal_denominator(const DiscreteSpace& space, NodeId v, const ChordalParams& c) {
    double d = space.distance(v, c.basepoint);
    return std::pow(c.alpha + c.beta * std::pow(d, c.p), 1.0 / c.p);
}

inline double chordal_distance(const XPoint& x, const XPoint& y, const ChordalParams& params,
                               const DiscreteSpace& space) {
    params.validate();
    if (x.inf || y.inf) {
        if (!params.standard())
            throw std::invalid_argument(
                "the point at infinity is only defined for the standard chordal metric (alpha=beta=1, p=2)");
        if (x.inf && y.inf) return 0.0;
        NodeId v = x.inf ? y.id : x.id;
        double d = space.distance(params.basepoint, v);
        return 1.0 / std::sqrt(1.0 + d * d);
    }
    if (x.id == y.id) return 0.0;
    double d = space.distance(x.id, y.id);
    return d / (chordal_denominator(space, x.id, params) * chordal_denominator(space, y.id, params));
}

inline double chordal_distance(NodeId x, NodeId y, const ChordalParams& params,
                               const DiscreteSpace& space) {
    return chordal_distance(XPoint::node(x), XPoint::node(y), params, space);
}

// --- free-point chordal metric (target planes of the singularity lab) --------

struct PlanarChordalParams {
    Point basepoint{0.0, 0.0, 0.0};
    double alpha = 1.0;
    double beta = 1.0;
    double p = 2.0;

    bool standard() const { return alpha == 1.0 && beta == 1.0 && p == 2.0; }
};

inline double chordal_distance(const ExtendedPt& x, const ExtendedPt& y,
                               const PlanarChordalParams& c) {
    if (x.at_infinity || y.at_infinity) {
        if (!c.standard())
            throw std::invalid_argument(
                "the point at infinity is only defined for the standard chordal metric (alpha=beta=1, p=2)");
        if (x.at_infinity && y.at_infinity) return 0.0;
        double d = euclidean(c.basepoint, x.at_infinity ? y.p : x.p);
        return 1.0 / std::sqrt(1.0 + d * d);
    }
    double d = euclidean(x.p, y.p);
    if (d == 0.0) return 0.0;
    double dx = euclidean(x.p, c.basepoint);
    double dy = euclidean(y.p, c.basepoint);
    return d / (std::pow(c.alpha + c.beta * std::pow(dx, c.p), 1.0 / c.p) *
                std::pow(c.alpha + c.beta * std::pow(dy, c.p), 1.0 / c.p));
}

// --- audits -------------------------------------------------------------------

struct TriangleAuditReport {
    double max_defect = -std::numeric_limits<double>::infinity();
    double max_relative_defect = -std::numeric_limits<double>::infinity(); // vs the larger side
    std::array<NodeId, 3> worst{0, 0, 0}; // defect = H(x,z) - H(x,y) - H(y,z), y in the middle
};

/// Max over the sampled triples (x,y,z) of H(x,z) - H(x,y) - H(y,z).
/// Nonpositive (up to floating tolerance) on Ptolemaic spaces.
inline TriangleAuditReport triangle_audit(const ChordalParams& params, const DiscreteSpace& space,
                                          const std::vector<std::array<NodeId, 3>>& triples) {
    params.validate();
    if (triples.empty()) throw std::invalid_argument("triangle audit: empty sample list");
    TriangleAuditReport rep;
    for (const auto& t : triples) {
        double hxz = chordal_distance(t[0], t[2], params, space);
        double hxy = chordal_distance(t[0], t[1], params, space);
        double hyz = chordal_distance(t[1], t[2], params, space);
        double defect = hxz - hxy - hyz;
        double scale = std::max({hxz, hxy + hyz, 1e-300});
        if (defect > rep.max_defect) {
            rep.max_defect = defect;
            rep.worst = t;
        }
        rep.max_relative_defect = std::max(rep.max_relative_defect, defect / scale);
    }
    return rep;
}

struct PtolemyReport {
    double min_slack = std::numeric_limits<double>::infinity();
    double min_relative_slack = std::numeric_limits<double>::infinity(); // vs the largest product
    std::array<NodeId, 4> worst{0, 0, 0, 0};
};

/// Min over quadruples (x,y,z,t) of d(x,z)d(y,t) + d(x,t)d(y,z) - d(x,y)d(z,t).
inline PtolemyReport ptolemy_check(const DiscreteSpace& space,
                                   const std::vector<std::array<NodeId, 4>>& quadruples) {
    if (quadruples.empty()) throw std::invalid_argument("ptolemy check: empty sample list");
    PtolemyReport rep;
    for (const auto& q : quadruples) {
        double a = space.distance(q[0], q[2]) * space.distance(q[1], q[3]);
        double b = space.distance(q[0], q[3]) * space.distance(q[1], q[2]);
        double c = space.distance(q[0], q[1]) * space.distance(q[2], q[3]);
        double slack = a + b - c;
        double scale = std::max({a, b, c, 1e-300});
        if (slack < rep.min_slack) {
            rep.min_slack = slack;
            rep.worst = q;
        }
        rep.min_relative_slack = std::min(rep.min_relative_slack, slack / scale);
    }
    return rep;
}

inline std::vector<std::array<NodeId, 3>> all_triples(const DiscreteSpace& space) {
    std::vector<std::array<NodeId, 3>> out;
    const NodeId n = static_cast<NodeId>(space.size());
    out.reserve(static_cast<std::size_t>(n) * n * n);
    for (NodeId a = 0; a < n; ++a)
        for (NodeId b = 0; b < n; ++b)
            for (NodeId c = 0; c < n; ++c) out.push_back({a, b, c});
    return out;
}

inline std::vector<std::array<NodeId, 4>> all_quadruples(const DiscreteSpace& space) {
    std::vector<std::array<NodeId, 4>> out;
    const NodeId n = static_cast<NodeId>(space.size());
    out.reserve(static_cast<std::size_t>(n) * n * n * n);
    for (NodeId a = 0; a < n; ++a)
        for (NodeId b = 0; b < n; ++b)
            for (NodeId c = 0; c < n; ++c)
                for (NodeId d = 0; d < n; ++d) out.push_back({a, b, c, d});
    return out;
}

// --- chordal diameter -----------------------------------------------------------

struct DiameterResult {
    double value = 0.0;
    std::pair<XPoint, XPoint> witness;
};

/// Max pairwise chordal distance over a finite set; the witness pair is the
/// lexicographically smallest attaining pair (by node identifier, infinity last).
inline DiameterResult chordal_diameter(const std::vector<XPoint>& set, const ChordalParams& params,
                                       const DiscreteSpace& space) {
    if (set.empty()) throw std::invalid_argument("chordal diameter: empty set");
    auto name = [&](const XPoint& x) {
        return x.inf ? std::string(1, '\x7f') : space.names[x.id];
    };
    std::vector<XPoint> pts = set;
    std::sort(pts.begin(), pts.end(),
              [&](const XPoint& a, const XPoint& b) { return name(a) < name(b); });
    DiameterResult res;
    res.witness = {pts.front(), pts.front()};
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double h = chordal_distance(pts[i], pts[j], params, space);
            if (h > res.value + 1e-15) {
                res.value = h;
                res.witness = {pts[i], pts[j]};
            }
        }
    return res;
}

inline DiameterResult chordal_diameter(const std::vector<NodeId>& set, const ChordalParams& params,
                                       const DiscreteSpace& space) {
    std::vector<XPoint> pts;
    pts.reserve(set.size());
    for (NodeId v : set) pts.push_back(XPoint::node(v));
    return chordal_diameter(pts, params, space);
}

// --- subcontinuum extraction (chordal-diameter floor a/4) ------------------------

/// From a connected C of chordal diameter >= a and R with
/// h(X \ B(x0,R)) < a/2, extracts a connected C1 inside the closed ball with
/// chordal diameter >= a/4. If C already sits in the closed ball, returns C.
inline std::vector<NodeId> extract_subcontinuum(const std::vector<NodeId>& C, NodeId x0, double a,
                                                double R, const DiscreteSpace& space) {
    if (!(a > 0.0)) throw std::invalid_argument("extract_subcontinuum: a must be positive");
    if (!(R > 0.0)) throw std::invalid_argument("extract_subcontinuum: R must be positive");
    if (C.empty()) throw std::invalid_argument("extract_subcontinuum: C is empty");
    if (!subset_connected(space, C))
        throw std::invalid_argument("precondition failed: C is not graph-connected");

    ChordalParams params{x0, 1.0, 1.0, 2.0};
    double diamC = chordal_diameter(C, params, space).value;
    if (diamC < a)
        throw std::invalid_argument("precondition failed: chordal diameter of C is below a");

    std::vector<NodeId> complement;
    for (NodeId v = 0; v < space.size(); ++v)
        if (space.distance(v, x0) >= R) complement.push_back(v);
    if (!complement.empty()) {
        double diamOut = chordal_diameter(complement, params, space).value;
        if (!(diamOut < a / 2.0))
            throw std::invalid_argument(
                "precondition failed: chordal diameter of the complement of B(x0,R) is not below a/2");
    }

    std::vector<NodeId> inBall;
    for (NodeId v : C)
        if (space.distance(v, x0) <= R) inBall.push_back(v);
    if (inBall.size() == C.size()) {
        auto out = C;
        std::sort(out.begin(), out.end());
        return out;
    }

    auto comps = subset_components(space, inBall);
    if (comps.empty()) throw std::logic_error("extract_subcontinuum: C misses the closed ball entirely");
    std::size_t best = 0;
    double bestDiam = -1.0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        double d = chordal_diameter(comps[i], params, space).value;
        if (d > bestDiam + 1e-15) {
            bestDiam = d;
            best = i;
        }
    }
    if (bestDiam < a / 4.0)
        throw std::logic_error("extract_subcontinuum: no component reaches chordal diameter a/4");
    return comps[best];
}

// --- equivalence of chordal metrics ----------------------------------------------

struct RatioRange {
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;
};

/// Extremes of H_params1(x,y)/H_params2(x,y) over the sampled pairs; degenerate
/// pairs (x = y) are skipped.
inline RatioRange metric_equivalence_ratio(const ChordalParams& params1,
                                           const ChordalParams& params2,
                                           const DiscreteSpace& space,
                                           const std::vector<std::pair<NodeId, NodeId>>& samples) {
    params1.validate();
    params2.validate();
    if (params1.basepoint != params2.basepoint)
        throw std::invalid_argument("metric equivalence: both parameter sets must share the basepoint");
    RatioRange rr;
    bool any = false;
    for (auto [x, y] : samples) {
        if (x == y) continue;
        double h1 = chordal_distance(x, y, params1, space);
        double h2 = chordal_distance(x, y, params2, space);
        double ratio = h1 / h2;
        rr.min_ratio = std::min(rr.min_ratio, ratio);
        rr.max_ratio = std::max(rr.max_ratio, ratio);
        any = true;
    }
    if (!any) throw std::invalid_argument("metric equivalence: all sampled pairs are degenerate");
    return rr;
}

// --- epsilon-nets of the compactification ------------------------------------------

/// Greedy epsilon-net of the compactified space under the chordal metric
/// (basepoint first, nodes in id order, infinity last); coverage is verified
/// before returning. Infinity participates only for the standard parameters.
inline std::vector<XPoint> net_probe(const DiscreteSpace& space, const ChordalParams& params,
                                     double epsilon) {
    params.validate();
    if (!(epsilon > 0.0)) throw std::invalid_argument("net probe: epsilon must be positive");
    std::vector<XPoint> universe;
    universe.push_back(XPoint::node(params.basepoint));
    for (NodeId v = 0; v < space.size(); ++v)
        if (v != params.basepoint) universe.push_back(XPoint::node(v));
    if (params.standard()) universe.push_back(XPoint::infinity());

    std::vector<XPoint> net;
    for (const auto& x : universe) {
        bool covered = false;
        for (const auto& c : net)
            if (chordal_distance(x, c, params, space) <= epsilon) {
                covered = true;
                break;
            }
        if (!covered) net.push_back(x);
    }
    for (const auto& x : universe) {
        bool covered = false;
        for (const auto& c : net)
            if (chordal_distance(x, c, params, space) <= epsilon) {
                covered = true;
                break;
            }
        if (!covered) throw std::logic_error("net probe: verification failed");
    }
    return net;
}

} // namespace qcmod
