#include "qcmod/chordal.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace qcmod;

namespace {

DiscreteSpace grid(double lo, double hi, double h) {
    GridDomainSpec spec;
    spec.lo = {lo, lo, 0.0};
    spec.hi = {hi, hi, 0.0};
    spec.step = h;
    return build_grid_domain(spec);
}

/// 4-cycle with the shortest-path metric: the classic non-Ptolemaic witness.
DiscreteSpace four_cycle() {
    std::vector<std::string> names{"a", "b", "c", "d"};
    std::vector<Point> coords{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    std::vector<double> mu(4, 1.0);
    std::vector<Edge> edges{{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}};
    return DiscreteSpace::from_nodes(2, MetricKind::graph, 2.0, names, coords, mu, edges);
}

} // namespace

TEST_CASE("chordal distance closed-form cases") {
    auto s = grid(0.0, 2.0, 1.0);
    NodeId x0 = s.node_at({0.0, 0.0, 0.0});
    NodeId y = s.node_at({1.0, 0.0, 0.0});
    ChordalParams std_params{x0, 1.0, 1.0, 2.0};

    REQUIRE(chordal_distance(x0, y, std_params, s) == Catch::Approx(1.0 / std::sqrt(2.0)));
    REQUIRE(chordal_distance(y, y, std_params, s) == 0.0);
    REQUIRE(chordal_distance(XPoint::node(x0), XPoint::infinity(), std_params, s) ==
            Catch::Approx(1.0));
    REQUIRE(chordal_distance(XPoint::infinity(), XPoint::infinity(), std_params, s) == 0.0);

    SECTION("symmetry") {
        REQUIRE(chordal_distance(x0, y, std_params, s) == chordal_distance(y, x0, std_params, s));
    }

    SECTION("infinity is rejected for non-standard parameters") {
        ChordalParams other{x0, 2.0, 1.0, 2.0};
        REQUIRE_THROWS_AS(chordal_distance(XPoint::node(y), XPoint::infinity(), other, s),
                          std::invalid_argument);
    }

    SECTION("parameter validation") {
        ChordalParams bad{x0, 0.0, 1.0, 2.0};
        REQUIRE_THROWS_AS(chordal_distance(x0, y, bad, s), std::invalid_argument);
    }
}

TEST_CASE("h is dominated by the base distance") {
    auto s = grid(-1.0, 1.0, 0.5);
    ChordalParams std_params{s.node_at({0.0, 0.0, 0.0}), 1.0, 1.0, 2.0};
    for (NodeId a = 0; a < s.size(); ++a)
        for (NodeId b = 0; b < s.size(); ++b)
            REQUIRE(chordal_distance(a, b, std_params, s) <= s.distance(a, b) + 1e-15);
}

TEST_CASE("triangle audit is clean on Euclidean grids for every parameter set") {
    auto s = grid(0.0, 2.0, 0.5); // 5x5
    NodeId x0 = s.node_at({1.0, 1.0, 0.0});
    auto triples = all_triples(s);
    for (ChordalParams cp : {ChordalParams{x0, 1.0, 1.0, 2.0}, ChordalParams{x0, 2.0, 0.5, 3.0},
                             ChordalParams{x0, 1.0, 0.0, 2.0}, ChordalParams{x0, 0.7, 2.0, 1.5}}) {
        auto rep = triangle_audit(cp, s, triples);
        INFO("alpha=" << cp.alpha << " beta=" << cp.beta << " p=" << cp.p);
        REQUIRE(rep.max_relative_defect <= 1e-12);
    }

    SECTION("degenerate triple has zero defect") {
        auto rep = triangle_audit(ChordalParams{x0, 1.0, 1.0, 2.0}, s, {{x0, x0, x0}});
        REQUIRE(rep.max_defect == 0.0);
    }

    SECTION("empty sample list is an input error") {
        REQUIRE_THROWS_AS(triangle_audit(ChordalParams{x0, 1.0, 1.0, 2.0}, s, {}),
                          std::invalid_argument);
    }
}

TEST_CASE("ptolemy check") {
    SECTION("all quadruples of a Euclidean grid have nonnegative slack") {
        auto s = grid(0.0, 3.0, 1.0); // 4x4
        auto rep = ptolemy_check(s, all_quadruples(s));
        REQUIRE(rep.min_relative_slack >= -1e-12);
    }

    SECTION("repeated points give nonnegative slack") {
        auto s = grid(0.0, 1.0, 1.0);
        auto rep = ptolemy_check(s, {{0, 0, 1, 2}, {0, 1, 1, 2}, {0, 1, 2, 2}});
        REQUIRE(rep.min_slack >= -1e-15);
    }

    SECTION("the 4-cycle graph metric violates the inequality with slack -2") {
        auto s = four_cycle();
        NodeId a = s.node_by_name("a"), b = s.node_by_name("b"), c = s.node_by_name("c"),
               d = s.node_by_name("d");
        auto rep = ptolemy_check(s, {{a, c, b, d}});
        REQUIRE(rep.min_slack == Catch::Approx(-2.0));
        auto full = ptolemy_check(s, all_quadruples(s));
        REQUIRE(full.min_slack == Catch::Approx(-2.0));
    }
}

TEST_CASE("on the non-Ptolemaic witness some beta > 0 parameter set breaks the triangle inequality") {
    auto s = four_cycle();
    NodeId a = s.node_by_name("a");
    auto rep = triangle_audit(ChordalParams{a, 1.0, 1.0, 2.0}, s, all_triples(s));
    REQUIRE(rep.max_defect > 0.1); // H(b,d) = 1 vs H(b,c)+H(c,d) ~ 0.632 with basepoint a

    SECTION("beta = 0 keeps the scaled base metric, which is always a metric") {
        auto clean = triangle_audit(ChordalParams{a, 1.0, 0.0, 2.0}, s, all_triples(s));
        REQUIRE(clean.max_relative_defect <= 1e-12);
    }
}

TEST_CASE("the compactified-metric inequality holds exhaustively") {
    auto s = grid(-2.0, 2.0, 0.5);
    ChordalParams std_params{s.node_at({0.0, 0.0, 0.0}), 1.0, 1.0, 2.0};
    for (NodeId x = 0; x < s.size(); ++x)
        for (NodeId y = 0; y < s.size(); ++y) {
            double lhs = chordal_distance(XPoint::node(x), XPoint::infinity(), std_params, s);
            double rhs = chordal_distance(x, y, std_params, s) +
                         chordal_distance(XPoint::node(y), XPoint::infinity(), std_params, s);
            REQUIRE(lhs <= rhs + 1e-12);
        }
}

TEST_CASE("chordal diameter") {
    auto s = grid(0.0, 2.0, 1.0);
    NodeId x0 = s.node_at({0.0, 0.0, 0.0});
    ChordalParams std_params{x0, 1.0, 1.0, 2.0};

    SECTION("singleton") {
        auto d = chordal_diameter(std::vector<NodeId>{x0}, std_params, s);
        REQUIRE(d.value == 0.0);
        REQUIRE(d.witness.first == XPoint::node(x0));
        REQUIRE(d.witness.second == XPoint::node(x0));
    }

    SECTION("two-point set realizes the pair distance") {
        NodeId y = s.node_at({1.0, 0.0, 0.0});
        auto d = chordal_diameter(std::vector<NodeId>{x0, y}, std_params, s);
        REQUIRE(d.value == Catch::Approx(1.0 / std::sqrt(2.0)));
    }

    SECTION("the whole compactified space has diameter at most 1") {
        std::vector<XPoint> xbar;
        for (NodeId v = 0; v < s.size(); ++v) xbar.push_back(XPoint::node(v));
        xbar.push_back(XPoint::infinity());
        REQUIRE(chordal_diameter(xbar, std_params, s).value <= 1.0 + 1e-15);
    }

    SECTION("empty set is an input error") {
        REQUIRE_THROWS_AS(chordal_diameter(std::vector<NodeId>{}, std_params, s),
                          std::invalid_argument);
    }
}

TEST_CASE("diameter witness ties break toward the lexicographically smallest pair") {
    // equilateral triangle: (a,b) and (a,c) both attain the diameter from basepoint a
    std::vector<std::string> names{"a", "b", "c"};
    std::vector<Point> coords{{0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2.0, 0}};
    std::vector<double> mu(3, 1.0);
    auto s = DiscreteSpace::from_nodes(2, MetricKind::euclidean, 2.0, names, coords, mu, {});
    ChordalParams std_params{0, 1.0, 1.0, 2.0};
    auto d = chordal_diameter(std::vector<NodeId>{0, 1, 2}, std_params, s);
    REQUIRE(d.value == Catch::Approx(1.0 / std::sqrt(2.0)));
    REQUIRE(s.names[d.witness.first.id] == "a");
    REQUIRE(s.names[d.witness.second.id] == "b");
}

TEST_CASE("subcontinuum extraction") {
    auto s = grid(-10.0, 10.0, 1.0);
    NodeId x0 = s.node_at({0.0, 0.0, 0.0});

    std::vector<NodeId> axis;
    for (NodeId v = 0; v < s.size(); ++v)
        if (s.coords[v][1] == 0.0) axis.push_back(v);

    SECTION("C inside the closed ball comes back unchanged") {
        std::vector<NodeId> c;
        for (NodeId v : axis)
            if (std::abs(s.coords[v][0]) <= 3.0) c.push_back(v);
        auto out = extract_subcontinuum(c, x0, 0.9, 5.0, s);
        std::sort(c.begin(), c.end());
        REQUIRE(out == c);
    }

    SECTION("a straddling continuum yields a connected in-ball piece of diameter >= a/4") {
        double a = 0.9, R = 6.0;
        auto out = extract_subcontinuum(axis, x0, a, R, s);
        REQUIRE(subset_connected(s, out));
        for (NodeId v : out) REQUIRE(s.distance(v, x0) <= R);
        ChordalParams std_params{x0, 1.0, 1.0, 2.0};
        REQUIRE(chordal_diameter(out, std_params, s).value >= a / 4.0);
    }

    SECTION("violated hypotheses are named") {
        REQUIRE_THROWS_WITH(extract_subcontinuum(axis, x0, 2.0, 6.0, s),
                            Catch::Matchers::ContainsSubstring("chordal diameter of C"));
        std::vector<NodeId> split{s.node_at({-3.0, 0.0, 0.0}), s.node_at({3.0, 0.0, 0.0})};
        REQUIRE_THROWS_WITH(extract_subcontinuum(split, x0, 0.1, 6.0, s),
                            Catch::Matchers::ContainsSubstring("not graph-connected"));
        REQUIRE_THROWS_WITH(extract_subcontinuum(axis, x0, 0.9, 2.0, s),
                            Catch::Matchers::ContainsSubstring("complement"));
    }
}

TEST_CASE("metric equivalence ratios") {
    auto s = grid(-2.0, 2.0, 1.0);
    NodeId x0 = s.node_at({0.0, 0.0, 0.0});
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (NodeId a = 0; a < s.size(); ++a)
        for (NodeId b = 0; b < s.size(); ++b) pairs.push_back({a, b});

    SECTION("identical parameters give ratio 1") {
        ChordalParams cp{x0, 1.0, 1.0, 2.0};
        auto rr = metric_equivalence_ratio(cp, cp, s, pairs);
        REQUIRE(rr.min_ratio == Catch::Approx(1.0));
        REQUIRE(rr.max_ratio == Catch::Approx(1.0));
    }

    SECTION("h against the base metric stays within [1/(1+D^2), 1]") {
        ChordalParams h{x0, 1.0, 1.0, 2.0};
        ChordalParams base{x0, 1.0, 0.0, 2.0}; // beta = 0: H = d
        double D = 0.0;
        for (NodeId v = 0; v < s.size(); ++v)
            for (NodeId w = 0; w < s.size(); ++w) D = std::max(D, s.distance(v, w));
        auto rr = metric_equivalence_ratio(h, base, s, pairs);
        REQUIRE(rr.max_ratio <= 1.0 + 1e-15);
        REQUIRE(rr.min_ratio >= 1.0 / (1.0 + D * D) - 1e-15);
    }

    SECTION("raising alpha shrinks the metric") {
        ChordalParams big{x0, 2.0, 1.0, 2.0};
        ChordalParams small{x0, 1.0, 1.0, 2.0};
        auto rr = metric_equivalence_ratio(big, small, s, pairs);
        REQUIRE(rr.max_ratio <= 1.0 + 1e-15);
    }

    SECTION("mismatched basepoints and degenerate samples are input errors") {
        ChordalParams a{x0, 1.0, 1.0, 2.0};
        ChordalParams b{static_cast<NodeId>(x0 + 1), 1.0, 1.0, 2.0};
        REQUIRE_THROWS_AS(metric_equivalence_ratio(a, b, s, pairs), std::invalid_argument);
        REQUIRE_THROWS_AS(metric_equivalence_ratio(a, a, s, {{x0, x0}}), std::invalid_argument);
    }
}

TEST_CASE("epsilon nets of the compactification") {
    auto s = grid(0.0, 5.0, 1.0);
    NodeId x0 = s.node_at({0.0, 0.0, 0.0});
    ChordalParams std_params{x0, 1.0, 1.0, 2.0};

    SECTION("epsilon beyond the diameter gives the singleton basepoint net") {
        auto net = net_probe(s, std_params, 1.0);
        REQUIRE(net.size() == 1);
        REQUIRE(net[0] == XPoint::node(x0));
    }

    SECTION("every point of the compactification, including infinity, is covered") {
        auto net = net_probe(s, std_params, 0.3);
        bool inf_covered = false;
        for (const auto& c : net)
            if (chordal_distance(c, XPoint::infinity(), std_params, s) <= 0.3) inf_covered = true;
        REQUIRE(inf_covered);
        for (NodeId v = 0; v < s.size(); ++v) {
            double best = 1e9;
            for (const auto& c : net)
                best = std::min(best, chordal_distance(XPoint::node(v), c, std_params, s));
            REQUIRE(best <= 0.3);
        }
        // the infinity cover needs a node beyond 1/sqrt(1+R^2) = 0.3, i.e. R > 3.18
        bool far_node = false;
        for (const auto& c : net)
            if (!c.inf && s.distance(c.id, x0) > 3.18) far_node = true;
        REQUIRE((far_node || std::any_of(net.begin(), net.end(),
                                         [](const XPoint& c) { return c.inf; })));
    }

    SECTION("epsilon must be positive") {
        REQUIRE_THROWS_AS(net_probe(s, std_params, 0.0), std::invalid_argument);
    }
}
