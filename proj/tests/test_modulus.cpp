#include "qcmod/modulus.hpp"

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

/// s - m - t chain with unit edges and unit measures.
DiscreteSpace three_chain(double mu_mid = 1.0) {
    std::vector<std::string> names{"s", "m", "t"};
    std::vector<Point> coords{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    std::vector<double> mu{1.0, mu_mid, 1.0};
    std::vector<Edge> edges{{0, 1, 1.0}, {1, 2, 1.0}};
    return DiscreteSpace::from_nodes(2, MetricKind::euclidean, 2.0, names, coords, mu, edges);
}

SolverOptions tight() {
    SolverOptions o;
    o.tol = 1e-9;
    o.kkt_tol = 1e-11;
    return o;
}

double value_of(const ModulusResult& r) {
    REQUIRE_FALSE(r.infinite);
    return r.value;
}

} // namespace

TEST_CASE("path length follows the trapezoidal rule") {
    auto s = three_chain();
    Density rho{1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0};
    REQUIRE(path_length({0, 1, 2}, rho, s) == Catch::Approx(1.0));

    SECTION("zero density gives zero length") {
        REQUIRE(path_length({0, 1, 2}, Density(3, 0.0), s) == 0.0);
    }
    SECTION("a single-node path has zero length for every density") {
        REQUIRE(path_length({1}, rho, s) == 0.0);
    }
    SECTION("non-adjacent sequences are input errors") {
        REQUIRE_THROWS_AS(path_length({0, 2}, rho, s), std::invalid_argument);
    }
}

TEST_CASE("admissibility check") {
    auto s = three_chain();
    auto fam = PathFamily::explicit_family({{0, 1, 2}});

    SECTION("the KKT density is admissible with the worst path reported") {
        Density rho{1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0};
        auto rep = admissibility_check(rho, fam, s, 1e-12);
        REQUIRE(rep.admissible);
        REQUIRE(rep.worst_length == Catch::Approx(1.0));
        REQUIRE(rep.worst_path == std::vector<NodeId>{0, 1, 2});
    }

    SECTION("an empty family is vacuously admissible") {
        auto rep = admissibility_check(Density(3, 0.0), PathFamily::explicit_family({}), s, 1e-9);
        REQUIRE(rep.admissible);
        REQUIRE(rep.vacuous);
        REQUIRE(std::isinf(rep.worst_length));
    }

    SECTION("a too-small density is rejected with the offending path") {
        Density rho(3, 0.2);
        auto rep = admissibility_check(rho, fam, s, 1e-9);
        REQUIRE_FALSE(rep.admissible);
        REQUIRE(rep.worst_length == Catch::Approx(0.4));
    }
}

TEST_CASE("single-path fixture reproduces the hand KKT solution") {
    auto s = three_chain();
    auto fam = PathFamily::explicit_family({{0, 1, 2}});

    auto cg = compute_p_modulus(s, fam, 2.0, tight());
    REQUIRE(value_of(cg) == Catch::Approx(2.0 / 3.0).epsilon(1e-8));
    REQUIRE(cg.density[0] == Catch::Approx(1.0 / 3.0).epsilon(1e-6));
    REQUIRE(cg.density[1] == Catch::Approx(2.0 / 3.0).epsilon(1e-6));
    REQUIRE(cg.density[2] == Catch::Approx(1.0 / 3.0).epsilon(1e-6));

    auto bf = brute_force_modulus(s, fam, 2.0, tight());
    REQUIRE(value_of(bf) == Catch::Approx(2.0 / 3.0).epsilon(1e-8));
    REQUIRE(std::abs(cg.value - bf.value) <= 2e-6);

    SECTION("the returned density passes a final admissibility audit") {
        auto rep = admissibility_check(cg.density, fam, s, 1e-8);
        REQUIRE(rep.admissible);
        REQUIRE(cg.certified_gap <= 1e-8);
    }
}

TEST_CASE("degenerate families") {
    auto s = three_chain();

    SECTION("empty family has zero modulus") {
        auto r = compute_p_modulus(s, PathFamily::explicit_family({}), 2.0);
        REQUIRE_FALSE(r.infinite);
        REQUIRE(r.value == 0.0);
    }

    SECTION("a single-node member empties the admissible set") {
        auto r = compute_p_modulus(s, PathFamily::explicit_family({{0, 1, 2}, {1}}), 2.0);
        REQUIRE(r.infinite);
        auto b = brute_force_modulus(s, PathFamily::explicit_family({{1}}), 2.0);
        REQUIRE(b.infinite);
    }

    SECTION("overlapping E and F give the infinite sentinel") {
        auto r = compute_p_modulus(s, PathFamily::connecting({0, 1}, {1, 2}, {0, 1, 2}), 2.0);
        REQUIRE(r.infinite);
    }

    SECTION("disconnected E and F give the empty family") {
        auto r = compute_p_modulus(s, PathFamily::connecting({0}, {2}, {0, 2}), 2.0);
        REQUIRE_FALSE(r.infinite); // interior node 1 is not allowed, no path exists
        REQUIRE(r.value == 0.0);
    }

    SECTION("p <= 1 is out of scope") {
        REQUIRE_THROWS_AS(compute_p_modulus(s, PathFamily::explicit_family({{0, 1}}), 1.0),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(brute_force_modulus(s, PathFamily::explicit_family({{0, 1}}), 0.5),
                          std::invalid_argument);
    }
}

TEST_CASE("two disjoint copies double the modulus") {
    std::vector<std::string> names{"s1", "m1", "t1", "s2", "m2", "t2"};
    std::vector<Point> coords{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}, {1, 1, 0}, {2, 1, 0}};
    std::vector<double> mu(6, 1.0);
    std::vector<Edge> edges{{0, 1, 1.0}, {1, 2, 1.0}, {3, 4, 1.0}, {4, 5, 1.0}};
    auto s = DiscreteSpace::from_nodes(2, MetricKind::euclidean, 2.0, names, coords, mu, edges);
    auto fam = PathFamily::explicit_family({{0, 1, 2}, {3, 4, 5}});
    REQUIRE(value_of(compute_p_modulus(s, fam, 2.0, tight())) ==
            Catch::Approx(4.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("a tiny-measure cut node dominates the modulus") {
    double tau = 1e-3;
    auto s = three_chain(tau);
    auto fam = PathFamily::explicit_family({{0, 1, 2}});
    // closed form for min rho_s^2 + tau rho_m^2 + rho_t^2 with rho_s/2 + rho_m + rho_t/2 >= 1
    double expected = (0.125 + 0.25 / tau) / std::pow(0.25 + 0.5 / tau, 2.0);
    auto r = compute_p_modulus(s, fam, 2.0, tight());
    REQUIRE(value_of(r) == Catch::Approx(expected).epsilon(1e-8));
    REQUIRE(value_of(brute_force_modulus(s, fam, 2.0, tight())) ==
            Catch::Approx(expected).epsilon(1e-8));
}

TEST_CASE("constraint generation agrees with the brute-force oracle on grid families") {
    auto s = grid(0.0, 2.0, 1.0); // 3x3
    auto at = [&](double x, double y) { return s.node_at({x, y, 0.0}); };
    std::vector<NodeId> all(s.size());
    for (NodeId v = 0; v < s.size(); ++v) all[v] = v;

    auto left = std::vector<NodeId>{at(0, 0), at(0, 1), at(0, 2)};
    auto right = std::vector<NodeId>{at(2, 0), at(2, 1), at(2, 2)};
    auto fam = PathFamily::connecting(left, right, all);

    for (double p : {1.5, 2.0, 3.0}) {
        INFO("p = " << p);
        auto cg = compute_p_modulus(s, fam, p, tight());
        auto bf = brute_force_modulus(s, fam, p, tight());
        REQUIRE(std::abs(value_of(cg) - value_of(bf)) <= 2e-6);
    }

    SECTION("p = 2 side-to-side modulus tracks the conductance value") {
        // order-of-magnitude agreement at this very coarse mesh; the acceptance
        // suite compares the two on refined annuli
        double cond = conductance_oracle(s, left, right);
        auto cg = compute_p_modulus(s, fam, 2.0, tight());
        REQUIRE(value_of(cg) > 0.5 * cond);
        REQUIRE(value_of(cg) < 2.0 * cond);
    }
}

TEST_CASE("random explicit families agree across the two solvers") {
    std::mt19937_64 rng(20240817);
    auto s = grid(0.0, 3.0, 1.0); // 4x4
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<std::vector<NodeId>> paths;
        std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(s.size() - 1));
        std::uniform_int_distribution<int> len(1, 6);
        for (int k = 0; k < 5; ++k) {
            std::vector<NodeId> p{pick(rng)};
            for (int step = len(rng); step > 0; --step) {
                auto& nb = s.neighbors(p.back());
                std::uniform_int_distribution<std::size_t> which(0, nb.size() - 1);
                p.push_back(nb[which(rng)].first);
            }
            paths.push_back(std::move(p));
        }
        auto fam = PathFamily::explicit_family(paths);
        double p = trial % 2 == 0 ? 2.0 : 2.5;
        auto cg = compute_p_modulus(s, fam, p, tight());
        auto bf = brute_force_modulus(s, fam, p, tight());
        INFO("trial " << trial);
        REQUIRE(std::abs(value_of(cg) - value_of(bf)) <= 2e-6);
    }
}

TEST_CASE("scaling the measure scales the modulus linearly") {
    auto s = grid(0.0, 2.0, 1.0);
    std::vector<NodeId> all(s.size());
    for (NodeId v = 0; v < s.size(); ++v) all[v] = v;
    auto fam = PathFamily::connecting({s.node_at({0, 0, 0})}, {s.node_at({2, 2, 0})}, all);
    double base = value_of(compute_p_modulus(s, fam, 2.0, tight()));

    auto scaled = s;
    for (double& m : scaled.mu) m *= 3.0;
    scaled.validate_and_finish({});
    REQUIRE(value_of(compute_p_modulus(scaled, fam, 2.0, tight())) ==
            Catch::Approx(3.0 * base).epsilon(1e-7));
}

TEST_CASE("a subfamily never exceeds the family's modulus") {
    auto s = grid(0.0, 2.0, 1.0);
    auto a = s.node_at({0, 0, 0}), b = s.node_at({2, 0, 0});
    auto c = s.node_at({0, 2, 0}), d = s.node_at({2, 2, 0});
    std::vector<std::vector<NodeId>> paths{
        {a, s.node_at({1, 0, 0}), b}, {c, s.node_at({1, 2, 0}), d}, {a, s.node_at({0, 1, 0}), c}};
    auto family = PathFamily::explicit_family(paths);
    auto sub = PathFamily::explicit_family({paths[0]});
    REQUIRE(value_of(compute_p_modulus(s, sub, 2.0, tight())) <=
            value_of(compute_p_modulus(s, family, 2.0, tight())) + 2e-9);
}

TEST_CASE("subadditivity over unions of explicit families") {
    auto s = grid(0.0, 3.0, 1.0);
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(s.size() - 1));
    auto random_path = [&](int steps) {
        std::vector<NodeId> p{pick(rng)};
        for (int i = 0; i < steps; ++i) {
            auto& nb = s.neighbors(p.back());
            std::uniform_int_distribution<std::size_t> which(0, nb.size() - 1);
            p.push_back(nb[which(rng)].first);
        }
        return p;
    };
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::vector<NodeId>> g1{random_path(3), random_path(4)};
        std::vector<std::vector<NodeId>> g2{random_path(2), random_path(5)};
        auto both = g1;
        both.insert(both.end(), g2.begin(), g2.end());
        double m1 = value_of(compute_p_modulus(s, PathFamily::explicit_family(g1), 2.0, tight()));
        double m2 = value_of(compute_p_modulus(s, PathFamily::explicit_family(g2), 2.0, tight()));
        double mu = value_of(compute_p_modulus(s, PathFamily::explicit_family(both), 2.0, tight()));
        INFO("trial " << trial);
        REQUIRE(mu <= m1 + m2 + 1e-8);
    }
}

TEST_CASE("conductance oracle elementary networks") {
    std::vector<std::string> names{"a", "b", "c"};
    std::vector<Point> coords{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    std::vector<double> mu(3, 1.0);

    SECTION("one unit resistor") {
        auto s = DiscreteSpace::from_nodes(2, MetricKind::euclidean, 2.0, {"a", "b"},
                                           {{0, 0, 0}, {1, 0, 0}}, {1.0, 1.0}, {{0, 1, 1.0}});
        REQUIRE(conductance_oracle(s, {0}, {1}) == Catch::Approx(1.0));
    }

    SECTION("two unit resistors in series") {
        auto s = DiscreteSpace::from_nodes(2, MetricKind::euclidean, 2.0, names, coords, mu,
                                           {{0, 1, 1.0}, {1, 2, 1.0}});
        REQUIRE(conductance_oracle(s, {0}, {2}) == Catch::Approx(0.5));
    }

    SECTION("disconnected plates have zero conductance") {
        auto s = DiscreteSpace::from_nodes(2, MetricKind::euclidean, 2.0, names, coords, mu,
                                           {{0, 1, 1.0}});
        REQUIRE(conductance_oracle(s, {0}, {2}) == 0.0);
    }

    SECTION("plates must be disjoint and nonempty") {
        auto s = DiscreteSpace::from_nodes(2, MetricKind::euclidean, 2.0, names, coords, mu,
                                           {{0, 1, 1.0}, {1, 2, 1.0}});
        REQUIRE_THROWS_AS(conductance_oracle(s, {0}, {0, 2}), std::invalid_argument);
        REQUIRE_THROWS_AS(conductance_oracle(s, {}, {2}), std::invalid_argument);
    }
}

TEST_CASE("minorization") {
    auto s = grid(-3.0, 3.0, 0.5);
    Point origin{0.0, 0.0, 0.0};

    SECTION("a family is minorized by itself") {
        auto fam = make_ring_family(s, {origin, 1.0, 2.0}, 0.25);
        auto rep = minorization_test(s, fam, fam, 2.0, tight());
        REQUIRE(rep.holds);
        REQUIRE(std::abs(rep.m1.value - rep.m2.value) <= 2e-7);
    }

    SECTION("crossing the full annulus is minorized by crossing a sub-annulus") {
        auto fam1 = make_ring_family(s, {origin, 0.8, 2.8}, 0.25);
        auto fam2 = make_ring_family(s, {origin, 1.2, 2.2}, 0.25);
        auto rep = minorization_test(s, fam1, fam2, 2.0, tight());
        REQUIRE(rep.holds);
        REQUIRE(rep.m1.value <= rep.m2.value + 2e-9);
    }

    SECTION("adding extra members can only raise the modulus") {
        auto a = s.node_at({0, 0, 0});
        std::vector<std::vector<NodeId>> base{{a, s.node_at({0.5, 0, 0}), s.node_at({1.0, 0, 0})}};
        auto extra = base;
        extra.push_back({s.node_at({0, 0.5, 0}), s.node_at({0, 1.0, 0})});
        auto rep = minorization_test(s, PathFamily::explicit_family(base),
                                     PathFamily::explicit_family(extra), 2.0, tight());
        REQUIRE(rep.holds);
    }

    SECTION("unestablished structure is a precondition error") {
        auto fam1 = make_ring_family(s, {origin, 1.0, 2.0}, 0.25);
        auto fam2 = make_ring_family(s, {origin, 0.5, 1.5}, 0.25); // not nested
        REQUIRE_THROWS_AS(minorization_test(s, fam1, fam2, 2.0), std::invalid_argument);
        auto plain = PathFamily::connecting(fam2.E, fam2.F, fam2.G); // no provenance
        REQUIRE_THROWS_AS(minorization_test(s, fam1, plain, 2.0), std::invalid_argument);
    }
}

TEST_CASE("condenser capacity") {
    auto s = grid(-2.0, 2.0, 0.5);
    Point origin{0.0, 0.0, 0.0};
    std::vector<NodeId> all(s.size());
    for (NodeId v = 0; v < s.size(); ++v) all[v] = v;

    SECTION("the whole space has no boundary shell and capacity 0") {
        auto r = condenser_capacity(s, {all, s.closed_ball_nodes(origin, 0.6)}, 2.0);
        REQUIRE_FALSE(r.infinite);
        REQUIRE(r.value == 0.0);
    }

    SECTION("concentric disks approximate the ring capacity") {
        auto A = s.ball_nodes(origin, 1.9);
        auto C = s.closed_ball_nodes(origin, 0.8);
        auto r = condenser_capacity(s, {A, C}, 2.0, tight());
        double continuum = 2.0 * M_PI / std::log(1.9 / 0.8);
        REQUIRE(value_of(r) == Catch::Approx(continuum).epsilon(0.35)); // coarse mesh
    }

    SECTION("a plate touching the boundary shell has infinite capacity") {
        auto A = s.ball_nodes(origin, 1.9);
        std::vector<NodeId> C{s.node_at({1.5, 0.0, 0.0})};
        auto r = condenser_capacity(s, {A, C}, 2.0);
        REQUIRE(r.infinite);
    }

    SECTION("C must sit inside A") {
        REQUIRE_THROWS_AS(
            condenser_capacity(s, {s.ball_nodes(origin, 1.0), {s.node_at({1.5, 0, 0})}}, 2.0),
            std::invalid_argument);
    }
}

TEST_CASE("pr2 floor") {
    auto s = grid(0.0, 3.0, 1.0);
    std::vector<NodeId> E{s.node_at({0, 1, 0}), s.node_at({1, 1, 0})};
    std::vector<NodeId> F{s.node_at({0, 2, 0}), s.node_at({1, 2, 0})};

    auto rep = pr2_floor(s, E, F, 3.0, 2.0, 2.0, tight());
    REQUIRE(rep.observed > 0.0);
    REQUIRE(rep.bound == Catch::Approx(1.0 / 3.0)); // min diam = 1, R^(1+p-alpha) = 3
    REQUIRE(rep.constant == Catch::Approx(rep.bound / rep.observed));

    SECTION("E and F must be disjoint") {
        REQUIRE_THROWS_AS(pr2_floor(s, E, E, 3.0, 2.0, 2.0), std::invalid_argument);
    }
    SECTION("p must lie in (alpha-1, alpha]") {
        REQUIRE_THROWS_AS(pr2_floor(s, E, F, 3.0, 3.5, 2.0), std::invalid_argument);
    }
    SECTION("disconnected continua are rejected") {
        std::vector<NodeId> split{s.node_at({0, 0, 0}), s.node_at({2, 0, 0})};
        REQUIRE_THROWS_AS(pr2_floor(s, split, F, 3.0, 2.0, 2.0), std::invalid_argument);
    }
}

TEST_CASE("capacity floor battery skips invalid trials and reports a positive delta") {
    auto s = grid(-2.0, 2.0, 0.5);
    std::vector<NodeId> F{s.node_at({0, -0.5, 0}), s.node_at({0, 0, 0}), s.node_at({0, 0.5, 0})};
    NodeId x0 = s.node_at({0.0, 0.0, 0.0});
    ChordalParams params{x0, 1.0, 1.0, 2.0};

    auto make_bar = [&](double x, double y) {
        std::vector<NodeId> c;
        for (double t : {0.0, 0.5, 1.0}) c.push_back(s.node_at({x, y + t, 0.0}));
        return c;
    };
    std::vector<std::vector<NodeId>> trials{
        make_bar(1.5, -0.5), make_bar(-1.5, -0.5), make_bar(1.0, 0.5),
        {s.node_at({0.5, 0, 0})},                       // singleton: zero diameter -> skipped
        {s.node_at({2, 2, 0}), s.node_at({2, -2, 0})}}; // disconnected -> skipped

    double a = 0.25;
    auto rep = capacity_floor_check(s, F, params, a, 2.0, trials, tight());
    REQUIRE(rep.capacities.size() == 3);
    REQUIRE(rep.skipped == std::vector<std::size_t>{3, 4});
    REQUIRE(rep.all_positive);
    REQUIRE(rep.delta > 0.0);
}
