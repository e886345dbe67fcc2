#include "qcmod/records.hpp"
#include "qcmod/space.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qcmod;

namespace {

DiscreteSpace unit_square(double h) {
    GridDomainSpec spec;
    spec.lo = {0.0, 0.0, 0.0};
    spec.hi = {1.0, 1.0, 0.0};
    spec.step = h;
    return build_grid_domain(spec);
}

DiscreteSpace integer_grid(double half_extent) {
    GridDomainSpec spec;
    spec.lo = {-half_extent, -half_extent, 0.0};
    spec.hi = {half_extent, half_extent, 0.0};
    spec.step = 1.0;
    return build_grid_domain(spec);
}

} // namespace

TEST_CASE("unit square at h = 0.5 has 9 nodes, 12 edges, cell measure 0.25") {
    auto s = unit_square(0.5);
    REQUIRE(s.size() == 9);
    REQUIRE(s.edges.size() == 12);
    for (double m : s.mu) REQUIRE(m == Catch::Approx(0.25));
    REQUIRE(s.mesh_step == 0.5);
}

TEST_CASE("punctured unit disk at h = 0.5 drops the center lattice point") {
    GridDomainSpec spec;
    spec.lo = {-1.0, -1.0, 0.0};
    spec.hi = {1.0, 1.0, 0.0};
    spec.step = 0.5;
    spec.clip_ball = {{{0.0, 0.0, 0.0}}, 1.0};
    auto full = build_grid_domain(spec);
    REQUIRE(full.size() == 13); // lattice points of the closed unit disk

    spec.puncture = Point{0.0, 0.0, 0.0};
    auto punctured = build_grid_domain(spec);
    REQUIRE(punctured.size() == 12);
    REQUIRE(punctured.node_at({0.0, 0.0, 0.0}) == kNoNode);
}

TEST_CASE("degenerate boxes are rejected") {
    GridDomainSpec spec;
    spec.lo = {0.0, 0.0, 0.0};
    spec.hi = {0.0, 1.0, 0.0};
    spec.step = 0.5;
    REQUIRE_THROWS_AS(build_grid_domain(spec), std::invalid_argument);
    spec.hi = {1.0, 1.0, 0.0};
    spec.step = -1.0;
    REQUIRE_THROWS_AS(build_grid_domain(spec), std::invalid_argument);
}

TEST_CASE("ring subset keeps exactly the open-annulus nodes") {
    auto s = integer_grid(3.0);
    Point origin{0.0, 0.0, 0.0};

    SECTION("r1 past the diameter gives the empty set") {
        REQUIRE(ring_subset(s, {origin, 100.0, 200.0}).empty());
    }

    SECTION("distances 1 and 2 are kept, 0 and beyond 2.1 are not") {
        auto ring = ring_subset(s, {origin, 0.9, 2.1});
        REQUIRE(ring.size() == 12); // 4 at distance 1, 4 at sqrt(2), 4 at 2
        for (NodeId v : ring) {
            double d = s.distance_point(origin, v);
            REQUIRE(d > 0.9);
            REQUIRE(d < 2.1);
        }
    }

    SECTION("nested rings are included") {
        auto inner = ring_subset(s, {origin, 1.0, 2.0});
        auto outer = ring_subset(s, {origin, 0.5, 3.0});
        for (NodeId v : inner) REQUIRE(std::find(outer.begin(), outer.end(), v) != outer.end());
    }

    SECTION("invalid radii are rejected") {
        REQUIRE_THROWS_AS(ring_subset(s, {origin, 2.0, 1.0}), std::invalid_argument);
        REQUIRE_THROWS_AS(ring_subset(s, {origin, 0.0, 1.0}), std::invalid_argument);
    }
}

TEST_CASE("sphere shells") {
    auto s = integer_grid(3.0);
    Point origin{0.0, 0.0, 0.0};

    SECTION("r = 0 with a thin tolerance is the center alone") {
        auto shell = sphere_nodes(s, origin, 0.0, 0.4);
        REQUIRE(shell.nodes.size() == 1);
        REQUIRE_FALSE(shell.thin);
    }

    SECTION("thin-enough shell at r = 1 is exactly the four axis neighbors") {
        auto shell = sphere_nodes(s, origin, 1.0, 0.4);
        REQUIRE(shell.nodes.size() == 4);
        for (NodeId v : shell.nodes)
            REQUIRE(s.distance_point(origin, v) == Catch::Approx(1.0));
    }

    SECTION("an unhittable radius flags a thin shell instead of throwing") {
        auto shell = sphere_nodes(s, origin, 0.5, 0.05);
        REQUIRE(shell.nodes.empty());
        REQUIRE(shell.thin);
    }
}

TEST_CASE("ahlfors probe on a planar grid sees the area constant and doubling ratio") {
    GridDomainSpec spec;
    spec.lo = {-2.0, -2.0, 0.0};
    spec.hi = {2.0, 2.0, 0.0};
    spec.step = 0.1;
    auto s = build_grid_domain(spec);
    Point origin{0.0, 0.0, 0.0};

    auto rep = ahlfors_probe(s, origin, {0.5, 0.7, 0.9}, 2.0);
    for (double r : rep.ratios) {
        REQUIRE(r > M_PI * 0.8);
        REQUIRE(r < M_PI * 1.2);
    }
    for (double d : rep.doubling_ratios) {
        REQUIRE(d > 3.5);
        REQUIRE(d < 4.5);
    }
    REQUIRE(rep.constant >= 1.0);

    SECTION("radius below the mesh step reports the singleton ball, not an error") {
        auto tiny = ahlfors_probe(s, origin, {0.05}, 2.0);
        REQUIRE(tiny.ratios[0] == Catch::Approx(s.mu[s.nearest_node(origin)] / std::pow(0.05, 2.0)));
    }
}

TEST_CASE("graph metric is the shortest-path metric") {
    std::vector<std::string> names{"a", "b", "c", "d"};
    std::vector<Point> coords{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    std::vector<double> mu(4, 1.0);
    std::vector<Edge> edges{{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}};
    auto s = DiscreteSpace::from_nodes(2, MetricKind::graph, 2.0, names, coords, mu, edges);
    REQUIRE(s.distance(0, 2) == Catch::Approx(2.0));
    REQUIRE(s.distance(1, 3) == Catch::Approx(2.0));
    REQUIRE(s.distance(0, 1) == Catch::Approx(1.0));
}

TEST_CASE("distance tables must satisfy the metric axioms") {
    std::vector<std::string> names{"a", "b", "c"};
    std::vector<Point> coords(3, Point{0, 0, 0});
    std::vector<double> mu(3, 1.0);
    std::vector<double> bad{0, 1, 5, 1, 0, 1, 5, 1, 0}; // d(a,c) > d(a,b)+d(b,c)
    REQUIRE_THROWS_AS(
        DiscreteSpace::from_nodes(2, MetricKind::table, 2.0, names, coords, mu, {}, bad),
        std::invalid_argument);
}

TEST_CASE("space records round-trip") {
    auto s = unit_square(0.5);
    auto text = s.to_records();
    auto back = space_from_records(text);
    REQUIRE(back.size() == s.size());
    REQUIRE(back.edges.size() == s.edges.size());
    REQUIRE(back.mesh_step == s.mesh_step);
    for (NodeId v = 0; v < s.size(); ++v) {
        REQUIRE(back.names[v] == s.names[v]);
        REQUIRE(back.mu[v] == s.mu[v]);
        REQUIRE(euclidean(back.coords[v], s.coords[v]) == 0.0);
    }
    REQUIRE(back.distance(0, static_cast<NodeId>(s.size() - 1)) ==
            Catch::Approx(s.distance(0, static_cast<NodeId>(s.size() - 1))));
}

TEST_CASE("ring, interior and exterior partition the nodes away from the shells") {
    auto s = integer_grid(3.0);
    Point origin{0.0, 0.0, 0.0};
    double r1 = 1.2, r2 = 2.7;
    auto ring = ring_subset(s, {origin, r1, r2});
    std::size_t interior = 0, exterior = 0, on_sphere = 0;
    for (NodeId v = 0; v < s.size(); ++v) {
        double d = s.distance_point(origin, v);
        if (d < r1) ++interior;
        else if (d > r2) ++exterior;
        else if (d == r1 || d == r2) ++on_sphere;
    }
    REQUIRE(interior + exterior + on_sphere + ring.size() == s.size());
}
