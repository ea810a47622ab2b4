#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "support/fixtures.hpp"
#include "support/rng.hpp"
#include "vertiflow/netmodel.hpp"

using namespace vertiflow;
using testsupport::Rng;

namespace {

/// A random connected network: a directed two-way spanning path plus extra
/// random arcs, optionally with an air layer over random vertiports.
HybridNetwork random_network(Rng& rng, int max_nodes = 12) {
    HybridNetwork net;
    net.node_count = rng.uniform_int(2, max_nodes);
    for (int i = 0; i + 1 < net.node_count; ++i) {
        net.links.push_back({i, i + 1, LinkKind::ground, rng.uniform(0.1, 3.0), rng.uniform(1.0, 50.0)});
        net.links.push_back({i + 1, i, LinkKind::ground, rng.uniform(0.1, 3.0), rng.uniform(1.0, 50.0)});
    }
    const int extra = rng.uniform_int(0, 2 * net.node_count);
    for (int e = 0; e < extra; ++e) {
        const int a = rng.uniform_int(0, net.node_count - 1);
        const int b = rng.uniform_int(0, net.node_count - 1);
        if (a == b) continue;
        net.links.push_back({a, b, LinkKind::ground, rng.uniform(0.1, 3.0), rng.uniform(1.0, 50.0)});
    }
    if (net.node_count >= 3 && rng.chance(0.7)) {
        net.vertiports = rng.sample(net.node_count, rng.uniform_int(2, std::min(4, net.node_count)));
        for (std::size_t i = 0; i < net.vertiports.size(); ++i)
            for (std::size_t j = 0; j < net.vertiports.size(); ++j)
                if (i != j && rng.chance(0.6))
                    net.links.push_back({net.vertiports[i], net.vertiports[j], LinkKind::air,
                                         rng.uniform(0.05, 1.0), rng.uniform(1.0, 30.0)});
    }
    return net;
}

} // namespace

TEST_CASE("toy network incidence matches the worked example exactly") {
    const HybridNetwork net = testsupport::toy_network();
    const IncidenceMatrices inc = build_incidence(net);

    const double E[4][6] = {
        {1, 1, 0, 0, 0, 0},
        {-1, 0, 1, 0, 1, -1},
        {0, -1, 0, 1, -1, 1},
        {0, 0, -1, -1, 0, 0},
    };
    REQUIRE(inc.node_link.rows() == 4);
    REQUIRE(inc.node_link.cols() == 6);
    const Mat e = inc.node_link.to_dense();
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 6; ++k) REQUIRE(e(i, k) == E[i][k]);

    const double D[2][6] = {
        {0, 0, 0, 0, 1, 1},
        {0, 0, 0, 0, 1, 1},
    };
    REQUIRE(inc.vertiport.rows() == 2);
    REQUIRE(inc.vertiport.cols() == 6);
    const Mat d = inc.vertiport.to_dense();
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 6; ++k) REQUIRE(d(i, k) == D[i][k]);
}

TEST_CASE("incidence columns sum to zero and air columns carry two vertiport entries") {
    Rng rng(20260819);
    for (int rep = 0; rep < 50; ++rep) {
        const HybridNetwork net = random_network(rng);
        const IncidenceMatrices inc = build_incidence(net);
        const Mat e = inc.node_link.to_dense();
        for (int k = 0; k < net.link_count(); ++k) REQUIRE(e.col_sum(k) == 0.0);
        REQUIRE(inc.vertiport.nonzeros() == 2 * static_cast<std::size_t>(net.air_count()));
        const Mat d = inc.vertiport.to_dense();
        for (int k = 0; k < net.link_count(); ++k) {
            const double expected = net.links[(std::size_t)k].kind == LinkKind::air ? 2.0 : 0.0;
            REQUIRE(d.col_sum(k) == expected);
        }
    }
}

TEST_CASE("single ground link yields one signed column and empty vertiport incidence") {
    HybridNetwork net;
    net.node_count = 2;
    net.links = {{0, 1, LinkKind::ground, 1.0, 5.0}};
    const IncidenceMatrices inc = build_incidence(net);
    REQUIRE(inc.node_link.coeff(0, 0) == 1.0);
    REQUIRE(inc.node_link.coeff(1, 0) == -1.0);
    REQUIRE(inc.vertiport.rows() == 0);
    REQUIRE(inc.vertiport.nonzeros() == 0);
}

TEST_CASE("network validation rejects malformed inputs") {
    HybridNetwork net = testsupport::toy_network();
    SECTION("self-loop") {
        net.links[2].head = net.links[2].tail;
        REQUIRE_THROWS_AS(build_incidence(net), ValidationError);
    }
    SECTION("air link endpoint that is not a vertiport") {
        net.vertiports = {1};
        REQUIRE_THROWS_AS(build_incidence(net), ValidationError);
    }
    SECTION("ground link after an air link") {
        net.links.push_back({0, 3, LinkKind::ground, 1.0, 2.0});
        REQUIRE_THROWS_AS(build_incidence(net), ValidationError);
    }
    SECTION("nonpositive capacity") {
        net.links[0].capacity = 0.0;
        REQUIRE_THROWS_AS(build_incidence(net), ValidationError);
    }
    SECTION("duplicate vertiport") {
        net.vertiports = {1, 1};
        REQUIRE_THROWS_AS(build_incidence(net), ValidationError);
    }
}

TEST_CASE("balance_demand reproduces the worked example table") {
    const DemandTable t = testsupport::toy_demand();
    REQUIRE(t.destinations == std::vector<int>{1, 3});
    const double S[4][2] = {{5, 10}, {-5, 0}, {0, 0}, {0, -10}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) REQUIRE(t.demand(i, j) == S[i][j]);
}

TEST_CASE("balanced demand columns sum to zero exactly") {
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = rng.uniform_int(3, 15);
        const int nd = rng.uniform_int(1, std::min(4, n - 1));
        const std::vector<int> dests = rng.sample(n, nd);
        std::vector<TripDemand> trips;
        const int m = rng.uniform_int(0, 20);
        for (int t = 0; t < m; ++t) {
            const int dest = dests[(std::size_t)rng.uniform_int(0, nd - 1)];
            int origin = rng.uniform_int(0, n - 1);
            if (origin == dest) origin = (origin + 1) % n;
            trips.push_back({origin, dest, rng.uniform(0.0, 40.0)});
        }
        const DemandTable t = balance_demand(trips, dests, n);
        for (int j = 0; j < nd; ++j) REQUIRE(t.demand.col_sum(j) == 0.0);
    }
}

TEST_CASE("balance_demand rejects inconsistent trip lists") {
    SECTION("destination not listed") {
        REQUIRE_THROWS_AS(balance_demand({{0, 2, 1.0}}, {1}, 4), ValidationError);
    }
    SECTION("negative rate") {
        REQUIRE_THROWS_AS(balance_demand({{0, 1, -1.0}}, {1}, 4), ValidationError);
    }
    SECTION("origin equals destination") {
        REQUIRE_THROWS_AS(balance_demand({{1, 1, 1.0}}, {1}, 4), ValidationError);
    }
    SECTION("duplicate destination") {
        REQUIRE_THROWS_AS(balance_demand({{0, 1, 1.0}}, {1, 1}, 4), ValidationError);
    }
    SECTION("destination out of range") {
        REQUIRE_THROWS_AS(balance_demand({{0, 1, 1.0}}, {1, 9}, 4), ValidationError);
    }
}

TEST_CASE("median pairwise distance matches an exhaustive oracle") {
    Rng rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = rng.uniform_int(2, 12);
        NodeCoords coords;
        for (int i = 0; i < n; ++i) {
            coords.x.push_back(rng.uniform(-50.0, 50.0));
            coords.y.push_back(rng.uniform(-50.0, 50.0));
        }
        std::vector<double> all;
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b) all.push_back(coords.distance(a, b));
        std::sort(all.begin(), all.end());
        const double expect = all.size() % 2 == 1
                                  ? all[all.size() / 2]
                                  : 0.5 * (all[all.size() / 2 - 1] + all[all.size() / 2]);
        REQUIRE(median_pairwise_distance(coords) == expect);
    }
}

TEST_CASE("air links join exactly the vertiport pairs beyond the median distance") {
    HybridNetwork ground;
    ground.node_count = 3;
    ground.links = {{0, 1, LinkKind::ground, 1.0, 10.0}, {1, 2, LinkKind::ground, 1.0, 10.0}};
    NodeCoords coords{{0.0, 1.0, 2.0}, {0.0, 0.0, 0.0}};
    // Distances 1, 1, 2 -> median 1; only the end-to-end pair exceeds it.
    const std::vector<Link> air = generate_air_links(ground, {0, 1, 2}, coords);
    REQUIRE(air.size() == 2);
    REQUIRE(air[0].tail == 0);
    REQUIRE(air[0].head == 2);
    REQUIRE(air[1].tail == 2);
    REQUIRE(air[1].head == 0);
    for (const Link& l : air) {
        REQUIRE(l.kind == LinkKind::air);
        REQUIRE(l.capacity == 80.0);                       // default trips/hour
        REQUIRE(l.free_time == Catch::Approx(2.0 / 150.0)); // default speed
    }
}

TEST_CASE("vertiports closer than the median produce no air links") {
    HybridNetwork ground;
    ground.node_count = 4;
    ground.links = {{0, 1, LinkKind::ground, 1.0, 10.0},
                    {1, 2, LinkKind::ground, 1.0, 10.0},
                    {2, 3, LinkKind::ground, 1.0, 10.0}};
    NodeCoords coords{{0.0, 1.0, 9.0, 10.0}, {0.0, 0.0, 0.0, 0.0}};
    // Pairwise: 1, 9, 10, 8, 9, 1 -> sorted 1,1,8,9,9,10 -> median 8.5.
    // Vertiports {0,1} are distance 1 apart: below the median, no links.
    REQUIRE(generate_air_links(ground, {0, 1}, coords).empty());
}

TEST_CASE("air link generation is symmetric and respects parameters") {
    Rng rng(4242);
    for (int rep = 0; rep < 25; ++rep) {
        const int n = rng.uniform_int(4, 14);
        HybridNetwork ground;
        ground.node_count = n;
        for (int i = 0; i + 1 < n; ++i)
            ground.links.push_back({i, i + 1, LinkKind::ground, 1.0, 10.0});
        NodeCoords coords;
        for (int i = 0; i < n; ++i) {
            coords.x.push_back(rng.uniform(-20.0, 20.0));
            coords.y.push_back(rng.uniform(-20.0, 20.0));
        }
        const std::vector<int> verts = rng.sample(n, rng.uniform_int(2, std::min(5, n)));
        const AirLinkParams params{rng.uniform(50.0, 300.0), rng.uniform(10.0, 100.0)};
        const std::vector<Link> air = generate_air_links(ground, verts, coords, params);
        for (const Link& l : air) {
            REQUIRE(l.capacity == params.capacity);
            REQUIRE(l.free_time == Catch::Approx(coords.distance(l.tail, l.head) / params.speed));
            const bool reverse = std::any_of(air.begin(), air.end(), [&](const Link& r) {
                return r.tail == l.head && r.head == l.tail;
            });
            REQUIRE(reverse);
        }
    }
}

TEST_CASE("fewer than two vertiports yields no air links") {
    HybridNetwork ground;
    ground.node_count = 2;
    ground.links = {{0, 1, LinkKind::ground, 1.0, 10.0}};
    NodeCoords coords{{0.0, 5.0}, {0.0, 0.0}};
    REQUIRE(generate_air_links(ground, {}, coords).empty());
    REQUIRE(generate_air_links(ground, {1}, coords).empty());
}

TEST_CASE("validate_flow accepts the worked example and reports violations") {
    const HybridNetwork net = testsupport::toy_network();
    const IncidenceMatrices inc = build_incidence(net);
    const DemandTable demand = testsupport::toy_demand();
    const Mat x = testsupport::toy_example_flow();

    SECTION("air flow exactly at vertiport capacity passes with zero residual") {
        const ValidationReport r = validate_flow(net, inc, x, demand, {4.0, 4.0}, 1e-9);
        REQUIRE(r.all_pass());
        REQUIRE(r.max_residual() == 0.0);
    }
    SECTION("tightening vertiport capacity to 3 fails with residual 1") {
        const ValidationReport r = validate_flow(net, inc, x, demand, {3.0, 3.0}, 1e-9);
        REQUIRE_FALSE(r.all_pass());
        REQUIRE(r.first_violation() == "vertiport capacity");
        for (const FlowCheck& c : r.checks)
            if (c.name == "vertiport capacity") REQUIRE(c.residual == 1.0);
    }
    SECTION("the zero flow violates conservation by the largest demand entry") {
        const Mat zero(6, 2);
        const ValidationReport r = validate_flow(net, inc, zero, demand, {4.0, 4.0}, 1e-9);
        REQUIRE_FALSE(r.all_pass());
        REQUIRE(r.first_violation() == "flow conservation");
        REQUIRE(r.max_residual() == 10.0);
    }
    SECTION("negative flow entry is caught") {
        Mat bad = x;
        bad(0, 0) = -2.0;
        const ValidationReport r = validate_flow(net, inc, bad, demand, {4.0, 4.0}, 1e-9);
        REQUIRE_FALSE(r.all_pass());
    }
    SECTION("link capacity excess is the max overflow") {
        std::vector<double> caps = {8, 8, 8, 8, 4, 4};
        caps[2] = 5.0; // example flow carries 7 on link 3
        const HybridNetwork tight = testsupport::toy_network(caps);
        const ValidationReport r =
            validate_flow(tight, build_incidence(tight), x, demand, {4.0, 4.0}, 1e-9);
        REQUIRE_FALSE(r.all_pass());
        REQUIRE(r.first_violation() == "link capacity");
        REQUIRE(r.max_residual() == 2.0);
    }
    SECTION("dimension mismatch throws") {
        REQUIRE_THROWS_AS(validate_flow(net, inc, Mat(5, 2), demand, {4.0, 4.0}, 1e-9),
                          ValidationError);
    }
}
