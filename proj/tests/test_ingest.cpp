#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "vertiflow/equilibrium.hpp"
#include "vertiflow/ingest.hpp"

using namespace vertiflow;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "vertiflow_ingest_tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

/// Write text to a scratch file and return its path as a string.
std::string scratch_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch_dir() / name;
    std::ofstream out(p);
    REQUIRE(out.good());
    out << text;
    out.close();
    return p.string();
}

std::string data_path(const std::string& name) {
    return (fs::path(VERTIFLOW_DATA_DIR) / name).string();
}

const std::string kMinimalNet =
    "<NUMBER OF NODES> 2\n"
    "<NUMBER OF LINKS> 1\n"
    "<END OF METADATA>\n"
    "1 2 100 0 0.5 0 0 0 0 1 ;\n";

ScenarioConfig parse_scenario_text(const std::string& name, const std::string& text) {
    return parse_scenario(scratch_file(name, text));
}

} // namespace

TEST_CASE("network reader handles a minimal file") {
    const ParsedNetwork net = parse_network(scratch_file("minimal_net.tntp", kMinimalNet));
    CHECK(net.node_count == 2);
    CHECK(net.first_thru_node == 1);
    CHECK(net.declared_links == 1);
    REQUIRE(net.links.size() == 1);
    CHECK(net.links[0].tail == 0);
    CHECK(net.links[0].head == 1);
    CHECK(net.links[0].kind == LinkKind::ground);
    CHECK(net.links[0].capacity == 100.0);
    CHECK(net.links[0].free_time == 0.5);
    CHECK_FALSE(net.has_coords());
}

TEST_CASE("network reader tolerates comments, blank lines, and extra metadata") {
    const std::string text =
        "~ a full-line comment\n"
        "<NUMBER OF ZONES> 2\n"
        "<NUMBER OF NODES> 3\n"
        "\n"
        "<NUMBER OF LINKS> 2\n"
        "<FIRST THRU NODE> 2\n"
        "<END OF METADATA>\n"
        "~ start end capacity length free_flow_time b power speed toll type ;\n"
        "1\t2\t10\t1.5\t0.25\t0.15\t4\t60\t0\t1\t;   ~ trailing comment\n"
        "  2 3 8 0 1 0 0 0 0 1 ;\n";
    const ParsedNetwork net = parse_network(scratch_file("tolerant_net.tntp", text));
    CHECK(net.node_count == 3);
    CHECK(net.first_thru_node == 2);
    REQUIRE(net.links.size() == 2);
    CHECK(net.links[0].free_time == 0.25);  // column five, not the length in column four
    CHECK(net.links[0].capacity == 10.0);
    CHECK(net.links[1].tail == 1);
    CHECK(net.links[1].head == 2);
}

TEST_CASE("network reader rejects malformed files with line numbers") {
    SECTION("missing node-count tag") {
        const std::string text = "<NUMBER OF LINKS> 1\n<END OF METADATA>\n1 2 100 0 0.5 ;\n";
        const std::string path = scratch_file("no_nodes.tntp", text);
        try {
            parse_network(path);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
            CHECK_THAT(e.what(), ContainsSubstring("<NUMBER OF NODES>"));
            CHECK_THAT(e.what(), ContainsSubstring(path + ":3"));
        }
    }
    SECTION("missing link-count tag") {
        const std::string text = "<NUMBER OF NODES> 2\n1 2 100 0 0.5 ;\n";
        try {
            parse_network(scratch_file("no_links.tntp", text));
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
            CHECK_THAT(e.what(), ContainsSubstring("<NUMBER OF LINKS>"));
        }
    }
    SECTION("empty file reports the missing declaration") {
        CHECK_THROWS_WITH(parse_network(scratch_file("empty_net.tntp", "~ nothing here\n")),
                          ContainsSubstring("<NUMBER OF NODES>"));
    }
    SECTION("non-numeric field") {
        const std::string text =
            "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<END OF METADATA>\n"
            "1 2 abc 0 0.5 ;\n";
        try {
            parse_network(scratch_file("bad_capacity.tntp", text));
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 4);
            CHECK_THAT(e.what(), ContainsSubstring("'abc'"));
            CHECK_THAT(e.what(), ContainsSubstring("not a number"));
        }
    }
    SECTION("non-integer node id") {
        const std::string text =
            "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<END OF METADATA>\n"
            "1.5 2 100 0 0.5 ;\n";
        CHECK_THROWS_WITH(parse_network(scratch_file("bad_node_id.tntp", text)),
                          ContainsSubstring("not an integer"));
    }
    SECTION("too few fields") {
        const std::string text =
            "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<END OF METADATA>\n"
            "1 2 100 0.5 ;\n";
        CHECK_THROWS_WITH(parse_network(scratch_file("short_row.tntp", text)),
                          ContainsSubstring("expected at least 5"));
    }
    SECTION("link referencing a node beyond the declared count") {
        const std::string text =
            "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<END OF METADATA>\n"
            "1 3 100 0 0.5 ;\n";
        try {
            parse_network(scratch_file("overflow_node.tntp", text));
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 4);
            CHECK_THAT(e.what(), ContainsSubstring("exceeds the declared node count 2"));
        }
    }
    SECTION("zero or negative node ids") {
        const std::string text =
            "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<END OF METADATA>\n"
            "0 2 100 0 0.5 ;\n";
        CHECK_THROWS_WITH(parse_network(scratch_file("zero_node.tntp", text)),
                          ContainsSubstring(">= 1"));
    }
    SECTION("self-loop names its line") {
        const std::string text =
            "<NUMBER OF NODES> 4\n<NUMBER OF LINKS> 2\n<END OF METADATA>\n"
            "1 2 100 0 0.5 ;\n"
            "3 3 100 0 0.5 ;\n";
        try {
            parse_network(scratch_file("self_loop.tntp", text));
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 5);
            CHECK_THAT(e.what(), ContainsSubstring("node 3 to itself"));
        }
    }
    SECTION("nonpositive capacity") {
        const std::string text =
            "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<END OF METADATA>\n"
            "1 2 0 0 0.5 ;\n";
        CHECK_THROWS_WITH(parse_network(scratch_file("zero_cap.tntp", text)),
                          ContainsSubstring("capacity must be finite and > 0"));
    }
    SECTION("negative free-flow time") {
        const std::string text =
            "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<END OF METADATA>\n"
            "1 2 100 0 -0.5 ;\n";
        CHECK_THROWS_WITH(parse_network(scratch_file("neg_time.tntp", text)),
                          ContainsSubstring("free-flow time"));
    }
    SECTION("declared link count must match the rows") {
        const std::string text =
            "<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 2\n<END OF METADATA>\n"
            "1 2 100 0 0.5 ;\n";
        CHECK_THROWS_WITH(parse_network(scratch_file("count_mismatch.tntp", text)),
                          ContainsSubstring("declares 2 links but contains 1"));
    }
    SECTION("non-numeric metadata value") {
        const std::string text = "<NUMBER OF NODES> four\n";
        CHECK_THROWS_WITH(parse_network(scratch_file("bad_meta.tntp", text)),
                          ContainsSubstring("integer value"));
    }
    SECTION("unreadable path") {
        CHECK_THROWS_WITH(parse_network((scratch_dir() / "does_not_exist.tntp").string()),
                          ContainsSubstring("cannot open file"));
    }
}

TEST_CASE("node coordinate reader") {
    SECTION("accepts a header row, tabs, and semicolons") {
        const std::string text =
            "node x y ;\n"
            "1\t0\t0\t;\n"
            "2\t1\t1\t;\n"
            "3 1 -1 ;\n";
        const NodeCoords coords =
            parse_node_coords(scratch_file("nodes_ok.tntp", text));
        REQUIRE(coords.size() == 3);
        CHECK(coords.x[1] == 1.0);
        CHECK(coords.y[2] == -1.0);
    }
    SECTION("rejects duplicate and missing nodes") {
        CHECK_THROWS_WITH(
            parse_node_coords(scratch_file("nodes_dup.tntp", "1 0 0 ;\n1 2 2 ;\n")),
            ContainsSubstring("listed twice"));
        CHECK_THROWS_WITH(
            parse_node_coords(scratch_file("nodes_gap.tntp", "1 0 0 ;\n3 2 2 ;\n")),
            ContainsSubstring("missing node 2"));
    }
    SECTION("rejects short rows and empty files") {
        CHECK_THROWS_WITH(parse_node_coords(scratch_file("nodes_short.tntp", "1 0 ;\n")),
                          ContainsSubstring("expected 3"));
        CHECK_THROWS_WITH(parse_node_coords(scratch_file("nodes_empty.tntp", "~ header only\n")),
                          ContainsSubstring("no rows"));
    }
    SECTION("combined read checks the node counts agree") {
        const std::string net_path = scratch_file("combo_net.tntp", kMinimalNet);
        const std::string node_path =
            scratch_file("combo_node.tntp", "1 0 0 ;\n2 1 0 ;\n3 2 0 ;\n");
        CHECK_THROWS_WITH(parse_network(net_path, node_path),
                          ContainsSubstring("covers 3 nodes, network declares 2"));
        const std::string good_path = scratch_file("combo_node_ok.tntp", "1 0 0 ;\n2 1 0 ;\n");
        const ParsedNetwork net = parse_network(net_path, good_path);
        CHECK(net.has_coords());
        CHECK(net.coords.size() == 2);
    }
}

TEST_CASE("trips reader handles origin blocks") {
    const std::string text =
        "~ demand table\n"
        "<NUMBER OF ZONES> 4\n"
        "Origin 1\n"
        "    2 : 5.0;    4 : 10.0;\n"
        "Origin   3\n"
        "    1 : 0.0;\n"
        "    4 : 2.5;\n";
    const ParsedTrips parsed = parse_trips(scratch_file("trips_ok.tntp", text));
    REQUIRE(parsed.trips.size() == 3);
    CHECK(parsed.trips[0].origin == 0);
    CHECK(parsed.trips[0].destination == 1);
    CHECK(parsed.trips[0].rate == 5.0);
    CHECK(parsed.trips[1].destination == 3);
    CHECK(parsed.trips[1].rate == 10.0);
    CHECK(parsed.trips[2].origin == 2);
    CHECK(parsed.trips[2].destination == 3);
    CHECK(parsed.trips[2].rate == 2.5);  // the zero-flow 3 -> 1 entry was dropped
    CHECK(parsed.warnings.empty());
}

TEST_CASE("trips reader returns an empty list for an empty file") {
    CHECK(parse_trips(scratch_file("trips_empty.tntp", "")).trips.empty());
    CHECK(parse_trips(scratch_file("trips_comment.tntp", "~ nothing\n")).trips.empty());
}

TEST_CASE("trips reader drops self-entries with a warning and no model change") {
    const std::string with_self =
        "Origin 1\n"
        "    1 : 7.0;\n"
        "    2 : 5.0;\n"
        "    4 : 10.0;\n";
    const std::string without_self =
        "Origin 1\n"
        "    2 : 5.0;\n"
        "    4 : 10.0;\n";
    const std::string self_path = scratch_file("trips_self.tntp", with_self);
    const ParsedTrips a = parse_trips(self_path);
    const ParsedTrips b = parse_trips(scratch_file("trips_no_self.tntp", without_self));

    REQUIRE(a.warnings.size() == 1);
    CHECK_THAT(a.warnings[0], ContainsSubstring(self_path + ":2"));
    CHECK_THAT(a.warnings[0], ContainsSubstring("node 1 to itself"));
    REQUIRE(a.trips.size() == b.trips.size());
    for (std::size_t i = 0; i < a.trips.size(); ++i) {
        CHECK(a.trips[i].origin == b.trips[i].origin);
        CHECK(a.trips[i].destination == b.trips[i].destination);
        CHECK(a.trips[i].rate == b.trips[i].rate);
    }

    // The dropped entry cannot change the equilibrium: same demand, same run.
    const HybridNetwork net = testsupport::toy_network();
    const IncidenceMatrices inc = build_incidence(net);
    const ScenarioConfig sc;  // defaults: scale 1
    const DemandTable da = build_demand(a.trips, sc, net.node_count);
    const DemandTable db = build_demand(b.trips, sc, net.node_count);
    REQUIRE(da.demand == db.demand);
    const std::vector<double> g = {10.0, 10.0};
    const Equilibrium ea = solve_equilibrium(net, inc, da, g);
    const Equilibrium eb = solve_equilibrium(net, inc, db, g);
    CHECK(ea.loading == eb.loading);
    CHECK(ea.objective == eb.objective);
}

TEST_CASE("trips reader rejects malformed entries") {
    SECTION("entry before any origin") {
        CHECK_THROWS_WITH(parse_trips(scratch_file("trips_no_origin.tntp", "2 : 5.0;\n")),
                          ContainsSubstring("before any Origin"));
    }
    SECTION("missing colon") {
        CHECK_THROWS_WITH(
            parse_trips(scratch_file("trips_no_colon.tntp", "Origin 1\n2 5.0;\n")),
            ContainsSubstring("must look like"));
    }
    SECTION("double colon") {
        CHECK_THROWS_WITH(
            parse_trips(scratch_file("trips_two_colons.tntp", "Origin 1\n2 : 5 : 6;\n")),
            ContainsSubstring("must look like"));
    }
    SECTION("non-integer destination") {
        try {
            parse_trips(scratch_file("trips_bad_dest.tntp", "Origin 1\nx : 5.0;\n"));
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
            CHECK_THAT(e.what(), ContainsSubstring("'x'"));
        }
    }
    SECTION("non-numeric flow") {
        CHECK_THROWS_WITH(
            parse_trips(scratch_file("trips_bad_flow.tntp", "Origin 1\n2 : lots;\n")),
            ContainsSubstring("'lots'"));
    }
    SECTION("negative flow") {
        CHECK_THROWS_WITH(
            parse_trips(scratch_file("trips_neg_flow.tntp", "Origin 1\n2 : -1;\n")),
            ContainsSubstring(">= 0"));
    }
    SECTION("origin line without a node id") {
        CHECK_THROWS_WITH(parse_trips(scratch_file("trips_bare_origin.tntp", "Origin\n")),
                          ContainsSubstring("exactly one node id"));
        CHECK_THROWS_WITH(parse_trips(scratch_file("trips_two_ids.tntp", "Origin 1 2\n")),
                          ContainsSubstring("exactly one node id"));
    }
}

TEST_CASE("bundled network instances match their declarations") {
    int found = 0;
    for (const auto& entry : fs::directory_iterator(VERTIFLOW_DATA_DIR)) {
        const std::string name = entry.path().filename().string();
        if (name.size() < 9 || name.substr(name.size() - 9) != "_net.tntp") continue;
        ++found;
        INFO("instance: " << name);
        const ParsedNetwork net = parse_network(entry.path().string());
        CHECK(net.node_count >= 1);
        CHECK(static_cast<long>(net.links.size()) == net.declared_links);
        for (const Link& l : net.links) {
            CHECK(l.tail >= 0);
            CHECK(l.head < net.node_count);
        }
    }
    CHECK(found >= 1);
}

TEST_CASE("a locally fetched Anaheim instance parses to its published size") {
    // The Anaheim files are not redistributed here; drop Anaheim_net.tntp into
    // data/ (see README) to activate this check.
    const std::string path = data_path("Anaheim_net.tntp");
    if (!fs::exists(path)) {
        SUCCEED("Anaheim_net.tntp not present; download it to data/ to enable this check");
        return;
    }
    const ParsedNetwork net = parse_network(path);
    CHECK(net.node_count == 416);
    CHECK(net.links.size() == 914);
}

TEST_CASE("network writer round-trips the parsed model") {
    SECTION("demo network") {
        const ParsedNetwork first = parse_network(data_path("fig1_net.tntp"));
        const std::string copy = (scratch_dir() / "fig1_roundtrip.tntp").string();
        write_network(copy, first);
        const ParsedNetwork second = parse_network(copy);
        CHECK(second.node_count == first.node_count);
        CHECK(second.first_thru_node == first.first_thru_node);
        REQUIRE(second.links.size() == first.links.size());
        for (std::size_t i = 0; i < first.links.size(); ++i) {
            CHECK(second.links[i].tail == first.links[i].tail);
            CHECK(second.links[i].head == first.links[i].head);
            CHECK(second.links[i].capacity == first.links[i].capacity);
            CHECK(second.links[i].free_time == first.links[i].free_time);
        }
    }
    SECTION("awkward floating-point values survive exactly") {
        ParsedNetwork net;
        net.node_count = 2;
        net.first_thru_node = 1;
        net.links = {{0, 1, LinkKind::ground, 0.1 + 0.2, 1.0 / 3.0}};
        net.declared_links = 1;
        const std::string path = (scratch_dir() / "awkward.tntp").string();
        write_network(path, net);
        const ParsedNetwork back = parse_network(path);
        REQUIRE(back.links.size() == 1);
        CHECK(back.links[0].free_time == 0.1 + 0.2);
        CHECK(back.links[0].capacity == 1.0 / 3.0);
    }
}

TEST_CASE("trips writer round-trips the parsed list") {
    const ParsedTrips first = parse_trips(data_path("fig1_trips.tntp"));
    const std::string copy = (scratch_dir() / "fig1_trips_roundtrip.tntp").string();
    write_trips(copy, first.trips);
    const ParsedTrips second = parse_trips(copy);
    REQUIRE(second.trips.size() == first.trips.size());
    for (std::size_t i = 0; i < first.trips.size(); ++i) {
        CHECK(second.trips[i].origin == first.trips[i].origin);
        CHECK(second.trips[i].destination == first.trips[i].destination);
        CHECK(second.trips[i].rate == first.trips[i].rate);
    }
}

TEST_CASE("node coordinate writer round-trips") {
    const NodeCoords first = parse_node_coords(data_path("fig1_node.tntp"));
    const std::string copy = (scratch_dir() / "fig1_node_roundtrip.tntp").string();
    write_node_coords(copy, first);
    const NodeCoords second = parse_node_coords(copy);
    REQUIRE(second.size() == first.size());
    CHECK(second.x == first.x);
    CHECK(second.y == first.y);
}

TEST_CASE("scenario reader expands shared capacity options") {
    // Nine candidates sharing the option list (600, 1200) at costs (1, 2).
    const std::string text = R"({
        "vertiports": [1, 2, 3, 4, 5, 6, 7, 8, 9],
        "capacity_options": [600, 1200],
        "costs": [1, 2],
        "budget": 8
    })";
    const ScenarioConfig sc = parse_scenario_text("nine.json", text);
    CHECK(sc.vertiport_count() == 9);
    REQUIRE(sc.G.rows() == 9);
    REQUIRE(sc.G.cols() == 2);
    for (int i = 0; i < 9; ++i) {
        CHECK(sc.G(i, 0) == 600.0);
        CHECK(sc.G(i, 1) == 1200.0);
        CHECK(sc.K(i, 0) == 1.0);
        CHECK(sc.K(i, 1) == 2.0);
    }
    CHECK(sc.gamma == 8.0);
    CHECK(sc.binary_count() == 18);

    // Untouched defaults.
    CHECK(sc.omega == 0.0);
    CHECK(sc.mu == 0.0);
    CHECK(sc.demand_scale == 1.0);
    CHECK(sc.generate_air);
    CHECK(sc.air.speed == 150.0);
    CHECK(sc.air.capacity == 80.0);
    CHECK(sc.vertiport_capacity.empty());
    CHECK(sc.logical_A.rows() == 0);
    CHECK(sc.logical_A.cols() == 18);
    CHECK(sc.feas_tol == SolveOptions{}.feas_tol);
    CHECK(sc.opt_tol == SolveOptions{}.opt_tol);
    CHECK(sc.verify_tol == EquilibriumOptions{}.verify_tol);
    CHECK(sc.node_limit == MbpOptions{}.node_limit);
    CHECK(sc.oracle_cap == SelectionOptions{}.oracle_cap);
}

TEST_CASE("exactly_one over two candidates matches the worked example") {
    const std::string text = R"({
        "vertiports": [5, 7],
        "capacity_options": [600, 1200],
        "logical_constraints": [{"exactly_one": [1, 2]}]
    })";
    const ScenarioConfig sc = parse_scenario_text("exactly_one.json", text);
    Mat expect_A(2, 4);
    for (int c = 0; c < 4; ++c) {
        expect_A(0, c) = 1.0;
        expect_A(1, c) = -1.0;
    }
    CHECK(sc.logical_A == expect_A);
    REQUIRE(sc.logical_b.size() == 2);
    CHECK(sc.logical_b[0] == 1.0);
    CHECK(sc.logical_b[1] == -1.0);
}

TEST_CASE("logical macros expand over the selected vertiports only") {
    const std::string text = R"({
        "vertiports": [10, 20, 30],
        "capacity_options": [2, 4],
        "logical_constraints": [
            {"both_selected": [1, 3]},
            {"at_least_one": [2, 3]},
            {"exactly_one": [1, 2]},
            {"rows": [[1, -1, 0, 0, 0, 0]], "bounds": [0.5]}
        ]
    })";
    const ScenarioConfig sc = parse_scenario_text("macros.json", text);
    REQUIRE(sc.logical_A.rows() == 6);
    REQUIRE(sc.logical_A.cols() == 6);
    const std::vector<std::vector<double>> expect = {
        {-1, -1, 0, 0, 0, 0},    // both_selected: vertiport 1 built
        {0, 0, 0, 0, -1, -1},    // both_selected: vertiport 3 built
        {0, 0, -1, -1, -1, -1},  // at_least_one over {2, 3}
        {1, 1, 1, 1, 0, 0},      // exactly_one over {1, 2}: <= 1
        {-1, -1, -1, -1, 0, 0},  // exactly_one over {1, 2}: >= 1
        {1, -1, 0, 0, 0, 0},     // raw row, appended last
    };
    const std::vector<double> bounds = {-1, -1, -1, 1, -1, 0.5};
    for (int r = 0; r < 6; ++r) {
        for (int c = 0; c < 6; ++c)
            CHECK(sc.logical_A(r, c) == expect[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
        CHECK(sc.logical_b[static_cast<std::size_t>(r)] ==
              bounds[static_cast<std::size_t>(r)]);
    }
}

TEST_CASE("scenario reader accepts per-vertiport option matrices") {
    const std::string text = R"({
        "vertiports": [1, 2],
        "capacity_options": [[600, 1200], [500, 900]],
        "costs": [1, 2]
    })";
    const ScenarioConfig sc = parse_scenario_text("matrix_options.json", text);
    CHECK(sc.G(0, 0) == 600.0);
    CHECK(sc.G(1, 0) == 500.0);
    CHECK(sc.G(1, 1) == 900.0);
    CHECK(sc.K(0, 0) == 1.0);
    CHECK(sc.K(1, 1) == 2.0);
}

TEST_CASE("scenario reader verifies every invariant") {
    SECTION("capacity options must increase strictly") {
        CHECK_THROWS_WITH(parse_scenario_text("dec.json",
                                              R"({"vertiports":[1],"capacity_options":[1200,600]})"),
                          ContainsSubstring("strictly increasing"));
        CHECK_THROWS_WITH(parse_scenario_text("flat.json",
                                              R"({"vertiports":[1],"capacity_options":[600,600]})"),
                          ContainsSubstring("strictly increasing"));
    }
    SECTION("capacity options must be positive") {
        CHECK_THROWS_WITH(parse_scenario_text("neg_opt.json",
                                              R"({"vertiports":[1],"capacity_options":[-5,600]})"),
                          ContainsSubstring("> 0"));
    }
    SECTION("costs must be nonnegative and shaped like the options") {
        CHECK_THROWS_WITH(
            parse_scenario_text(
                "neg_cost.json",
                R"({"vertiports":[1],"capacity_options":[600],"costs":[-1]})"),
            ContainsSubstring(">= 0"));
        CHECK_THROWS_WITH(
            parse_scenario_text(
                "cost_shape.json",
                R"({"vertiports":[1],"capacity_options":[600,1200],"costs":[1,2,3]})"),
            ContainsSubstring("capacity_options rows have 2"));
        CHECK_THROWS_WITH(parse_scenario_text("cost_only.json",
                                              R"({"vertiports":[1],"costs":[1]})"),
                          ContainsSubstring("no capacity_options"));
    }
    SECTION("unknown keys are rejected") {
        CHECK_THROWS_WITH(parse_scenario_text("typo.json", R"({"budgett": 8})"),
                          ContainsSubstring("unknown scenario key 'budgett'"));
        CHECK_THROWS_WITH(parse_scenario_text("solver_typo.json",
                                              R"({"solver": {"feasibility": 1e-7}})"),
                          ContainsSubstring("unknown solver key"));
    }
    SECTION("format version must be 1") {
        CHECK_THROWS_WITH(parse_scenario_text("v2.json", R"({"format_version": 2})"),
                          ContainsSubstring("format_version"));
    }
    SECTION("vertiports must be distinct positive ids") {
        CHECK_THROWS_WITH(parse_scenario_text("dup_vp.json", R"({"vertiports":[3,3]})"),
                          ContainsSubstring("listed twice"));
        CHECK_THROWS_WITH(parse_scenario_text("zero_vp.json", R"({"vertiports":[0]})"),
                          ContainsSubstring(">= 1"));
    }
    SECTION("macro members must be valid vertiport indices") {
        const std::string base =
            R"({"vertiports":[1,2],"capacity_options":[600],"logical_constraints":[{"at_least_one":[%]}]})";
        auto with = [&](const std::string& members) {
            std::string t = base;
            t.replace(t.find('%'), 1, members);
            return t;
        };
        CHECK_THROWS_WITH(parse_scenario_text("macro_oob.json", with("3")),
                          ContainsSubstring("references vertiport 3"));
        CHECK_THROWS_WITH(parse_scenario_text("macro_zero.json", with("0")),
                          ContainsSubstring("references vertiport 0"));
        CHECK_THROWS_WITH(parse_scenario_text("macro_dup.json", with("1, 1")),
                          ContainsSubstring("twice"));
    }
    SECTION("logical entries take exactly one macro") {
        CHECK_THROWS_WITH(
            parse_scenario_text(
                "two_macros.json",
                R"({"vertiports":[1,2],"capacity_options":[600],
                    "logical_constraints":[{"at_least_one":[1],"exactly_one":[2]}]})"),
            ContainsSubstring("exactly one macro"));
    }
    SECTION("raw rows must span vertiports x options") {
        CHECK_THROWS_WITH(
            parse_scenario_text(
                "row_width.json",
                R"({"vertiports":[1,2],"capacity_options":[600],
                    "logical_constraints":[{"rows":[[1,0,0]],"bounds":[1]}]})"),
            ContainsSubstring("2 entries"));
        CHECK_THROWS_WITH(
            parse_scenario_text(
                "row_bounds.json",
                R"({"vertiports":[1,2],"capacity_options":[600],
                    "logical_constraints":[{"rows":[[1,0]],"bounds":[1,2]}]})"),
            ContainsSubstring("equal length"));
    }
    SECTION("logical constraints need vertiports and options") {
        CHECK_THROWS_WITH(
            parse_scenario_text("logic_no_opts.json",
                                R"({"vertiports":[1],"logical_constraints":[{"at_least_one":[1]}]})"),
            ContainsSubstring("capacity_options"));
    }
    SECTION("air link specs are validated") {
        CHECK_THROWS_WITH(parse_scenario_text("air_str.json", R"({"air_links": "auto"})"),
                          ContainsSubstring("\"generate\""));
        CHECK_THROWS_WITH(
            parse_scenario_text("air_key.json",
                                R"({"vertiports":[1,2],"air_links":[{"from":1,"to":2,"speed":3}]})"),
            ContainsSubstring("unknown air_links key 'speed'"));
        CHECK_THROWS_WITH(
            parse_scenario_text("air_self.json",
                                R"({"vertiports":[1,2],"air_links":[{"from":1,"to":1}]})"),
            ContainsSubstring("to itself"));
        CHECK_THROWS_WITH(
            parse_scenario_text("air_not_vp.json",
                                R"({"vertiports":[1,2],"air_links":[{"from":1,"to":3}]})"),
            ContainsSubstring("not a vertiport"));
        CHECK_THROWS_WITH(
            parse_scenario_text(
                "air_time.json",
                R"({"vertiports":[1,2],"air_links":[{"from":1,"to":2,"time":0}]})"),
            ContainsSubstring("time must be > 0"));
    }
    SECTION("vertiport capacity shape") {
        CHECK_THROWS_WITH(
            parse_scenario_text("vc_len.json",
                                R"({"vertiports":[1,2],"vertiport_capacity":[1,2,3]})"),
            ContainsSubstring("3 entries for 2 vertiports"));
        CHECK_THROWS_WITH(parse_scenario_text("vc_novp.json", R"({"vertiport_capacity": 5})"),
                          ContainsSubstring("no vertiports"));
    }
    SECTION("scalar ranges") {
        CHECK_THROWS_WITH(parse_scenario_text("neg_budget.json", R"({"budget": -1})"),
                          ContainsSubstring(">= 0"));
        CHECK_THROWS_WITH(parse_scenario_text("zero_mu.json", R"({"big_m": 0})"),
                          ContainsSubstring("> 0"));
        CHECK_THROWS_WITH(parse_scenario_text("neg_scale.json", R"({"demand_scale": -0.5})"),
                          ContainsSubstring(">= 0"));
        CHECK_THROWS_WITH(parse_scenario_text("zero_nodes.json",
                                              R"({"solver": {"node_limit": 0}})"),
                          ContainsSubstring(">= 1"));
    }
    SECTION("malformed JSON carries a line number") {
        try {
            parse_scenario_text("broken.json", "{\n  \"budget\": 8,\n  oops\n}\n");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }
    SECTION("top level must be an object") {
        CHECK_THROWS_WITH(parse_scenario_text("array.json", "[1, 2]\n"),
                          ContainsSubstring("JSON object"));
    }
}

TEST_CASE("scenario reader fills every configurable field") {
    const std::string text = R"({
        "format_version": 1,
        "vertiports": [2, 3],
        "capacity_options": [5, 10],
        "costs": [1, 2],
        "budget": 2,
        "cost_weight": 0.5,
        "big_m": 500,
        "demand_scale": 2,
        "air_links": [
            {"from": 2, "to": 3, "time": 0.2, "capacity": 4},
            {"from": 3, "to": 2}
        ],
        "air_speed": 10,
        "air_capacity": 4,
        "vertiport_capacity": 7,
        "solver": {
            "feas_tol": 1e-8,
            "opt_tol": 2e-8,
            "verify_tol": 1e-5,
            "node_limit": 1000,
            "oracle_cap": 64
        }
    })";
    const ScenarioConfig sc = parse_scenario_text("full.json", text);
    CHECK(sc.vertiports == std::vector<int>{1, 2});
    CHECK(sc.gamma == 2.0);
    CHECK(sc.omega == 0.5);
    CHECK(sc.mu == 500.0);
    CHECK(sc.demand_scale == 2.0);
    CHECK_FALSE(sc.generate_air);
    REQUIRE(sc.air_links.size() == 2);
    CHECK(sc.air_links[0].from == 1);
    CHECK(sc.air_links[0].to == 2);
    REQUIRE(sc.air_links[0].time.has_value());
    CHECK(*sc.air_links[0].time == 0.2);
    REQUIRE(sc.air_links[0].capacity.has_value());
    CHECK(*sc.air_links[0].capacity == 4.0);
    CHECK_FALSE(sc.air_links[1].time.has_value());
    CHECK_FALSE(sc.air_links[1].capacity.has_value());
    CHECK(sc.air.speed == 10.0);
    CHECK(sc.air.capacity == 4.0);
    CHECK(sc.vertiport_capacity == std::vector<double>{7.0, 7.0});
    CHECK(sc.feas_tol == 1e-8);
    CHECK(sc.opt_tol == 2e-8);
    CHECK(sc.verify_tol == 1e-5);
    CHECK(sc.node_limit == 1000);
    CHECK(sc.oracle_cap == 64);
}

namespace {

void check_scenarios_equal(const ScenarioConfig& a, const ScenarioConfig& b) {
    CHECK(a.vertiports == b.vertiports);
    CHECK(a.G == b.G);
    CHECK(a.K == b.K);
    CHECK(a.logical_A == b.logical_A);
    CHECK(a.logical_b == b.logical_b);
    CHECK(a.gamma == b.gamma);
    CHECK(a.omega == b.omega);
    CHECK(a.mu == b.mu);
    CHECK(a.demand_scale == b.demand_scale);
    CHECK(a.air.speed == b.air.speed);
    CHECK(a.air.capacity == b.air.capacity);
    CHECK(a.generate_air == b.generate_air);
    REQUIRE(a.air_links.size() == b.air_links.size());
    for (std::size_t i = 0; i < a.air_links.size(); ++i) {
        CHECK(a.air_links[i].from == b.air_links[i].from);
        CHECK(a.air_links[i].to == b.air_links[i].to);
        CHECK(a.air_links[i].time == b.air_links[i].time);
        CHECK(a.air_links[i].capacity == b.air_links[i].capacity);
    }
    CHECK(a.vertiport_capacity == b.vertiport_capacity);
    CHECK(a.feas_tol == b.feas_tol);
    CHECK(a.opt_tol == b.opt_tol);
    CHECK(a.verify_tol == b.verify_tol);
    CHECK(a.node_limit == b.node_limit);
    CHECK(a.oracle_cap == b.oracle_cap);
}

} // namespace

TEST_CASE("scenario writer round-trips") {
    SECTION("explicit air links with partial fields") {
        const std::string text = R"({
            "vertiports": [2, 3],
            "capacity_options": [5, 10],
            "costs": [1, 2],
            "budget": 2,
            "cost_weight": 0.01,
            "big_m": 500,
            "air_links": [{"from": 2, "to": 3, "time": 0.2}, {"from": 3, "to": 2}],
            "vertiport_capacity": [7, 9],
            "logical_constraints": [{"exactly_one": [1, 2]}]
        })";
        const ScenarioConfig first = parse_scenario_text("rt_explicit.json", text);
        const std::string copy = (scratch_dir() / "rt_explicit_copy.json").string();
        write_scenario(copy, first);
        check_scenarios_equal(parse_scenario(copy), first);
    }
    SECTION("generated air links and defaults") {
        const ScenarioConfig first =
            parse_scenario_text("rt_gen.json", R"({"vertiports":[1,4],"air_speed":12.5})");
        const std::string copy = (scratch_dir() / "rt_gen_copy.json").string();
        write_scenario(copy, first);
        check_scenarios_equal(parse_scenario(copy), first);
    }
    SECTION("bundled scenarios") {
        for (const std::string name : {"fig1_equilibrium.json", "fig1_selection.json"}) {
            INFO("scenario: " << name);
            const ScenarioConfig first = parse_scenario(data_path(name));
            const std::string copy = (scratch_dir() / ("rt_" + name)).string();
            write_scenario(copy, first);
            check_scenarios_equal(parse_scenario(copy), first);
        }
    }
}

TEST_CASE("bundled demo files rebuild the in-memory demo network") {
    const ParsedNetwork parsed =
        parse_network(data_path("fig1_net.tntp"), data_path("fig1_node.tntp"));
    const ParsedTrips trips = parse_trips(data_path("fig1_trips.tntp"));
    const ScenarioConfig sc = parse_scenario(data_path("fig1_equilibrium.json"));

    const HybridNetwork net = build_network(parsed, sc);
    const HybridNetwork expect = testsupport::toy_network();
    CHECK(net.node_count == expect.node_count);
    CHECK(net.vertiports == expect.vertiports);
    REQUIRE(net.links.size() == expect.links.size());
    for (std::size_t i = 0; i < net.links.size(); ++i) {
        INFO("link " << i);
        CHECK(net.links[i].tail == expect.links[i].tail);
        CHECK(net.links[i].head == expect.links[i].head);
        CHECK((net.links[i].kind == expect.links[i].kind));
        CHECK_THAT(net.links[i].free_time,
                   Catch::Matchers::WithinAbs(expect.links[i].free_time, 1e-12));
        CHECK(net.links[i].capacity == expect.links[i].capacity);
    }

    const DemandTable demand = build_demand(trips.trips, sc, net.node_count);
    const DemandTable expect_demand = testsupport::toy_demand();
    CHECK(demand.destinations == expect_demand.destinations);
    CHECK(demand.demand == expect_demand.demand);
    CHECK(sc.vertiport_capacity == std::vector<double>{10.0, 10.0});

    // The fixed-capacity scenario then reproduces the known equilibrium.
    const Equilibrium eq =
        solve_equilibrium(net, build_incidence(net), demand, sc.vertiport_capacity,
                          equilibrium_options(sc));
    CHECK_THAT(eq.loading, Catch::Matchers::WithinAbs(25.0, 1e-8));
}

TEST_CASE("bundled selection scenario assembles a valid problem") {
    const ParsedNetwork parsed =
        parse_network(data_path("fig1_net.tntp"), data_path("fig1_node.tntp"));
    const ParsedTrips trips = parse_trips(data_path("fig1_trips.tntp"));
    const ScenarioConfig sc = parse_scenario(data_path("fig1_selection.json"));

    const HybridNetwork net = build_network(parsed, sc);
    const DemandTable demand = build_demand(trips.trips, sc, net.node_count);
    const SelectionProblem problem = to_selection_problem(net, demand, sc);
    CHECK(problem.candidate_count() == 2);
    CHECK(problem.option_count() == 2);
    CHECK(problem.gamma == 2.0);
    CHECK(problem.omega == 0.01);
    CHECK(problem.logical_A.rows() == 1);   // the at_least_one row
    CHECK(problem.logical_b == std::vector<double>{-1.0});

    const EquilibriumOptions eq_opts = equilibrium_options(sc);
    CHECK(eq_opts.lp.feas_tol == sc.feas_tol);
    CHECK(eq_opts.verify_tol == sc.verify_tol);
    const SelectionOptions sel_opts = selection_options(sc);
    CHECK(sel_opts.mbp.node_limit == sc.node_limit);
    CHECK(sel_opts.oracle_cap == sc.oracle_cap);
    CHECK(sel_opts.mbp.lp.opt_tol == sc.opt_tol);
}

TEST_CASE("build_network resolves explicit air links from coordinates") {
    const ParsedNetwork parsed =
        parse_network(data_path("fig1_net.tntp"), data_path("fig1_node.tntp"));
    const std::string text = R"({
        "vertiports": [2, 3],
        "air_links": [{"from": 2, "to": 3}, {"from": 3, "to": 2, "time": 0.7}],
        "air_speed": 10,
        "air_capacity": 4
    })";
    const ScenarioConfig sc = parse_scenario_text("derive_time.json", text);
    const HybridNetwork net = build_network(parsed, sc);
    REQUIRE(net.air_count() == 2);
    const Link& derived = net.links[4];
    const Link& given = net.links[5];
    CHECK_THAT(derived.free_time, Catch::Matchers::WithinAbs(0.2, 1e-12));  // distance 2 at speed 10
    CHECK(derived.capacity == 4.0);
    CHECK(given.free_time == 0.7);
}

TEST_CASE("build_network requires coordinates when times must be derived") {
    const ParsedNetwork parsed = parse_network(data_path("fig1_net.tntp"));  // no node file
    SECTION("generate mode") {
        const ScenarioConfig sc = parse_scenario_text("gen_nocoords.json",
                                                      R"({"vertiports":[2,3]})");
        CHECK_THROWS_WITH(build_network(parsed, sc), ContainsSubstring("node coordinates"));
    }
    SECTION("explicit link without a time") {
        const ScenarioConfig sc = parse_scenario_text(
            "explicit_nocoords.json",
            R"({"vertiports":[2,3],"air_links":[{"from":2,"to":3}]})");
        CHECK_THROWS_WITH(build_network(parsed, sc), ContainsSubstring("node coordinates"));
    }
    SECTION("explicit links with times need no coordinates") {
        const ScenarioConfig sc = parse_scenario_text(
            "explicit_times.json",
            R"({"vertiports":[2,3],
                "air_links":[{"from":2,"to":3,"time":0.2},{"from":3,"to":2,"time":0.2}],
                "air_capacity":4})");
        const HybridNetwork net = build_network(parsed, sc);
        CHECK(net.air_count() == 2);
        CHECK(net.links[4].capacity == 4.0);
    }
    SECTION("no vertiports yields the plain ground network") {
        const ScenarioConfig sc = parse_scenario_text("ground_only.json", "{}");
        const HybridNetwork net = build_network(parsed, sc);
        CHECK(net.air_count() == 0);
        CHECK(net.vertiport_count() == 0);
        CHECK(net.link_count() == 4);
    }
}

TEST_CASE("build_demand scales rates and collects destinations in order") {
    const std::vector<TripDemand> trips = {{0, 3, 10.0}, {0, 1, 5.0}, {2, 1, 1.0}};
    const ScenarioConfig sc =
        parse_scenario_text("halved.json", R"({"demand_scale": 0.5})");
    const DemandTable table = build_demand(trips, sc, 4);
    CHECK(table.destinations == std::vector<int>{1, 3});
    CHECK(table.demand(0, 1) == 5.0);   // 10 scaled by 0.5
    CHECK(table.demand(0, 0) == 2.5);
    CHECK(table.demand(2, 0) == 0.5);
    for (int j = 0; j < table.destination_count(); ++j)
        CHECK_THAT(table.demand.col_sum(j), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("to_selection_problem requires capacity options") {
    const ParsedNetwork parsed =
        parse_network(data_path("fig1_net.tntp"), data_path("fig1_node.tntp"));
    const ScenarioConfig sc = parse_scenario(data_path("fig1_equilibrium.json"));
    const HybridNetwork net = build_network(parsed, sc);
    const DemandTable demand = build_demand(testsupport::toy_trips(), sc, net.node_count);
    CHECK_THROWS_WITH(to_selection_problem(net, demand, sc),
                      ContainsSubstring("capacity_options"));
}
