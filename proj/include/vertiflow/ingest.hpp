#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vertiflow/errors.hpp"
#include "vertiflow/linalg.hpp"
#include "vertiflow/netmodel.hpp"
#include "vertiflow/selection.hpp"

// File ingestion: TNTP-style network / trips / node-coordinate readers and
// writers, plus a JSON scenario format describing vertiports, capacity
// options, installation costs, logical constraints, air-link parameters,
// and solver settings.  See docs/scenario.md for the scenario schema.
//
// Conventions shared by all readers and writers here:
//   * files number nodes from 1; every in-memory structure is 0-based,
//   * `~` starts a comment that runs to the end of the line,
//   * metadata lines look like `<TAG> value` and may appear anywhere,
//   * a `;` in a data row is treated as whitespace (TNTP row terminator),
//   * every reader error is a ParseError carrying the path and, when the
//     offending record is known, its 1-based line number.

namespace vertiflow {

/// Result of reading a network file (plus, optionally, its coordinate file).
struct ParsedNetwork {
    int node_count = 0;        ///< declared via <NUMBER OF NODES>
    int first_thru_node = 1;   ///< declared via <FIRST THRU NODE>, 1-based; informational
    long declared_links = 0;   ///< declared via <NUMBER OF LINKS>; equals links.size()
    std::vector<Link> links;   ///< ground links, 0-based endpoints
    NodeCoords coords;         ///< planar positions; empty unless a node file was read

    bool has_coords() const noexcept { return coords.size() > 0; }
};

/// Result of reading a trips file.  Entries with zero flow are dropped
/// silently; entries whose origin equals their destination are dropped with
/// a warning (they cannot affect any flow).
struct ParsedTrips {
    std::vector<TripDemand> trips;      ///< 0-based, rates > 0
    std::vector<std::string> warnings;  ///< one message per dropped self-trip
};

/// One explicit air link in a scenario.  Missing fields are resolved when
/// the network is built: time from coordinates and the scenario air speed,
/// capacity from the scenario default.
struct AirLinkSpec {
    int from = 0;                    ///< 0-based vertiport node
    int to = 0;                      ///< 0-based vertiport node
    std::optional<double> time;      ///< hours; absent -> distance / speed
    std::optional<double> capacity;  ///< trips/hour; absent -> scenario default
};

/// Everything a scenario file can configure.  Scalar defaults mirror the
/// solver option structs so an empty `solver` block changes nothing.
struct ScenarioConfig {
    std::vector<int> vertiports;  ///< candidate vertiport nodes, 0-based, distinct

    Mat G;  ///< candidates x options capacity matrix; rows positive, strictly increasing
    Mat K;  ///< candidates x options installation-cost matrix, >= 0

    Mat logical_A;                 ///< extra selection constraints over row-major vec(B)
    std::vector<double> logical_b;

    double gamma = 0.0;         ///< installation budget
    double omega = 0.0;         ///< installation-cost weight in the combined objective
    double mu = 0.0;            ///< big-M override; 0 selects the computed bound
    double demand_scale = 1.0;  ///< multiplies every trip rate

    AirLinkParams air;                    ///< generation params / explicit-link defaults
    bool generate_air = true;             ///< derive air links from coordinates
    std::vector<AirLinkSpec> air_links;   ///< used when generate_air is false

    std::vector<double> vertiport_capacity;  ///< fixed throughput per vertiport; empty = none

    double feas_tol = SolveOptions{}.feas_tol;
    double opt_tol = SolveOptions{}.opt_tol;
    double verify_tol = EquilibriumOptions{}.verify_tol;
    long node_limit = MbpOptions{}.node_limit;
    int oracle_cap = SelectionOptions{}.oracle_cap;

    int vertiport_count() const noexcept { return static_cast<int>(vertiports.size()); }
    int option_count() const noexcept { return G.cols(); }
    int binary_count() const noexcept { return G.rows() * G.cols(); }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const char* ws = " \t\r\n\f\v";
    const auto a = s.find_first_not_of(ws);
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(ws);
    return std::string(s.substr(a, b - a + 1));
}

inline std::string upper_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    return out;
}

/// Cut a line at the first `~` (comment marker).
inline std::string strip_comment(std::string_view line) {
    const auto pos = line.find('~');
    return trim(pos == std::string_view::npos ? line : line.substr(0, pos));
}

/// Whitespace tokens of a data row, with `;` treated as whitespace.
inline std::vector<std::string> row_tokens(std::string_view line) {
    std::string s(line);
    for (char& c : s)
        if (c == ';') c = ' ';
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::optional<long> to_long(std::string_view tok) {
    long v = 0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    const auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last) return std::nullopt;
    return v;
}

inline std::optional<double> to_double(std::string_view tok) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    const auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last) return std::nullopt;
    return v;
}

/// Shortest decimal form that parses back to exactly the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

/// Parse a `<TAG> value` line; returns (TAG in upper case, value text).
inline std::pair<std::string, std::string> metadata_tag(const std::string& path, long line_no,
                                                        std::string_view line) {
    const auto close = line.find('>');
    if (close == std::string_view::npos)
        throw ParseError(path, line_no, "metadata tag is missing '>'");
    std::string tag = upper_ascii(trim(line.substr(1, close - 1)));
    std::string value = trim(line.substr(close + 1));
    return {tag, value};
}

inline long metadata_int(const std::string& path, long line_no, const std::string& tag,
                         const std::string& value) {
    const auto v = to_long(value);
    if (!v)
        throw ParseError(path, line_no,
                         "metadata tag <" + tag + "> needs an integer value, got '" + value + "'");
    return *v;
}

} // namespace detail

/// Read a TNTP network file: `<NUMBER OF NODES>`, `<NUMBER OF LINKS>`, an
/// optional `<FIRST THRU NODE>`, then one row per link with at least the
/// five standard leading fields
///     start  end  capacity  length  free_flow_time  [b power speed toll type]
/// Every present field must be numeric; fields past the first five are
/// ignored (the model needs only travel time and capacity, so `length` and
/// the speed/toll/type tail carry no information here).
inline ParsedNetwork parse_network(const std::string& path) {
    ParsedNetwork net;
    long declared_nodes = -1;
    long declared_links = -1;
    long first_thru = 1;

    const std::vector<std::string> lines = detail::read_lines(path);
    for (std::size_t idx = 0; idx < lines.size(); ++idx) {
        const long line_no = static_cast<long>(idx) + 1;
        const std::string line = detail::strip_comment(lines[idx]);
        if (line.empty()) continue;

        if (line.front() == '<') {
            const auto [tag, value] = detail::metadata_tag(path, line_no, line);
            if (tag == "END OF METADATA") continue;
            if (tag == "NUMBER OF NODES") {
                declared_nodes = detail::metadata_int(path, line_no, tag, value);
                if (declared_nodes < 1)
                    throw ParseError(path, line_no, "declared node count must be >= 1");
            } else if (tag == "NUMBER OF LINKS") {
                declared_links = detail::metadata_int(path, line_no, tag, value);
                if (declared_links < 0)
                    throw ParseError(path, line_no, "declared link count must be >= 0");
            } else if (tag == "FIRST THRU NODE") {
                first_thru = detail::metadata_int(path, line_no, tag, value);
                if (first_thru < 1)
                    throw ParseError(path, line_no, "first thru node must be >= 1");
            }
            // Other tags (<NUMBER OF ZONES>, <TOTAL OD FLOW>, ...) are tolerated.
            continue;
        }

        if (declared_nodes < 0)
            throw ParseError(path, line_no, "missing metadata tag <NUMBER OF NODES>");
        if (declared_links < 0)
            throw ParseError(path, line_no, "missing metadata tag <NUMBER OF LINKS>");

        const auto tok = detail::row_tokens(line);
        if (tok.size() < 5)
            throw ParseError(path, line_no,
                             "link row has " + std::to_string(tok.size()) +
                                 " fields; expected at least 5 "
                                 "(start, end, capacity, length, free-flow time)");
        const auto start = detail::to_long(tok[0]);
        if (!start)
            throw ParseError(path, line_no, "link start node '" + tok[0] + "' is not an integer");
        const auto end = detail::to_long(tok[1]);
        if (!end)
            throw ParseError(path, line_no, "link end node '" + tok[1] + "' is not an integer");
        std::vector<double> num(tok.size() - 2);
        for (std::size_t t = 2; t < tok.size(); ++t) {
            const auto v = detail::to_double(tok[t]);
            if (!v)
                throw ParseError(path, line_no,
                                 "link field " + std::to_string(t + 1) + " ('" + tok[t] +
                                     "') is not a number");
            num[t - 2] = *v;
        }
        const double capacity = num[0];
        const double free_time = num[2];

        if (*start < 1 || *end < 1)
            throw ParseError(path, line_no, "link endpoints must be >= 1");
        if (*start > declared_nodes)
            throw ParseError(path, line_no,
                             "link start node " + std::to_string(*start) +
                                 " exceeds the declared node count " +
                                 std::to_string(declared_nodes));
        if (*end > declared_nodes)
            throw ParseError(path, line_no,
                             "link end node " + std::to_string(*end) +
                                 " exceeds the declared node count " +
                                 std::to_string(declared_nodes));
        if (*start == *end)
            throw ParseError(path, line_no,
                             "link from node " + std::to_string(*start) +
                                 " to itself is not allowed");
        if (!std::isfinite(capacity) || capacity <= 0.0)
            throw ParseError(path, line_no, "link capacity must be finite and > 0");
        if (!std::isfinite(free_time) || free_time < 0.0)
            throw ParseError(path, line_no, "free-flow time must be finite and >= 0");

        net.links.push_back({static_cast<int>(*start - 1), static_cast<int>(*end - 1),
                             LinkKind::ground, free_time, capacity});
    }

    if (declared_nodes < 0) throw ParseError(path, 0, "missing metadata tag <NUMBER OF NODES>");
    if (declared_links < 0) throw ParseError(path, 0, "missing metadata tag <NUMBER OF LINKS>");
    if (static_cast<long>(net.links.size()) != declared_links)
        throw ParseError(path, 0,
                         "file declares " + std::to_string(declared_links) +
                             " links but contains " + std::to_string(net.links.size()) +
                             " link rows");
    if (first_thru > declared_nodes + 1)
        throw ParseError(path, 0, "first thru node exceeds the declared node count");

    net.node_count = static_cast<int>(declared_nodes);
    net.first_thru_node = static_cast<int>(first_thru);
    net.declared_links = declared_links;
    return net;
}

/// Read a node-coordinate file: one `node x y` row per node (1-based ids,
/// optional `;` terminators, optional non-numeric header row).  Every node
/// from 1 to the largest id must appear exactly once.
inline NodeCoords parse_node_coords(const std::string& path) {
    const std::vector<std::string> lines = detail::read_lines(path);
    std::vector<long> ids;
    std::vector<double> xs, ys;
    bool seen_data = false;
    for (std::size_t idx = 0; idx < lines.size(); ++idx) {
        const long line_no = static_cast<long>(idx) + 1;
        const std::string line = detail::strip_comment(lines[idx]);
        if (line.empty()) continue;
        if (line.front() == '<') continue;  // tolerate metadata tags
        const auto tok = detail::row_tokens(line);
        if (!seen_data && !tok.empty() && !detail::to_long(tok[0])) continue;  // header row
        if (tok.size() != 3)
            throw ParseError(path, line_no,
                             "node row has " + std::to_string(tok.size()) +
                                 " fields; expected 3 (node, x, y)");
        const auto id = detail::to_long(tok[0]);
        if (!id || *id < 1)
            throw ParseError(path, line_no, "node id '" + tok[0] + "' is not a positive integer");
        const auto x = detail::to_double(tok[1]);
        const auto y = detail::to_double(tok[2]);
        if (!x || !y)
            throw ParseError(path, line_no, "node coordinates must be numeric");
        if (std::find(ids.begin(), ids.end(), *id) != ids.end())
            throw ParseError(path, line_no, "node " + std::to_string(*id) + " listed twice");
        ids.push_back(*id);
        xs.push_back(*x);
        ys.push_back(*y);
        seen_data = true;
    }
    if (ids.empty()) throw ParseError(path, 0, "node coordinate file contains no rows");

    const long n = *std::max_element(ids.begin(), ids.end());
    NodeCoords coords;
    coords.x.assign(static_cast<std::size_t>(n), 0.0);
    coords.y.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto at = static_cast<std::size_t>(ids[i] - 1);
        coords.x[at] = xs[i];
        coords.y[at] = ys[i];
        seen[at] = 1;
    }
    for (long i = 0; i < n; ++i)
        if (!seen[static_cast<std::size_t>(i)])
            throw ParseError(path, 0,
                             "node coordinate file is missing node " + std::to_string(i + 1));
    return coords;
}

/// Read a network file together with its coordinate file.
inline ParsedNetwork parse_network(const std::string& net_path, const std::string& node_path) {
    ParsedNetwork net = parse_network(net_path);
    net.coords = parse_node_coords(node_path);
    if (net.coords.size() != net.node_count)
        throw ParseError(node_path, 0,
                         "coordinate file covers " + std::to_string(net.coords.size()) +
                             " nodes, network declares " + std::to_string(net.node_count));
    return net;
}

/// Read a TNTP trips file: `Origin n` starts a block; each following
/// `dest : flow ;` entry (several may share a line) adds one trip demand.
/// Zero-flow entries are dropped silently; origin == destination entries
/// are dropped with a warning since no flow can serve them.
inline ParsedTrips parse_trips(const std::string& path) {
    ParsedTrips out;
    long origin = -1;  // 1-based; -1 until the first Origin line

    const std::vector<std::string> lines = detail::read_lines(path);
    for (std::size_t idx = 0; idx < lines.size(); ++idx) {
        const long line_no = static_cast<long>(idx) + 1;
        const std::string line = detail::strip_comment(lines[idx]);
        if (line.empty()) continue;
        if (line.front() == '<') continue;  // tolerate metadata tags

        const auto first_word_end = line.find_first_of(" \t");
        const std::string first_word =
            detail::upper_ascii(line.substr(0, first_word_end));
        if (first_word == "ORIGIN") {
            const auto rest = detail::row_tokens(
                first_word_end == std::string::npos ? "" : line.substr(first_word_end));
            if (rest.size() != 1)
                throw ParseError(path, line_no, "Origin line needs exactly one node id");
            const auto o = detail::to_long(rest[0]);
            if (!o || *o < 1)
                throw ParseError(path, line_no,
                                 "origin node '" + rest[0] + "' is not a positive integer");
            origin = *o;
            continue;
        }

        // Entry line: `dest : flow ; dest : flow ; ...`
        std::string_view sv(line);
        while (!sv.empty()) {
            const auto semi = sv.find(';');
            const std::string piece =
                detail::trim(semi == std::string_view::npos ? sv : sv.substr(0, semi));
            sv = semi == std::string_view::npos ? std::string_view{} : sv.substr(semi + 1);
            if (piece.empty()) continue;
            if (origin < 0)
                throw ParseError(path, line_no, "trip entry before any Origin line");
            const auto colon = piece.find(':');
            if (colon == std::string::npos || piece.find(':', colon + 1) != std::string::npos)
                throw ParseError(path, line_no,
                                 "trip entry '" + piece + "' must look like 'destination : flow'");
            const std::string dest_tok = detail::trim(piece.substr(0, colon));
            const std::string flow_tok = detail::trim(piece.substr(colon + 1));
            const auto dest = detail::to_long(dest_tok);
            if (!dest || *dest < 1)
                throw ParseError(path, line_no,
                                 "destination '" + dest_tok + "' is not a positive integer");
            const auto flow = detail::to_double(flow_tok);
            if (!flow)
                throw ParseError(path, line_no, "flow '" + flow_tok + "' is not a number");
            if (!std::isfinite(*flow) || *flow < 0.0)
                throw ParseError(path, line_no, "flow must be finite and >= 0");
            if (*flow == 0.0) continue;
            if (*dest == origin) {
                out.warnings.push_back(path + ":" + std::to_string(line_no) +
                                       ": dropped trip from node " + std::to_string(origin) +
                                       " to itself (" + detail::format_double(*flow) +
                                       " trips/h)");
                continue;
            }
            out.trips.push_back(
                {static_cast<int>(origin - 1), static_cast<int>(*dest - 1), *flow});
        }
    }
    return out;
}

/// Write a network in the row layout parse_network reads.  The length and
/// speed/toll/type fields carry no model information and are written as 0
/// (type as 1).
inline void write_network(std::ostream& os, const ParsedNetwork& net) {
    os << "<NUMBER OF NODES> " << net.node_count << "\n";
    os << "<NUMBER OF LINKS> " << net.links.size() << "\n";
    os << "<FIRST THRU NODE> " << net.first_thru_node << "\n";
    os << "<END OF METADATA>\n";
    os << "~ start end capacity length free_flow_time b power speed toll type ;\n";
    for (const Link& l : net.links) {
        os << (l.tail + 1) << "\t" << (l.head + 1) << "\t" << detail::format_double(l.capacity)
           << "\t0\t" << detail::format_double(l.free_time) << "\t0\t0\t0\t0\t1\t;\n";
    }
}

/// Write trips grouped by origin, sorted by (origin, destination).
inline void write_trips(std::ostream& os, const std::vector<TripDemand>& trips) {
    std::vector<TripDemand> sorted = trips;
    std::stable_sort(sorted.begin(), sorted.end(), [](const TripDemand& a, const TripDemand& b) {
        return a.origin != b.origin ? a.origin < b.origin : a.destination < b.destination;
    });
    int current = -1;
    for (const TripDemand& t : sorted) {
        if (t.origin != current) {
            os << "Origin " << (t.origin + 1) << "\n";
            current = t.origin;
        }
        os << "    " << (t.destination + 1) << " : " << detail::format_double(t.rate) << ";\n";
    }
}

/// Write node coordinates in the row layout parse_node_coords reads.
inline void write_node_coords(std::ostream& os, const NodeCoords& coords) {
    os << "~ node x y ;\n";
    for (int i = 0; i < coords.size(); ++i) {
        os << (i + 1) << "\t" << detail::format_double(coords.x[static_cast<std::size_t>(i)])
           << "\t" << detail::format_double(coords.y[static_cast<std::size_t>(i)]) << "\t;\n";
    }
}

namespace detail {

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ParseError(path, 0, "cannot open file for writing");
    out << text;
    if (!out) throw ParseError(path, 0, "write failed");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

namespace detail {

using json = nlohmann::ordered_json;

inline long json_line(const std::string& text, std::size_t byte) {
    long line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

[[noreturn]] inline void scenario_error(const std::string& path, const std::string& msg) {
    throw ParseError(path, 0, msg);
}

inline double scenario_number(const std::string& path, const json& j, const std::string& key) {
    if (!j.is_number()) scenario_error(path, "scenario key '" + key + "' must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) scenario_error(path, "scenario key '" + key + "' must be finite");
    return v;
}

inline long scenario_integer(const std::string& path, const json& j, const std::string& key) {
    if (!j.is_number_integer()) scenario_error(path, "scenario key '" + key + "' must be an integer");
    return j.get<long>();
}

/// Expand `capacity_options` / `costs`: either one shared row (list of
/// numbers) or one row per vertiport (list of lists).
inline Mat scenario_matrix(const std::string& path, const json& j, const std::string& key,
                           int n_v) {
    if (!j.is_array() || j.empty())
        scenario_error(path, "scenario key '" + key + "' must be a non-empty array");
    std::vector<std::vector<double>> rows;
    if (j.front().is_array()) {
        if (static_cast<int>(j.size()) != n_v)
            scenario_error(path, "scenario key '" + key + "' has " + std::to_string(j.size()) +
                                     " rows for " + std::to_string(n_v) + " vertiports");
        for (const auto& row : j) {
            if (!row.is_array() || row.empty())
                scenario_error(path, "scenario key '" + key + "' rows must be non-empty arrays");
            std::vector<double> r;
            for (const auto& v : row) r.push_back(scenario_number(path, v, key));
            rows.push_back(std::move(r));
        }
        for (const auto& r : rows)
            if (r.size() != rows.front().size())
                scenario_error(path, "scenario key '" + key + "' rows differ in length");
    } else {
        std::vector<double> shared;
        for (const auto& v : j) shared.push_back(scenario_number(path, v, key));
        rows.assign(static_cast<std::size_t>(n_v), shared);
    }
    Mat m(n_v, static_cast<int>(rows.empty() ? 0 : rows.front().size()));
    for (int i = 0; i < m.rows(); ++i)
        for (int c = 0; c < m.cols(); ++c)
            m(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    return m;
}

/// Distinct 1-based vertiport indices of a logical-constraint macro.
inline std::vector<int> macro_members(const std::string& path, const json& j,
                                      const std::string& macro, int n_v) {
    if (!j.is_array() || j.empty())
        scenario_error(path, "logical constraint '" + macro +
                                 "' needs a non-empty array of vertiport indices");
    std::vector<int> members;
    for (const auto& v : j) {
        const long m = scenario_integer(path, v, macro);
        if (m < 1 || m > n_v)
            scenario_error(path, "logical constraint '" + macro + "' references vertiport " +
                                     std::to_string(m) + "; scenario has " + std::to_string(n_v));
        if (std::find(members.begin(), members.end(), static_cast<int>(m)) != members.end())
            scenario_error(path, "logical constraint '" + macro + "' lists vertiport " +
                                     std::to_string(m) + " twice");
        members.push_back(static_cast<int>(m));
    }
    return members;
}

/// One row over row-major vec(B) with `value` in every option slot of the
/// listed vertiports (1-based indices).
inline std::vector<double> macro_row(const std::vector<int>& members, int n_v, int n_c,
                                     double value) {
    std::vector<double> row(static_cast<std::size_t>(n_v) * static_cast<std::size_t>(n_c), 0.0);
    for (int m : members)
        for (int c = 0; c < n_c; ++c)
            row[static_cast<std::size_t>((m - 1) * n_c + c)] = value;
    return row;
}

} // namespace detail

/// Read a scenario file (JSON; schema in docs/scenario.md).  Verifies every
/// structural invariant: positive, strictly increasing capacity options per
/// vertiport; nonnegative costs; nonnegative budget, weight, and scale.
/// Logical constraints may be raw rows/bounds or the macros
/// `both_selected`, `at_least_one`, `exactly_one` over vertiport indices.
inline ScenarioConfig parse_scenario(const std::string& path) {
    using detail::json;
    using detail::scenario_error;

    std::string text;
    {
        std::ifstream in(path);
        if (!in) throw ParseError(path, 0, "cannot open file");
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }

    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path, detail::json_line(text, e.byte), e.what());
    }
    if (!j.is_object()) scenario_error(path, "scenario must be a JSON object");

    static const std::vector<std::string> known = {
        "format_version", "vertiports",       "capacity_options",   "costs",
        "budget",         "cost_weight",      "big_m",              "demand_scale",
        "air_links",      "air_speed",        "air_capacity",       "vertiport_capacity",
        "logical_constraints",                "solver",
    };
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            scenario_error(path, "unknown scenario key '" + key + "'");
    }

    ScenarioConfig sc;

    if (j.contains("format_version") &&
        detail::scenario_integer(path, j["format_version"], "format_version") != 1)
        scenario_error(path, "unsupported scenario format_version (expected 1)");

    if (j.contains("vertiports")) {
        if (!j["vertiports"].is_array())
            scenario_error(path, "scenario key 'vertiports' must be an array of node ids");
        for (const auto& v : j["vertiports"]) {
            const long node = detail::scenario_integer(path, v, "vertiports");
            if (node < 1)
                scenario_error(path, "vertiport node ids must be >= 1");
            const int node0 = static_cast<int>(node - 1);
            if (std::find(sc.vertiports.begin(), sc.vertiports.end(), node0) !=
                sc.vertiports.end())
                scenario_error(path, "vertiport node " + std::to_string(node) + " listed twice");
            sc.vertiports.push_back(node0);
        }
    }
    const int n_v = sc.vertiport_count();

    if (j.contains("capacity_options")) {
        if (n_v == 0)
            scenario_error(path, "capacity_options given but scenario has no vertiports");
        sc.G = detail::scenario_matrix(path, j["capacity_options"], "capacity_options", n_v);
        for (int i = 0; i < sc.G.rows(); ++i)
            for (int c = 0; c < sc.G.cols(); ++c) {
                if (sc.G(i, c) <= 0.0)
                    scenario_error(path, "capacity options for vertiport " + std::to_string(i + 1) +
                                             " must all be > 0");
                if (c > 0 && sc.G(i, c) <= sc.G(i, c - 1))
                    scenario_error(path, "capacity options for vertiport " + std::to_string(i + 1) +
                                             " must be strictly increasing left to right");
            }
    } else {
        sc.G = Mat(n_v, 0);
    }

    if (j.contains("costs")) {
        if (!j.contains("capacity_options"))
            scenario_error(path, "scenario gives costs but no capacity_options");
        sc.K = detail::scenario_matrix(path, j["costs"], "costs", n_v);
        if (sc.K.cols() != sc.G.cols())
            scenario_error(path, "costs rows have " + std::to_string(sc.K.cols()) +
                                     " entries; capacity_options rows have " +
                                     std::to_string(sc.G.cols()));
        for (int i = 0; i < sc.K.rows(); ++i)
            for (int c = 0; c < sc.K.cols(); ++c)
                if (sc.K(i, c) < 0.0)
                    scenario_error(path, "costs must be >= 0");
    } else {
        sc.K = Mat(n_v, sc.G.cols());
    }
    const int n_c = sc.option_count();

    if (j.contains("budget")) {
        sc.gamma = detail::scenario_number(path, j["budget"], "budget");
        if (sc.gamma < 0.0) scenario_error(path, "budget must be >= 0");
    }
    if (j.contains("cost_weight")) {
        sc.omega = detail::scenario_number(path, j["cost_weight"], "cost_weight");
        if (sc.omega < 0.0) scenario_error(path, "cost_weight must be >= 0");
    }
    if (j.contains("big_m")) {
        sc.mu = detail::scenario_number(path, j["big_m"], "big_m");
        if (sc.mu <= 0.0) scenario_error(path, "big_m must be > 0 when given");
    }
    if (j.contains("demand_scale")) {
        sc.demand_scale = detail::scenario_number(path, j["demand_scale"], "demand_scale");
        if (sc.demand_scale < 0.0) scenario_error(path, "demand_scale must be >= 0");
    }
    if (j.contains("air_speed")) {
        sc.air.speed = detail::scenario_number(path, j["air_speed"], "air_speed");
        if (sc.air.speed <= 0.0) scenario_error(path, "air_speed must be > 0");
    }
    if (j.contains("air_capacity")) {
        sc.air.capacity = detail::scenario_number(path, j["air_capacity"], "air_capacity");
        if (sc.air.capacity <= 0.0) scenario_error(path, "air_capacity must be > 0");
    }

    if (j.contains("air_links")) {
        const json& a = j["air_links"];
        if (a.is_string()) {
            if (a.get<std::string>() != "generate")
                scenario_error(path, "air_links must be \"generate\" or an array of links");
            sc.generate_air = true;
        } else if (a.is_array()) {
            sc.generate_air = false;
            for (const auto& e : a) {
                if (!e.is_object())
                    scenario_error(path, "air_links entries must be objects");
                for (const auto& [key, value] : e.items()) {
                    (void)value;
                    if (key != "from" && key != "to" && key != "time" && key != "capacity")
                        scenario_error(path, "unknown air_links key '" + key + "'");
                }
                if (!e.contains("from") || !e.contains("to"))
                    scenario_error(path, "air_links entries need 'from' and 'to' node ids");
                AirLinkSpec spec;
                const long from = detail::scenario_integer(path, e["from"], "from");
                const long to = detail::scenario_integer(path, e["to"], "to");
                if (from < 1 || to < 1)
                    scenario_error(path, "air link node ids must be >= 1");
                if (from == to)
                    scenario_error(path,
                                   "air link from node " + std::to_string(from) + " to itself");
                spec.from = static_cast<int>(from - 1);
                spec.to = static_cast<int>(to - 1);
                for (const int node : {spec.from, spec.to})
                    if (std::find(sc.vertiports.begin(), sc.vertiports.end(), node) ==
                        sc.vertiports.end())
                        scenario_error(path, "air link node " + std::to_string(node + 1) +
                                                 " is not a vertiport");
                if (e.contains("time")) {
                    const double t = detail::scenario_number(path, e["time"], "time");
                    if (t <= 0.0) scenario_error(path, "air link time must be > 0");
                    spec.time = t;
                }
                if (e.contains("capacity")) {
                    const double c = detail::scenario_number(path, e["capacity"], "capacity");
                    if (c <= 0.0) scenario_error(path, "air link capacity must be > 0");
                    spec.capacity = c;
                }
                sc.air_links.push_back(spec);
            }
        } else {
            scenario_error(path, "air_links must be \"generate\" or an array of links");
        }
    }

    if (j.contains("vertiport_capacity")) {
        if (n_v == 0)
            scenario_error(path, "vertiport_capacity given but scenario has no vertiports");
        const json& c = j["vertiport_capacity"];
        if (c.is_number()) {
            const double v = detail::scenario_number(path, c, "vertiport_capacity");
            if (v < 0.0) scenario_error(path, "vertiport_capacity must be >= 0");
            sc.vertiport_capacity.assign(static_cast<std::size_t>(n_v), v);
        } else if (c.is_array()) {
            if (static_cast<int>(c.size()) != n_v)
                scenario_error(path, "vertiport_capacity has " + std::to_string(c.size()) +
                                         " entries for " + std::to_string(n_v) + " vertiports");
            for (const auto& v : c) {
                const double cap = detail::scenario_number(path, v, "vertiport_capacity");
                if (cap < 0.0) scenario_error(path, "vertiport_capacity must be >= 0");
                sc.vertiport_capacity.push_back(cap);
            }
        } else {
            scenario_error(path, "vertiport_capacity must be a number or an array");
        }
    }

    if (j.contains("logical_constraints")) {
        const json& lc = j["logical_constraints"];
        if (!lc.is_array())
            scenario_error(path, "logical_constraints must be an array");
        if (!lc.empty() && (n_v == 0 || n_c == 0))
            scenario_error(path,
                           "logical_constraints need vertiports with capacity_options");
        std::vector<std::vector<double>> rows;
        std::vector<double> bounds;
        const int width = n_v * n_c;
        for (const auto& e : lc) {
            if (!e.is_object() || e.size() == 0)
                scenario_error(path, "logical_constraints entries must be objects");
            if (e.contains("both_selected")) {
                // Every listed vertiport must be selected: one row per member.
                const auto members =
                    detail::macro_members(path, e["both_selected"], "both_selected", n_v);
                if (e.size() != 1)
                    scenario_error(path, "logical_constraints entries take exactly one macro");
                for (int m : members) {
                    rows.push_back(detail::macro_row({m}, n_v, n_c, -1.0));
                    bounds.push_back(-1.0);
                }
            } else if (e.contains("at_least_one")) {
                const auto members =
                    detail::macro_members(path, e["at_least_one"], "at_least_one", n_v);
                if (e.size() != 1)
                    scenario_error(path, "logical_constraints entries take exactly one macro");
                rows.push_back(detail::macro_row(members, n_v, n_c, -1.0));
                bounds.push_back(-1.0);
            } else if (e.contains("exactly_one")) {
                const auto members =
                    detail::macro_members(path, e["exactly_one"], "exactly_one", n_v);
                if (e.size() != 1)
                    scenario_error(path, "logical_constraints entries take exactly one macro");
                rows.push_back(detail::macro_row(members, n_v, n_c, 1.0));
                bounds.push_back(1.0);
                rows.push_back(detail::macro_row(members, n_v, n_c, -1.0));
                bounds.push_back(-1.0);
            } else if (e.contains("rows") || e.contains("bounds")) {
                if (!e.contains("rows") || !e.contains("bounds") || e.size() != 2)
                    scenario_error(path,
                                   "raw logical constraints need exactly 'rows' and 'bounds'");
                const json& rj = e["rows"];
                const json& bj = e["bounds"];
                if (!rj.is_array() || !bj.is_array() || rj.size() != bj.size())
                    scenario_error(path, "'rows' and 'bounds' must be arrays of equal length");
                for (std::size_t r = 0; r < rj.size(); ++r) {
                    if (!rj[r].is_array() || static_cast<int>(rj[r].size()) != width)
                        scenario_error(path, "logical rows must have " + std::to_string(width) +
                                                 " entries (vertiports x options)");
                    std::vector<double> row;
                    for (const auto& v : rj[r]) row.push_back(detail::scenario_number(path, v, "rows"));
                    rows.push_back(std::move(row));
                    bounds.push_back(detail::scenario_number(path, bj[r], "bounds"));
                }
            } else {
                scenario_error(path,
                               "logical_constraints entries must use 'both_selected', "
                               "'at_least_one', 'exactly_one', or 'rows'/'bounds'");
            }
        }
        sc.logical_A = Mat(static_cast<int>(rows.size()), width);
        for (int r = 0; r < sc.logical_A.rows(); ++r)
            for (int c = 0; c < width; ++c)
                sc.logical_A(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        sc.logical_b = std::move(bounds);
    } else {
        sc.logical_A = Mat(0, n_v * n_c);
    }

    if (j.contains("solver")) {
        const json& s = j["solver"];
        if (!s.is_object()) scenario_error(path, "solver must be an object");
        for (const auto& [key, value] : s.items()) {
            if (key == "feas_tol") {
                sc.feas_tol = detail::scenario_number(path, value, "feas_tol");
                if (sc.feas_tol <= 0.0) scenario_error(path, "feas_tol must be > 0");
            } else if (key == "opt_tol") {
                sc.opt_tol = detail::scenario_number(path, value, "opt_tol");
                if (sc.opt_tol <= 0.0) scenario_error(path, "opt_tol must be > 0");
            } else if (key == "verify_tol") {
                sc.verify_tol = detail::scenario_number(path, value, "verify_tol");
                if (sc.verify_tol <= 0.0) scenario_error(path, "verify_tol must be > 0");
            } else if (key == "node_limit") {
                sc.node_limit = detail::scenario_integer(path, value, "node_limit");
                if (sc.node_limit < 1) scenario_error(path, "node_limit must be >= 1");
            } else if (key == "oracle_cap") {
                sc.oracle_cap =
                    static_cast<int>(detail::scenario_integer(path, value, "oracle_cap"));
                if (sc.oracle_cap < 1) scenario_error(path, "oracle_cap must be >= 1");
            } else {
                scenario_error(path, "unknown solver key '" + key + "'");
            }
        }
    }

    return sc;
}

/// Write a scenario back as canonical JSON (logical constraints in raw
/// rows/bounds form).  parse_scenario(write_scenario(sc)) == sc.
inline void write_scenario(std::ostream& os, const ScenarioConfig& sc) {
    using detail::json;
    json j;
    j["format_version"] = 1;
    {
        json v = json::array();
        for (int node : sc.vertiports) v.push_back(node + 1);
        j["vertiports"] = std::move(v);
    }
    if (sc.option_count() > 0) {
        json g = json::array(), k = json::array();
        for (int i = 0; i < sc.G.rows(); ++i) {
            json gr = json::array(), kr = json::array();
            for (int c = 0; c < sc.G.cols(); ++c) {
                gr.push_back(sc.G(i, c));
                kr.push_back(sc.K(i, c));
            }
            g.push_back(std::move(gr));
            k.push_back(std::move(kr));
        }
        j["capacity_options"] = std::move(g);
        j["costs"] = std::move(k);
    }
    j["budget"] = sc.gamma;
    j["cost_weight"] = sc.omega;
    if (sc.mu > 0.0) j["big_m"] = sc.mu;
    j["demand_scale"] = sc.demand_scale;
    if (sc.generate_air) {
        j["air_links"] = "generate";
    } else {
        json a = json::array();
        for (const AirLinkSpec& s : sc.air_links) {
            json e;
            e["from"] = s.from + 1;
            e["to"] = s.to + 1;
            if (s.time) e["time"] = *s.time;
            if (s.capacity) e["capacity"] = *s.capacity;
            a.push_back(std::move(e));
        }
        j["air_links"] = std::move(a);
    }
    j["air_speed"] = sc.air.speed;
    j["air_capacity"] = sc.air.capacity;
    if (!sc.vertiport_capacity.empty()) j["vertiport_capacity"] = sc.vertiport_capacity;
    if (sc.logical_A.rows() > 0) {
        json rows = json::array();
        for (int r = 0; r < sc.logical_A.rows(); ++r) {
            json row = json::array();
            for (int c = 0; c < sc.logical_A.cols(); ++c) row.push_back(sc.logical_A(r, c));
            rows.push_back(std::move(row));
        }
        json e;
        e["rows"] = std::move(rows);
        e["bounds"] = sc.logical_b;
        j["logical_constraints"] = json::array({std::move(e)});
    }
    {
        json s;
        s["feas_tol"] = sc.feas_tol;
        s["opt_tol"] = sc.opt_tol;
        s["verify_tol"] = sc.verify_tol;
        s["node_limit"] = sc.node_limit;
        s["oracle_cap"] = sc.oracle_cap;
        j["solver"] = std::move(s);
    }
    os << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Assembling solver inputs from parsed pieces
// ---------------------------------------------------------------------------

/// Combine a parsed ground network with a scenario's air links: explicit
/// specs are resolved (time from coordinates when absent), or links are
/// generated from coordinates between far-apart vertiport pairs.
inline HybridNetwork build_network(const ParsedNetwork& parsed, const ScenarioConfig& sc) {
    HybridNetwork ground;
    ground.node_count = parsed.node_count;
    ground.links = parsed.links;

    if (sc.vertiports.empty()) return with_air_links(ground, {}, {});

    std::vector<Link> air;
    if (sc.generate_air) {
        if (!parsed.has_coords())
            throw ValidationError("generated air links require node coordinates");
        air = generate_air_links(ground, sc.vertiports, parsed.coords, sc.air);
    } else {
        for (const AirLinkSpec& spec : sc.air_links) {
            double time = 0.0;
            if (spec.time) {
                time = *spec.time;
            } else {
                if (!parsed.has_coords())
                    throw ValidationError(
                        "air link " + detail::node_name(spec.from) + " -> " +
                        detail::node_name(spec.to) +
                        " has no travel time and no node coordinates to derive one");
                time = parsed.coords.distance(spec.from, spec.to) / sc.air.speed;
            }
            air.push_back({spec.from, spec.to, LinkKind::air, time,
                           spec.capacity.value_or(sc.air.capacity)});
        }
    }
    return with_air_links(ground, sc.vertiports, air);
}

/// Balanced demand over the sorted distinct destinations of the trip list,
/// with every rate multiplied by the scenario's demand scale.
inline DemandTable build_demand(const std::vector<TripDemand>& trips, const ScenarioConfig& sc,
                                int node_count) {
    std::vector<int> destinations;
    for (const TripDemand& t : trips)
        if (std::find(destinations.begin(), destinations.end(), t.destination) ==
            destinations.end())
            destinations.push_back(t.destination);
    std::sort(destinations.begin(), destinations.end());

    std::vector<TripDemand> scaled = trips;
    for (TripDemand& t : scaled) t.rate *= sc.demand_scale;
    return balance_demand(scaled, destinations, node_count);
}

/// Selection-problem view of a scenario over an already-built network.
inline SelectionProblem to_selection_problem(const HybridNetwork& net, const DemandTable& demand,
                                             const ScenarioConfig& sc) {
    if (sc.option_count() == 0)
        throw ValidationError(
            "scenario has no capacity_options; selection needs at least one per vertiport");
    SelectionProblem p;
    p.net = net;
    p.inc = build_incidence(net);
    p.demand = demand;
    p.G = sc.G;
    p.K = sc.K;
    p.logical_A = sc.logical_A;
    p.logical_b = sc.logical_b;
    p.gamma = sc.gamma;
    p.omega = sc.omega;
    p.mu = sc.mu;
    validate_selection_problem(p);
    return p;
}

/// Equilibrium solver settings a scenario configures.
inline EquilibriumOptions equilibrium_options(const ScenarioConfig& sc) {
    EquilibriumOptions opts;
    opts.lp.feas_tol = sc.feas_tol;
    opts.lp.opt_tol = sc.opt_tol;
    opts.verify_tol = sc.verify_tol;
    return opts;
}

/// Selection solver settings a scenario configures.
inline SelectionOptions selection_options(const ScenarioConfig& sc) {
    SelectionOptions opts;
    opts.mbp.lp.feas_tol = sc.feas_tol;
    opts.mbp.lp.opt_tol = sc.opt_tol;
    opts.mbp.node_limit = sc.node_limit;
    opts.verify_tol = sc.verify_tol;
    opts.oracle_cap = sc.oracle_cap;
    return opts;
}

// Path convenience wrappers for the writers.

inline void write_network(const std::string& path, const ParsedNetwork& net) {
    std::ostringstream ss;
    write_network(ss, net);
    detail::write_text_file(path, ss.str());
}

inline void write_trips(const std::string& path, const std::vector<TripDemand>& trips) {
    std::ostringstream ss;
    write_trips(ss, trips);
    detail::write_text_file(path, ss.str());
}

inline void write_node_coords(const std::string& path, const NodeCoords& coords) {
    std::ostringstream ss;
    write_node_coords(ss, coords);
    detail::write_text_file(path, ss.str());
}

inline void write_scenario(const std::string& path, const ScenarioConfig& sc) {
    std::ostringstream ss;
    write_scenario(ss, sc);
    detail::write_text_file(path, ss.str());
}

} // namespace vertiflow
