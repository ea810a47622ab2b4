#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vertiflow/errors.hpp"
#include "vertiflow/linalg.hpp"

// Network model for hybrid air-ground transportation networks: a directed
// ground road graph plus air links between vertiport nodes.  All node and
// link indices are 0-based in memory; file formats and diagnostics use the
// conventional 1-based ids, converted at the parse/print boundary only.

namespace vertiflow {

enum class LinkKind { ground, air };

struct Link {
    int tail = 0;               ///< 0-based origin node
    int head = 0;               ///< 0-based target node
    LinkKind kind = LinkKind::ground;
    double free_time = 0.0;     ///< uncongested travel time (hours)
    double capacity = 0.0;      ///< max flow rate (trips/hour), > 0
};

/// Planar node positions, indexed by 0-based node id.
struct NodeCoords {
    std::vector<double> x;
    std::vector<double> y;

    int size() const noexcept { return static_cast<int>(x.size()); }
    double distance(int a, int b) const {
        const double dx = x[static_cast<std::size_t>(a)] - x[static_cast<std::size_t>(b)];
        const double dy = y[static_cast<std::size_t>(a)] - y[static_cast<std::size_t>(b)];
        return std::hypot(dx, dy);
    }
};

/// Directed hybrid network.  Links are stored ground-first, then air; air
/// link endpoints must both be vertiport nodes.
struct HybridNetwork {
    int node_count = 0;
    std::vector<Link> links;
    std::vector<int> vertiports;   ///< 0-based node ids, distinct, file order

    int link_count() const noexcept { return static_cast<int>(links.size()); }
    int air_count() const noexcept {
        return static_cast<int>(std::count_if(links.begin(), links.end(), [](const Link& l) {
            return l.kind == LinkKind::air;
        }));
    }
    int ground_count() const noexcept { return link_count() - air_count(); }
    int vertiport_count() const noexcept { return static_cast<int>(vertiports.size()); }

    /// Row of the vertiport incidence for a node, or -1 if not a vertiport.
    int vertiport_row(int node) const noexcept {
        for (int i = 0; i < vertiport_count(); ++i)
            if (vertiports[static_cast<std::size_t>(i)] == node) return i;
        return -1;
    }

    std::vector<double> free_times() const {
        std::vector<double> c;
        c.reserve(links.size());
        for (const Link& l : links) c.push_back(l.free_time);
        return c;
    }

    std::vector<double> capacities() const {
        std::vector<double> f;
        f.reserve(links.size());
        for (const Link& l : links) f.push_back(l.capacity);
        return f;
    }
};

/// Node-link incidence (+1 tail, -1 head per column) and the vertiport-air
/// incidence (row i, column k is 1 iff air link k touches vertiport i).
struct IncidenceMatrices {
    SparseMat node_link;    ///< node_count x link_count, signed
    SparseMat vertiport;    ///< vertiport_count x link_count, 0/1
};

/// Balanced demand: column j carries the flow bound for destination
/// node `destinations[j]` — positive entries at origins, and the negative
/// column total at the destination row, so every column sums to zero.
struct DemandTable {
    std::vector<int> destinations;  ///< 0-based destination nodes, distinct
    Mat demand;                     ///< node_count x destinations.size()

    int destination_count() const noexcept { return static_cast<int>(destinations.size()); }
};

/// One origin-destination demand rate.
struct TripDemand {
    int origin = 0;        ///< 0-based
    int destination = 0;   ///< 0-based
    double rate = 0.0;     ///< trips/hour, >= 0
};

struct AirLinkParams {
    double speed = 150.0;    ///< distance units per hour
    double capacity = 80.0;  ///< trips/hour per air link
};

/// Outcome of checking one named feasibility condition.
struct FlowCheck {
    std::string name;
    double residual = 0.0;
    bool pass = true;
};

struct ValidationReport {
    std::vector<FlowCheck> checks;
    double tolerance = 0.0;

    bool all_pass() const noexcept {
        return std::all_of(checks.begin(), checks.end(), [](const FlowCheck& c) { return c.pass; });
    }
    double max_residual() const noexcept {
        double m = 0.0;
        for (const FlowCheck& c : checks) m = std::max(m, c.residual);
        return m;
    }
    /// Name of the worst failing check, or empty when all pass.
    std::string first_violation() const {
        const FlowCheck* worst = nullptr;
        for (const FlowCheck& c : checks)
            if (!c.pass && (worst == nullptr || c.residual > worst->residual)) worst = &c;
        return worst != nullptr ? worst->name : std::string{};
    }
};

namespace detail {

inline std::string node_name(int node0) { return std::to_string(node0 + 1); }

} // namespace detail

/// Check every structural invariant of a network; throws ValidationError
/// naming the offending link/node on the first violation.
inline void validate_network(const HybridNetwork& net) {
    if (net.node_count < 1) throw ValidationError("network must have at least one node");
    bool seen_air = false;
    for (std::size_t k = 0; k < net.links.size(); ++k) {
        const Link& l = net.links[k];
        const std::string where = "link " + std::to_string(k + 1);
        if (l.tail < 0 || l.tail >= net.node_count || l.head < 0 || l.head >= net.node_count)
            throw ValidationError(where + ": endpoint outside node range 1.." +
                                  std::to_string(net.node_count));
        if (l.tail == l.head)
            throw ValidationError(where + ": self-loop at node " + detail::node_name(l.tail));
        if (!(l.free_time >= 0.0) || !std::isfinite(l.free_time))
            throw ValidationError(where + ": free-flow time must be finite and >= 0");
        if (!(l.capacity > 0.0) || !std::isfinite(l.capacity))
            throw ValidationError(where + ": capacity must be finite and > 0");
        if (l.kind == LinkKind::air) {
            seen_air = true;
        } else if (seen_air) {
            throw ValidationError(where + ": ground links must precede air links");
        }
    }
    std::vector<int> seen;
    for (int v : net.vertiports) {
        if (v < 0 || v >= net.node_count)
            throw ValidationError("vertiport node " + detail::node_name(v) + " outside node range");
        if (std::find(seen.begin(), seen.end(), v) != seen.end())
            throw ValidationError("vertiport node " + detail::node_name(v) + " listed twice");
        seen.push_back(v);
    }
    for (std::size_t k = 0; k < net.links.size(); ++k) {
        const Link& l = net.links[k];
        if (l.kind != LinkKind::air) continue;
        if (net.vertiport_row(l.tail) < 0 || net.vertiport_row(l.head) < 0)
            throw ValidationError("air link " + std::to_string(k + 1) + " (" +
                                  detail::node_name(l.tail) + " -> " + detail::node_name(l.head) +
                                  ") must connect vertiport nodes");
    }
}

/// Build the signed node-link incidence and the vertiport-air incidence.
/// Every column of the node-link matrix sums to zero (+1 tail, -1 head);
/// every air column of the vertiport matrix has exactly two unit entries.
inline IncidenceMatrices build_incidence(const HybridNetwork& net) {
    validate_network(net);
    std::vector<Triplet> e;
    std::vector<Triplet> d;
    e.reserve(net.links.size() * 2);
    for (int k = 0; k < net.link_count(); ++k) {
        const Link& l = net.links[static_cast<std::size_t>(k)];
        e.push_back({l.tail, k, +1.0});
        e.push_back({l.head, k, -1.0});
        if (l.kind == LinkKind::air) {
            d.push_back({net.vertiport_row(l.tail), k, 1.0});
            d.push_back({net.vertiport_row(l.head), k, 1.0});
        }
    }
    IncidenceMatrices inc;
    inc.node_link = SparseMat::from_triplets(net.node_count, net.link_count(), std::move(e));
    inc.vertiport = SparseMat::from_triplets(net.vertiport_count(), net.link_count(), std::move(d));
    return inc;
}

/// Aggregate per-OD trip rates into a balanced demand table over the given
/// destination columns.  Requires each trip's destination to be listed,
/// nonnegative rates, and origin != destination.
inline DemandTable balance_demand(const std::vector<TripDemand>& trips,
                                  const std::vector<int>& destinations, int node_count) {
    DemandTable table;
    table.destinations = destinations;
    {
        std::vector<int> seen;
        for (int d : destinations) {
            if (d < 0 || d >= node_count)
                throw ValidationError("destination node " + detail::node_name(d) +
                                      " outside node range");
            if (std::find(seen.begin(), seen.end(), d) != seen.end())
                throw ValidationError("destination node " + detail::node_name(d) + " listed twice");
            seen.push_back(d);
        }
    }
    table.demand = Mat(node_count, static_cast<int>(destinations.size()));
    for (const TripDemand& t : trips) {
        if (t.origin < 0 || t.origin >= node_count)
            throw ValidationError("trip origin " + detail::node_name(t.origin) +
                                  " outside node range");
        if (t.origin == t.destination)
            throw ValidationError("trip from node " + detail::node_name(t.origin) +
                                  " to itself is not allowed");
        if (!(t.rate >= 0.0) || !std::isfinite(t.rate))
            throw ValidationError("trip rate for " + detail::node_name(t.origin) + " -> " +
                                  detail::node_name(t.destination) +
                                  " must be finite and >= 0");
        const auto it = std::find(destinations.begin(), destinations.end(), t.destination);
        if (it == destinations.end())
            throw ValidationError("trip destination " + detail::node_name(t.destination) +
                                  " is not a listed destination");
        const int j = static_cast<int>(it - destinations.begin());
        table.demand(t.origin, j) += t.rate;
    }
    for (int j = 0; j < table.destination_count(); ++j) {
        const int dest = destinations[static_cast<std::size_t>(j)];
        table.demand(dest, j) = 0.0;
        table.demand(dest, j) = -table.demand.col_sum(j);
    }
    return table;
}

/// Median of the n*(n-1)/2 pairwise planar distances between all nodes
/// (average of the two middle values for an even count).
inline double median_pairwise_distance(const NodeCoords& coords) {
    const int n = coords.size();
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) d.push_back(coords.distance(a, b));
    if (d.empty()) return 0.0;
    std::sort(d.begin(), d.end());
    const std::size_t m = d.size();
    if (m % 2 == 1) return d[m / 2];
    return 0.5 * (d[m / 2 - 1] + d[m / 2]);
}

/// Propose air links between every ordered vertiport pair whose planar
/// distance exceeds the median pairwise distance of the whole node set.
/// Free-flow time is distance/speed; capacity comes from the params.
/// Fewer than two vertiports yields no links.
inline std::vector<Link> generate_air_links(const HybridNetwork& ground_net,
                                            const std::vector<int>& vertiport_nodes,
                                            const NodeCoords& coords,
                                            const AirLinkParams& params = {}) {
    if (coords.size() != ground_net.node_count)
        throw ValidationError("coordinate table covers " + std::to_string(coords.size()) +
                              " nodes, network has " + std::to_string(ground_net.node_count));
    if (!(params.speed > 0.0) || !(params.capacity > 0.0))
        throw ValidationError("air link speed and capacity must be > 0");
    for (int v : vertiport_nodes)
        if (v < 0 || v >= ground_net.node_count)
            throw ValidationError("vertiport node " + detail::node_name(v) + " outside node range");
    std::vector<Link> out;
    if (vertiport_nodes.size() < 2) return out;
    const double median = median_pairwise_distance(coords);
    for (std::size_t i = 0; i < vertiport_nodes.size(); ++i) {
        for (std::size_t j = 0; j < vertiport_nodes.size(); ++j) {
            if (i == j) continue;
            const int a = vertiport_nodes[i];
            const int b = vertiport_nodes[j];
            if (a == b) continue;
            const double dist = coords.distance(a, b);
            if (dist > median)
                out.push_back({a, b, LinkKind::air, dist / params.speed, params.capacity});
        }
    }
    return out;
}

/// Append air links to a ground-only network, registering the vertiports.
inline HybridNetwork with_air_links(const HybridNetwork& ground_net,
                                    const std::vector<int>& vertiport_nodes,
                                    const std::vector<Link>& air_links) {
    HybridNetwork net = ground_net;
    net.vertiports = vertiport_nodes;
    for (Link l : air_links) {
        l.kind = LinkKind::air;
        net.links.push_back(l);
    }
    validate_network(net);
    return net;
}

/// Check a candidate flow against the four feasibility conditions of the
/// model: flow conservation, nonnegativity, link capacity, and vertiport
/// throughput capacity.  Purely diagnostic; never throws on infeasibility.
inline ValidationReport validate_flow(const HybridNetwork& net, const IncidenceMatrices& inc,
                                      const Mat& flow, const DemandTable& demand,
                                      const std::vector<double>& vertiport_capacity,
                                      double tolerance) {
    if (flow.rows() != net.link_count() || flow.cols() != demand.destination_count())
        throw ValidationError("flow matrix must be links x destinations");
    if (static_cast<int>(vertiport_capacity.size()) != net.vertiport_count())
        throw ValidationError("vertiport capacity vector must have one entry per vertiport");
    if (demand.demand.rows() != net.node_count)
        throw ValidationError("demand table node count does not match network");

    ValidationReport report;
    report.tolerance = tolerance;
    const auto check = [&](std::string name, double residual) {
        report.checks.push_back({std::move(name), residual, residual <= tolerance});
    };

    const Mat balance = inc.node_link.multiply(flow);
    double conservation = 0.0;
    for (int i = 0; i < balance.rows(); ++i)
        for (int j = 0; j < balance.cols(); ++j)
            conservation = std::max(conservation, std::abs(balance(i, j) - demand.demand(i, j)));
    check("flow conservation", conservation);

    check("flow nonnegativity", std::max(0.0, -flow.min_value()));

    const std::vector<double> totals = flow.row_sums();
    double link_excess = 0.0;
    for (int k = 0; k < net.link_count(); ++k)
        link_excess = std::max(link_excess, totals[static_cast<std::size_t>(k)] -
                                                net.links[static_cast<std::size_t>(k)].capacity);
    check("link capacity", std::max(0.0, link_excess));

    const std::vector<double> throughput = inc.vertiport.multiply(totals);
    double vert_excess = 0.0;
    for (int i = 0; i < net.vertiport_count(); ++i)
        vert_excess = std::max(vert_excess, throughput[static_cast<std::size_t>(i)] -
                                                vertiport_capacity[static_cast<std::size_t>(i)]);
    check("vertiport capacity", std::max(0.0, vert_excess));

    return report;
}

} // namespace vertiflow
