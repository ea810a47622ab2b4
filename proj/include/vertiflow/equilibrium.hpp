#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "vertiflow/errors.hpp"
#include "vertiflow/linalg.hpp"
#include "vertiflow/lp.hpp"
#include "vertiflow/netmodel.hpp"

// Static traffic equilibria for hybrid networks.  The equilibrium is the
// solution of a capacity-constrained multicommodity flow LP; its dual
// variables are the congestion delays, and the primal-dual pair forms a
// verifiable certificate (conservation, capacities, dual feasibility,
// complementary slackness, zero duality gap).

namespace vertiflow {

/// One named certificate condition with its residual, already normalized by
/// `scale` (so pass == residual <= tolerance).
struct ResidualCheck {
    std::string name;
    double residual = 0.0;  ///< dimensionless, scaled
    double scale = 1.0;     ///< normalization used (diagnostic)
    bool pass = true;
};

struct ResidualReport {
    std::vector<ResidualCheck> checks;
    double tolerance = 0.0;

    bool all_pass() const noexcept {
        return std::all_of(checks.begin(), checks.end(),
                           [](const ResidualCheck& c) { return c.pass; });
    }
    double max_residual() const noexcept {
        double m = 0.0;
        for (const ResidualCheck& c : checks) m = std::max(m, c.residual);
        return m;
    }
    /// Name of the worst failing check, or empty when all pass.
    std::string first_violation() const {
        const ResidualCheck* worst = nullptr;
        for (const ResidualCheck& c : checks)
            if (!c.pass && (worst == nullptr || c.residual > worst->residual)) worst = &c;
        return worst != nullptr ? worst->name : std::string{};
    }
};

/// A verified static equilibrium: primal flows, dual prices, and the
/// certificate residuals.  `effective_cost` and `total_flow` are derived
/// caches filled by solve_equilibrium so loading metrics need no network.
struct Equilibrium {
    Mat X;  ///< links x destinations flow (trips/hour)
    Mat V;  ///< nodes x destinations potentials (hours)
    Mat U;  ///< links x destinations reduced costs (hours, >= 0)
    std::vector<double> p;  ///< per-link congestion delay (hours, >= 0)
    std::vector<double> q;  ///< per-vertiport delay (hours, >= 0)

    std::vector<double> effective_cost;  ///< c + p + D^T q per link (hours)
    std::vector<double> total_flow;      ///< X * 1 per link (trips/hour)
    double objective = 0.0;              ///< c . X . 1 (free-time cost)
    double loading = 0.0;                ///< sum_k effective_cost_k * total_flow_k
    ResidualReport residuals;
};

struct EquilibriumOptions {
    SolveOptions lp;           ///< solver tolerances (tighter than verify)
    double verify_tol = 1e-6;  ///< certificate residual tolerance
};

namespace detail {

/// Per-vertiport list of incident air links (column indices of the
/// vertiport incidence with a unit entry in that row).
inline std::vector<std::vector<int>> vertiport_links(const IncidenceMatrices& inc) {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(inc.vertiport.rows()));
    for (int k = 0; k < inc.vertiport.cols(); ++k)
        inc.vertiport.for_col(k, [&](int v, double val) {
            if (val != 0.0) out[static_cast<std::size_t>(v)].push_back(k);
        });
    return out;
}

/// delay_k = (D^T q)_k: total vertiport delay charged to each link.
inline std::vector<double> vertiport_charge(const IncidenceMatrices& inc,
                                            const std::vector<double>& q) {
    std::vector<double> charge(static_cast<std::size_t>(inc.vertiport.cols()), 0.0);
    for (int k = 0; k < inc.vertiport.cols(); ++k)
        inc.vertiport.for_col(k, [&](int v, double val) {
            charge[static_cast<std::size_t>(k)] += val * q[static_cast<std::size_t>(v)];
        });
    return charge;
}

inline void check_equilibrium_inputs(const HybridNetwork& net, const IncidenceMatrices& inc,
                                     const DemandTable& demand, const std::vector<double>& g) {
    if (inc.node_link.rows() != net.node_count || inc.node_link.cols() != net.link_count() ||
        inc.vertiport.rows() != net.vertiport_count() || inc.vertiport.cols() != net.link_count())
        throw ValidationError("incidence matrices do not match the network");
    if (demand.demand.rows() != net.node_count ||
        demand.demand.cols() != demand.destination_count())
        throw ValidationError("demand table dimensions do not match the network");
    if (static_cast<int>(g.size()) != net.vertiport_count())
        throw ValidationError("vertiport capacity vector must have one entry per vertiport");
    for (double gv : g)
        if (!(gv >= 0.0) || !std::isfinite(gv))
            throw ValidationError("vertiport capacities must be finite and >= 0");
}

/// Shortest travel time from every node TO `dest` under per-link costs
/// `cbar` (>= 0), by Dijkstra on the reversed graph.  Unreachable nodes get
/// +infinity.
inline std::vector<double> shortest_to(const HybridNetwork& net, const std::vector<double>& cbar,
                                       int dest) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<std::pair<int, double>>> into(
        static_cast<std::size_t>(net.node_count));
    for (int k = 0; k < net.link_count(); ++k) {
        const Link& l = net.links[static_cast<std::size_t>(k)];
        into[static_cast<std::size_t>(l.head)].push_back({l.tail, cbar[static_cast<std::size_t>(k)]});
    }
    std::vector<double> dist(static_cast<std::size_t>(net.node_count), inf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    dist[static_cast<std::size_t>(dest)] = 0.0;
    heap.push({0.0, dest});
    while (!heap.empty()) {
        const auto [d, node] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(node)]) continue;
        for (const auto& [prev, w] : into[static_cast<std::size_t>(node)]) {
            const double nd = d + w;
            if (nd < dist[static_cast<std::size_t>(prev)]) {
                dist[static_cast<std::size_t>(prev)] = nd;
                heap.push({nd, prev});
            }
        }
    }
    return dist;
}

} // namespace detail

/// Assemble the equilibrium LP over vec(X) (destination-major: variable
/// j*n_l + k is the flow of destination j on link k).  Rows in fixed order:
/// per-destination flow conservation equalities, then link capacities, then
/// vertiport throughput limits — so inequality duals map to (p, q).
inline LinearProgram assemble_equilibrium_lp(const HybridNetwork& net,
                                             const IncidenceMatrices& inc,
                                             const DemandTable& demand,
                                             const std::vector<double>& g) {
    detail::check_equilibrium_inputs(net, inc, demand, g);
    const int nl = net.link_count();
    const int nd = demand.destination_count();
    const int nn = net.node_count;
    const int nv = net.vertiport_count();

    LinearProgram lp(nl * nd);
    for (int j = 0; j < nd; ++j) {
        const int dest = demand.destinations[static_cast<std::size_t>(j)];
        for (int k = 0; k < nl; ++k) {
            const int var = j * nl + k;
            lp.set_cost(var, net.links[static_cast<std::size_t>(k)].free_time);
            lp.set_name(var, "x(" + std::to_string(k + 1) + "," +
                                 detail::node_name(dest) + ")");
        }
    }
    for (int j = 0; j < nd; ++j) {
        std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(nn));
        for (int k = 0; k < nl; ++k)
            inc.node_link.for_col(k, [&](int i, double v) {
                rows[static_cast<std::size_t>(i)].push_back({j * nl + k, v});
            });
        for (int i = 0; i < nn; ++i)
            lp.add_eq(std::move(rows[static_cast<std::size_t>(i)]), demand.demand(i, j));
    }
    for (int k = 0; k < nl; ++k) {
        std::vector<std::pair<int, double>> row;
        row.reserve(static_cast<std::size_t>(nd));
        for (int j = 0; j < nd; ++j) row.push_back({j * nl + k, 1.0});
        lp.add_le(std::move(row), net.links[static_cast<std::size_t>(k)].capacity);
    }
    const auto vp_links = detail::vertiport_links(inc);
    for (int v = 0; v < nv; ++v) {
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < nd; ++j)
            for (int k : vp_links[static_cast<std::size_t>(v)]) row.push_back({j * nl + k, 1.0});
        lp.add_le(std::move(row), g[static_cast<std::size_t>(v)]);
    }
    return lp;
}

/// Dual prices refined over the whole optimality set: among all optimal
/// certificates, returns the one minimizing f.p + g.q (the capacity
/// payments), so reported loading is the optimistic value a joint
/// design-and-route optimization would achieve.  U is recomputed from
/// (V, p, q) so the dual-feasibility identity holds exactly.
struct RefinedDuals {
    Mat V;
    Mat U;
    std::vector<double> p;
    std::vector<double> q;
};

inline RefinedDuals refine_duals(const HybridNetwork& net, const IncidenceMatrices& inc,
                                 const DemandTable& demand, const std::vector<double>& g,
                                 double primal_objective, const SolveOptions& opts = {}) {
    detail::check_equilibrium_inputs(net, inc, demand, g);
    const int nl = net.link_count();
    const int nd = demand.destination_count();
    const int nn = net.node_count;
    const int nv = net.vertiport_count();
    const auto c = net.free_times();
    const auto f = net.capacities();
    const auto vp_links = detail::vertiport_links(inc);

    // Joint LP over primal flows and dual prices: both feasibility systems
    // plus the zero-gap equality pin the feasible set to optimal pairs, and
    // the objective picks the duals with the smallest capacity payments.
    const int o_x = 0;
    const int o_v = nl * nd;
    const int o_u = o_v + nn * nd;
    const int o_p = o_u + nl * nd;
    const int o_q = o_p + nl;
    LinearProgram lp(o_q + nv);
    for (int j = 0; j < nd; ++j)
        for (int i = 0; i < nn; ++i) lp.set_bounds(o_v + j * nn + i, -kInf, kInf);
    for (int k = 0; k < nl; ++k) lp.set_cost(o_p + k, f[static_cast<std::size_t>(k)]);
    for (int v = 0; v < nv; ++v) lp.set_cost(o_q + v, g[static_cast<std::size_t>(v)]);

    // Primal side: conservation, link capacities, vertiport throughput.
    for (int j = 0; j < nd; ++j) {
        std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(nn));
        for (int k = 0; k < nl; ++k)
            inc.node_link.for_col(k, [&](int i, double v) {
                rows[static_cast<std::size_t>(i)].push_back({o_x + j * nl + k, v});
            });
        for (int i = 0; i < nn; ++i)
            lp.add_eq(std::move(rows[static_cast<std::size_t>(i)]), demand.demand(i, j));
    }
    for (int k = 0; k < nl; ++k) {
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < nd; ++j) row.push_back({o_x + j * nl + k, 1.0});
        lp.add_le(std::move(row), f[static_cast<std::size_t>(k)]);
    }
    for (int v = 0; v < nv; ++v) {
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < nd; ++j)
            for (int k : vp_links[static_cast<std::size_t>(v)])
                row.push_back({o_x + j * nl + k, 1.0});
        lp.add_le(std::move(row), g[static_cast<std::size_t>(v)]);
    }

    // Dual side: p_k + (D^T q)_k - (E^T V)_{kj} - U_{kj} = -c_k.
    for (int j = 0; j < nd; ++j)
        for (int k = 0; k < nl; ++k) {
            std::vector<std::pair<int, double>> row;
            inc.node_link.for_col(k, [&](int i, double v) {
                row.push_back({o_v + j * nn + i, -v});
            });
            row.push_back({o_u + j * nl + k, -1.0});
            row.push_back({o_p + k, 1.0});
            inc.vertiport.for_col(k, [&](int v, double val) {
                row.push_back({o_q + v, val});
            });
            lp.add_eq(std::move(row), -c[static_cast<std::size_t>(k)]);
        }

    // Zero duality gap: c.X.1 + f.p + g.q - tr(V^T S) = 0.
    {
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < nd; ++j)
            for (int k = 0; k < nl; ++k)
                if (c[static_cast<std::size_t>(k)] != 0.0)
                    row.push_back({o_x + j * nl + k, c[static_cast<std::size_t>(k)]});
        for (int j = 0; j < nd; ++j)
            for (int i = 0; i < nn; ++i)
                if (demand.demand(i, j) != 0.0)
                    row.push_back({o_v + j * nn + i, -demand.demand(i, j)});
        for (int k = 0; k < nl; ++k)
            if (f[static_cast<std::size_t>(k)] != 0.0)
                row.push_back({o_p + k, f[static_cast<std::size_t>(k)]});
        for (int v = 0; v < nv; ++v)
            if (g[static_cast<std::size_t>(v)] != 0.0)
                row.push_back({o_q + v, g[static_cast<std::size_t>(v)]});
        lp.add_eq(std::move(row), 0.0);
    }

    const LPSolution sol = solve_lp(lp, opts);
    if (sol.status == LpStatus::infeasible)
        throw InfeasibleError("demand exceeds network capacity", sol.farkas);
    if (sol.status != LpStatus::optimal)
        throw SolverError(std::string("dual refinement failed: ") + to_string(sol.status));

    // The flow part must reproduce the known optimum; a mismatch means the
    // caller's objective did not come from this instance.
    double flow_cost = 0.0;
    for (int j = 0; j < nd; ++j)
        for (int k = 0; k < nl; ++k)
            flow_cost += c[static_cast<std::size_t>(k)] *
                         sol.x[static_cast<std::size_t>(o_x + j * nl + k)];
    if (std::abs(flow_cost - primal_objective) > 1e-6 * (1.0 + std::abs(primal_objective)))
        throw SolverError("dual refinement disagrees with the primal optimum");

    RefinedDuals out;
    out.V = Mat(nn, nd);
    for (int j = 0; j < nd; ++j)
        for (int i = 0; i < nn; ++i)
            out.V(i, j) = sol.x[static_cast<std::size_t>(o_v + j * nn + i)];
    out.p.assign(static_cast<std::size_t>(nl), 0.0);
    for (int k = 0; k < nl; ++k) out.p[static_cast<std::size_t>(k)] =
        std::max(0.0, sol.x[static_cast<std::size_t>(o_p + k)]);
    out.q.assign(static_cast<std::size_t>(nv), 0.0);
    for (int v = 0; v < nv; ++v) out.q[static_cast<std::size_t>(v)] =
        std::max(0.0, sol.x[static_cast<std::size_t>(o_q + v)]);

    const auto charge = detail::vertiport_charge(inc, out.q);
    out.U = Mat(nl, nd);
    for (int j = 0; j < nd; ++j)
        for (int k = 0; k < nl; ++k) {
            double ev = 0.0;
            inc.node_link.for_col(k, [&](int i, double v) { ev += v * out.V(i, j); });
            out.U(k, j) = c[static_cast<std::size_t>(k)] + out.p[static_cast<std::size_t>(k)] +
                          charge[static_cast<std::size_t>(k)] - ev;
        }
    return out;
}

/// Verify every certificate condition of an equilibrium candidate; pure
/// check, never throws on a failing condition.
inline ResidualReport verify_kkt(const HybridNetwork& net, const IncidenceMatrices& inc,
                                 const DemandTable& demand, const std::vector<double>& g,
                                 const Equilibrium& eq, double tol) {
    detail::check_equilibrium_inputs(net, inc, demand, g);
    const int nl = net.link_count();
    const int nd = demand.destination_count();
    const int nn = net.node_count;
    const int nv = net.vertiport_count();
    if (eq.X.rows() != nl || eq.X.cols() != nd || eq.V.rows() != nn || eq.V.cols() != nd ||
        eq.U.rows() != nl || eq.U.cols() != nd || static_cast<int>(eq.p.size()) != nl ||
        static_cast<int>(eq.q.size()) != nv)
        throw ValidationError("equilibrium fields do not match the network dimensions");

    const auto c = net.free_times();
    const auto f = net.capacities();
    const auto x = eq.X.row_sums();
    const auto throughput = inc.vertiport.multiply(x);
    const auto charge = detail::vertiport_charge(inc, eq.q);

    ResidualReport report;
    report.tolerance = tol;
    const auto add = [&](std::string name, double raw, double scale) {
        const double r = raw / scale;
        report.checks.push_back({std::move(name), r, scale, r <= tol});
    };

    {
        const Mat balance = inc.node_link.multiply(eq.X);
        double raw = 0.0;
        for (int i = 0; i < nn; ++i)
            for (int j = 0; j < nd; ++j)
                raw = std::max(raw, std::abs(balance(i, j) - demand.demand(i, j)));
        add("flow conservation", raw, 1.0 + demand.demand.max_abs());
    }
    {
        double r = 0.0;
        for (int k = 0; k < nl; ++k)
            r = std::max(r, (x[static_cast<std::size_t>(k)] - f[static_cast<std::size_t>(k)]) /
                                (1.0 + f[static_cast<std::size_t>(k)]));
        add("link capacity", std::max(0.0, r), 1.0);
    }
    {
        double r = 0.0;
        for (int v = 0; v < nv; ++v)
            r = std::max(r, (throughput[static_cast<std::size_t>(v)] -
                             g[static_cast<std::size_t>(v)]) /
                                (1.0 + g[static_cast<std::size_t>(v)]));
        add("vertiport capacity", std::max(0.0, r), 1.0);
    }
    {
        double raw = 0.0;
        double scale = 1.0 + eq.V.max_abs() + eq.U.max_abs();
        for (int k = 0; k < nl; ++k)
            scale = std::max(scale, 1.0 + std::abs(c[static_cast<std::size_t>(k)]) +
                                        eq.p[static_cast<std::size_t>(k)] +
                                        charge[static_cast<std::size_t>(k)]);
        for (int j = 0; j < nd; ++j)
            for (int k = 0; k < nl; ++k) {
                double ev = 0.0;
                inc.node_link.for_col(k, [&](int i, double v) { ev += v * eq.V(i, j); });
                const double want = c[static_cast<std::size_t>(k)] +
                                    eq.p[static_cast<std::size_t>(k)] +
                                    charge[static_cast<std::size_t>(k)];
                raw = std::max(raw, std::abs(want - ev - eq.U(k, j)));
            }
        add("dual feasibility", raw, scale);
    }
    {
        double r = std::max(0.0, -eq.X.min_value() / (1.0 + eq.X.max_abs()));
        r = std::max(r, -eq.U.min_value() / (1.0 + eq.U.max_abs()));
        for (int k = 0; k < nl; ++k)
            r = std::max(r, -eq.p[static_cast<std::size_t>(k)] /
                                (1.0 + max_abs(eq.p)));
        for (int v = 0; v < nv; ++v)
            r = std::max(r, -eq.q[static_cast<std::size_t>(v)] /
                                (1.0 + max_abs(eq.q)));
        add("nonnegativity", std::max(0.0, r), 1.0);
    }
    double objective = 0.0;
    for (int k = 0; k < nl; ++k)
        objective += c[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
    {
        double raw = 0.0;
        for (int j = 0; j < nd; ++j)
            for (int k = 0; k < nl; ++k) raw += eq.X(k, j) * eq.U(k, j);
        add("flow complementarity", std::abs(raw), 1.0 + std::abs(objective));
    }
    const double fp = dot(f, eq.p);
    const double gq = dot(g, eq.q);
    add("link price complementarity", std::abs(dot(eq.p, x) - fp), 1.0 + std::abs(fp));
    add("vertiport price complementarity", std::abs(dot(eq.q, throughput) - gq),
        1.0 + std::abs(gq));
    {
        double trvs = 0.0;
        for (int i = 0; i < nn; ++i)
            for (int j = 0; j < nd; ++j) trvs += eq.V(i, j) * demand.demand(i, j);
        add("duality gap", std::abs(objective + fp + gq - trvs), 1.0 + std::abs(trvs));
    }
    return report;
}

/// One origin-destination equilibrium-route check.
struct WardropEntry {
    int origin = 0;       ///< 0-based node
    int destination = 0;  ///< 0-based node
    double shortest_cost = 0.0;         ///< min route time under c + p + D^T q
    double potential_difference = 0.0;  ///< V(origin) - V(destination)
    bool reachable = true;
    bool pass = true;
};

struct WardropReport {
    std::vector<WardropEntry> entries;
    double max_route_gap = 0.0;          ///< scaled |shortest - potential diff|
    double max_used_reduced_cost = 0.0;  ///< max U over links carrying flow
    bool pass = true;
};

/// Check that every positive-demand OD pair travels at the minimum
/// effective cost: shortest-path cost equals the potential difference, and
/// links carrying flow have (near-)zero reduced cost.
inline WardropReport verify_wardrop(const HybridNetwork& net, const IncidenceMatrices& inc,
                                    const DemandTable& demand, const Equilibrium& eq,
                                    double tol) {
    const int nl = net.link_count();
    const int nd = demand.destination_count();
    const auto c = net.free_times();
    const auto charge = detail::vertiport_charge(inc, eq.q);
    std::vector<double> cbar(static_cast<std::size_t>(nl), 0.0);
    for (int k = 0; k < nl; ++k)
        cbar[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k)] +
                                            eq.p[static_cast<std::size_t>(k)] +
                                            charge[static_cast<std::size_t>(k)];

    WardropReport report;
    for (int j = 0; j < nd; ++j) {
        const int dest = demand.destinations[static_cast<std::size_t>(j)];
        const auto dist = detail::shortest_to(net, cbar, dest);
        for (int i = 0; i < net.node_count; ++i) {
            if (!(demand.demand(i, j) > 0.0)) continue;
            WardropEntry e;
            e.origin = i;
            e.destination = dest;
            e.shortest_cost = dist[static_cast<std::size_t>(i)];
            e.potential_difference = eq.V(i, j) - eq.V(dest, j);
            e.reachable = std::isfinite(e.shortest_cost);
            if (e.reachable) {
                const double gap = std::abs(e.shortest_cost - e.potential_difference) /
                                   (1.0 + std::abs(e.shortest_cost));
                report.max_route_gap = std::max(report.max_route_gap, gap);
                e.pass = gap <= tol;
            } else {
                e.pass = false;
            }
            report.entries.push_back(e);
        }
        for (int k = 0; k < nl; ++k)
            if (eq.X(k, j) > tol)
                report.max_used_reduced_cost =
                    std::max(report.max_used_reduced_cost, eq.U(k, j));
    }
    report.pass = report.max_used_reduced_cost <= tol &&
                  std::all_of(report.entries.begin(), report.entries.end(),
                              [](const WardropEntry& e) { return e.pass; });
    return report;
}

/// Total network loading: congested travel time paid per unit time,
/// sum_k (c + p + D^T q)_k (X 1)_k.
inline double network_loading(const Equilibrium& eq) {
    return dot(eq.effective_cost, eq.total_flow);
}

/// The k-th summand of the network loading.
inline double link_loading(const Equilibrium& eq, int k) {
    return eq.effective_cost[static_cast<std::size_t>(k)] *
           eq.total_flow[static_cast<std::size_t>(k)];
}

/// Solve for a verified equilibrium: route flows at minimum total free time
/// subject to capacities, refine the dual prices over the optimality set,
/// and attach the certificate residuals.
inline Equilibrium solve_equilibrium(const HybridNetwork& net, const IncidenceMatrices& inc,
                                     const DemandTable& demand, const std::vector<double>& g,
                                     const EquilibriumOptions& opts = {}) {
    LinearProgram lp = assemble_equilibrium_lp(net, inc, demand, g);
    const LPSolution sol = solve_lp(lp, opts.lp);
    if (sol.status == LpStatus::infeasible)
        throw InfeasibleError("demand exceeds network capacity", sol.farkas);
    if (sol.status == LpStatus::unbounded)
        throw SolverError("equilibrium program is unbounded; travel times must be >= 0");
    if (sol.status != LpStatus::optimal)
        throw SolverError(std::string("equilibrium solve stopped: ") + to_string(sol.status));

    const int nl = net.link_count();
    const int nd = demand.destination_count();
    Equilibrium eq;
    eq.X = Mat(nl, nd);
    for (int j = 0; j < nd; ++j)
        for (int k = 0; k < nl; ++k) eq.X(k, j) = sol.x[static_cast<std::size_t>(j * nl + k)];

    RefinedDuals duals = refine_duals(net, inc, demand, g, sol.objective, opts.lp);
    eq.V = std::move(duals.V);
    eq.U = std::move(duals.U);
    eq.p = std::move(duals.p);
    eq.q = std::move(duals.q);

    const auto c = net.free_times();
    const auto charge = detail::vertiport_charge(inc, eq.q);
    eq.total_flow = eq.X.row_sums();
    eq.effective_cost.assign(static_cast<std::size_t>(nl), 0.0);
    for (int k = 0; k < nl; ++k)
        eq.effective_cost[static_cast<std::size_t>(k)] =
            c[static_cast<std::size_t>(k)] + eq.p[static_cast<std::size_t>(k)] +
            charge[static_cast<std::size_t>(k)];
    eq.objective = dot(c, eq.total_flow);
    eq.loading = network_loading(eq);
    eq.residuals = verify_kkt(net, inc, demand, g, eq, opts.verify_tol);
    return eq;
}

} // namespace vertiflow
