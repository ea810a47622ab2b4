#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "vertiflow/equilibrium.hpp"
#include "vertiflow/errors.hpp"
#include "vertiflow/linalg.hpp"
#include "vertiflow/lp.hpp"
#include "vertiflow/mbp.hpp"
#include "vertiflow/netmodel.hpp"

// Vertiport selection: pick a capacity option per candidate vertiport (or
// none) to minimize network loading plus installation cost, subject to a
// budget and logical side constraints.  Solved three ways that must agree:
// an exact mixed-binary program whose constraints embed the equilibrium
// optimality certificate, an exhaustive enumeration over feasible
// selections, and a knapsack-style value heuristic used as a baseline.
//
// Binary layout: the selection matrix B (candidates x options) is flattened
// row-major, slot s = i*n_c + j.  Logical constraints, enumeration order,
// and the solver's binary list all use this order.

namespace vertiflow {

/// A candidate-by-option 0/1 matrix; row i picks at most one capacity
/// option for vertiport i.
using SelectionMatrix = Mat;

struct SelectionProblem {
    HybridNetwork net;        ///< hybrid network with all candidate air links
    IncidenceMatrices inc;
    DemandTable demand;
    Mat G;                    ///< candidates x options capacities, rows strictly increasing
    Mat K;                    ///< candidates x options installation costs, >= 0
    Mat logical_A;            ///< extra rows over vec(B), row-major
    std::vector<double> logical_b;
    double gamma = 0.0;       ///< installation budget
    double omega = 0.0;       ///< cost weight in the combined objective
    double mu = 0.0;          ///< big-M override; 0 selects the computed bound

    int candidate_count() const noexcept { return G.rows(); }
    int option_count() const noexcept { return G.cols(); }
    int binary_count() const noexcept { return G.rows() * G.cols(); }
};

/// Resolved big-M value with its provenance.
struct BigM {
    double mu = 0.0;        ///< value to use in the program
    double computed = 0.0;  ///< bound from the ground-only potentials
    bool overridden = false;
    bool below_bound = false;  ///< override is smaller than the computed bound
};

struct SelectionSolution {
    Mat B;                  ///< candidates x options, exact 0/1
    std::vector<double> g;  ///< induced vertiport capacities (G o B) 1
    Mat Y;                  ///< linearization values, Y_ij = G_ij q_i B_ij
    Mat X;                  ///< equilibrium certificate at the optimum
    Mat V;
    Mat U;
    std::vector<double> p;
    std::vector<double> q;
    double loading = 0.0;            ///< c.X.1 + f.p + 1'Y1
    double installation_cost = 0.0;  ///< 1'(K o B)1
    double combined_objective = 0.0; ///< loading + omega * installation_cost
    double rel_gap = 0.0;
    long nodes = 0;
    double wall_seconds = 0.0;
    BigM big_m;
    int mu_retries = 0;
};

struct SelectionOptions {
    MbpOptions mbp;
    double verify_tol = 1e-6;
    int max_mu_retries = 3;
    double mu_margin = 1e-4;  ///< relative closeness to mu that flags it too small
    int oracle_cap = 4096;    ///< max feasible selections the oracle will enumerate
};

inline void validate_selection_problem(const SelectionProblem& p) {
    validate_network(p.net);
    const int nv = p.net.vertiport_count();
    const int nc = p.G.cols();
    if (p.inc.node_link.rows() != p.net.node_count ||
        p.inc.node_link.cols() != p.net.link_count() || p.inc.vertiport.rows() != nv ||
        p.inc.vertiport.cols() != p.net.link_count())
        throw ValidationError("incidence matrices do not match the network");
    if (p.demand.demand.rows() != p.net.node_count)
        throw ValidationError("demand table does not match the network");
    if (p.G.rows() != nv)
        throw ValidationError("capacity option matrix must have one row per vertiport");
    if (p.K.rows() != p.G.rows() || p.K.cols() != p.G.cols())
        throw ValidationError("cost matrix must match the capacity option matrix");
    for (int i = 0; i < p.G.rows(); ++i)
        for (int j = 0; j < nc; ++j) {
            if (!(p.G(i, j) > 0.0) || !std::isfinite(p.G(i, j)))
                throw ValidationError("capacity options must be finite and > 0");
            if (j > 0 && !(p.G(i, j) > p.G(i, j - 1)))
                throw ValidationError("capacity options must be strictly increasing per row");
            if (!(p.K(i, j) >= 0.0) || !std::isfinite(p.K(i, j)))
                throw ValidationError("installation costs must be finite and >= 0");
        }
    const int nb = p.binary_count();
    if (p.logical_A.rows() != static_cast<int>(p.logical_b.size()))
        throw ValidationError("logical constraint rows and right-hand sides differ in count");
    if (p.logical_A.rows() > 0 && p.logical_A.cols() != nb)
        throw ValidationError("logical constraint matrix must have one column per binary");
    for (int r = 0; r < p.logical_A.rows(); ++r) {
        for (int s = 0; s < p.logical_A.cols(); ++s)
            if (!std::isfinite(p.logical_A(r, s)))
                throw ValidationError("logical constraint coefficients must be finite");
        if (!std::isfinite(p.logical_b[static_cast<std::size_t>(r)]))
            throw ValidationError("logical constraint bounds must be finite");
    }
    if (!(p.gamma >= 0.0) || !std::isfinite(p.gamma))
        throw ValidationError("budget must be finite and >= 0");
    if (!(p.omega >= 0.0) || !std::isfinite(p.omega))
        throw ValidationError("cost weight must be finite and >= 0");
    if (!(p.mu >= 0.0) || !std::isfinite(p.mu))
        throw ValidationError("big-M override must be finite and >= 0");
}

/// Induced vertiport capacities g_i = sum_j G_ij B_ij.  Requires B binary
/// with at most one selection per row.
inline std::vector<double> capacity_from_selection(const Mat& B, const Mat& G) {
    if (B.rows() != G.rows() || B.cols() != G.cols())
        throw ValidationError("selection matrix must match the capacity option matrix");
    std::vector<double> g(static_cast<std::size_t>(B.rows()), 0.0);
    for (int i = 0; i < B.rows(); ++i) {
        double row = 0.0;
        for (int j = 0; j < B.cols(); ++j) {
            const double b = B(i, j);
            if (b != 0.0 && b != 1.0)
                throw ValidationError("selection matrix entries must be 0 or 1");
            row += b;
            g[static_cast<std::size_t>(i)] += G(i, j) * b;
        }
        if (row > 1.0)
            throw ValidationError("selection matrix row " + std::to_string(i + 1) +
                                  " picks more than one option");
    }
    return g;
}

/// Total installation cost 1'(K o B)1.
inline double selection_cost(const Mat& B, const Mat& K) {
    double c = 0.0;
    for (int i = 0; i < B.rows(); ++i)
        for (int j = 0; j < B.cols(); ++j) c += K(i, j) * B(i, j);
    return c;
}

namespace detail {

inline bool satisfies_side_constraints(const SelectionProblem& p, const Mat& B) {
    if (selection_cost(B, p.K) > p.gamma + 1e-9) return false;
    for (int r = 0; r < p.logical_A.rows(); ++r) {
        double lhs = 0.0;
        for (int i = 0; i < B.rows(); ++i)
            for (int j = 0; j < B.cols(); ++j) lhs += p.logical_A(r, i * B.cols() + j) * B(i, j);
        if (lhs > p.logical_b[static_cast<std::size_t>(r)] + 1e-9) return false;
    }
    return true;
}

template <typename Fn>
void enumerate_rows(const SelectionProblem& p, Mat& B, int row, double cost_so_far, Fn&& fn) {
    const int nv = p.candidate_count();
    const int nc = p.option_count();
    if (row == nv) {
        if (satisfies_side_constraints(p, B)) fn(static_cast<const Mat&>(B));
        return;
    }
    // Lexicographic order of vec(B): the empty row first, then single picks
    // from the last option column to the first (0..01 < 0..10 < ... < 10..0).
    enumerate_rows(p, B, row + 1, cost_so_far, fn);
    for (int j = nc - 1; j >= 0; --j) {
        const double cost = cost_so_far + p.K(row, j);
        if (cost > p.gamma + 1e-9) continue;  // costs are nonnegative: prune
        B(row, j) = 1.0;
        enumerate_rows(p, B, row + 1, cost, fn);
        B(row, j) = 0.0;
    }
}

} // namespace detail

/// Visit every selection matrix satisfying the row-sum, budget, and logical
/// constraints, in lexicographic vec(B) order (row-major).
template <typename Fn>
void enumerate_feasible_selections(const SelectionProblem& p, Fn&& fn) {
    validate_selection_problem(p);
    Mat B(p.candidate_count(), p.option_count());
    detail::enumerate_rows(p, B, 0, 0.0, fn);
}

/// Resolve the big-M constant: an upper bound on any vertiport delay times
/// the largest capacity option, with a 2x safety factor.  The delay bound
/// is the widest per-destination potential spread of the ground-only
/// (all-vertiports-closed) equilibrium — a charge above that spread exceeds
/// any possible travel-time saving, so no equilibrium needs a larger dual.
/// Solving the closed equilibrium also certifies that the ground network
/// alone can carry the demand.  A positive `mu` on the problem overrides
/// the computation (flagged when below the bound).  Keeping the factor
/// small matters: the linearization relaxation loosens linearly with mu,
/// and branch-and-bound node counts grow with it.
inline BigM choose_big_m(const SelectionProblem& p, const EquilibriumOptions& opts = {}) {
    validate_selection_problem(p);
    const std::vector<double> closed(static_cast<std::size_t>(p.net.vertiport_count()), 0.0);
    const Equilibrium ground = solve_equilibrium(p.net, p.inc, p.demand, closed, opts);
    double spread = 0.0;
    for (int j = 0; j < ground.V.cols(); ++j) {
        double lo = 0.0, hi = 0.0;
        for (int i = 0; i < ground.V.rows(); ++i) {
            const double v = ground.V(i, j);
            if (i == 0) {
                lo = hi = v;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        spread = std::max(spread, hi - lo);
    }
    double max_g = 0.0;
    for (int i = 0; i < p.G.rows(); ++i)
        for (int j = 0; j < p.G.cols(); ++j) max_g = std::max(max_g, p.G(i, j));

    BigM out;
    out.computed = 2.0 * spread * max_g;
    if (out.computed <= 0.0) out.computed = 1.0;  // degenerate zero-demand case
    if (p.mu > 0.0) {
        out.mu = p.mu;
        out.overridden = true;
        out.below_bound = p.mu < out.computed;
    } else {
        out.mu = out.computed;
    }
    return out;
}

/// Build the exact selection program.  Continuous blocks in order: vec(X),
/// vec(U), vec(V) (destination-major), p, q, vec(Y) (row-major); then the
/// binaries vec(B) (row-major).  Constraints: flow system with selectable
/// vertiport capacity, dual feasibility, the zero-gap equality written with
/// 1'Y1 in place of g.q, the linearization sandwich with the resolved
/// big-M, row-sum/budget/logical rows on B.  Requires p.mu > 0.
inline MixedBinaryProgram assemble_selection_milp(const SelectionProblem& p) {
    validate_selection_problem(p);
    if (!(p.mu > 0.0))
        throw ValidationError("big-M must be resolved before assembling the program");
    const int nl = p.net.link_count();
    const int nn = p.net.node_count;
    const int nd = p.demand.destination_count();
    const int nv = p.candidate_count();
    const int nc = p.option_count();
    const int nb = p.binary_count();
    const auto c = p.net.free_times();
    const auto f = p.net.capacities();
    const auto vp_links = detail::vertiport_links(p.inc);
    const double mu = p.mu;

    const int o_x = 0;
    const int o_u = nl * nd;
    const int o_v = 2 * nl * nd;
    const int o_p = o_v + nn * nd;
    const int o_q = o_p + nl;
    const int o_y = o_q + nv;
    const int o_b = o_y + nb;

    MixedBinaryProgram prob;
    prob.lp = LinearProgram(o_b + nb);
    LinearProgram& lp = prob.lp;
    for (int s = 0; s < nb; ++s) prob.binaries.push_back(o_b + s);

    for (int j = 0; j < nd; ++j)
        for (int k = 0; k < nl; ++k) lp.set_cost(o_x + j * nl + k, c[static_cast<std::size_t>(k)]);
    for (int j = 0; j < nd; ++j)
        for (int i = 0; i < nn; ++i) lp.set_bounds(o_v + j * nn + i, -kInf, kInf);
    for (int k = 0; k < nl; ++k) lp.set_cost(o_p + k, f[static_cast<std::size_t>(k)]);
    for (int s = 0; s < nb; ++s) lp.set_cost(o_y + s, 1.0);
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nc; ++j) {
            const int s = i * nc + j;
            lp.set_cost(o_b + s, p.omega * p.K(i, j));
            lp.set_bounds(o_b + s, 0.0, 1.0);
            lp.set_name(o_b + s, "B(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
            lp.set_name(o_y + s, "Y(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
        }

    // Flow conservation per destination and node.
    for (int j = 0; j < nd; ++j) {
        std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(nn));
        for (int k = 0; k < nl; ++k)
            p.inc.node_link.for_col(k, [&](int i, double v) {
                rows[static_cast<std::size_t>(i)].push_back({o_x + j * nl + k, v});
            });
        for (int i = 0; i < nn; ++i)
            lp.add_eq(std::move(rows[static_cast<std::size_t>(i)]), p.demand.demand(i, j));
    }
    // Dual feasibility: p_k + (D^T q)_k - (E^T V)_{kj} - U_{kj} = -c_k.
    for (int j = 0; j < nd; ++j)
        for (int k = 0; k < nl; ++k) {
            std::vector<std::pair<int, double>> row;
            p.inc.node_link.for_col(k, [&](int i, double v) {
                row.push_back({o_v + j * nn + i, -v});
            });
            row.push_back({o_u + j * nl + k, -1.0});
            row.push_back({o_p + k, 1.0});
            p.inc.vertiport.for_col(k, [&](int v, double val) { row.push_back({o_q + v, val}); });
            lp.add_eq(std::move(row), -c[static_cast<std::size_t>(k)]);
        }
    // Zero gap: c.X.1 + f.p + 1'Y1 - tr(V^T S) = 0.
    {
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < nd; ++j)
            for (int k = 0; k < nl; ++k)
                if (c[static_cast<std::size_t>(k)] != 0.0)
                    row.push_back({o_x + j * nl + k, c[static_cast<std::size_t>(k)]});
        for (int j = 0; j < nd; ++j)
            for (int i = 0; i < nn; ++i)
                if (p.demand.demand(i, j) != 0.0)
                    row.push_back({o_v + j * nn + i, -p.demand.demand(i, j)});
        for (int k = 0; k < nl; ++k)
            if (f[static_cast<std::size_t>(k)] != 0.0)
                row.push_back({o_p + k, f[static_cast<std::size_t>(k)]});
        for (int s = 0; s < nb; ++s) row.push_back({o_y + s, 1.0});
        lp.add_eq(std::move(row), 0.0);
    }
    // Link capacities.
    for (int k = 0; k < nl; ++k) {
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < nd; ++j) row.push_back({o_x + j * nl + k, 1.0});
        lp.add_le(std::move(row), f[static_cast<std::size_t>(k)]);
    }
    // Vertiport throughput under the selected capacity: DX1 - (G o B)1 <= 0.
    for (int i = 0; i < nv; ++i) {
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < nd; ++j)
            for (int k : vp_links[static_cast<std::size_t>(i)])
                row.push_back({o_x + j * nl + k, 1.0});
        for (int j = 0; j < nc; ++j) row.push_back({o_b + i * nc + j, -p.G(i, j)});
        lp.add_le(std::move(row), 0.0);
    }
    // Linearization sandwich and caps.  Each entry gets its own constant
    // mu_s = mu * G_ij / max(G): the bound caps the vertiport delay, so an
    // entry with half the capacity needs only half the headroom, and the
    // tighter caps shrink the relaxation.  Rows are scaled by 1/mu_s to keep
    // coefficients near unit size.
    double max_g = 0.0;
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nc; ++j) max_g = std::max(max_g, p.G(i, j));
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nc; ++j) {
            const int s = i * nc + j;
            const double mu_s = mu * p.G(i, j) / max_g;
            lp.add_le({{o_y + s, 1.0}, {o_q + i, -p.G(i, j)}}, 0.0);
            lp.add_le({{o_q + i, p.G(i, j) / mu_s}, {o_y + s, -1.0 / mu_s}, {o_b + s, 1.0}}, 1.0);
            lp.add_le({{o_y + s, 1.0 / mu_s}, {o_b + s, -1.0}}, 0.0);
        }
    // At most one option per vertiport.
    for (int i = 0; i < nv; ++i) {
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < nc; ++j) row.push_back({o_b + i * nc + j, 1.0});
        lp.add_le(std::move(row), 1.0);
    }
    // Budget.
    if (nb > 0) {
        std::vector<std::pair<int, double>> row;
        for (int i = 0; i < nv; ++i)
            for (int j = 0; j < nc; ++j)
                if (p.K(i, j) != 0.0) row.push_back({o_b + i * nc + j, p.K(i, j)});
        lp.add_le(std::move(row), p.gamma);
    }
    // Logical rows A vec(B) <= b.
    for (int r = 0; r < p.logical_A.rows(); ++r) {
        std::vector<std::pair<int, double>> row;
        for (int s = 0; s < nb; ++s)
            if (p.logical_A(r, s) != 0.0) row.push_back({o_b + s, p.logical_A(r, s)});
        lp.add_le(std::move(row), p.logical_b[static_cast<std::size_t>(r)]);
    }
    return prob;
}

namespace detail {

/// Lexicographically smallest binary vector among the optima of `prob`,
/// given one known optimum.  Bits are decided left to right; each candidate
/// zero is certified by a re-solve with the prefix fixed.
inline std::vector<int> lex_min_optimal_bits(const MixedBinaryProgram& prob,
                                             const MbpSolution& first, const MbpOptions& opts) {
    std::vector<int> bits = first.binary_values;
    const double tie = 1e-9 * (1.0 + std::abs(first.objective));
    // Each certifying re-solve only needs to know whether the optimum can be
    // matched with the bit zeroed, so the known optimum is the cutoff.
    MbpOptions trial_opts = opts;
    trial_opts.cutoff = std::min(trial_opts.cutoff, first.objective + tie);
    MixedBinaryProgram fixed = prob;
    for (std::size_t s = 0; s < bits.size(); ++s) {
        const int var = prob.binaries[s];
        if (bits[s] == 0) {  // the running optimum already witnesses a zero
            fixed.lp.set_bounds(var, 0.0, 0.0);
            continue;
        }
        MixedBinaryProgram trial = fixed;
        trial.lp.set_bounds(var, 0.0, 0.0);
        const MbpSolution t = solve_mbp(trial, trial_opts);
        if (t.status == MbpStatus::node_limit)
            throw SolverError("tie refinement hit the node limit");
        if (t.status == MbpStatus::optimal && t.objective <= first.objective + tie) {
            bits = t.binary_values;  // adopt: shares the fixed prefix, bit s is 0
            fixed.lp.set_bounds(var, 0.0, 0.0);
        } else {
            fixed.lp.set_bounds(var, 1.0, 1.0);
        }
    }
    return bits;
}

struct MilpExtract {
    Mat B, Y, X, V, U;
    std::vector<double> p, q, g;
    double loading = 0.0;
    double installation_cost = 0.0;
};

inline MilpExtract extract_selection(const SelectionProblem& p, const std::vector<double>& x,
                                     const std::vector<int>& bits) {
    const int nl = p.net.link_count();
    const int nn = p.net.node_count;
    const int nd = p.demand.destination_count();
    const int nv = p.candidate_count();
    const int nc = p.option_count();
    const int o_x = 0;
    const int o_u = nl * nd;
    const int o_v = 2 * nl * nd;
    const int o_p = o_v + nn * nd;
    const int o_q = o_p + nl;
    const int o_y = o_q + nv;

    MilpExtract out;
    out.B = Mat(nv, nc);
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nc; ++j) out.B(i, j) = bits[static_cast<std::size_t>(i * nc + j)];
    out.g = capacity_from_selection(out.B, p.G);
    out.X = Mat(nl, nd);
    out.U = Mat(nl, nd);
    out.V = Mat(nn, nd);
    for (int j = 0; j < nd; ++j) {
        for (int k = 0; k < nl; ++k) {
            out.X(k, j) = x[static_cast<std::size_t>(o_x + j * nl + k)];
            out.U(k, j) = x[static_cast<std::size_t>(o_u + j * nl + k)];
        }
        for (int i = 0; i < nn; ++i) out.V(i, j) = x[static_cast<std::size_t>(o_v + j * nn + i)];
    }
    out.p.assign(static_cast<std::size_t>(nl), 0.0);
    for (int k = 0; k < nl; ++k)
        out.p[static_cast<std::size_t>(k)] = std::max(0.0, x[static_cast<std::size_t>(o_p + k)]);
    out.q.assign(static_cast<std::size_t>(nv), 0.0);
    for (int v = 0; v < nv; ++v)
        out.q[static_cast<std::size_t>(v)] = std::max(0.0, x[static_cast<std::size_t>(o_q + v)]);
    out.Y = Mat(nv, nc);
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nc; ++j) out.Y(i, j) = x[static_cast<std::size_t>(o_y + i * nc + j)];

    const auto c = p.net.free_times();
    const auto f = p.net.capacities();
    double loading = 0.0;
    for (int j = 0; j < nd; ++j)
        for (int k = 0; k < nl; ++k) loading += c[static_cast<std::size_t>(k)] * out.X(k, j);
    loading += dot(f, out.p);
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nc; ++j) loading += out.Y(i, j);
    out.loading = loading;
    out.installation_cost = selection_cost(out.B, p.K);
    return out;
}

/// True when the big-M looks too small at this solution: some linearization
/// value or priced delay sits against its per-entry cap mu * G_ij / max(G).
inline bool big_m_strained(const SelectionProblem& p, const MilpExtract& e, double mu,
                           double margin) {
    double max_g = 0.0;
    for (int i = 0; i < p.candidate_count(); ++i)
        for (int j = 0; j < p.option_count(); ++j) max_g = std::max(max_g, p.G(i, j));
    for (int i = 0; i < p.candidate_count(); ++i)
        for (int j = 0; j < p.option_count(); ++j) {
            const double cap = max_g > 0.0 ? mu * p.G(i, j) / max_g : mu;
            if (e.B(i, j) > 0.5) {
                if (e.Y(i, j) >= cap * (1.0 - margin)) return true;
            } else {
                if (p.G(i, j) * e.q[static_cast<std::size_t>(i)] >= cap * (1.0 - margin))
                    return true;
            }
        }
    return false;
}

} // namespace detail

inline std::vector<double> demand_value_vector(const DemandTable& demand,
                                               const std::vector<int>& vertiport_nodes);
inline SelectionSolution solve_knapsack(const SelectionProblem& problem,
                                        const std::vector<double>& w,
                                        const SelectionOptions& opts);

/// Solve the selection problem exactly.  Ties among optimal selections are
/// broken toward the lexicographically smallest vec(B).  The big-M is
/// validated post-solve and the solve retried with 10x the value when it
/// binds (or when an under-bound override makes the program infeasible).
/// When the demand-value knapsack heuristic applies, its priced selection
/// seeds the search as a cutoff: the branch-and-bound then only explores
/// subtrees that could beat a known feasible answer.
inline SelectionSolution solve_selection(const SelectionProblem& problem,
                                         const SelectionOptions& opts = {}) {
    const auto start = std::chrono::steady_clock::now();
    validate_selection_problem(problem);
    BigM bm = choose_big_m(problem);  // also certifies ground-only feasibility

    MbpOptions search = opts.mbp;
    try {
        const std::vector<double> w = demand_value_vector(problem.demand, problem.net.vertiports);
        const double hint = solve_knapsack(problem, w, opts).combined_objective;
        // Cushion by more than the LP termination slop: the heuristic value
        // and the search's own evaluation of the same selection may differ
        // by up to the solver tolerance times the objective scale, and an
        // over-tight cutoff would wrongly prune the matching leaf.
        search.cutoff = hint + 1e-5 * (1.0 + std::abs(hint));
    } catch (const std::exception&) {
        // No usable hint: a candidate without demand or no feasible
        // selection.  The search simply runs without a cutoff.
    }

    int retries = 0;
    for (;; ++retries) {
        SelectionProblem cur = problem;
        cur.mu = bm.mu;
        const MixedBinaryProgram prob = assemble_selection_milp(cur);
        const MbpSolution sol = solve_mbp(prob, search);
        if (sol.status == MbpStatus::node_limit)
            throw SolverError("selection search hit the node limit with gap " +
                              std::to_string(sol.rel_gap));
        if (sol.status == MbpStatus::infeasible) {
            if (bm.mu < bm.computed && retries < opts.max_mu_retries) {
                bm.mu *= 10.0;  // an under-bound big-M can strangle the duals
                continue;
            }
            throw InfeasibleError("no selection satisfies the constraints", sol.lp.farkas);
        }

        const std::vector<int> bits = detail::lex_min_optimal_bits(prob, sol, search);
        // Re-solve the continuous part at the final bits for a clean point.
        MixedBinaryProgram fixed = prob;
        for (std::size_t s = 0; s < bits.size(); ++s)
            fixed.lp.set_bounds(prob.binaries[s], bits[s], bits[s]);
        const LPSolution point = solve_lp(fixed.lp, opts.mbp.lp);
        if (point.status != LpStatus::optimal)
            throw SolverError("selection optimum could not be re-evaluated");

        const detail::MilpExtract e = detail::extract_selection(cur, point.x, bits);
        if (detail::big_m_strained(cur, e, bm.mu, opts.mu_margin) &&
            retries < opts.max_mu_retries) {
            bm.mu *= 10.0;
            continue;
        }

        SelectionSolution out;
        out.B = e.B;
        out.g = e.g;
        out.Y = e.Y;
        out.X = e.X;
        out.V = e.V;
        out.U = e.U;
        out.p = e.p;
        out.q = e.q;
        out.loading = e.loading;
        out.installation_cost = e.installation_cost;
        out.combined_objective = e.loading + problem.omega * e.installation_cost;
        out.rel_gap = sol.rel_gap;
        out.nodes = sol.nodes;
        out.big_m = bm;
        out.mu_retries = retries;
        out.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return out;
    }
}

namespace detail {

/// Selection solution assembled from a verified equilibrium at a fixed B.
inline SelectionSolution solution_from_equilibrium(const SelectionProblem& p, const Mat& B,
                                                   const Equilibrium& eq, long nodes) {
    SelectionSolution out;
    out.B = B;
    out.g = capacity_from_selection(B, p.G);
    out.X = eq.X;
    out.V = eq.V;
    out.U = eq.U;
    out.p = eq.p;
    out.q = eq.q;
    out.Y = Mat(p.candidate_count(), p.option_count());
    for (int i = 0; i < p.candidate_count(); ++i)
        for (int j = 0; j < p.option_count(); ++j)
            out.Y(i, j) = p.G(i, j) * eq.q[static_cast<std::size_t>(i)] * B(i, j);
    out.loading = eq.loading;
    out.installation_cost = selection_cost(B, p.K);
    out.combined_objective = out.loading + p.omega * out.installation_cost;
    out.rel_gap = 0.0;
    out.nodes = nodes;
    return out;
}

} // namespace detail

/// Exhaustive reference: evaluate the refined equilibrium at every feasible
/// selection and keep the best combined objective (first in lexicographic
/// order on ties).  Errors out beyond opts.oracle_cap feasible selections.
inline SelectionSolution solve_selection_oracle(const SelectionProblem& problem,
                                                const SelectionOptions& opts = {}) {
    const auto start = std::chrono::steady_clock::now();
    validate_selection_problem(problem);
    {
        const std::vector<double> closed(static_cast<std::size_t>(problem.net.vertiport_count()),
                                         0.0);
        solve_equilibrium(problem.net, problem.inc, problem.demand, closed);
    }

    long count = 0;
    bool have = false;
    double best = 0.0;
    Mat best_B;
    Equilibrium best_eq;
    EquilibriumOptions eq_opts;
    eq_opts.verify_tol = opts.verify_tol;
    enumerate_feasible_selections(problem, [&](const Mat& B) {
        ++count;
        if (count > opts.oracle_cap)
            throw ValidationError("feasible selections exceed the enumeration cap (" +
                                  std::to_string(opts.oracle_cap) +
                                  "); use the exact mixed-binary solver");
        const auto g = capacity_from_selection(B, problem.G);
        const Equilibrium eq = solve_equilibrium(problem.net, problem.inc, problem.demand, g,
                                                 eq_opts);
        const double value = eq.loading + problem.omega * selection_cost(B, problem.K);
        if (!have || value < best - 1e-9 * (1.0 + std::abs(best))) {
            have = true;
            best = value;
            best_B = B;
            best_eq = eq;
        }
    });
    if (!have) throw InfeasibleError("no selection satisfies the constraints", {});

    SelectionSolution out = detail::solution_from_equilibrium(problem, best_B, best_eq, count);
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// Per-candidate demand value: the total demand attracted by the vertiport
/// node, read off the balancing entry of its destination column.
inline std::vector<double> demand_value_vector(const DemandTable& demand,
                                               const std::vector<int>& vertiport_nodes) {
    std::vector<double> w;
    w.reserve(vertiport_nodes.size());
    for (int v : vertiport_nodes) {
        const auto it = std::find(demand.destinations.begin(), demand.destinations.end(), v);
        if (it == demand.destinations.end())
            throw ValidationError("vertiport node " + detail::node_name(v) +
                                  " is not a destination node");
        const int j = static_cast<int>(it - demand.destinations.begin());
        w.push_back(std::abs(demand.demand(v, j)));
    }
    return w;
}

/// Knapsack-style baseline: maximize the capacity value w'(G o B)1 subject
/// to the same selection constraints, then price the chosen selection with
/// a full equilibrium solve so its combined objective is comparable.
inline SelectionSolution solve_knapsack(const SelectionProblem& problem,
                                        const std::vector<double>& w,
                                        const SelectionOptions& opts = {}) {
    const auto start = std::chrono::steady_clock::now();
    validate_selection_problem(problem);
    const int nv = problem.candidate_count();
    const int nc = problem.option_count();
    const int nb = problem.binary_count();
    if (static_cast<int>(w.size()) != nv)
        throw ValidationError("value vector must have one entry per vertiport");
    for (double v : w)
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError("value vector entries must be finite and >= 0");

    MixedBinaryProgram prob;
    prob.lp = LinearProgram(nb);
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nc; ++j) {
            const int s = i * nc + j;
            prob.binaries.push_back(s);
            prob.lp.set_bounds(s, 0.0, 1.0);
            prob.lp.set_cost(s, -w[static_cast<std::size_t>(i)] * problem.G(i, j));
        }
    for (int i = 0; i < nv; ++i) {
        std::vector<std::pair<int, double>> row;
        for (int j = 0; j < nc; ++j) row.push_back({i * nc + j, 1.0});
        prob.lp.add_le(std::move(row), 1.0);
    }
    {
        std::vector<std::pair<int, double>> row;
        for (int i = 0; i < nv; ++i)
            for (int j = 0; j < nc; ++j)
                if (problem.K(i, j) != 0.0) row.push_back({i * nc + j, problem.K(i, j)});
        prob.lp.add_le(std::move(row), problem.gamma);
    }
    for (int r = 0; r < problem.logical_A.rows(); ++r) {
        std::vector<std::pair<int, double>> row;
        for (int s = 0; s < nb; ++s)
            if (problem.logical_A(r, s) != 0.0) row.push_back({s, problem.logical_A(r, s)});
        prob.lp.add_le(std::move(row), problem.logical_b[static_cast<std::size_t>(r)]);
    }

    const MbpSolution sol = solve_mbp(prob, opts.mbp);
    if (sol.status == MbpStatus::infeasible)
        throw InfeasibleError("no selection satisfies the constraints", sol.lp.farkas);
    if (sol.status != MbpStatus::optimal)
        throw SolverError("knapsack baseline hit the node limit");
    const std::vector<int> bits = detail::lex_min_optimal_bits(prob, sol, opts.mbp);

    Mat B(nv, nc);
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nc; ++j) B(i, j) = bits[static_cast<std::size_t>(i * nc + j)];
    EquilibriumOptions eq_opts;
    eq_opts.verify_tol = opts.verify_tol;
    const Equilibrium eq = solve_equilibrium(problem.net, problem.inc, problem.demand,
                                             capacity_from_selection(B, problem.G), eq_opts);
    SelectionSolution out = detail::solution_from_equilibrium(problem, B, eq, sol.nodes);
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

} // namespace vertiflow
