#pragma once

// Sparse linear programming:
//   min c'x   s.t.   A_eq x = b_eq,   A_le x <= b_le,   l <= x <= u
//
// solved by a bounded-variable revised simplex with a sparse LU basis
// factorization, product-form eta updates, partial (block) pricing in a
// fixed deterministic order, and Bland's rule as an anti-cycling fallback
// after a stall.  Feasibility is reached by a composite phase 1 that
// minimizes total bound violation from any starting basis, which also makes
// warm starts after bound changes cheap.  Repeated solves of the same
// instance are bit-identical.
//
// Dual conventions (minimization): equality multipliers y are free-signed,
// inequality multipliers lam are reported >= 0, and reduced costs are
// d = c - A_eq'y + A_le'lam... equivalently d_j = c_j - sum_i y_i A_ij with
// the internal row multiplier y_i = -lam_i on <= rows.  At an optimum
// d_j >= 0 for variables at lower bound and d_j <= 0 at upper bound.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "vertiflow/detail/sparse_lu.hpp"
#include "vertiflow/errors.hpp"

namespace vertiflow {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

struct SolveOptions {
    double feas_tol = 1e-7;    ///< bound / row feasibility tolerance (relative)
    double opt_tol = 1e-7;     ///< reduced-cost optimality tolerance (relative)
    double pivot_tol = 1e-9;   ///< smallest usable pivot magnitude
    long iteration_limit = 1000000;
    int refactor_interval = 64;
    int stall_limit = 500;     ///< non-improving iterations before Bland's rule
    int pricing_block = 0;     ///< candidates scanned per pricing block (0 = auto)
};

/// Restartable basis: one state byte per variable (structurals then row
/// logicals) and the basic variable of every row.
struct BasisSnapshot {
    std::vector<std::uint8_t> states;
    std::vector<int> basis;

    bool empty() const noexcept { return basis.empty(); }
};

struct LPSolution {
    LpStatus status = LpStatus::iteration_limit;
    double objective = 0.0;
    std::vector<double> x;             ///< structural variable values
    std::vector<double> dual_eq;       ///< per equality row, free sign
    std::vector<double> dual_le;       ///< per <= row, >= 0 at optimum
    std::vector<double> reduced_cost;  ///< per structural variable
    std::vector<double> farkas;        ///< per row (eq then le) when infeasible
    double infeasibility = 0.0;        ///< residual bound violation at exit
    long iterations = 0;
    BasisSnapshot basis;
};

/// Sparse LP container with a row-builder interface.  Variables default to
/// bounds [0, +inf) and cost 0.
class LinearProgram {
public:
    explicit LinearProgram(int var_count = 0) { resize(var_count); }

    void resize(int var_count) {
        if (var_count < 0) throw ValidationError("negative variable count");
        cost_.resize(var_count, 0.0);
        lower_.resize(var_count, 0.0);
        upper_.resize(var_count, kInf);
    }

    int var_count() const noexcept { return static_cast<int>(cost_.size()); }
    int eq_count() const noexcept { return static_cast<int>(eq_rhs_.size()); }
    int le_count() const noexcept { return static_cast<int>(le_rhs_.size()); }
    int row_count() const noexcept { return eq_count() + le_count(); }

    void set_cost(int j, double c) {
        check_var(j);
        if (!std::isfinite(c)) throw ValidationError("objective coefficient must be finite");
        cost_[j] = c;
    }
    void add_cost(int j, double c) { set_cost(j, cost_[j] + c); }

    /// lo may be -inf, hi may be +inf; lo == hi fixes the variable.
    void set_bounds(int j, double lo, double hi) {
        check_var(j);
        if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kInf || hi == -kInf)
            throw ValidationError("invalid bounds for variable " + var_name(j));
        lower_[j] = lo;
        upper_[j] = hi;
    }

    void set_name(int j, std::string name) {
        check_var(j);
        if (names_.size() != cost_.size()) names_.resize(cost_.size());
        names_[j] = std::move(name);
    }

    int add_eq(std::vector<std::pair<int, double>> entries, double rhs) {
        check_row(entries, rhs);
        eq_rows_.push_back(std::move(entries));
        eq_rhs_.push_back(rhs);
        return eq_count() - 1;
    }

    int add_le(std::vector<std::pair<int, double>> entries, double rhs) {
        check_row(entries, rhs);
        le_rows_.push_back(std::move(entries));
        le_rhs_.push_back(rhs);
        return le_count() - 1;
    }

    double cost(int j) const { return cost_[j]; }
    double lower(int j) const { return lower_[j]; }
    double upper(int j) const { return upper_[j]; }
    const std::vector<double>& costs() const noexcept { return cost_; }
    const std::vector<double>& lowers() const noexcept { return lower_; }
    const std::vector<double>& uppers() const noexcept { return upper_; }
    const std::vector<std::vector<std::pair<int, double>>>& eq_rows() const noexcept {
        return eq_rows_;
    }
    const std::vector<std::vector<std::pair<int, double>>>& le_rows() const noexcept {
        return le_rows_;
    }
    const std::vector<double>& eq_rhs() const noexcept { return eq_rhs_; }
    const std::vector<double>& le_rhs() const noexcept { return le_rhs_; }

    std::string var_name(int j) const {
        if (j >= 0 && j < static_cast<int>(names_.size()) && !names_[j].empty()) return names_[j];
        return "x" + std::to_string(j);
    }

private:
    void check_var(int j) const {
        if (j < 0 || j >= var_count())
            throw ValidationError("variable index " + std::to_string(j) + " out of range");
    }
    void check_row(const std::vector<std::pair<int, double>>& entries, double rhs) const {
        if (!std::isfinite(rhs)) throw ValidationError("row right-hand side must be finite");
        for (const auto& [j, v] : entries) {
            check_var(j);
            if (!std::isfinite(v)) throw ValidationError("row coefficient must be finite");
        }
    }

    std::vector<double> cost_, lower_, upper_;
    std::vector<std::string> names_;
    std::vector<std::vector<std::pair<int, double>>> eq_rows_, le_rows_;
    std::vector<double> eq_rhs_, le_rhs_;
};

/// Strength of an infeasibility certificate: with row multipliers `ray`
/// (equality rows then <= rows), returns
///   ray'b  -  sum_j sup{ (ray'a_j) v : l_j <= v <= u_j }  -  slack terms,
/// which is > 0 only if no feasible point exists.  Returns -inf when the
/// supremum diverges (not a valid certificate).
inline double farkas_gap(const LinearProgram& lp, const std::vector<double>& ray) {
    const int meq = lp.eq_count();
    if (static_cast<int>(ray.size()) != lp.row_count())
        throw ValidationError("certificate length does not match row count");
    std::vector<double> z(lp.var_count(), 0.0);
    double rhs = 0.0;
    for (int i = 0; i < meq; ++i) {
        rhs += ray[i] * lp.eq_rhs()[i];
        for (const auto& [j, v] : lp.eq_rows()[i]) z[j] += ray[i] * v;
    }
    for (int i = 0; i < lp.le_count(); ++i) {
        const double y = ray[meq + i];
        rhs += y * lp.le_rhs()[i];
        // <= slack lives in [0, inf): sup of y*s is 0 when y <= 0, else inf.
        if (y > 1e-9) return -kInf;
        for (const auto& [j, v] : lp.le_rows()[i]) z[j] += y * v;
    }
    double sup = 0.0;
    for (int j = 0; j < lp.var_count(); ++j) {
        if (std::abs(z[j]) <= 1e-12) continue;
        const double bound = z[j] > 0.0 ? lp.upper(j) : lp.lower(j);
        if (!std::isfinite(bound)) return -kInf;
        sup += z[j] * bound;
    }
    return rhs - sup;
}

/// Write the program in CPLEX LP text format (for debugging and interchange).
inline void write_lp_text(const LinearProgram& lp, std::ostream& os,
                          const std::string& name = "problem") {
    const auto term = [&](double v, int j, bool first) {
        std::string s;
        if (v < 0)
            s += first ? "- " : "- ";
        else if (!first)
            s += "+ ";
        s += std::to_string(std::abs(v)) + " " + lp.var_name(j) + " ";
        return s;
    };
    os << "\\ " << name << "\nMinimize\n obj: ";
    bool first = true;
    for (int j = 0; j < lp.var_count(); ++j) {
        if (lp.cost(j) == 0.0) continue;
        os << term(lp.cost(j), j, first);
        first = false;
    }
    if (first) os << "0 " << (lp.var_count() > 0 ? lp.var_name(0) : "x0");
    os << "\nSubject To\n";
    for (int i = 0; i < lp.eq_count(); ++i) {
        os << " e" << i << ": ";
        first = true;
        for (const auto& [j, v] : lp.eq_rows()[i]) {
            os << term(v, j, first);
            first = false;
        }
        if (first) os << "0 " << lp.var_name(0) << " ";
        os << "= " << lp.eq_rhs()[i] << "\n";
    }
    for (int i = 0; i < lp.le_count(); ++i) {
        os << " l" << i << ": ";
        first = true;
        for (const auto& [j, v] : lp.le_rows()[i]) {
            os << term(v, j, first);
            first = false;
        }
        if (first) os << "0 " << lp.var_name(0) << " ";
        os << "<= " << lp.le_rhs()[i] << "\n";
    }
    os << "Bounds\n";
    for (int j = 0; j < lp.var_count(); ++j) {
        const double lo = lp.lower(j), hi = lp.upper(j);
        if (lo == -kInf && hi == kInf) {
            os << " " << lp.var_name(j) << " free\n";
        } else if (lo == -kInf) {
            os << " -inf <= " << lp.var_name(j) << " <= " << hi << "\n";
        } else if (hi == kInf) {
            os << " " << lp.var_name(j) << " >= " << lo << "\n";
        } else {
            os << " " << lo << " <= " << lp.var_name(j) << " <= " << hi << "\n";
        }
    }
    os << "End\n";
}

/// Reusable solver for one LP instance; variable bounds may be changed
/// between solves (used by branch and bound) and solves can warm-start
/// from a previous basis.
class LpEngine {
public:
    explicit LpEngine(const LinearProgram& lp) {
        n_ = lp.var_count();
        meq_ = lp.eq_count();
        m_ = lp.row_count();
        ntot_ = n_ + m_;

        // CSC of the structural columns over all rows (eq block first).
        std::vector<int> count(n_, 0);
        const auto tally = [&](const std::vector<std::vector<std::pair<int, double>>>& rows) {
            for (const auto& row : rows)
                for (const auto& [j, v] : row) ++count[j];
        };
        tally(lp.eq_rows());
        tally(lp.le_rows());
        aptr_.assign(n_ + 1, 0);
        for (int j = 0; j < n_; ++j) aptr_[j + 1] = aptr_[j] + count[j];
        arow_.resize(aptr_[n_]);
        aval_.resize(aptr_[n_]);
        std::vector<int> fill(aptr_.begin(), aptr_.end() - 1);
        for (int i = 0; i < meq_; ++i)
            for (const auto& [j, v] : lp.eq_rows()[i]) {
                arow_[fill[j]] = i;
                aval_[fill[j]] = v;
                ++fill[j];
            }
        for (int i = 0; i < lp.le_count(); ++i)
            for (const auto& [j, v] : lp.le_rows()[i]) {
                arow_[fill[j]] = meq_ + i;
                aval_[fill[j]] = v;
                ++fill[j];
            }

        rhs_.assign(m_, 0.0);
        std::copy(lp.eq_rhs().begin(), lp.eq_rhs().end(), rhs_.begin());
        std::copy(lp.le_rhs().begin(), lp.le_rhs().end(), rhs_.begin() + meq_);

        cost_.assign(ntot_, 0.0);
        lower_.assign(ntot_, 0.0);
        upper_.assign(ntot_, 0.0);
        for (int j = 0; j < n_; ++j) {
            cost_[j] = lp.cost(j);
            lower_[j] = lp.lower(j);
            upper_[j] = lp.upper(j);
        }
        for (int i = 0; i < m_; ++i) {
            lower_[n_ + i] = 0.0;
            upper_[n_ + i] = i < meq_ ? 0.0 : kInf;  // = rows fix their logical
        }
        base_lower_ = lower_;
        base_upper_ = upper_;
    }

    int var_count() const noexcept { return n_; }
    int row_count() const noexcept { return m_; }

    /// Override a structural variable's bounds for subsequent solves.
    void set_var_bounds(int j, double lo, double hi) {
        if (j < 0 || j >= n_) throw ValidationError("bound override out of range");
        if (std::isnan(lo) || std::isnan(hi) || lo > hi)
            throw ValidationError("invalid bound override");
        lower_[j] = lo;
        upper_[j] = hi;
    }

    void reset_var_bounds() {
        lower_ = base_lower_;
        upper_ = base_upper_;
    }

    double var_lower(int j) const { return lower_[j]; }
    double var_upper(int j) const { return upper_[j]; }

    LPSolution solve(const SolveOptions& opts = {}, const BasisSnapshot* warm = nullptr) {
        opts_ = opts;
        iterations_ = 0;
        bland_ = false;
        stall_ = 0;
        pricing_cursor_ = 0;

        init_basis(warm);
        factorize();
        compute_basics();

        for (int restarts = 0; restarts < 100; ++restarts) {
            const Run r1 = run_phase1();
            if (r1 == Run::iteration_limit) return finalize(LpStatus::iteration_limit);
            if (r1 == Run::infeasible) return finalize(LpStatus::infeasible);
            const Run r2 = run_phase2();
            if (r2 == Run::iteration_limit) return finalize(LpStatus::iteration_limit);
            if (r2 == Run::unbounded) return finalize(LpStatus::unbounded);
            if (r2 == Run::optimal) return finalize(LpStatus::optimal);
            // Run::lost_feasibility: numerical drift detected; repeat phase 1.
        }
        throw SolverError("simplex could not hold a feasible basis");
    }

private:
    enum class VarState : std::uint8_t { basic = 0, at_lower = 1, at_upper = 2, nb_free = 3 };
    enum class Run { optimal, infeasible, unbounded, iteration_limit, lost_feasibility, feasible };

    struct Eta {
        int pos;
        double pivot;
        std::vector<std::pair<int, double>> col;  // position-space column, pivot excluded
    };

    // ---- column access -------------------------------------------------

    template <typename Fn>
    void for_entries(int var, Fn&& fn) const {
        if (var < n_) {
            for (int k = aptr_[var]; k < aptr_[var + 1]; ++k) fn(arow_[k], aval_[k]);
        } else {
            fn(var - n_, 1.0);
        }
    }

    // ---- basis management ----------------------------------------------

    void init_basis(const BasisSnapshot* warm) {
        state_.assign(ntot_, VarState::at_lower);
        value_.assign(ntot_, 0.0);
        basis_.assign(m_, -1);
        bool restored = false;
        if (warm != nullptr && !warm->empty() &&
            static_cast<int>(warm->states.size()) == ntot_ &&
            static_cast<int>(warm->basis.size()) == m_) {
            int basics = 0;
            for (int i = 0; i < m_; ++i) {
                const int v = warm->basis[i];
                if (v < 0 || v >= ntot_) break;
                ++basics;
            }
            if (basics == m_) {
                for (int v = 0; v < ntot_; ++v) state_[v] = VarState(warm->states[v]);
                basis_ = warm->basis;
                restored = true;
            }
        }
        if (!restored) {
            for (int i = 0; i < m_; ++i) {
                basis_[i] = n_ + i;
                state_[n_ + i] = VarState::basic;
            }
        }
        // Make states consistent and clamp nonbasics inside (possibly new)
        // bounds; fixed variables rest at their lower bound.
        std::vector<char> isbasic(ntot_, 0);
        for (int i = 0; i < m_; ++i) isbasic[basis_[i]] = 1;
        for (int v = 0; v < ntot_; ++v) {
            if (isbasic[v]) {
                state_[v] = VarState::basic;
                continue;
            }
            if (state_[v] == VarState::basic)
                state_[v] = lower_[v] > -kInf ? VarState::at_lower
                            : upper_[v] < kInf ? VarState::at_upper
                                               : VarState::nb_free;
            clamp_nonbasic(v);
        }
    }

    void clamp_nonbasic(int v) {
        switch (state_[v]) {
            case VarState::at_lower:
                if (lower_[v] == -kInf)
                    state_[v] = upper_[v] < kInf ? VarState::at_upper : VarState::nb_free;
                break;
            case VarState::at_upper:
                if (upper_[v] == kInf)
                    state_[v] = lower_[v] > -kInf ? VarState::at_lower : VarState::nb_free;
                break;
            case VarState::nb_free:
                if (lower_[v] > -kInf)
                    state_[v] = VarState::at_lower;
                else if (upper_[v] < kInf)
                    state_[v] = VarState::at_upper;
                break;
            default: break;
        }
        value_[v] = state_[v] == VarState::at_lower   ? lower_[v]
                    : state_[v] == VarState::at_upper ? upper_[v]
                                                      : 0.0;
    }

    void factorize() {
        const auto repaired = lu_.factor(m_, [&](int pos, auto& out) {
            for_entries(basis_[pos], [&](int i, double v) { out.emplace_back(i, v); });
        });
        // A repaired position's column was replaced by the identity column of
        // a previously unpivoted row — which is exactly that row's logical
        // variable.  Swap the bookkeeping to match: the dependent variable
        // leaves for its nearest finite bound and the logical becomes basic.
        for (const auto& [pos, row] : repaired) {
            const int dep = basis_[pos];
            state_[dep] = nearest_bound_state(dep);
            clamp_nonbasic(dep);
            basis_[pos] = n_ + row;
            state_[n_ + row] = VarState::basic;
        }
        etas_.clear();
    }

    VarState nearest_bound_state(int v) const {
        const double x = value_[v];
        const double dl = lower_[v] > -kInf ? std::abs(x - lower_[v]) : kInf;
        const double du = upper_[v] < kInf ? std::abs(upper_[v] - x) : kInf;
        if (dl == kInf && du == kInf) return VarState::nb_free;
        return dl <= du ? VarState::at_lower : VarState::at_upper;
    }

    /// Recompute every basic value from scratch: x_B = B^{-1}(b - N x_N).
    void compute_basics() {
        work_.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) work_[i] = rhs_[i];
        for (int v = 0; v < ntot_; ++v) {
            if (state_[v] == VarState::basic || value_[v] == 0.0) continue;
            const double xv = value_[v];
            for_entries(v, [&](int i, double a) { work_[i] -= a * xv; });
        }
        ftran(work_);
        for (int pos = 0; pos < m_; ++pos) value_[basis_[pos]] = work_[pos];
    }

    // ---- FTRAN / BTRAN through LU + eta file -----------------------------

    void ftran(std::vector<double>& v) const {
        if (m_ == 0) return;
        lu_.solve(v);
        for (const Eta& e : etas_) {
            const double t = v[e.pos] / e.pivot;
            if (t != 0.0)
                for (const auto& [i, a] : e.col) v[i] -= a * t;
            v[e.pos] = t;
        }
    }

    void btran(std::vector<double>& v) const {
        if (m_ == 0) return;
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double s = v[it->pos];
            for (const auto& [i, a] : it->col) s -= a * v[i];
            v[it->pos] = s / it->pivot;
        }
        lu_.solve_transpose(v);
    }

    // ---- pricing ---------------------------------------------------------

    /// Phase-aware reduced cost of a nonbasic variable given duals y.
    double reduced_cost(int v, const std::vector<double>& y, const std::vector<double>& cost) const {
        double d = cost[v];
        for_entries(v, [&](int i, double a) { d -= y[i] * a; });
        return d;
    }

    struct Entering {
        int var = -1;
        int direction = 0;  // +1 increase, -1 decrease
        double d = 0.0;
    };

    std::optional<Entering> price(const std::vector<double>& y,
                                  const std::vector<double>& cost) {
        const auto eligible = [&](int v, double d, int& dir) {
            const double tol = opts_.opt_tol * (1.0 + std::abs(cost[v]));
            switch (state_[v]) {
                case VarState::at_lower:
                    if (lower_[v] == upper_[v]) return false;  // fixed
                    if (d < -tol) {
                        dir = +1;
                        return true;
                    }
                    return false;
                case VarState::at_upper:
                    if (lower_[v] == upper_[v]) return false;
                    if (d > tol) {
                        dir = -1;
                        return true;
                    }
                    return false;
                case VarState::nb_free:
                    if (std::abs(d) > tol) {
                        dir = d > 0.0 ? -1 : +1;
                        return true;
                    }
                    return false;
                default: return false;
            }
        };

        if (bland_) {
            for (int v = 0; v < ntot_; ++v) {
                if (state_[v] == VarState::basic) continue;
                const double d = reduced_cost(v, y, cost);
                int dir = 0;
                if (eligible(v, d, dir)) return Entering{v, dir, d};
            }
            return std::nullopt;
        }

        const int block =
            opts_.pricing_block > 0 ? opts_.pricing_block : std::clamp(ntot_ / 8, 256, 8192);
        int scanned = 0;
        while (scanned < ntot_) {
            Entering best;
            double best_score = 0.0;
            const int start = pricing_cursor_;
            for (int k = 0; k < block && scanned < ntot_; ++k, ++scanned) {
                const int v = (start + k) % ntot_;
                if (state_[v] != VarState::basic) {
                    const double d = reduced_cost(v, y, cost);
                    int dir = 0;
                    if (eligible(v, d, dir)) {
                        const double score = std::abs(d);
                        if (score > best_score) {
                            best_score = score;
                            best = Entering{v, dir, d};
                        }
                    }
                }
            }
            pricing_cursor_ = (start + block) % std::max(1, ntot_);
            if (best.var >= 0) return best;
        }
        return std::nullopt;
    }

    // ---- ratio test -------------------------------------------------------

    struct Step {
        double theta = kInf;
        int leaving_pos = -1;       // -1: entering hits its own opposite bound
        VarState leaving_state = VarState::at_lower;
        bool unbounded = false;
    };

    Step ratio_test(const Entering& q, const std::vector<double>& alpha, bool phase1) const {
        Step best;
        double best_alpha = 0.0;
        const double sigma = q.direction;

        // The entering variable's own span is the fallback event (bound flip).
        const double span = upper_[q.var] - lower_[q.var];
        if (state_[q.var] != VarState::nb_free && std::isfinite(span)) best.theta = span;

        for (int pos = 0; pos < m_; ++pos) {
            const double a = alpha[pos];
            if (std::abs(a) <= opts_.pivot_tol) continue;
            const int v = basis_[pos];
            const double rate = -sigma * a;  // dx_v per unit of entering step
            const double x = value_[v];
            const double lo = lower_[v], hi = upper_[v];
            const double ftol = opts_.feas_tol;

            // Which bound blocks this basic variable, if any.  In phase 1 a
            // variable beyond a bound blocks only at the bound it is
            // approaching (the objective kink); moving further away is paid
            // for by the phase-1 costs, not blocked.
            double bound;
            VarState to;
            if (phase1 && x < lo - ftol * (1.0 + std::abs(lo))) {
                if (rate <= 0.0) continue;
                bound = lo;
                to = VarState::at_lower;
            } else if (phase1 && x > hi + ftol * (1.0 + std::abs(hi))) {
                if (rate >= 0.0) continue;
                bound = hi;
                to = VarState::at_upper;
            } else if (rate > 0.0) {
                if (hi == kInf) continue;
                bound = hi;
                to = VarState::at_upper;
            } else {
                if (lo == -kInf) continue;
                bound = lo;
                to = VarState::at_lower;
            }
            double theta = (bound - x) / rate;
            if (theta < 0.0) theta = 0.0;  // degenerate: already at/past the bound

            const double window = 1e-9 * (1.0 + std::min(theta, best.theta));
            if (theta < best.theta - window) {
                best.theta = theta;
                best.leaving_pos = pos;
                best.leaving_state = to;
                best_alpha = std::abs(a);
            } else if (theta <= best.theta + window && best.leaving_pos >= 0) {
                const bool prefer = bland_ ? basis_[pos] < basis_[best.leaving_pos]
                                           : std::abs(a) > best_alpha;
                if (prefer) {
                    best.theta = std::min(best.theta, theta);
                    best.leaving_pos = pos;
                    best.leaving_state = to;
                    best_alpha = std::abs(a);
                }
            }
        }
        if (!std::isfinite(best.theta)) best.unbounded = true;
        return best;
    }

    // ---- iteration --------------------------------------------------------

    /// Applies the chosen step; returns false when a refactorization-and-retry
    /// is required (unstable pivot).
    bool apply_step(const Entering& q, const Step& step, std::vector<double>& alpha) {
        const double sigma = q.direction;
        const double theta = step.theta;

        if (step.leaving_pos < 0) {
            // Bound flip: the entering variable traverses its whole span.
            for (int pos = 0; pos < m_; ++pos) {
                const double a = alpha[pos];
                if (a != 0.0) value_[basis_[pos]] -= sigma * theta * a;
            }
            value_[q.var] += sigma * theta;
            state_[q.var] = state_[q.var] == VarState::at_lower ? VarState::at_upper
                                                                : VarState::at_lower;
            value_[q.var] = state_[q.var] == VarState::at_lower ? lower_[q.var] : upper_[q.var];
            return true;
        }

        const int r = step.leaving_pos;
        if (std::abs(alpha[r]) < opts_.pivot_tol) return false;

        const int leaving = basis_[r];
        for (int pos = 0; pos < m_; ++pos) {
            const double a = alpha[pos];
            if (a != 0.0) value_[basis_[pos]] -= sigma * theta * a;
        }
        value_[q.var] += sigma * theta;
        // Snap the leaving variable exactly onto its bound.
        state_[leaving] = step.leaving_state;
        value_[leaving] =
            step.leaving_state == VarState::at_lower ? lower_[leaving] : upper_[leaving];

        Eta eta;
        eta.pos = r;
        eta.pivot = alpha[r];
        for (int pos = 0; pos < m_; ++pos)
            if (pos != r && alpha[pos] != 0.0) eta.col.emplace_back(pos, alpha[pos]);
        etas_.push_back(std::move(eta));

        basis_[r] = q.var;
        state_[q.var] = VarState::basic;

        if (static_cast<int>(etas_.size()) >= opts_.refactor_interval) {
            factorize();
            compute_basics();
        }
        return true;
    }

    double violation_scale(int v) const {
        return 1.0 + std::max(std::abs(lower_[v] == -kInf ? 0.0 : lower_[v]),
                              std::abs(upper_[v] == kInf ? 0.0 : upper_[v]));
    }

    /// Total bound violation over basic variables and the phase-1 costs.
    double phase1_setup(std::vector<double>& cost1) {
        cost1.assign(ntot_, 0.0);
        double phi = 0.0;
        for (int pos = 0; pos < m_; ++pos) {
            const int v = basis_[pos];
            const double tol = opts_.feas_tol * violation_scale(v);
            if (value_[v] < lower_[v] - tol) {
                cost1[v] = -1.0;
                phi += lower_[v] - value_[v];
            } else if (value_[v] > upper_[v] + tol) {
                cost1[v] = 1.0;
                phi += value_[v] - upper_[v];
            }
        }
        return phi;
    }

    Run run_phase1() {
        std::vector<double> cost1;
        last_objective_ = kInf;
        stall_ = 0;
        while (true) {
            const double phi = phase1_setup(cost1);
            if (phi <= 0.0) return Run::feasible;
            if (iterations_ >= opts_.iteration_limit) return Run::iteration_limit;
            ++iterations_;

            y_.assign(m_, 0.0);
            for (int pos = 0; pos < m_; ++pos) y_[pos] = cost1[basis_[pos]];
            btran(y_);

            const auto q = price(y_, cost1);
            if (!q) {
                // Locally optimal with positive infeasibility: no feasible point.
                farkas_ = y_;
                infeasibility_ = phi;
                return Run::infeasible;
            }
            alpha_.assign(m_, 0.0);
            for_entries(q->var, [&](int i, double v) { alpha_[i] = v; });
            ftran(alpha_);

            const Step step = ratio_test(*q, alpha_, true);
            if (step.unbounded) {
                // Geometrically impossible while infeasibility remains; the
                // blockers must have been lost to numerics.  Refactor and retry.
                if (!etas_.empty()) {
                    factorize();
                    compute_basics();
                    continue;
                }
                throw SolverError("phase 1 lost its blocking rows");
            }
            track_progress(phi);
            if (!apply_step(*q, step, alpha_)) {
                factorize();
                compute_basics();
            }
        }
    }

    Run run_phase2() {
        last_objective_ = kInf;
        stall_ = 0;
        while (true) {
            if (iterations_ >= opts_.iteration_limit) return Run::iteration_limit;

            y_.assign(m_, 0.0);
            for (int pos = 0; pos < m_; ++pos) y_[pos] = cost_[basis_[pos]];
            btran(y_);

            const auto q = price(y_, cost_);
            if (!q) return Run::optimal;
            ++iterations_;

            alpha_.assign(m_, 0.0);
            for_entries(q->var, [&](int i, double v) { alpha_[i] = v; });
            ftran(alpha_);

            const Step step = ratio_test(*q, alpha_, false);
            if (step.unbounded) {
                if (!etas_.empty()) {
                    factorize();
                    compute_basics();
                    continue;
                }
                unbounded_var_ = q->var;
                return Run::unbounded;
            }
            track_progress(current_objective());
            if (!apply_step(*q, step, alpha_)) {
                factorize();
                compute_basics();
                continue;
            }
            // Guard against numerical drift: a freshly refactorized basis may
            // reveal infeasibility introduced by eta roundoff.  Uses the same
            // per-variable test as phase 1 so a handoff always makes progress.
            if (etas_.empty() && !basics_feasible()) return Run::lost_feasibility;
        }
    }

    bool basics_feasible() const {
        for (int pos = 0; pos < m_; ++pos) {
            const int v = basis_[pos];
            const double tol = opts_.feas_tol * violation_scale(v);
            if (value_[v] < lower_[v] - tol || value_[v] > upper_[v] + tol) return false;
        }
        return true;
    }

    double current_objective() const {
        double obj = 0.0;
        for (int v = 0; v < ntot_; ++v)
            if (value_[v] != 0.0) obj += cost_[v] * value_[v];
        return obj;
    }

    double feasibility_violation() const {
        double worst = 0.0;
        for (int pos = 0; pos < m_; ++pos) {
            const int v = basis_[pos];
            worst = std::max(worst, lower_[v] - value_[v]);
            worst = std::max(worst, value_[v] - upper_[v]);
        }
        return std::max(0.0, worst);
    }

    void track_progress(double objective) {
        if (objective < last_objective_ - 1e-13 * (1.0 + std::abs(last_objective_))) {
            stall_ = 0;
            bland_ = false;
        } else if (++stall_ > opts_.stall_limit) {
            bland_ = true;
        }
        last_objective_ = objective;
    }

    LPSolution finalize(LpStatus status) {
        if (status == LpStatus::optimal || status == LpStatus::iteration_limit) {
            factorize();
            compute_basics();
        }
        LPSolution sol;
        sol.status = status;
        sol.iterations = iterations_;
        sol.x.assign(n_, 0.0);
        for (int j = 0; j < n_; ++j) sol.x[j] = value_[j];
        sol.objective = 0.0;
        for (int j = 0; j < n_; ++j) sol.objective += cost_[j] * value_[j];
        sol.infeasibility = status == LpStatus::infeasible ? infeasibility_
                                                           : feasibility_violation();

        y_.assign(m_, 0.0);
        for (int pos = 0; pos < m_; ++pos) y_[pos] = cost_[basis_[pos]];
        btran(y_);
        sol.dual_eq.assign(y_.begin(), y_.begin() + meq_);
        sol.dual_le.resize(m_ - meq_);
        for (int i = meq_; i < m_; ++i) sol.dual_le[i - meq_] = -y_[i];
        sol.reduced_cost.assign(n_, 0.0);
        for (int j = 0; j < n_; ++j)
            sol.reduced_cost[j] =
                state_[j] == VarState::basic ? 0.0 : reduced_cost(j, y_, cost_);

        if (status == LpStatus::infeasible) sol.farkas = farkas_;

        sol.basis.states.resize(ntot_);
        for (int v = 0; v < ntot_; ++v) sol.basis.states[v] = static_cast<std::uint8_t>(state_[v]);
        sol.basis.basis = basis_;
        return sol;
    }

    // ---- data -------------------------------------------------------------

    int n_ = 0, meq_ = 0, m_ = 0, ntot_ = 0;
    std::vector<int> aptr_, arow_;
    std::vector<double> aval_;
    std::vector<double> rhs_;
    std::vector<double> cost_, lower_, upper_, base_lower_, base_upper_;

    SolveOptions opts_;
    std::vector<VarState> state_;
    std::vector<double> value_;
    std::vector<int> basis_;
    detail::SparseLu lu_;
    std::vector<Eta> etas_;
    std::vector<double> y_, alpha_, work_;
    std::vector<double> farkas_;
    double infeasibility_ = 0.0;
    long iterations_ = 0;
    int pricing_cursor_ = 0;
    bool bland_ = false;
    int stall_ = 0;
    double last_objective_ = kInf;
    int unbounded_var_ = -1;
};

inline LPSolution solve_lp(const LinearProgram& lp, const SolveOptions& opts = {},
                           const BasisSnapshot* warm = nullptr) {
    LpEngine engine(lp);
    return engine.solve(opts, warm);
}

} // namespace vertiflow
