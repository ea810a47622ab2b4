#pragma once

// Sparse LU factorization of a simplex basis: left-looking column
// elimination with partial pivoting by magnitude (Gilbert-Peierls).  The
// nonzero pattern of each triangular solve is discovered by depth-first
// search so work stays proportional to arithmetic.  Columns whose pivot
// falls below the drop threshold are replaced by identity columns of the
// still-unpivoted rows and reported, letting the caller repair a
// (numerically) rank-deficient basis instead of failing.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "vertiflow/errors.hpp"

namespace vertiflow::detail {

class SparseLu {
public:
    /// Factor the m x m matrix whose column at basis position p is produced
    /// by get_col(p, out) as (row, value) pairs.  Returns the basis
    /// positions that had to be replaced by identity columns, paired with
    /// the row index each replacement pivots (empty on a clean
    /// factorization).
    template <typename GetCol>
    std::vector<std::pair<int, int>> factor(int m, GetCol&& get_col) {
        m_ = m;
        perm_.assign(static_cast<std::size_t>(m), -1);
        pinv_.assign(static_cast<std::size_t>(m), -1);
        pos_of_step_.assign(static_cast<std::size_t>(m), -1);
        step_of_pos_.assign(static_cast<std::size_t>(m), -1);
        lcols_.assign(static_cast<std::size_t>(m), {});
        ucols_.assign(static_cast<std::size_t>(m), {});
        udiag_.assign(static_cast<std::size_t>(m), 0.0);
        work_.assign(static_cast<std::size_t>(m), 0.0);
        stamp_.assign(static_cast<std::size_t>(m), 0);
        stamp_gen_ = 0;

        std::vector<int> failed;
        std::vector<std::pair<int, double>> col;
        int step = 0;
        for (int p = 0; p < m; ++p) {
            col.clear();
            get_col(p, col);
            if (!eliminate_column(col, step, p)) {
                failed.push_back(p);
            } else {
                ++step;
            }
        }
        // Repair: give every failed position an identity column of some
        // still-unpivoted row.
        std::vector<std::pair<int, int>> repaired;
        repaired.reserve(failed.size());
        for (int p : failed) {
            int r = -1;
            for (int i = 0; i < m_; ++i)
                if (pinv_[static_cast<std::size_t>(i)] < 0) {
                    r = i;
                    break;
                }
            if (r < 0) throw SolverError("basis repair failed: no free pivot row");
            col.assign(1, {r, 1.0});
            if (!eliminate_column(col, step, p))
                throw SolverError("basis repair failed: identity column rejected");
            ++step;
            repaired.emplace_back(p, r);
        }
        return repaired;
    }

    int size() const noexcept { return m_; }

    /// In-place solve B x = rhs (rhs in original row space; result indexed
    /// by basis position).
    void solve(std::vector<double>& rhs) const {
        lower_solve(rhs);
        // Back substitution through U in elimination space.
        std::vector<double>& w = scratch_;
        w.assign(static_cast<std::size_t>(m_), 0.0);
        for (int t = 0; t < m_; ++t)
            w[static_cast<std::size_t>(t)] = rhs[static_cast<std::size_t>(perm_[static_cast<std::size_t>(t)])];
        for (int t = m_ - 1; t >= 0; --t) {
            const double z = w[static_cast<std::size_t>(t)] / udiag_[static_cast<std::size_t>(t)];
            w[static_cast<std::size_t>(t)] = z;
            if (z != 0.0)
                for (const auto& [s, v] : ucols_[static_cast<std::size_t>(t)])
                    w[static_cast<std::size_t>(s)] -= v * z;
        }
        // Solution component for basis position p lives at its step.
        for (int t = 0; t < m_; ++t)
            rhs[static_cast<std::size_t>(pos_of_step_[static_cast<std::size_t>(t)])] =
                w[static_cast<std::size_t>(t)];
    }

    /// In-place solve B^T y = rhs (rhs indexed by basis position; result in
    /// original row space).
    void solve_transpose(std::vector<double>& rhs) const {
        std::vector<double>& w = scratch_;
        w.assign(static_cast<std::size_t>(m_), 0.0);
        for (int t = 0; t < m_; ++t)
            w[static_cast<std::size_t>(t)] =
                rhs[static_cast<std::size_t>(pos_of_step_[static_cast<std::size_t>(t)])];
        // Forward solve U^T v = w in elimination space.
        for (int t = 0; t < m_; ++t) {
            double s = w[static_cast<std::size_t>(t)];
            for (const auto& [u, v] : ucols_[static_cast<std::size_t>(t)])
                s -= v * w[static_cast<std::size_t>(u)];
            w[static_cast<std::size_t>(t)] = s / udiag_[static_cast<std::size_t>(t)];
        }
        // Backward solve L^T y = v back into original row space.
        std::fill(rhs.begin(), rhs.end(), 0.0);
        for (int t = m_ - 1; t >= 0; --t) {
            double s = w[static_cast<std::size_t>(t)];
            for (const auto& [i, v] : lcols_[static_cast<std::size_t>(t)])
                s -= v * rhs[static_cast<std::size_t>(i)];
            rhs[static_cast<std::size_t>(perm_[static_cast<std::size_t>(t)])] = s;
        }
    }

private:
    /// Forward solve L z = b in the original row space (unit diagonal at
    /// perm_[t], multipliers stored column-wise per elimination step).
    void lower_solve(std::vector<double>& b) const {
        for (int t = 0; t < m_; ++t) {
            const double z = b[static_cast<std::size_t>(perm_[static_cast<std::size_t>(t)])];
            if (z == 0.0) continue;
            for (const auto& [i, v] : lcols_[static_cast<std::size_t>(t)])
                b[static_cast<std::size_t>(i)] -= v * z;
        }
    }

    /// Scatter col into work_, solve against the L columns produced so far,
    /// pick a pivot among unpivoted rows, emit L/U columns.  Returns false
    /// (leaving state untouched) when no acceptable pivot exists.
    bool eliminate_column(const std::vector<std::pair<int, double>>& col, int step, int pos) {
        ++stamp_gen_;
        topo_.clear();
        for (const auto& [r, v] : col) dfs_reach(r);
        for (const auto& [r, v] : col) work_[static_cast<std::size_t>(r)] = 0.0;
        for (std::size_t i = topo_.size(); i-- > 0;) work_[static_cast<std::size_t>(topo_[i])] = 0.0;
        for (const auto& [r, v] : col) work_[static_cast<std::size_t>(r)] += v;
        // Apply L in topological order (reverse postorder of the DFS).
        for (std::size_t i = topo_.size(); i-- > 0;) {
            const int r = topo_[i];
            const int t = pinv_[static_cast<std::size_t>(r)];
            if (t < 0) continue;
            const double xr = work_[static_cast<std::size_t>(r)];
            if (xr == 0.0) continue;
            for (const auto& [i2, v] : lcols_[static_cast<std::size_t>(t)])
                work_[static_cast<std::size_t>(i2)] -= v * xr;
        }
        // Pivot: the largest-magnitude entry on an unpivoted row.
        int pivot_row = -1;
        double pivot_abs = 0.0;
        for (int r : topo_) {
            if (pinv_[static_cast<std::size_t>(r)] >= 0) continue;
            const double a = std::abs(work_[static_cast<std::size_t>(r)]);
            if (a > pivot_abs) {
                pivot_abs = a;
                pivot_row = r;
            }
        }
        if (pivot_row < 0 || pivot_abs <= kPivotFloor) return false;

        const double pivot = work_[static_cast<std::size_t>(pivot_row)];
        auto& lcol = lcols_[static_cast<std::size_t>(step)];
        auto& ucol = ucols_[static_cast<std::size_t>(step)];
        for (int r : topo_) {
            const double v = work_[static_cast<std::size_t>(r)];
            if (v == 0.0 || r == pivot_row) continue;
            const int t = pinv_[static_cast<std::size_t>(r)];
            if (t >= 0)
                ucol.emplace_back(t, v);
            else
                lcol.emplace_back(r, v / pivot);
        }
        udiag_[static_cast<std::size_t>(step)] = pivot;
        perm_[static_cast<std::size_t>(step)] = pivot_row;
        pinv_[static_cast<std::size_t>(pivot_row)] = step;
        pos_of_step_[static_cast<std::size_t>(step)] = pos;
        step_of_pos_[static_cast<std::size_t>(pos)] = step;
        return true;
    }

    /// Collect, in postorder, every row reachable from r through the L
    /// columns of already-pivoted rows.  Iterative to bound stack depth.
    void dfs_reach(int r) {
        if (stamp_[static_cast<std::size_t>(r)] == stamp_gen_) return;
        dfs_stack_.clear();
        dfs_stack_.emplace_back(r, 0);
        stamp_[static_cast<std::size_t>(r)] = stamp_gen_;
        while (!dfs_stack_.empty()) {
            const int row = dfs_stack_.back().first;
            const int t = pinv_[static_cast<std::size_t>(row)];
            const auto* lcol = t >= 0 ? &lcols_[static_cast<std::size_t>(t)] : nullptr;
            const int degree = lcol != nullptr ? static_cast<int>(lcol->size()) : 0;
            bool descended = false;
            while (dfs_stack_.back().second < degree) {
                const int next =
                    (*lcol)[static_cast<std::size_t>(dfs_stack_.back().second)].first;
                ++dfs_stack_.back().second;
                if (stamp_[static_cast<std::size_t>(next)] != stamp_gen_) {
                    stamp_[static_cast<std::size_t>(next)] = stamp_gen_;
                    dfs_stack_.emplace_back(next, 0);
                    descended = true;
                    break;
                }
            }
            if (!descended) {
                topo_.push_back(row);
                dfs_stack_.pop_back();
            }
        }
    }

    static constexpr double kPivotFloor = 1e-11;

    int m_ = 0;
    std::vector<int> perm_;         // elimination step -> pivot row
    std::vector<int> pinv_;         // row -> elimination step (-1 until pivoted)
    std::vector<int> pos_of_step_;  // elimination step -> basis position
    std::vector<int> step_of_pos_;  // basis position -> elimination step
    std::vector<std::vector<std::pair<int, double>>> lcols_;  // rows in original index
    std::vector<std::vector<std::pair<int, double>>> ucols_;  // rows as earlier steps
    std::vector<double> udiag_;

    std::vector<double> work_;
    std::vector<std::uint32_t> stamp_;
    std::uint32_t stamp_gen_ = 0;
    std::vector<int> topo_;
    std::vector<std::pair<int, int>> dfs_stack_;
    mutable std::vector<double> scratch_;
};

} // namespace vertiflow::detail
