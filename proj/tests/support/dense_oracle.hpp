#pragma once

// Self-contained dense reference implementations used only by tests to
// cross-check the sparse production code:
//   * gauss_solve      — dense Gaussian elimination with partial pivoting
//   * DenseLp / dense_solve — full-tableau two-phase simplex with Bland's
//     rule for "min c'x, A_eq x = b_eq, A_le x <= b_le, x >= 0".
//
// Deliberately naive (O(m n) per pivot, artificials on every row) so that
// correctness is easy to audit; only suitable for small instances.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace vertiflow::testsupport {

/// Dense linear solve A x = b by Gaussian elimination with partial pivoting.
/// Throws std::runtime_error when A is numerically singular.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
    const int n = static_cast<int>(a.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-12) throw std::runtime_error("singular matrix");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return x;
}

/// min c'x  s.t.  eq rows = rhs, le rows <= rhs, x >= 0.
struct DenseLp {
    std::vector<double> c;
    std::vector<std::vector<double>> eq;
    std::vector<double> eq_rhs;
    std::vector<std::vector<double>> le;
    std::vector<double> le_rhs;
};

struct DenseResult {
    bool feasible = false;
    bool bounded = true;
    double objective = 0.0;
    std::vector<double> x;
    /// Row duals in the convention  d_j = c_j - sum_i y_i a_ij >= 0 at the
    /// optimum (y of a <= row is <= 0 there).
    std::vector<double> y;
};

inline DenseResult dense_solve(const DenseLp& in) {
    const int n = static_cast<int>(in.c.size());
    const int m_eq = static_cast<int>(in.eq.size());
    const int m_le = static_cast<int>(in.le.size());
    const int m = m_eq + m_le;
    const int n_slack = m_le;
    const int n_art = m;
    const int cols = n + n_slack + n_art;

    // Tableau rows [A  S  I | b] with b >= 0 (rows negated as needed).
    std::vector<std::vector<double>> t(m, std::vector<double>(cols + 1, 0.0));
    std::vector<double> row_sign(m, 1.0);
    for (int i = 0; i < m; ++i) {
        const bool is_eq = i < m_eq;
        const std::vector<double>& arow = is_eq ? in.eq[i] : in.le[i - m_eq];
        double rhs = is_eq ? in.eq_rhs[i] : in.le_rhs[i - m_eq];
        for (int j = 0; j < n; ++j) t[i][j] = arow[j];
        if (!is_eq) t[i][n + (i - m_eq)] = 1.0;
        if (rhs < 0.0) {
            row_sign[i] = -1.0;
            rhs = -rhs;
            for (int j = 0; j < n + n_slack; ++j) t[i][j] = -t[i][j];
        }
        t[i][n + n_slack + i] = 1.0;
        t[i][cols] = rhs;
    }

    std::vector<int> bas(m);
    for (int i = 0; i < m; ++i) bas[i] = n + n_slack + i;

    const auto pivot = [&](int row, int col) {
        const double p = t[row][col];
        for (int j = 0; j <= cols; ++j) t[row][j] /= p;
        for (int i = 0; i < m; ++i) {
            if (i == row) continue;
            const double f = t[i][col];
            if (f == 0.0) continue;
            for (int j = 0; j <= cols; ++j) t[i][j] -= f * t[row][j];
        }
        bas[row] = col;
    };

    // Bland's rule simplex on the current cost vector; `allowed` masks columns.
    const auto run = [&](const std::vector<double>& cost, int allowed_cols) -> bool {
        for (long guard = 0; guard < 100000; ++guard) {
            int enter = -1;
            for (int j = 0; j < allowed_cols; ++j) {
                double d = cost[j];
                for (int i = 0; i < m; ++i) d -= cost[bas[i]] * t[i][j];
                bool in_basis = false;
                for (int i = 0; i < m; ++i)
                    if (bas[i] == j) in_basis = true;
                if (!in_basis && d < -1e-9) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;  // optimal for this phase
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (t[i][enter] > 1e-9) {
                    const double ratio = t[i][cols] / t[i][enter];
                    if (ratio < best - 1e-12 ||
                        (ratio < best + 1e-12 && (leave < 0 || bas[i] < bas[leave]))) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return false;  // unbounded direction
            pivot(leave, enter);
        }
        throw std::runtime_error("dense simplex exceeded its iteration guard");
    };

    DenseResult out;

    std::vector<double> cost1(cols, 0.0);
    for (int i = 0; i < n_art; ++i) cost1[n + n_slack + i] = 1.0;
    run(cost1, cols);
    double phi = 0.0;
    for (int i = 0; i < m; ++i)
        if (bas[i] >= n + n_slack) phi += t[i][cols];
    if (phi > 1e-7) {
        out.feasible = false;
        return out;
    }
    out.feasible = true;

    // Degenerately pivot out any artificial still basic at zero; otherwise a
    // later pivot could push it positive and silently relax its row.  Rows
    // where no pivot exists are all-zero over the real columns (redundant)
    // and can never change value again.
    for (int i = 0; i < m; ++i) {
        if (bas[i] < n + n_slack) continue;
        int j_found = -1;
        for (int j = 0; j < n + n_slack && j_found < 0; ++j) {
            bool in_basis = false;
            for (int k = 0; k < m; ++k)
                if (bas[k] == j) in_basis = true;
            if (!in_basis && std::abs(t[i][j]) > 1e-7) j_found = j;
        }
        if (j_found >= 0) pivot(i, j_found);
    }

    std::vector<double> cost2(cols, 0.0);
    for (int j = 0; j < n; ++j) cost2[j] = in.c[j];
    // Artificial columns stay (they expose B^{-1} for duals) but may not enter.
    const bool bounded = run(cost2, n + n_slack);
    out.bounded = bounded;
    if (!bounded) return out;

    out.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
        if (bas[i] < n) out.x[bas[i]] = t[i][cols];
    out.objective = 0.0;
    for (int j = 0; j < n; ++j) out.objective += in.c[j] * out.x[j];

    // y' = c_B' B^{-1}; the artificial block of the tableau holds B^{-1},
    // with a sign flip for rows that were negated.
    out.y.assign(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double yi = 0.0;
        for (int k = 0; k < m; ++k) yi += cost2[bas[k]] * t[k][n + n_slack + i];
        out.y[i] = yi * row_sign[i];
    }
    return out;
}

} // namespace vertiflow::testsupport
