#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "vertiflow/errors.hpp"

namespace vertiflow {

/// Dense row-major matrix of doubles.  Small convenience type used for the
/// dense model data (demand tables, flow matrices, potentials); the solver
/// keeps its own sparse structures.
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {
        assert(rows >= 0 && cols >= 0);
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    bool empty() const noexcept { return a_.empty(); }

    double& operator()(int i, int j) {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return a_[static_cast<std::size_t>(i) * cols_ + j];
    }
    double operator()(int i, int j) const {
        assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
        return a_[static_cast<std::size_t>(i) * cols_ + j];
    }

    const std::vector<double>& data() const noexcept { return a_; }
    std::vector<double>& data() noexcept { return a_; }

    /// Sum over row i.
    double row_sum(int i) const {
        double s = 0.0;
        for (int j = 0; j < cols_; ++j) s += (*this)(i, j);
        return s;
    }

    /// Sum over column j.
    double col_sum(int j) const {
        double s = 0.0;
        for (int i = 0; i < rows_; ++i) s += (*this)(i, j);
        return s;
    }

    /// x with x_i = sum_j m(i,j); the "row totals" vector.
    std::vector<double> row_sums() const {
        std::vector<double> r(static_cast<std::size_t>(rows_), 0.0);
        for (int i = 0; i < rows_; ++i) r[static_cast<std::size_t>(i)] = row_sum(i);
        return r;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::abs(v));
        return m;
    }

    double min_value() const {
        double m = 0.0;
        if (!a_.empty()) m = *std::min_element(a_.begin(), a_.end());
        return m;
    }

    friend bool operator==(const Mat& x, const Mat& y) {
        return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.a_ == y.a_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

/// Immutable sparse matrix in compressed-sparse-column form.  Duplicate
/// triplets are summed on construction; explicit zeros are kept (callers
/// that care filter themselves).
class SparseMat {
public:
    SparseMat() = default;

    static SparseMat from_triplets(int rows, int cols, std::vector<Triplet> ts) {
        SparseMat m;
        m.rows_ = rows;
        m.cols_ = cols;
        for (const Triplet& t : ts) {
            if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
                throw ValidationError("sparse matrix triplet out of range");
            if (!std::isfinite(t.value))
                throw ValidationError("sparse matrix entry is not finite");
        }
        std::sort(ts.begin(), ts.end(), [](const Triplet& a, const Triplet& b) {
            return a.col != b.col ? a.col < b.col : a.row < b.row;
        });
        m.col_ptr_.assign(static_cast<std::size_t>(cols) + 1, 0);
        for (std::size_t i = 0; i < ts.size();) {
            std::size_t j = i;
            double sum = 0.0;
            while (j < ts.size() && ts[j].row == ts[i].row && ts[j].col == ts[i].col) {
                sum += ts[j].value;
                ++j;
            }
            m.row_idx_.push_back(ts[i].row);
            m.values_.push_back(sum);
            ++m.col_ptr_[static_cast<std::size_t>(ts[i].col) + 1];
            i = j;
        }
        for (int c = 0; c < cols; ++c)
            m.col_ptr_[static_cast<std::size_t>(c) + 1] += m.col_ptr_[static_cast<std::size_t>(c)];
        return m;
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t nonzeros() const noexcept { return values_.size(); }

    /// Iterate column c: fn(row, value) for each stored entry.
    template <typename Fn>
    void for_col(int c, Fn&& fn) const {
        assert(c >= 0 && c < cols_);
        for (std::size_t k = col_ptr_[static_cast<std::size_t>(c)];
             k < col_ptr_[static_cast<std::size_t>(c) + 1]; ++k)
            fn(row_idx_[k], values_[k]);
    }

    double coeff(int r, int c) const {
        double v = 0.0;
        for_col(c, [&](int row, double value) {
            if (row == r) v += value;
        });
        return v;
    }

    /// y = A x   (dense x of length cols()).
    std::vector<double> multiply(const std::vector<double>& x) const {
        assert(static_cast<int>(x.size()) == cols_);
        std::vector<double> y(static_cast<std::size_t>(rows_), 0.0);
        for (int c = 0; c < cols_; ++c) {
            const double xc = x[static_cast<std::size_t>(c)];
            if (xc == 0.0) continue;
            for_col(c, [&](int r, double v) { y[static_cast<std::size_t>(r)] += v * xc; });
        }
        return y;
    }

    /// Y = A X   (dense X with rows() == A.cols()).
    Mat multiply(const Mat& x) const {
        assert(x.rows() == cols_);
        Mat y(rows_, x.cols());
        for (int c = 0; c < cols_; ++c)
            for_col(c, [&](int r, double v) {
                for (int j = 0; j < x.cols(); ++j) y(r, j) += v * x(c, j);
            });
        return y;
    }

    Mat to_dense() const {
        Mat d(rows_, cols_);
        for (int c = 0; c < cols_; ++c)
            for_col(c, [&](int r, double v) { d(r, c) += v; });
        return d;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::size_t> col_ptr_;
    std::vector<int> row_idx_;
    std::vector<double> values_;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double max_abs(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

} // namespace vertiflow
