#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace rendezvous {

/**
 * Dense, row-major, dynamically sized real matrix.
 *
 * Sized for the small systems in this library (a few robots times a few
 * state axes). Every constructor that takes entries rejects NaN and Inf, so
 * a Matrix value is always finite unless arithmetic overflows afterwards.
 */
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        check_finite();
    }

    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ == 0 ? 0 : init.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_)
                throw std::invalid_argument("Matrix: ragged initializer list");
            data_.insert(data_.end(), row.begin(), row.end());
        }
        check_finite();
    }

    static Matrix from_row_major(std::size_t rows, std::size_t cols, std::vector<double> entries) {
        if (entries.size() != rows * cols)
            throw std::invalid_argument("Matrix: entry count " + std::to_string(entries.size()) +
                                        " does not match shape " + std::to_string(rows) + "x" +
                                        std::to_string(cols));
        Matrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.data_ = std::move(entries);
        m.check_finite();
        return m;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> values) {
        Matrix m(values.size(), values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            m(i, i) = values[i];
        return m;
    }

    static Matrix column(std::span<const double> values) {
        return from_row_major(values.size(), 1, {values.begin(), values.end()});
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }
    [[nodiscard]] bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    [[nodiscard]] std::span<const double> entries() const noexcept { return data_; }
    [[nodiscard]] std::span<double> entries() noexcept { return data_; }

    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return std::span<const double>(data_).subspan(i * cols_, cols_);
    }

    [[nodiscard]] Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        require_same_shape(o, "+=");
        for (std::size_t k = 0; k < data_.size(); ++k)
            data_[k] += o.data_[k];
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        require_same_shape(o, "-=");
        for (std::size_t k = 0; k < data_.size(); ++k)
            data_[k] -= o.data_[k];
        return *this;
    }

    Matrix& operator*=(double s) noexcept {
        for (auto& v : data_)
            v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }
    friend Matrix operator-(Matrix a) { return a *= -1.0; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_)
            throw std::invalid_argument("Matrix: product shape mismatch " + a.shape() + " * " + b.shape());
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0)
                    continue;
                for (std::size_t j = 0; j < b.cols_; ++j)
                    c(i, j) += aik * b(k, j);
            }
        return c;
    }

    /// Matrix-vector product for a stacked vector of length cols().
    [[nodiscard]] std::vector<double> apply(std::span<const double> v) const {
        if (v.size() != cols_)
            throw std::invalid_argument("Matrix: apply expects a vector of length " + std::to_string(cols_));
        std::vector<double> out(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols_; ++j)
                acc += (*this)(i, j) * v[j];
            out[i] = acc;
        }
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

    [[nodiscard]] double max_abs() const noexcept {
        double m = 0.0;
        for (double v : data_)
            m = std::max(m, std::abs(v));
        return m;
    }

    [[nodiscard]] double frobenius_norm() const noexcept {
        double s = 0.0;
        for (double v : data_)
            s += v * v;
        return std::sqrt(s);
    }

    /// Maximum absolute column sum.
    [[nodiscard]] double norm1() const noexcept {
        double best = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < rows_; ++i)
                s += std::abs((*this)(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    [[nodiscard]] bool is_symmetric(double rel_tol = 1e-12) const noexcept {
        if (!is_square())
            return false;
        const double scale = std::max(1.0, max_abs());
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                if (std::abs((*this)(i, j) - (*this)(j, i)) > rel_tol * scale)
                    return false;
        return true;
    }

    [[nodiscard]] bool is_diagonal(double rel_tol = 1e-12) const noexcept {
        if (!is_square())
            return false;
        const double scale = std::max(1.0, max_abs());
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                if (i != j && std::abs((*this)(i, j)) > rel_tol * scale)
                    return false;
        return true;
    }

    [[nodiscard]] std::string shape() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

private:
    void check_finite() const {
        for (double v : data_)
            if (!std::isfinite(v))
                throw numeric_error("Matrix: non-finite entry");
    }

    void require_same_shape(const Matrix& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw std::invalid_argument(std::string("Matrix: shape mismatch in ") + op + " (" + shape() +
                                        " vs " + o.shape() + ")");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Symmetric part (X + X^T) / 2.
inline Matrix symmetrize(const Matrix& x) {
    Matrix s = x + x.transpose();
    s *= 0.5;
    return s;
}

/// Entrywise closeness: |a - b| <= abs_tol + rel_tol * max(|a|, |b|).
inline bool approx_equal(const Matrix& a, const Matrix& b, double abs_tol = 1e-12, double rel_tol = 1e-10) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double x = a.entries()[k];
        const double y = b.entries()[k];
        if (std::abs(x - y) > abs_tol + rel_tol * std::max(std::abs(x), std::abs(y)))
            return false;
    }
    return true;
}

// ============================================================================
// LU factorization with partial pivoting
// ============================================================================

class LuDecomposition {
public:
    explicit LuDecomposition(Matrix a) : lu_(std::move(a)), pivot_(lu_.rows()) {
        if (!lu_.is_square())
            throw std::invalid_argument("LU: matrix must be square, got " + lu_.shape());
        const std::size_t n = lu_.rows();
        const double scale = std::max(lu_.max_abs(), 1e-300);
        for (std::size_t i = 0; i < n; ++i)
            pivot_[i] = i;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t p = k;
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > std::abs(lu_(p, k)))
                    p = i;
            if (std::abs(lu_(p, k)) <= 1e-14 * scale)
                throw numeric_error("LU: matrix is singular to working precision");
            if (p != k) {
                for (std::size_t j = 0; j < n; ++j)
                    std::swap(lu_(k, j), lu_(p, j));
                std::swap(pivot_[k], pivot_[p]);
            }
            for (std::size_t i = k + 1; i < n; ++i) {
                const double f = lu_(i, k) / lu_(k, k);
                lu_(i, k) = f;
                if (f == 0.0)
                    continue;
                for (std::size_t j = k + 1; j < n; ++j)
                    lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    [[nodiscard]] std::vector<double> solve(std::span<const double> b) const {
        const std::size_t n = lu_.rows();
        if (b.size() != n)
            throw std::invalid_argument("LU: right-hand side has wrong length");
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[pivot_[i]];
            for (std::size_t j = 0; j < i; ++j)
                s -= lu_(i, j) * x[j];
            x[i] = s;
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = x[i];
            for (std::size_t j = i + 1; j < n; ++j)
                s -= lu_(i, j) * x[j];
            x[i] = s / lu_(i, i);
        }
        return x;
    }

    [[nodiscard]] Matrix solve(const Matrix& b) const {
        if (b.rows() != lu_.rows())
            throw std::invalid_argument("LU: right-hand side has wrong row count");
        Matrix x(b.rows(), b.cols());
        std::vector<double> col(b.rows());
        for (std::size_t j = 0; j < b.cols(); ++j) {
            for (std::size_t i = 0; i < b.rows(); ++i)
                col[i] = b(i, j);
            const auto sol = solve(col);
            for (std::size_t i = 0; i < b.rows(); ++i)
                x(i, j) = sol[i];
        }
        return x;
    }

private:
    Matrix lu_;
    std::vector<std::size_t> pivot_;
};

/// Solves a X = b.
inline Matrix solve(const Matrix& a, const Matrix& b) { return LuDecomposition(a).solve(b); }

inline Matrix inverse(const Matrix& a) { return solve(a, Matrix::identity(a.rows())); }

/// Lower Cholesky factor of a symmetric positive definite matrix; nullopt otherwise.
inline std::optional<Matrix> cholesky(const Matrix& a) {
    if (!a.is_symmetric(1e-10))
        return std::nullopt;
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k)
            d -= l(j, k) * l(j, k);
        if (!(d > 0.0))
            return std::nullopt;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k)
                s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

inline bool is_positive_definite(const Matrix& a) { return cholesky(a).has_value(); }

} // namespace rendezvous
