#pragma once

// Small dense linear algebra: row-major matrices, LU with partial pivoting,
// Sylvester-type solves by vectorization, and a least-squares line fit.
// Problem sizes here are tiny (a few hundred unknowns at most).

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace blowup::num {

struct Matrix {
    size_t rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
    double& operator()(size_t i, size_t j) { return a[i * cols + j]; }
    double operator()(size_t i, size_t j) const { return a[i * cols + j]; }
};

inline Matrix matmul(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matmul: shape mismatch");
    Matrix r(x.rows, y.cols);
    for (size_t i = 0; i < x.rows; ++i)
        for (size_t k = 0; k < x.cols; ++k) {
            const double xik = x(i, k);
            if (xik == 0.0) continue;
            for (size_t j = 0; j < y.cols; ++j) r(i, j) += xik * y(k, j);
        }
    return r;
}

/// LU factorization with partial pivoting. Keeps the pivot magnitudes so
/// callers can estimate conditioning (min/max pivot ratio).
class Lu {
  public:
    explicit Lu(Matrix m) : lu_(std::move(m)), piv_(lu_.rows) {
        if (lu_.rows != lu_.cols) throw std::invalid_argument("Lu: matrix must be square");
        const size_t n = lu_.rows;
        for (size_t i = 0; i < n; ++i) piv_[i] = i;
        for (size_t c = 0; c < n; ++c) {
            size_t p = c;
            for (size_t r = c + 1; r < n; ++r)
                if (std::abs(lu_(r, c)) > std::abs(lu_(p, c))) p = r;
            if (p != c) {
                for (size_t j = 0; j < n; ++j) std::swap(lu_(c, j), lu_(p, j));
                std::swap(piv_[c], piv_[p]);
            }
            const double d = lu_(c, c);
            if (d == 0.0) throw std::runtime_error("Lu: singular matrix");
            for (size_t r = c + 1; r < n; ++r) {
                const double f = lu_(r, c) / d;
                lu_(r, c) = f;
                for (size_t j = c + 1; j < n; ++j) lu_(r, j) -= f * lu_(c, j);
            }
        }
    }

    std::vector<double> solve(std::span<const double> b) const {
        const size_t n = lu_.rows;
        if (b.size() != n) throw std::invalid_argument("Lu::solve: size mismatch");
        std::vector<double> x(n);
        for (size_t i = 0; i < n; ++i) x[i] = b[piv_[i]];
        for (size_t i = 1; i < n; ++i)
            for (size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
        for (size_t i = n; i-- > 0;) {
            for (size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
            x[i] /= lu_(i, i);
        }
        return x;
    }

    /// min |pivot| / max |pivot| — a cheap ill-conditioning indicator.
    double pivot_ratio() const {
        double lo = std::abs(lu_(0, 0)), hi = lo;
        for (size_t i = 1; i < lu_.rows; ++i) {
            const double p = std::abs(lu_(i, i));
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        return hi == 0.0 ? 0.0 : lo / hi;
    }

  private:
    Matrix lu_;
    std::vector<size_t> piv_;
};

/// Solve A X - X B = C for X (sizes: A is m x m, B is n x n, C is m x n).
inline Matrix sylvester(const Matrix& A, const Matrix& B, const Matrix& C, double* pivot_ratio = nullptr) {
    const size_t m = A.rows, n = B.rows;
    if (C.rows != m || C.cols != n) throw std::invalid_argument("sylvester: shape mismatch");
    Matrix K(m * n, m * n);
    // vec by rows: X_{ij} index i*n+j;  (A X)_{ij} = sum_k A_{ik} X_{kj},
    // (X B)_{ij} = sum_k X_{ik} B_{kj}
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) {
            const size_t row = i * n + j;
            for (size_t k = 0; k < m; ++k) K(row, k * n + j) += A(i, k);
            for (size_t k = 0; k < n; ++k) K(row, i * n + k) -= B(k, j);
        }
    Lu lu(std::move(K));
    if (pivot_ratio) *pivot_ratio = lu.pivot_ratio();
    std::vector<double> rhs(m * n);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) rhs[i * n + j] = C(i, j);
    const std::vector<double> x = lu.solve(rhs);
    Matrix X(m, n);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) X(i, j) = x[i * n + j];
    return X;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least-squares line through (x_i, y_i).
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw std::runtime_error("fit_line: degenerate abscissae");
    return {(n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det};
}

}  // namespace blowup::num
