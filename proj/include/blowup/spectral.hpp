#pragma once

// Neumann cosine eigenbasis on [-a,a] and the triple-product coupling
// coefficients that drive the Galerkin nonlinearity.
//
// Mode indexing is 1-based throughout: e_1 is the constant mode,
// e_k for k >= 2 oscillates with frequency pi*(k-1)/(2a).

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace blowup::spectral {

inline constexpr double pi = std::numbers::pi_v<double>;

inline void require_mode(int k) {
    if (k < 1) throw std::domain_error("spectral: mode index must be >= 1");
}

inline void require_half_length(double a) {
    if (!(a > 0.0)) throw std::domain_error("spectral: half-length a must be positive");
}

/// lambda_k = -(pi (k-1) / (2a))^2, the Neumann Laplacian eigenvalue of mode k.
inline double eigenvalue(int k, double a) {
    require_mode(k);
    require_half_length(a);
    const double w = pi * double(k - 1) / (2.0 * a);
    return -w * w;
}

/// b_k = -pi^2 (k-1)^2 2^{-3/2}, the a-independent part of the scaled eigenvalue.
inline double b_coefficient(int k) {
    require_mode(k);
    return -pi * pi * double(k - 1) * double(k - 1) * std::pow(2.0, -1.5);
}

/// lambda_hat_k = sqrt(2a) * lambda_k = b_k a^{-3/2}.
inline double scaled_eigenvalue(int k, double a) {
    require_mode(k);
    require_half_length(a);
    return b_coefficient(k) * std::pow(a, -1.5);
}

/// Orthonormal eigenfunction e_k(x) on [-a,a]; the k=1 branch carries the
/// (1-sqrt(2))/sqrt(2a) constant correction and collapses to 1/sqrt(2a).
inline double eigenfunction(int k, double a, double x) {
    require_mode(k);
    require_half_length(a);
    if (x < -a || x > a) throw std::domain_error("spectral: x outside [-a,a]");
    double v = std::sqrt(1.0 / a) * std::cos(pi * double(k - 1) * (x + a) / (2.0 * a));
    if (k == 1) v += (1.0 - std::sqrt(2.0)) / std::sqrt(2.0 * a);
    return v;
}

/// alpha_{i,j}^k for 2 <= i,j,k: each of the two resonance conditions
/// (i+j-k = 1, k-|i-j| = 1) contributes 1/2 when it fires. They cannot fire
/// together in this index range, so alpha takes values in {0, 1/2}.
inline double alpha(int i, int j, int k) {
    if (i < 2 || j < 2 || k < 2) throw std::domain_error("spectral: alpha indices must be >= 2");
    double v = 0.0;
    if (i + j - k == 1) v += 0.5;
    if (k - std::abs(i - j) == 1) v += 0.5;
    return v;
}

/// Dense alpha table up to kmax with lazy per-k fill. The closed form above is
/// what the hot paths use; the table exists for bulk inspection and tests.
class CouplingTable {
  public:
    explicit CouplingTable(int kmax) : kmax_(kmax) {
        if (kmax < 2) throw std::domain_error("CouplingTable: kmax must be >= 2");
        if (kmax > 128) throw std::domain_error("CouplingTable: kmax capped at 128");
        slabs_.resize(size_t(kmax) + 1);
    }

    int kmax() const { return kmax_; }

    double operator()(int i, int j, int k) const {
        if (i < 2 || j < 2 || k < 2 || i > kmax_ || j > kmax_ || k > kmax_)
            throw std::domain_error("CouplingTable: index out of range");
        auto& slab = slabs_[size_t(k)];
        if (slab.empty()) {
            slab.resize(size_t(kmax_ + 1) * size_t(kmax_ + 1));
            for (int ii = 2; ii <= kmax_; ++ii)
                for (int jj = 2; jj <= kmax_; ++jj)
                    slab[size_t(ii) * size_t(kmax_ + 1) + size_t(jj)] = alpha(ii, jj, k);
        }
        return slab[size_t(i) * size_t(kmax_ + 1) + size_t(j)];
    }

  private:
    int kmax_;
    mutable std::vector<std::vector<double>> slabs_;
};

/// Composite Simpson over uniformly spaced samples (odd count required).
inline double simpson(std::span<const double> samples, double h) {
    const size_t n = samples.size();
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("simpson: need an odd sample count >= 3");
    double s = samples[0] + samples[n - 1];
    for (size_t i = 1; i + 1 < n; ++i) s += samples[i] * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

struct ProjectionResult {
    double value = 0.0;
    bool under_resolved = false;  // grid below 8 points per oscillation of mode k
};

/// <f, e_k> by composite Simpson. `samples` holds f on the uniform inclusive
/// grid over [-a,a].
inline ProjectionResult project(std::span<const double> samples, int k, double a) {
    require_mode(k);
    require_half_length(a);
    const size_t n = samples.size();
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("project: need an odd sample count >= 3");
    const double h = 2.0 * a / double(n - 1);
    std::vector<double> g(n);
    for (size_t i = 0; i < n; ++i) {
        const double x = -a + h * double(i);
        g[i] = samples[i] * eigenfunction(k, a, x);
    }
    ProjectionResult r;
    r.value = simpson(g, h);
    // points per oscillation: wavelength 4a/(k-1) against spacing h
    r.under_resolved = (k >= 2) && (double(n - 1) < 4.0 * double(k - 1));
    return r;
}

/// Pointwise evaluation of the truncated series sum_k c_k e_k(x).
inline double synthesize(std::span<const double> coeffs, double a, double x) {
    double s = 0.0;
    for (size_t k = 0; k < coeffs.size(); ++k)
        if (coeffs[k] != 0.0) s += coeffs[k] * eigenfunction(int(k) + 1, a, x);
    return s;
}

/// L2 inner product of two sampled functions on the uniform inclusive grid.
inline double inner_product(std::span<const double> f, std::span<const double> g, double a) {
    if (f.size() != g.size()) throw std::invalid_argument("inner_product: size mismatch");
    const double h = 2.0 * a / double(f.size() - 1);
    std::vector<double> p(f.size());
    for (size_t i = 0; i < f.size(); ++i) p[i] = f[i] * g[i];
    return simpson(p, h);
}

}  // namespace blowup::spectral
