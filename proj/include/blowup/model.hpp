#pragma once

// Truncated Galerkin system in original coordinates, after the time change
// that absorbs the 1/sqrt(2a) factor:
//
//   u1' = u1^2 - v1^2 + 2 a eps mu + sum_{j>=2} (uj^2 - vj^2) + H1u
//   v1' = eps (2a + H1v)
//   uk' = lhat_k uk + 2 (uk u1 - vk v1) + sqrt2 sum alpha_{ij}^k (ui uj - vi vj) + Hku
//   vk' = eps (lhat_k vk + Hkv)
//   eps' = 0,  a' = 0
//
// State layout: [u_1..u_k0, v_1..v_k0, eps, a], dimension 2*k0+2.

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "blowup/spectral.hpp"

namespace blowup::model {

/// Per-mode higher-order hooks H_k^u, H_k^v. Empty means identically zero and
/// the field is exactly polynomial.
using Hook = std::function<double(int k, std::span<const double> u, std::span<const double> v, double eps)>;

struct ModelParams {
    double mu = 0.0;
    double a = 1.0;
    double eps = 0.0;
    int k0 = 1;
    Hook hu;  // H_k^u
    Hook hv;  // H_k^v

    void validate() const {
        if (!(a > 0.0)) throw std::domain_error("ModelParams: a must be positive");
        if (eps < 0.0) throw std::domain_error("ModelParams: eps must be >= 0");
        if (k0 < 1) throw std::domain_error("ModelParams: k0 must be >= 1");
    }
};

struct GalerkinState {
    std::vector<double> u;
    std::vector<double> v;

    int k0() const { return int(u.size()); }
    double norm2() const {
        double s = 0.0;
        for (double x : u) s += x * x;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    }
};

inline constexpr size_t state_dim(int k0) { return 2 * size_t(k0) + 2; }

inline std::vector<double> pack(const GalerkinState& s, double eps, double a) {
    const int k0 = s.k0();
    std::vector<double> x(state_dim(k0));
    for (int k = 0; k < k0; ++k) x[size_t(k)] = s.u[size_t(k)];
    for (int k = 0; k < k0; ++k) x[size_t(k0 + k)] = s.v[size_t(k)];
    x[size_t(2 * k0)] = eps;
    x[size_t(2 * k0) + 1] = a;
    return x;
}

inline GalerkinState unpack(std::span<const double> x, int k0, double* eps = nullptr, double* a = nullptr) {
    GalerkinState s;
    s.u.assign(x.begin(), x.begin() + k0);
    s.v.assign(x.begin() + k0, x.begin() + 2 * k0);
    if (eps) *eps = x[size_t(2 * k0)];
    if (a) *a = x[size_t(2 * k0) + 1];
    return s;
}

/// sqrt2 * sum_{i,j=2}^{k0} alpha_{ij}^k (xi xj - yi yj), evaluated through the
/// resonance selection rule (i+j = k+1 or |i-j| = k-1) with alpha = 1/2 each.
/// `u2`, `v2` are spans of the modes 2..k0 (index 0 is mode 2).
template <class T>
T coupling_sum_modes(int k, int k0, std::span<const T> u2, std::span<const T> v2) {
    const double sq2 = std::sqrt(2.0);
    T s{};
    // i + j = k + 1 with 2 <= i, j <= k0
    for (int i = std::max(2, k + 1 - k0); i <= std::min(k0, k - 1); ++i) {
        const int j = k + 1 - i;
        s += u2[size_t(i - 2)] * u2[size_t(j - 2)] - v2[size_t(i - 2)] * v2[size_t(j - 2)];
    }
    // |i - j| = k - 1 with 2 <= i, j <= k0 (two ordered families, i > j and i < j)
    for (int j = 2; j + (k - 1) <= k0; ++j) {
        const int i = j + (k - 1);
        s += 2.0 * (u2[size_t(i - 2)] * u2[size_t(j - 2)] - v2[size_t(i - 2)] * v2[size_t(j - 2)]);
    }
    return s * (0.5 * sq2);
}

/// Same sum over full spans (index 0 is mode 1).
template <class T>
T coupling_sum(int k, int k0, std::span<const T> u, std::span<const T> v) {
    if (k0 < 2) return T{};
    return coupling_sum_modes<T>(k, k0, u.subspan(1), v.subspan(1));
}

/// Polynomial core of the field (hooks ignored), templated so second-order
/// jets can be pushed through it.
template <class T>
void rhs_core(const ModelParams& p, std::span<const T> x, std::span<T> dx) {
    using std::pow;
    const int k0 = p.k0;
    if (x.size() != state_dim(k0) || dx.size() != state_dim(k0))
        throw std::invalid_argument("model::rhs_core: dimension mismatch");
    std::span<const T> u = x.subspan(0, size_t(k0));
    std::span<const T> v = x.subspan(size_t(k0), size_t(k0));
    const T& eps = x[size_t(2 * k0)];
    const T& a = x[size_t(2 * k0) + 1];

    T modes{};
    for (int j = 2; j <= k0; ++j)
        modes += u[size_t(j - 1)] * u[size_t(j - 1)] - v[size_t(j - 1)] * v[size_t(j - 1)];

    dx[0] = u[0] * u[0] - v[0] * v[0] + 2.0 * p.mu * (a * eps) + modes;
    dx[size_t(k0)] = 2.0 * (a * eps);

    for (int k = 2; k <= k0; ++k) {
        const T lhat = spectral::b_coefficient(k) * pow(a, -1.5);
        dx[size_t(k - 1)] = lhat * u[size_t(k - 1)] + 2.0 * (u[size_t(k - 1)] * u[0] - v[size_t(k - 1)] * v[0]) +
                            coupling_sum<T>(k, k0, u, v);
        dx[size_t(k0 + k - 1)] = eps * (lhat * v[size_t(k - 1)]);
    }
    dx[size_t(2 * k0)] = T{};
    dx[size_t(2 * k0) + 1] = T{};
}

/// Full right-hand side including hooks (double path).
inline void vector_field(const ModelParams& p, std::span<const double> x, std::span<double> dx) {
    rhs_core<double>(p, x, dx);
    if (p.hu || p.hv) {
        const int k0 = p.k0;
        std::span<const double> u = x.subspan(0, size_t(k0));
        std::span<const double> v = x.subspan(size_t(k0), size_t(k0));
        const double eps = x[size_t(2 * k0)];
        for (int k = 1; k <= k0; ++k) {
            if (p.hu) dx[size_t(k - 1)] += p.hu(k, u, v, eps);
            if (p.hv) dx[size_t(k0 + k - 1)] += eps * p.hv(k, u, v, eps);
        }
    }
}

inline GalerkinState vector_field(const ModelParams& p, const GalerkinState& s) {
    if (s.k0() != p.k0) throw std::invalid_argument("vector_field: state size does not match k0");
    std::vector<double> x = pack(s, p.eps, p.a);
    std::vector<double> dx(x.size());
    vector_field(p, x, dx);
    return unpack(dx, p.k0);
}

/// The pre-time-change field of the raw Galerkin projection is the same field
/// divided by sqrt(2a); exposed for the pushforward tests.
inline double time_change_factor(double a) { return std::sqrt(2.0 * a); }

enum class BranchSign { Minus, Plus };

/// Point on the critical branch S_a^{-,k0} (u1 = v1 < 0) or S_a^{+,k0}
/// (u1 = -v1 < 0), higher modes zero.
inline GalerkinState critical_branch(BranchSign sign, double v1, int k0) {
    if (k0 < 1) throw std::domain_error("critical_branch: k0 must be >= 1");
    if (sign == BranchSign::Minus && !(v1 < 0.0))
        throw std::domain_error("critical_branch: minus branch requires v1 < 0");
    if (sign == BranchSign::Plus && !(v1 > 0.0))
        throw std::domain_error("critical_branch: plus branch requires v1 > 0 (then u1 = -v1 < 0)");
    GalerkinState s;
    s.u.assign(size_t(k0), 0.0);
    s.v.assign(size_t(k0), 0.0);
    s.v[0] = v1;
    s.u[0] = (sign == BranchSign::Minus) ? v1 : -v1;
    return s;
}

struct DecayProfile {
    double exponent = 2.0;  // |v_k| <= (2a)^3 pi^-2 k^-exponent * delta, per Remark 2.1
};

/// Near-homogeneous initial data: (u1, v1) = (c, c), higher modes at the
/// Fourier-decay envelope with alternating signs.
inline GalerkinState initial_condition(double c, double delta, const DecayProfile& profile, int k0, double a = 1.0) {
    if (delta < 0.0) throw std::domain_error("initial_condition: delta must be >= 0");
    GalerkinState s = critical_branch(BranchSign::Minus, c, k0);
    const double amp0 = std::pow(2.0 * a, 3.0) / (spectral::pi * spectral::pi);
    for (int k = 2; k <= k0; ++k) {
        const double mag = amp0 * std::pow(double(k), -profile.exponent) * delta;
        const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
        s.u[size_t(k - 1)] = sgn * mag;
        s.v[size_t(k - 1)] = sgn * mag;
    }
    return s;
}

/// Truncation consistency: with modes above p.k0 zero, the first k0 components
/// of the k0-field and the (k0+m)-field agree.
inline bool nesting_check(const ModelParams& p, const ModelParams& p_big, const GalerkinState& padded,
                          double tol = 1e-13) {
    if (p_big.k0 < p.k0) throw std::invalid_argument("nesting_check: second truncation must be larger");
    if (padded.k0() != p_big.k0) throw std::invalid_argument("nesting_check: state must match the larger k0");
    GalerkinState small;
    small.u.assign(padded.u.begin(), padded.u.begin() + p.k0);
    small.v.assign(padded.v.begin(), padded.v.begin() + p.k0);
    const GalerkinState f_small = vector_field(p, small);
    const GalerkinState f_big = vector_field(p_big, padded);
    for (int k = 0; k < p.k0; ++k) {
        if (std::abs(f_small.u[size_t(k)] - f_big.u[size_t(k)]) > tol) return false;
        if (std::abs(f_small.v[size_t(k)] - f_big.v[size_t(k)]) > tol) return false;
    }
    return true;
}

}  // namespace blowup::model
