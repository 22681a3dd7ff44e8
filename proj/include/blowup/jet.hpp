#pragma once

// Second-order forward-mode scalar: value, gradient and dense Hessian with
// respect to n seed variables. Enough to extract exact quadratic jets of the
// (smooth) chart and model fields at an equilibrium; n stays small (<= ~40).
//
// A default-constructed Jet2 is a dimensionless constant; arithmetic promotes
// it to the other operand's dimension.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace blowup::num {

class Jet2 {
  public:
    double v = 0.0;

    Jet2() = default;
    explicit Jet2(double value) : v(value) {}

    static Jet2 variable(double value, size_t index, size_t n) {
        Jet2 j(value);
        j.resize(n);
        j.g[index] = 1.0;
        return j;
    }
    static Jet2 constant(double value, size_t n) {
        Jet2 j(value);
        j.resize(n);
        return j;
    }

    size_t dim() const { return g.size(); }
    double grad(size_t i) const { return g.empty() ? 0.0 : g[i]; }
    double hess(size_t i, size_t j) const { return h.empty() ? 0.0 : h[i * dim() + j]; }

    Jet2& operator+=(const Jet2& o) {
        match(o);
        v += o.v;
        if (!o.g.empty()) {
            for (size_t i = 0; i < g.size(); ++i) g[i] += o.g[i];
            for (size_t i = 0; i < h.size(); ++i) h[i] += o.h[i];
        }
        return *this;
    }
    Jet2& operator-=(const Jet2& o) {
        match(o);
        v -= o.v;
        if (!o.g.empty()) {
            for (size_t i = 0; i < g.size(); ++i) g[i] -= o.g[i];
            for (size_t i = 0; i < h.size(); ++i) h[i] -= o.h[i];
        }
        return *this;
    }

    friend Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
    friend Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
    friend Jet2 operator-(const Jet2& a) {
        Jet2 r(a);
        r.v = -r.v;
        for (auto& x : r.g) x = -x;
        for (auto& x : r.h) x = -x;
        return r;
    }

    friend Jet2 operator*(const Jet2& a, const Jet2& b) {
        if (a.g.empty()) return scale(b, a.v);
        if (b.g.empty()) return scale(a, b.v);
        if (a.dim() != b.dim()) throw std::logic_error("Jet2: dimension mismatch");
        const size_t n = a.dim();
        Jet2 r;
        r.resize(n);
        r.v = a.v * b.v;
        for (size_t i = 0; i < n; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                r.h[i * n + j] = a.h[i * n + j] * b.v + a.v * b.h[i * n + j] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
        return r;
    }

    friend Jet2 operator*(const Jet2& a, double c) { return scale(a, c); }
    friend Jet2 operator*(double c, const Jet2& a) { return scale(a, c); }
    friend Jet2 operator+(Jet2 a, double c) { a.v += c; return a; }
    friend Jet2 operator+(double c, Jet2 a) { a.v += c; return a; }
    friend Jet2 operator-(Jet2 a, double c) { a.v -= c; return a; }
    friend Jet2 operator-(double c, const Jet2& a) { return -(a - c); }

    friend Jet2 operator/(const Jet2& a, const Jet2& b) { return a * unary(b, 1.0 / b.v, -1.0 / (b.v * b.v), 2.0 / (b.v * b.v * b.v)); }
    friend Jet2 operator/(const Jet2& a, double c) { return scale(a, 1.0 / c); }
    friend Jet2 operator/(double c, const Jet2& b) { return unary(b, c / b.v, -c / (b.v * b.v), 2.0 * c / (b.v * b.v * b.v)); }

    /// Chain rule through a scalar function given f(v), f'(v), f''(v).
    static Jet2 unary(const Jet2& a, double f, double fp, double fpp) {
        Jet2 r;
        const size_t n = a.dim();
        r.resize(n);
        r.v = f;
        for (size_t i = 0; i < n; ++i) r.g[i] = fp * a.g[i];
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) r.h[i * n + j] = fp * a.h[i * n + j] + fpp * a.g[i] * a.g[j];
        return r;
    }

  private:
    std::vector<double> g;  // gradient, length n
    std::vector<double> h;  // Hessian, n*n row-major

    void resize(size_t n) {
        g.assign(n, 0.0);
        h.assign(n * n, 0.0);
    }
    void match(const Jet2& o) {
        if (g.empty() && !o.g.empty()) {
            g.assign(o.g.size(), 0.0);
            h.assign(o.h.size(), 0.0);
        } else if (!g.empty() && !o.g.empty() && g.size() != o.g.size()) {
            throw std::logic_error("Jet2: dimension mismatch");
        }
    }
    static Jet2 scale(Jet2 a, double c) {
        a.v *= c;
        for (auto& x : a.g) x *= c;
        for (auto& x : a.h) x *= c;
        return a;
    }
};

inline Jet2 pow(const Jet2& a, double e) {
    const double f = std::pow(a.v, e);
    return Jet2::unary(a, f, e * std::pow(a.v, e - 1.0), e * (e - 1.0) * std::pow(a.v, e - 2.0));
}
inline Jet2 sqrt(const Jet2& a) { return pow(a, 0.5); }
inline Jet2 exp(const Jet2& a) {
    const double f = std::exp(a.v);
    return Jet2::unary(a, f, f, f);
}

}  // namespace blowup::num
