#pragma once

// Quadratic center/slow-manifold expansions: monomial-keyed parametrizations,
// the closed forms in original coordinates and in chart K1, invariance
// residuals, tail bounds and Hausdorff/convergence diagnostics.
//
// Expansions are stored in shifted original variables (equilibrium at the
// origin), never in block-diagonalized coordinates, so closed forms and the
// numeric homological solver are directly comparable.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blowup/charts.hpp"
#include "blowup/linalg.hpp"
#include "blowup/model.hpp"
#include "blowup/spectral.hpp"

namespace blowup::manifolds {

struct resonance_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Monomial in the center variables, total degree <= 2.
/// (-1,-1) is the constant, (i,-1) is xi_i, (i,j) with i <= j is xi_i xi_j.
struct Monomial {
    int i = -1;
    int j = -1;

    static Monomial one() { return {-1, -1}; }
    static Monomial lin(int i) { return {i, -1}; }
    static Monomial quad(int i, int j) { return {std::min(i, j), std::max(i, j)}; }

    int degree() const { return (i < 0) ? 0 : (j < 0 ? 1 : 2); }
    auto operator<=>(const Monomial&) const = default;
};

struct ManifoldExpansion {
    charts::Chart chart = charts::Chart::Orig;
    std::string base_point;  // human-readable description of the expansion center
    int k0 = 1;
    std::vector<std::string> center_names;
    std::vector<std::string> graph_names;
    std::vector<std::map<Monomial, double>> rows;  // one map per graph variable

    double coeff(size_t row, Monomial m) const {
        const auto& r = rows.at(row);
        auto it = r.find(m);
        return it == r.end() ? 0.0 : it->second;
    }
    void set(size_t row, Monomial m, double value) {
        if (value != 0.0) rows.at(row)[m] = value;
    }

    double eval_row(size_t row, std::span<const double> xi) const {
        double s = 0.0;
        for (const auto& [m, c] : rows.at(row)) {
            switch (m.degree()) {
                case 0: s += c; break;
                case 1: s += c * xi[size_t(m.i)]; break;
                default: s += c * xi[size_t(m.i)] * xi[size_t(m.j)];
            }
        }
        return s;
    }
    std::vector<double> eval(std::span<const double> xi) const {
        std::vector<double> out(rows.size());
        for (size_t r = 0; r < rows.size(); ++r) out[r] = eval_row(r, xi);
        return out;
    }
    /// d(row)/d(xi_c) at xi.
    double partial(size_t row, size_t c, std::span<const double> xi) const {
        double s = 0.0;
        for (const auto& [m, co] : rows.at(row)) {
            if (m.degree() == 1 && size_t(m.i) == c) s += co;
            if (m.degree() == 2) {
                if (size_t(m.i) == c) s += co * xi[size_t(m.j)];
                if (size_t(m.j) == c) s += co * xi[size_t(m.i)];
            }
        }
        return s;
    }
    double max_abs_coeff(size_t row) const {
        double m = 0.0;
        for (const auto& [mon, c] : rows.at(row)) m = std::max(m, std::abs(c));
        return m;
    }
};

// ---------------------------------------------------------------------------
// Closed form in original coordinates.
// Centers: [v1s, eps, v_2..v_k0]; graphs: [u1s, u_2..u_k0]; base point
// u1 = v1 = c, higher modes and eps zero.

struct ClosedFormOptions {
    double c_smallness = 10.0;        // |c| must stay below this
    double resonance_rel = 1e-6;      // reject when |lhat_k + 2c| < rel * |2c|
};

inline ManifoldExpansion cm_closed_form(int k0, double c, double mu, double a, const ClosedFormOptions& opt = {}) {
    if (!(c < 0.0)) throw std::domain_error("cm_closed_form: requires c < 0");
    if (std::abs(c) >= opt.c_smallness) throw std::domain_error("cm_closed_form: |c| above smallness threshold");
    if (k0 < 1) throw std::domain_error("cm_closed_form: k0 must be >= 1");
    spectral::require_half_length(a);

    ManifoldExpansion e;
    e.chart = charts::Chart::Orig;
    e.base_point = "u1=v1=c, eps=0, c=" + std::to_string(c);
    e.k0 = k0;
    e.center_names = {"v1s", "eps"};
    e.graph_names = {"u1s"};
    for (int k = 2; k <= k0; ++k) {
        e.center_names.push_back("v" + std::to_string(k));
        e.graph_names.push_back("u" + std::to_string(k));
    }
    e.rows.resize(size_t(k0));

    std::vector<double> lhat(size_t(k0) + 1, 0.0), gamma(size_t(k0) + 1, 0.0);
    for (int k = 2; k <= k0; ++k) {
        lhat[size_t(k)] = spectral::scaled_eigenvalue(k, a);
        const double den = lhat[size_t(k)] + 2.0 * c;
        if (std::abs(den) < opt.resonance_rel * std::abs(2.0 * c))
            throw resonance_error("cm_closed_form: lhat_k + 2c resonance at k=" + std::to_string(k));
        gamma[size_t(k)] = 2.0 * c / den;
    }

    const int V1 = 0, EPS = 1;
    auto vidx = [](int k) { return k; };  // center index of v_k, k >= 2

    // h_1: v1s - a(mu-1)/c eps + a(mu-1)/c^2 v1s*eps - a^2(mu-3)(mu-1)/(2c^3) eps^2
    //      + sum_j [1/(2c) - 2c/(lhat_j+2c)^2] v_j^2
    e.set(0, Monomial::lin(V1), 1.0);
    e.set(0, Monomial::lin(EPS), -a * (mu - 1.0) / c);
    e.set(0, Monomial::quad(V1, EPS), a * (mu - 1.0) / (c * c));
    e.set(0, Monomial::quad(EPS, EPS), -a * a * (mu - 3.0) * (mu - 1.0) / (2.0 * c * c * c));
    for (int j = 2; j <= k0; ++j) {
        const double lj = lhat[size_t(j)];
        e.set(0, Monomial::quad(vidx(j), vidx(j)), 1.0 / (2.0 * c) - 2.0 * c / ((lj + 2.0 * c) * (lj + 2.0 * c)));
    }

    // h_k: gamma_k v_k + delta_k v_k eps + eta_k v1s v_k
    //      - sqrt2 S_ij alpha_ij^k (gamma_i gamma_j - 1)/(lhat_k + 2c) v_i v_j
    for (int k = 2; k <= k0; ++k) {
        const size_t row = size_t(k - 1);
        const double lk = lhat[size_t(k)];
        const double den = lk + 2.0 * c;
        e.set(row, Monomial::lin(vidx(k)), gamma[size_t(k)]);
        e.set(row, Monomial::quad(vidx(k), EPS),
              2.0 * (c * lk * (2.0 * c + lk) + 4.0 * a * c * (mu - 1.0) + 2.0 * a * lk * mu) / (den * den * den));
        e.set(row, Monomial::quad(V1, vidx(k)), 2.0 * lk / (den * den));
        for (int i = 2; i <= k0; ++i)
            for (int j = i; j <= k0; ++j) {
                const double al = spectral::alpha(i, j, k);
                if (al == 0.0) continue;
                const double sym = (i == j) ? 1.0 : 2.0;
                e.set(row, Monomial::quad(vidx(i), vidx(j)),
                      -std::sqrt(2.0) * sym * al * (gamma[size_t(i)] * gamma[size_t(j)] - 1.0) / den);
            }
    }
    return e;
}

// ---------------------------------------------------------------------------
// Closed form in chart K1 at the equilibrium p_{a,1}^-(a1*), corrected for the
// u_{k,1} <- v_{k,1} linear coupling that the base point v_{1,1} = -1 induces.
// Centers: [r1, eps1, a1s, v_{2,1}..v_{k0,1}]; graphs: [v11s, u_{2,1}..].
// Well-defined at a1* = 0, where all u-rows vanish through second order.

inline ManifoldExpansion cm_closed_form_K1(int k0, double a1_star, double mu, const ClosedFormOptions& opt = {}) {
    if (a1_star < 0.0) throw std::domain_error("cm_closed_form_K1: a1* must be >= 0");
    if (k0 < 1) throw std::domain_error("cm_closed_form_K1: k0 must be >= 1");

    ManifoldExpansion e;
    e.chart = charts::Chart::K1;
    e.base_point = "p_a1^-(a1*), a1*=" + std::to_string(a1_star);
    e.k0 = k0;
    e.center_names = {"r1", "eps1", "a1s"};
    e.graph_names = {"v11s"};
    for (int k = 2; k <= k0; ++k) {
        e.center_names.push_back("v" + std::to_string(k) + "_1");
        e.graph_names.push_back("u" + std::to_string(k) + "_1");
    }
    e.rows.resize(size_t(k0));

    const int EPS1 = 1, A1S = 2;
    auto widx = [](int k) { return k + 1; };  // center index of v_{k,1}, k >= 2

    const double A = a1_star;
    std::vector<double> D(size_t(k0) + 1, 0.0), m(size_t(k0) + 1, 0.0);
    for (int k = 2; k <= k0; ++k) {
        if (A > 0.0) {
            D[size_t(k)] = spectral::b_coefficient(k) * std::pow(A, -1.5) - 2.0;
            if (std::abs(D[size_t(k)]) < opt.resonance_rel)
                throw resonance_error("cm_closed_form_K1: resonance at k=" + std::to_string(k));
            m[size_t(k)] = -2.0 / D[size_t(k)];
        }
    }

    // v11s row: (1-mu) A eps1 + (1-mu) a1s eps1 + A^2 (mu^2-1)/2 eps1^2
    //           + sum_k (1 - m_k^2)/2 v_{k,1}^2
    e.set(0, Monomial::lin(EPS1), (1.0 - mu) * A);
    e.set(0, Monomial::quad(A1S, EPS1), 1.0 - mu);
    e.set(0, Monomial::quad(EPS1, EPS1), A * A * (mu * mu - 1.0) / 2.0);
    for (int k = 2; k <= k0; ++k)
        e.set(0, Monomial::quad(widx(k), widx(k)), (1.0 - m[size_t(k)] * m[size_t(k)]) / 2.0);

    if (A > 0.0) {
        for (int k = 2; k <= k0; ++k) {
            const size_t row = size_t(k - 1);
            const double Dk = D[size_t(k)];
            const double Ak = -3.0 * spectral::b_coefficient(k) * std::pow(A, -2.5) / (Dk * Dk);
            const double Ek = (2.0 * (1.0 - mu) * A - (4.0 * A * A / 3.0) * Ak) / Dk;
            e.set(row, Monomial::lin(widx(k)), m[size_t(k)]);
            e.set(row, Monomial::quad(EPS1, widx(k)), Ek);
            e.set(row, Monomial::quad(A1S, widx(k)), Ak);
            for (int i = 2; i <= k0; ++i)
                for (int j = i; j <= k0; ++j) {
                    const double al = spectral::alpha(i, j, k);
                    if (al == 0.0) continue;
                    const double sym = (i == j) ? 1.0 : 2.0;
                    e.set(row, Monomial::quad(widx(i), widx(j)),
                          -std::sqrt(2.0) * sym * al * (m[size_t(i)] * m[size_t(j)] - 1.0) / Dk);
                }
        }
    }
    return e;
}

/// First-order reduced center manifold on the invariant set
/// {r1 = u_j = v_j = 0}: h^-(rho1) = -1 + (1-mu) rho1, h^+ = 1 + (1+mu) rho1,
/// with rho1 = a1*eps1 (the convention under which F1 on the graph is
/// 2 rho1 + O(rho1^2) and the graph agrees with the full K1 expansion).
inline double reduced_Hpm(model::BranchSign sign, double rho1, double mu) {
    if (rho1 < 0.0) throw std::domain_error("reduced_Hpm: rho1 must be >= 0");
    return sign == model::BranchSign::Minus ? -1.0 + (1.0 - mu) * rho1 : 1.0 + (1.0 + mu) * rho1;
}

// ---------------------------------------------------------------------------
// Invariance residual.

/// Binds an expansion's variables to slots of a packed field layout.
struct FieldSplit {
    std::function<void(std::span<const double>, std::span<double>)> field;
    std::vector<double> base;          // equilibrium in the packed layout
    std::vector<size_t> center_slot;   // one per expansion center variable
    std::vector<size_t> graph_slot;    // one per expansion graph variable
};

struct ResidualReport {
    double max_defect = 0.0;
    std::vector<double> row_defect;
};

/// Defect of the invariance identity at center offset xi, using the expansion
/// as the graph: max_row | d/dt h_row - f_graph_row |.
inline ResidualReport invariance_residual(const ManifoldExpansion& e, const FieldSplit& fs,
                                          std::span<const double> xi) {
    if (xi.size() != e.center_names.size()) throw std::invalid_argument("invariance_residual: xi size mismatch");
    std::vector<double> x = fs.base;
    for (size_t c = 0; c < xi.size(); ++c) x[fs.center_slot[c]] += xi[c];
    std::vector<double> h = e.eval(xi);
    for (size_t g = 0; g < h.size(); ++g) x[fs.graph_slot[g]] += h[g];
    std::vector<double> f(x.size());
    fs.field(x, f);

    ResidualReport rep;
    rep.row_defect.resize(h.size());
    for (size_t g = 0; g < h.size(); ++g) {
        double lhs = 0.0;
        for (size_t c = 0; c < xi.size(); ++c) lhs += e.partial(g, c, xi) * f[fs.center_slot[c]];
        rep.row_defect[g] = std::abs(lhs - f[fs.graph_slot[g]]);
        rep.max_defect = std::max(rep.max_defect, rep.row_defect[g]);
    }
    return rep;
}

/// Log-log slope of the residual along the ray s * dir, s in [s_min, s_max].
inline double residual_ray_slope(const ManifoldExpansion& e, const FieldSplit& fs, std::span<const double> dir,
                                 double s_min = 1e-4, double s_max = 1e-2, int npts = 9) {
    std::vector<double> ls, lr;
    for (int i = 0; i < npts; ++i) {
        const double s = s_min * std::pow(s_max / s_min, double(i) / double(npts - 1));
        std::vector<double> xi(dir.size());
        for (size_t c = 0; c < dir.size(); ++c) xi[c] = s * dir[c];
        const double res = invariance_residual(e, fs, xi).max_defect;
        if (res > 0.0) {
            ls.push_back(std::log(s));
            lr.push_back(std::log(res));
        }
    }
    if (ls.size() < 2) return std::numeric_limits<double>::infinity();  // identically zero residual
    return num::fit_line(ls, lr).slope;
}

// ---------------------------------------------------------------------------
// Tail bounds (Thm 2.4 shape): |h_k| <= C / |lhat_k| (||v||^2 + (1 + eps)).

struct TailBoundReport {
    std::vector<int> k;             // modes 2..k0
    std::vector<double> fitted_C;   // smallest C per mode over the sample set
    std::vector<double> coeff_C;    // max|coefficient of h_k| * |b_k|
    double max_C = 0.0;
};

inline TailBoundReport tail_bound_check(const ManifoldExpansion& e, double a,
                                        std::span<const std::vector<double>> samples) {
    TailBoundReport rep;
    const size_t ncenter = e.center_names.size();
    for (int k = 2; k <= e.k0; ++k) {
        const size_t row = size_t(k - 1);
        const double lk = std::abs(spectral::scaled_eigenvalue(k, a));
        double C = 0.0;
        for (const auto& s : samples) {
            if (s.size() != ncenter) throw std::invalid_argument("tail_bound_check: sample size mismatch");
            double vnorm2 = s[0] * s[0];
            for (size_t c = 2; c < ncenter; ++c) vnorm2 += s[c] * s[c];
            const double eps = s[1];
            const double bound = (vnorm2 + 1.0 + eps);
            C = std::max(C, std::abs(e.eval_row(row, s)) * lk / bound);
        }
        rep.k.push_back(k);
        rep.fitted_C.push_back(C);
        rep.coeff_C.push_back(e.max_abs_coeff(row) * std::abs(spectral::b_coefficient(k)));
        rep.max_C = std::max(rep.max_C, C);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Hausdorff distance between finite samples in the ambient l2 norm.

inline double hausdorff_distance(std::span<const std::vector<double>> A, std::span<const std::vector<double>> B) {
    if (A.empty() || B.empty()) throw std::invalid_argument("hausdorff_distance: empty set");
    auto directed = [](std::span<const std::vector<double>> X, std::span<const std::vector<double>> Y) {
        double sup = 0.0;
        for (const auto& x : X) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& y : Y) {
                if (x.size() != y.size()) throw std::invalid_argument("hausdorff_distance: dimension mismatch");
                double d2 = 0.0;
                for (size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
                best = std::min(best, d2);
                if (best == 0.0) break;
            }
            sup = std::max(sup, best);
        }
        return std::sqrt(sup);
    };
    return std::max(directed(A, B), directed(B, A));
}

// ---------------------------------------------------------------------------
// Convergence of h^{k0} toward a reference truncation on a fixed grid family.

struct GridSpec {
    int points = 5;          // per tensor direction (v1 shift, eps, mode amplitude)
    double v1_range = 0.05;  // v1s in [-v1_range, v1_range]
    double eps_max = 0.01;
    double mode_norm = 0.1;  // l2 norm of the mode profile at full amplitude
    double profile_exponent = 2.0;
    long seed = -1;          // >= 0: LCG sign shuffle of the mode profile
};

/// Mode profile v_k, k = 2..kmax, with k^{-p} decay, alternating (or seeded)
/// signs, normalized to unit l2.
inline std::vector<double> mode_profile(int kmax, const GridSpec& g) {
    std::vector<double> w(size_t(kmax - 1));
    unsigned long long state = (g.seed >= 0) ? (unsigned long long)(g.seed) * 6364136223846793005ULL + 1442695040888963407ULL : 0ULL;
    double n2 = 0.0;
    for (int k = 2; k <= kmax; ++k) {
        double sgn = (k % 2 == 0) ? 1.0 : -1.0;
        if (g.seed >= 0) {
            state = state * 6364136223846793005ULL + 1442695040888963407ULL;
            sgn = ((state >> 62) & 1ULL) ? 1.0 : -1.0;
        }
        w[size_t(k - 2)] = sgn * std::pow(double(k), -g.profile_exponent);
        n2 += w[size_t(k - 2)] * w[size_t(k - 2)];
    }
    for (auto& x : w) x /= std::sqrt(n2);
    return w;
}

struct ConvergenceRow {
    int k0 = 0;
    double sup_dist = 0.0;   // sup over grid of ||h^{k0} - h^{kref}||_2 (rows padded)
    double hausdorff = 0.0;  // d_H between the sampled graphs
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> table;
    double decay_exponent = 0.0;  // fitted slope of -log(sup_dist) vs log(k0)
    int kref = 0;
};

inline ConvergenceReport convergence_report(std::span<const int> k0_list, double c, double mu, double a,
                                            const GridSpec& grid = {}, int kref = 64) {
    for (int k0 : k0_list)
        if (k0 >= kref) throw std::invalid_argument("convergence_report: k0 must stay below kref");
    const ManifoldExpansion href = cm_closed_form(kref, c, mu, a);
    const std::vector<double> prof = mode_profile(kref, grid);

    // Tensor grid: v1 shift x eps x mode amplitude.
    std::vector<std::vector<double>> xis;  // center vectors for kref
    for (int iv = 0; iv < grid.points; ++iv)
        for (int ie = 0; ie < grid.points; ++ie)
            for (int im = 0; im < grid.points; ++im) {
                std::vector<double> xi(size_t(kref) + 1, 0.0);
                xi[0] = -grid.v1_range + 2.0 * grid.v1_range * double(iv) / double(grid.points - 1);
                xi[1] = grid.eps_max * double(ie) / double(grid.points - 1);
                const double amp = grid.mode_norm * double(im) / double(grid.points - 1);
                for (int k = 2; k <= kref; ++k) xi[size_t(k)] = amp * prof[size_t(k - 2)];
                xis.push_back(std::move(xi));
            }

    auto graph_padded = [&](const ManifoldExpansion& e, std::span<const double> xi_full) {
        std::vector<double> xi(size_t(e.k0) + 1);
        std::copy(xi_full.begin(), xi_full.begin() + e.k0 + 1, xi.begin());
        std::vector<double> g = e.eval(xi);
        g.resize(size_t(kref), 0.0);
        return g;
    };

    ConvergenceReport rep;
    rep.kref = kref;
    std::vector<double> lk0, ld;
    for (int k0 : k0_list) {
        const ManifoldExpansion ek = cm_closed_form(k0, c, mu, a);
        double sup = 0.0;
        std::vector<std::vector<double>> cloud_k, cloud_ref;
        for (const auto& xi : xis) {
            const std::vector<double> gk = graph_padded(ek, xi);
            const std::vector<double> gr = graph_padded(href, xi);
            double d2 = 0.0;
            for (size_t i = 0; i < gk.size(); ++i) d2 += (gk[i] - gr[i]) * (gk[i] - gr[i]);
            sup = std::max(sup, std::sqrt(d2));
            // manifold points (u, v, eps) for the Hausdorff clouds
            std::vector<double> pk = gk, pr = gr;
            pk.insert(pk.end(), xi.begin(), xi.end());
            pr.insert(pr.end(), xi.begin(), xi.end());
            cloud_k.push_back(std::move(pk));
            cloud_ref.push_back(std::move(pr));
        }
        ConvergenceRow row;
        row.k0 = k0;
        row.sup_dist = sup;
        row.hausdorff = hausdorff_distance(cloud_k, cloud_ref);
        rep.table.push_back(row);
        if (sup > 0.0) {
            lk0.push_back(std::log(double(k0)));
            ld.push_back(std::log(sup));
        }
    }
    rep.decay_exponent = (lk0.size() >= 2) ? -num::fit_line(lk0, ld).slope : std::numeric_limits<double>::infinity();
    return rep;
}

}  // namespace blowup::manifolds
