#pragma once

// Independent order-2 center-manifold solver. Given a field, an equilibrium
// and a declared center/graph coordinate split, it
//   (i)   extracts the exact quadratic jet by second-order forward AD,
//   (ii)  computes the manifold tangent L from the algebraic Riccati
//         A_sc + A_s L - L A_c - L A_cs L = 0 (Newton; each step a Sylvester
//         solve, exact in one step when A_cs = 0),
//   (iii) solves the degree-2 homological system monomial-by-monomial,
// and returns the expansion in the original (shifted) variables. It never
// touches the closed-form coefficient tables, so it serves as their oracle.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blowup/jet.hpp"
#include "blowup/linalg.hpp"
#include "blowup/manifolds.hpp"

namespace blowup::manifolds {

struct VarSplit {
    std::vector<size_t> center;  // slots of the center variables in the field layout
    std::vector<size_t> graph;   // slots of the graphed variables
};

struct OracleOptions {
    double gap_margin = 1e-3;        // Gershgorin discs of A_s must stay left of -margin
    double resonance_pivot = 1e-9;   // LU pivot-ratio floor for the homological solve
    double equilibrium_tol = 1e-9;
    double newton_tol = 1e-12;
    int newton_max = 40;
};

struct QuadJet {
    size_t n = 0;
    std::vector<double> value;            // field at x0 (should vanish)
    num::Matrix A;                        // Jacobian
    std::vector<num::Matrix> hess;        // Hessian per output row
};

/// Exact quadratic jet of `field` at x0 via Jet2 arithmetic.
template <class Field>
QuadJet quadratic_jet(Field&& field, std::span<const double> x0) {
    const size_t n = x0.size();
    std::vector<num::Jet2> x(n), f(n);
    for (size_t i = 0; i < n; ++i) x[i] = num::Jet2::variable(x0[i], i, n);
    field(std::span<const num::Jet2>(x), std::span<num::Jet2>(f));
    QuadJet j;
    j.n = n;
    j.value.resize(n);
    j.A = num::Matrix(n, n);
    j.hess.assign(n, num::Matrix(n, n));
    for (size_t r = 0; r < n; ++r) {
        j.value[r] = f[r].v;
        for (size_t c = 0; c < n; ++c) {
            j.A(r, c) = f[r].grad(c);
            for (size_t d = 0; d < n; ++d) j.hess[r](c, d) = f[r].hess(c, d);
        }
    }
    return j;
}

namespace detail {
inline size_t tri_index(size_t a, size_t b, size_t nc) {
    // index of the monomial xi_a xi_b, a <= b, in the packed triangular order
    return a * nc - a * (a - 1) / 2 + (b - a);
}
inline size_t tri_count(size_t nc) { return nc * (nc + 1) / 2; }
}  // namespace detail

inline ManifoldExpansion solve_invariance_order2(const QuadJet& jet, const VarSplit& split,
                                                 std::vector<std::string> center_names,
                                                 std::vector<std::string> graph_names,
                                                 const OracleOptions& opt = {}) {
    const size_t n = jet.n;
    const size_t nc = split.center.size(), ng = split.graph.size();
    if (nc + ng != n) throw std::invalid_argument("solve_invariance_order2: split must cover the state");
    for (double v : jet.value)
        if (std::abs(v) > opt.equilibrium_tol)
            throw std::invalid_argument("solve_invariance_order2: base point is not an equilibrium");

    auto block = [&](const std::vector<size_t>& rows, const std::vector<size_t>& cols) {
        num::Matrix B(rows.size(), cols.size());
        for (size_t i = 0; i < rows.size(); ++i)
            for (size_t j = 0; j < cols.size(); ++j) B(i, j) = jet.A(rows[i], cols[j]);
        return B;
    };
    const num::Matrix Ac = block(split.center, split.center);
    const num::Matrix Acs = block(split.center, split.graph);
    const num::Matrix Asc = block(split.graph, split.center);
    const num::Matrix As = block(split.graph, split.graph);

    // Spectral gap via Gershgorin: every disc of A_s strictly left of -margin.
    for (size_t i = 0; i < ng; ++i) {
        double radius = 0.0;
        for (size_t j = 0; j < ng; ++j)
            if (j != i) radius += std::abs(As(i, j));
        if (!(As(i, i) + radius <= -opt.gap_margin))
            throw resonance_error("solve_invariance_order2: stable spectrum not separated from 0");
    }

    // Tangent L: Newton on G(L) = Asc + As L - L Ac - L Acs L.
    num::Matrix L(ng, nc);
    for (int it = 0;; ++it) {
        num::Matrix G = Asc;
        const num::Matrix AsL = matmul(As, L);
        const num::Matrix LAc = matmul(L, Ac);
        const num::Matrix LAcsL = matmul(L, matmul(Acs, L));
        double gn = 0.0;
        for (size_t i = 0; i < ng; ++i)
            for (size_t j = 0; j < nc; ++j) {
                G(i, j) += AsL(i, j) - LAc(i, j) - LAcsL(i, j);
                gn = std::max(gn, std::abs(G(i, j)));
            }
        if (gn <= opt.newton_tol) break;
        if (it >= opt.newton_max) throw std::runtime_error("solve_invariance_order2: tangent Newton stalled");
        // (As - L Acs) D - D (Ac + Acs L) = -G
        num::Matrix Aeff = As, Ceff = Ac;
        const num::Matrix LAcs = matmul(L, Acs);
        const num::Matrix AcsL = matmul(Acs, L);
        for (size_t i = 0; i < ng; ++i)
            for (size_t j = 0; j < ng; ++j) Aeff(i, j) -= LAcs(i, j);
        for (size_t i = 0; i < nc; ++i)
            for (size_t j = 0; j < nc; ++j) Ceff(i, j) += AcsL(i, j);
        num::Matrix negG(ng, nc);
        for (size_t i = 0; i < ng; ++i)
            for (size_t j = 0; j < nc; ++j) negG(i, j) = -G(i, j);
        const num::Matrix D = num::sylvester(Aeff, Ceff, negG);
        for (size_t i = 0; i < ng; ++i)
            for (size_t j = 0; j < nc; ++j) L(i, j) += D(i, j);
    }

    // Transformed linear blocks.
    num::Matrix Ac_t = Ac, As_t = As;  // Ac + Acs L, As - L Acs
    {
        const num::Matrix AcsL = matmul(Acs, L);
        for (size_t i = 0; i < nc; ++i)
            for (size_t j = 0; j < nc; ++j) Ac_t(i, j) += AcsL(i, j);
        const num::Matrix LAcs = matmul(L, Acs);
        for (size_t i = 0; i < ng; ++i)
            for (size_t j = 0; j < ng; ++j) As_t(i, j) -= LAcs(i, j);
    }

    // Quadratic sources R_g(xi) = (1/2) xi^T (E^T H E) xi restricted to the
    // center embedding xi -> (xi, L xi), combined as rows_graph - L rows_center.
    num::Matrix E(n, nc);
    for (size_t c = 0; c < nc; ++c) E(split.center[c], c) = 1.0;
    for (size_t g = 0; g < ng; ++g)
        for (size_t c = 0; c < nc; ++c) E(split.graph[g], c) = L(g, c);

    auto restrict_hess = [&](const num::Matrix& H) {
        num::Matrix M(nc, nc);
        for (size_t a = 0; a < nc; ++a)
            for (size_t b = 0; b < nc; ++b) {
                double s = 0.0;
                for (size_t p = 0; p < n; ++p) {
                    if (E(p, a) == 0.0) continue;
                    for (size_t q = 0; q < n; ++q) s += E(p, a) * H(p, q) * E(q, b);
                }
                M(a, b) = 0.5 * s;
            }
        return M;
    };
    std::vector<num::Matrix> R(ng);
    for (size_t g = 0; g < ng; ++g) {
        R[g] = restrict_hess(jet.hess[split.graph[g]]);
        for (size_t c = 0; c < nc; ++c) {
            if (L(g, c) == 0.0) continue;
            const num::Matrix Rc = restrict_hess(jet.hess[split.center[c]]);
            for (size_t a = 0; a < nc; ++a)
                for (size_t b = 0; b < nc; ++b) R[g](a, b) -= L(g, c) * Rc(a, b);
        }
    }

    // Homological system over monomials xi_a xi_b (a <= b):
    //   Dh(xi) (Ac_t xi) - As_t h(xi) = R(xi).
    const size_t nm = detail::tri_count(nc);
    const size_t nunk = ng * nm;
    num::Matrix K(nunk, nunk);
    std::vector<double> rhs(nunk, 0.0);
    auto unk = [&](size_t g, size_t a, size_t b) { return g * nm + detail::tri_index(a, b, nc); };

    for (size_t g = 0; g < ng; ++g)
        for (size_t a = 0; a < nc; ++a)
            for (size_t b = a; b < nc; ++b) {
                // Dh term: c_{g,ab} ( xi_b (Ac_t xi)_a + xi_a (Ac_t xi)_b )
                for (size_t gamma = 0; gamma < nc; ++gamma) {
                    if (Ac_t(a, gamma) != 0.0) {
                        const size_t row = unk(g, std::min(b, gamma), std::max(b, gamma));
                        K(row, unk(g, a, b)) += Ac_t(a, gamma);
                    }
                    if (Ac_t(b, gamma) != 0.0) {
                        const size_t row = unk(g, std::min(a, gamma), std::max(a, gamma));
                        K(row, unk(g, a, b)) += Ac_t(b, gamma);
                    }
                }
                // -As_t h term
                for (size_t gp = 0; gp < ng; ++gp)
                    if (As_t(gp, g) != 0.0) K(unk(gp, a, b), unk(g, a, b)) -= As_t(gp, g);
            }
    for (size_t g = 0; g < ng; ++g)
        for (size_t a = 0; a < nc; ++a)
            for (size_t b = a; b < nc; ++b)
                rhs[unk(g, a, b)] = (a == b) ? R[g](a, a) : R[g](a, b) + R[g](b, a);

    num::Lu lu(std::move(K));
    if (lu.pivot_ratio() < opt.resonance_pivot)
        throw resonance_error("solve_invariance_order2: near-resonant homological operator");
    const std::vector<double> sol = lu.solve(rhs);

    ManifoldExpansion e;
    e.k0 = 0;
    e.center_names = std::move(center_names);
    e.graph_names = std::move(graph_names);
    e.rows.resize(ng);
    for (size_t g = 0; g < ng; ++g) {
        for (size_t c = 0; c < nc; ++c) e.set(g, Monomial::lin(int(c)), L(g, c));
        for (size_t a = 0; a < nc; ++a)
            for (size_t b = a; b < nc; ++b) e.set(g, Monomial::quad(int(a), int(b)), sol[unk(g, a, b)]);
    }
    return e;
}

/// Convenience: jet extraction and solve in one call.
template <class Field>
ManifoldExpansion solve_invariance_order2(Field&& field, std::span<const double> x0, const VarSplit& split,
                                          std::vector<std::string> center_names, std::vector<std::string> graph_names,
                                          const OracleOptions& opt = {}) {
    return solve_invariance_order2(quadratic_jet(field, x0), split, std::move(center_names), std::move(graph_names),
                                   opt);
}

/// Largest relative coefficient discrepancy between two expansions over the
/// union of their monomials. Coefficients tiny against the expansions' overall
/// scale compare against floor_rel * (largest coefficient), so numerical zeros
/// do not register as relative disagreements.
inline double max_rel_coeff_diff(const ManifoldExpansion& x, const ManifoldExpansion& y, double floor_rel = 1e-6) {
    if (x.rows.size() != y.rows.size()) throw std::invalid_argument("max_rel_coeff_diff: row count mismatch");
    double global = 0.0;
    for (size_t r = 0; r < x.rows.size(); ++r) global = std::max({global, x.max_abs_coeff(r), y.max_abs_coeff(r)});
    const double floor = std::max(floor_rel * global, 1e-300);
    double worst = 0.0;
    for (size_t r = 0; r < x.rows.size(); ++r) {
        auto scan = [&](const std::map<Monomial, double>& src) {
            for (const auto& [m, _] : src) {
                const double cx = x.coeff(r, m), cy = y.coeff(r, m);
                const double scale = std::max({std::abs(cx), std::abs(cy), floor});
                worst = std::max(worst, std::abs(cx - cy) / scale);
            }
        };
        scan(x.rows[r]);
        scan(y.rows[r]);
    }
    return worst;
}

}  // namespace blowup::manifolds
