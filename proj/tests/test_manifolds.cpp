#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "blowup/cm_problems.hpp"
#include "blowup/homological.hpp"
#include "blowup/manifolds.hpp"

using namespace blowup;
namespace mf = blowup::manifolds;
using mf::Monomial;

TEST_CASE("k0 = 1 closed form and its invariance identities") {
    const double c = -0.5, mu = 0.0, a = 1.0;
    const auto e = mf::cm_closed_form(1, c, mu, a);
    const double p = e.coeff(0, Monomial::lin(1));            // eps
    const double q = e.coeff(0, Monomial::quad(0, 1));        // v1s*eps
    const double r = e.coeff(0, Monomial::quad(1, 1));        // eps^2
    CHECK(e.coeff(0, Monomial::lin(0)) == 1.0);
    CHECK(p == doctest::Approx(-a * (mu - 1.0) / c));
    CHECK(q == doctest::Approx(a * (mu - 1.0) / (c * c)));
    CHECK(r == doctest::Approx(-a * a * (mu - 3.0) * (mu - 1.0) / (2.0 * c * c * c)));
    // mu = 0, c = -1/2: eps coefficient -2a, v1s*eps coefficient -4a... spot values
    CHECK(p == doctest::Approx(-2.0));
    CHECK(q == doctest::Approx(-4.0));

    // Term-by-term cancellation of the shifted invariance equation through
    // degree 2:   2 a eps dh/dv1 = (h+c)^2 - (v1+c)^2 + 2 a eps mu + O(3).
    CHECK(2.0 * a == doctest::Approx(2.0 * c * p + 2.0 * a * mu));   // eps
    CHECK(0.0 == doctest::Approx(2.0 * p + 2.0 * c * q));            // v1s*eps
    CHECK(2.0 * a * q == doctest::Approx(p * p + 2.0 * c * r));      // eps^2
}

TEST_CASE("k0 = 2 closed form reproduces the displayed coefficients") {
    const double c = -0.3, mu = 1.7, a = 0.8;
    const auto e = mf::cm_closed_form(2, c, mu, a);
    const double l2 = spectral::scaled_eigenvalue(2, a);
    // b33: v2^2 coefficient of h1
    CHECK(e.coeff(0, Monomial::quad(2, 2)) ==
          doctest::Approx(1.0 / (2.0 * c) - 2.0 * c / ((l2 + 2.0 * c) * (l2 + 2.0 * c))));
    // linear v2 coefficient of h2
    CHECK(e.coeff(1, Monomial::lin(2)) == doctest::Approx(2.0 * c / (2.0 * c + l2)));
    // c13: v1s*v2 coefficient of h2
    CHECK(e.coeff(1, Monomial::quad(0, 2)) == doctest::Approx(2.0 * l2 / ((l2 + 2.0 * c) * (l2 + 2.0 * c))));
    // c23-derived: v2*eps coefficient of h2
    const double num = c * l2 * (2.0 * c + l2) + 4.0 * a * c * (mu - 1.0) + 2.0 * a * l2 * mu;
    CHECK(e.coeff(1, Monomial::quad(1, 2)) == doctest::Approx(2.0 * num / std::pow(l2 + 2.0 * c, 3.0)));
}

TEST_CASE("k0 = 3 closed form reproduces the appendix table") {
    const double c = -0.4, mu = 0.6, a = 1.2;
    const auto e = mf::cm_closed_form(3, c, mu, a);
    const double l2 = spectral::scaled_eigenvalue(2, a);
    const double l3 = spectral::scaled_eigenvalue(3, a);
    // b44: v3^2 in h1
    CHECK(e.coeff(0, Monomial::quad(3, 3)) ==
          doctest::Approx(1.0 / (2.0 * c) - 2.0 * c / ((l3 + 2.0 * c) * (l3 + 2.0 * c))));
    // c34: v2 v3 in h2
    CHECK(e.coeff(1, Monomial::quad(2, 3)) ==
          doctest::Approx(std::sqrt(2.0) * (l2 * l3 + 2.0 * c * (l2 + l3)) /
                          ((2.0 * c + l2) * (2.0 * c + l2) * (2.0 * c + l3))));
    // d33: v2^2 in h3
    CHECK(e.coeff(2, Monomial::quad(2, 2)) ==
          doctest::Approx(l2 * (4.0 * c + l2) / (std::sqrt(2.0) * (2.0 * c + l2) * (2.0 * c + l2) * (2.0 * c + l3))));
    // d24-derived: v3*eps in h3
    const double num3 = c * l3 * (2.0 * c + l3) + 4.0 * a * c * (mu - 1.0) + 2.0 * a * l3 * mu;
    CHECK(e.coeff(2, Monomial::quad(1, 3)) == doctest::Approx(2.0 * num3 / std::pow(l3 + 2.0 * c, 3.0)));
    // d14-derived: v1s*v3 in h3
    CHECK(e.coeff(2, Monomial::quad(0, 3)) == doctest::Approx(2.0 * l3 / ((l3 + 2.0 * c) * (l3 + 2.0 * c))));
    // no cross v_i v_j terms in h1
    CHECK(e.coeff(0, Monomial::quad(2, 3)) == 0.0);
}

TEST_CASE("mu = 1 wipes out every (mu-1)-proportional coefficient") {
    const auto e = mf::cm_closed_form(2, -0.25, 1.0, 1.0);
    CHECK(e.coeff(0, Monomial::lin(1)) == 0.0);
    CHECK(e.coeff(0, Monomial::quad(0, 1)) == 0.0);
    CHECK(e.coeff(0, Monomial::quad(1, 1)) == 0.0);
    CHECK(e.coeff(0, Monomial::lin(0)) == 1.0);
}

TEST_CASE("closed-form preconditions") {
    CHECK_THROWS_AS(mf::cm_closed_form(2, 0.1, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(mf::cm_closed_form(2, 0.0, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(mf::cm_closed_form_K1(2, -0.1, 0.0), std::domain_error);
}

TEST_CASE("oracle equivalence in original coordinates") {
    for (int k0 : {1, 2, 3}) {
        const double c = -0.35, mu = 1.4, a = 0.9;
        const auto problem = mf::original_cm_problem(k0, c, mu, a);
        const auto oracle = problem.solve();
        const auto closed = mf::cm_closed_form(k0, c, mu, a);
        CHECK(mf::max_rel_coeff_diff(oracle, closed) < 1e-8);
    }
}

TEST_CASE("oracle equivalence in chart K1 at a1* = 0.2, including the tilt") {
    const double a1s = 0.2, mu = 0.7;
    const auto problem = mf::k1_cm_problem(3, a1s, mu);
    const auto oracle = problem.solve();
    const auto closed = mf::cm_closed_form_K1(3, a1s, mu);
    CHECK(mf::max_rel_coeff_diff(oracle, closed) < 1e-8);

    // the linear tilt u_{2,1} = m_2 v_{2,1}: frozen from an independent
    // trajectory-relaxation measurement of the attracting graph
    const double m2 = closed.coeff(1, Monomial::lin(3));
    CHECK(m2 == doctest::Approx(0.048764981860476).epsilon(1e-10));
    CHECK(oracle.coeff(1, Monomial::lin(3)) == doctest::Approx(m2).epsilon(1e-10));

    // v_{k,1}^2 coefficient of the v11 row is (1 - m_k^2)/2, not 1
    CHECK(closed.coeff(0, Monomial::quad(3, 3)) == doctest::Approx((1.0 - m2 * m2) / 2.0));
}

TEST_CASE("oracle equivalence in chart K1 at a1* = 0 (reduced system)") {
    const double mu = 1.8;
    const int k0 = 4;
    const auto problem = mf::k1_cm_problem_reduced(k0, mu);
    const auto oracle = problem.solve();
    const auto closed = mf::cm_closed_form_K1_reduced(k0, mu);
    CHECK(mf::max_rel_coeff_diff(oracle, closed) < 1e-8);
    // eps1-linear and eps1^2 coefficients vanish at a1* = 0; a1s*eps1 is 1-mu
    CHECK(closed.coeff(0, Monomial::lin(1)) == 0.0);
    CHECK(closed.coeff(0, Monomial::quad(1, 1)) == 0.0);
    CHECK(closed.coeff(0, Monomial::quad(1, 2)) == doctest::Approx(1.0 - mu));
    CHECK(closed.coeff(0, Monomial::quad(3, 3)) == doctest::Approx(0.5));
    // and the full closed form has vanishing u rows
    const auto full = mf::cm_closed_form_K1(k0, 0.0, mu);
    for (int k = 2; k <= k0; ++k) CHECK(full.rows[size_t(k - 1)].empty());
}

TEST_CASE("residual vanishes at the base point and has ray slope >= 2.7") {
    const double c = -0.4, mu = 0.8, a = 1.0;
    const auto problem = mf::original_cm_problem(3, c, mu, a);
    const auto closed = mf::cm_closed_form(3, c, mu, a);
    const auto fs = problem.field_split();

    std::vector<double> zero(closed.center_names.size(), 0.0);
    CHECK(mf::invariance_residual(closed, fs, zero).max_defect < 1e-14);

    std::mt19937 rng(41);
    std::uniform_real_distribution<double> U(0.2, 1.0);
    std::vector<double> dir(closed.center_names.size());
    for (auto& d : dir) d = U(rng);
    const double slope = mf::residual_ray_slope(closed, fs, dir);
    CHECK(slope >= 2.7);

    // a perturbed coefficient turns the ray slope quadratic; measured on the
    // mu = 1, k0 = 1 system whose unperturbed invariance is exact
    const auto exact_problem = mf::original_cm_problem(1, c, 1.0, a);
    auto bad = mf::cm_closed_form(1, c, 1.0, a);
    bad.rows[0][Monomial::quad(1, 1)] += 1e-3;
    std::vector<double> dir1 = {dir[0], dir[1]};
    const double slope_bad = mf::residual_ray_slope(bad, exact_problem.field_split(), dir1);
    CHECK(slope_bad == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("residual ray slope in chart K1") {
    SUBCASE("a1* = 0.2, full rays") {
        const auto problem = mf::k1_cm_problem(3, 0.2, 1.5);
        const auto closed = mf::cm_closed_form_K1(3, 0.2, 1.5);
        std::vector<double> dir = {0.5, 1.0, 0.7, 0.6, 0.4};
        CHECK(mf::residual_ray_slope(closed, problem.field_split(), dir) >= 2.7);
    }
    SUBCASE("a1* = 0, rays in the regular (r1, eps1, a1) directions") {
        const int k0 = 3;
        const auto problem = mf::k1_cm_problem_reduced(k0, 0.5);
        const auto closed = mf::cm_closed_form_K1_reduced(k0, 0.5);
        std::vector<double> dir(closed.center_names.size(), 0.0);
        dir[0] = 0.3;   // r1
        dir[1] = 1.0;   // eps1
        dir[2] = 0.8;   // a1 (keeps the wedge side a1 > 0)
        CHECK(mf::residual_ray_slope(closed, problem.field_split(), dir) >= 2.7);
    }
}

TEST_CASE("reduced H^- / H^+") {
    CHECK(mf::reduced_Hpm(model::BranchSign::Minus, 0.0, 0.3) == -1.0);
    CHECK(mf::reduced_Hpm(model::BranchSign::Plus, 0.1, 2.0) == doctest::Approx(1.3));
    // F1 on the graph is 2 rho1 + O(rho1^2), rho1 = a1 eps1
    const double mu = 1.7;
    for (double rho : {1e-2, 1e-3, 1e-4}) {
        const double h = mf::reduced_Hpm(model::BranchSign::Minus, rho, mu);
        const double F = (1.0 - h * h) + 2.0 * mu * rho;
        CHECK(std::abs(F - 2.0 * rho) <= (1.0 - mu) * (1.0 - mu) * rho * rho + 1e-15);
    }
}

TEST_CASE("tail bounds and the quadratic selection rule") {
    const int k0 = 8;
    const double c = -0.3, mu = 0.5, a = 1.0;
    const auto e = mf::cm_closed_form(k0, c, mu, a);

    SUBCASE("single nonzero v2 activates only rows 1 and 3 at quadratic order") {
        std::vector<double> xi(e.center_names.size(), 0.0);
        xi[2] = 0.05;  // v2
        const auto h = e.eval(xi);
        const double lin2 = e.coeff(1, Monomial::lin(2)) * xi[2];
        CHECK(std::abs(h[0]) > 1e-6);             // h1 quadratic v2^2
        CHECK(h[1] == doctest::Approx(lin2));     // h2 linear only
        CHECK(std::abs(h[2]) > 1e-8);             // h3 quadratic via alpha_22^3
        for (int k = 4; k <= k0; ++k) CHECK(std::abs(h[size_t(k - 1)]) < 1e-15);
    }
    SUBCASE("fitted C stable under k0 doubling; coefficients decay like 1/|b_k|") {
        std::vector<std::vector<double>> samples;
        std::mt19937 rng(13);
        std::uniform_real_distribution<double> U(-0.05, 0.05);
        for (int t = 0; t < 24; ++t) {
            std::vector<double> xi(e.center_names.size(), 0.0);
            for (auto& x : xi) x = U(rng);
            xi[1] = std::abs(xi[1]) * 0.1;  // eps >= 0
            samples.push_back(xi);
        }
        const auto rep8 = mf::tail_bound_check(e, a, samples);
        const auto e16 = mf::cm_closed_form(16, c, mu, a);
        std::vector<std::vector<double>> samples16;
        for (const auto& s : samples) {
            std::vector<double> xi(e16.center_names.size(), 0.0);
            std::copy(s.begin(), s.end(), xi.begin());
            samples16.push_back(xi);
        }
        const auto rep16 = mf::tail_bound_check(e16, a, samples16);
        for (size_t i = 0; i < rep8.fitted_C.size(); ++i)
            CHECK(rep16.fitted_C[i] == doctest::Approx(rep8.fitted_C[i]).epsilon(0.05));
        // coefficient decay: max coeff of h_k times |b_k| stays bounded
        for (double cc : rep16.coeff_C) CHECK(cc < 20.0);
    }
}

TEST_CASE("hausdorff distance basics") {
    std::vector<std::vector<double>> A = {{0.0, 0.0}, {1.0, 0.0}};
    std::vector<std::vector<double>> B = {{0.0, 0.0}, {1.0, 0.5}};
    CHECK(mf::hausdorff_distance(A, A) == 0.0);
    CHECK(mf::hausdorff_distance(A, B) == doctest::Approx(0.5));
    std::vector<std::vector<double>> X = {{1.0, 2.0}};
    std::vector<std::vector<double>> Y = {{4.0, 6.0}};
    CHECK(mf::hausdorff_distance(X, Y) == doctest::Approx(5.0));
    std::vector<std::vector<double>> E;
    CHECK_THROWS_AS(mf::hausdorff_distance(E, A), std::invalid_argument);
}

TEST_CASE("convergence toward the reference truncation") {
    std::vector<int> k0s = {2, 4, 8, 16};
    const auto rep = mf::convergence_report(k0s, -0.4, 0.8, 1.0, {}, 32);
    for (size_t i = 1; i < rep.table.size(); ++i) CHECK(rep.table[i].sup_dist <= rep.table[i - 1].sup_dist);
    for (size_t i = 1; i < rep.table.size(); ++i) CHECK(rep.table[i].hausdorff <= rep.table[i - 1].hausdorff + 1e-15);
    CHECK(rep.decay_exponent >= 1.0);
    // determinism: rebuilding gives identical numbers
    const auto rep2 = mf::convergence_report(k0s, -0.4, 0.8, 1.0, {}, 32);
    for (size_t i = 0; i < rep.table.size(); ++i) CHECK(rep.table[i].sup_dist == rep2.table[i].sup_dist);
}

TEST_CASE("oracle flags resonance and missing spectral gap") {
    // dv/dt = eps (center), du/dt = lambda u + v^2 with lambda ~ 0: no gap.
    auto make = [](double lambda) {
        return [lambda](auto x, auto dx) {
            dx[0] = lambda * x[0] + x[1] * x[1];
            dx[1] = decltype(x[0] * x[0]){};
        };
    };
    mf::VarSplit split{{1}, {0}};
    std::vector<double> x0 = {0.0, 0.0};
    CHECK_THROWS_AS(mf::solve_invariance_order2(make(-1e-5), x0, split, {"v"}, {"u"}), mf::resonance_error);
    const auto ok = mf::solve_invariance_order2(make(-2.0), x0, split, {"v"}, {"u"});
    CHECK(ok.coeff(0, Monomial::quad(0, 0)) == doctest::Approx(0.5));  // u = v^2/2 solves it
}
