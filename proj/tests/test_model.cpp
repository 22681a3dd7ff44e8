#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "blowup/model.hpp"

using namespace blowup;
using model::BranchSign;
using model::GalerkinState;
using model::ModelParams;

TEST_CASE("vector field matches the truncated system") {
    SUBCASE("critical point is stationary at eps = 0") {
        ModelParams p{.mu = 0.7, .a = 1.0, .eps = 0.0, .k0 = 1};
        const GalerkinState s = model::critical_branch(BranchSign::Minus, -0.4, 1);
        const GalerkinState d = model::vector_field(p, s);
        CHECK(d.u[0] == 0.0);
        CHECK(d.v[0] == 0.0);
    }
    SUBCASE("k0 = 1 example values") {
        ModelParams p{.mu = 1.0, .a = 1.0, .eps = 0.01, .k0 = 1};
        GalerkinState s{{0.2}, {0.1}};
        const GalerkinState d = model::vector_field(p, s);
        CHECK(d.u[0] == doctest::Approx(0.05).epsilon(1e-14));
        CHECK(d.v[0] == doctest::Approx(0.02).epsilon(1e-14));
    }
    SUBCASE("k0 = 2 example values") {
        ModelParams p{.mu = 0.3, .a = 1.0, .eps = 0.0, .k0 = 2};
        GalerkinState s{{-0.1, 0.2}, {-0.1, 0.0}};
        const GalerkinState d = model::vector_field(p, s);
        const double b2 = spectral::b_coefficient(2);
        CHECK(d.u[1] == doctest::Approx(0.2 * b2 - 0.04).epsilon(1e-14));
        CHECK(d.v[1] == 0.0);
    }
    SUBCASE("eps and a components are exactly conserved") {
        ModelParams p{.mu = 2.0, .a = 0.8, .eps = 1e-3, .k0 = 4};
        std::vector<double> x = model::pack(model::initial_condition(-0.3, 0.1, {}, 4, p.a), p.eps, p.a);
        std::vector<double> dx(x.size());
        model::vector_field(p, x, dx);
        CHECK(dx[2 * 4] == 0.0);
        CHECK(dx[2 * 4 + 1] == 0.0);
    }
}

TEST_CASE("critical branches") {
    const GalerkinState sm = model::critical_branch(BranchSign::Minus, -0.3, 4);
    CHECK(sm.u[0] == -0.3);
    CHECK(sm.v[0] == -0.3);
    for (int k = 1; k < 4; ++k) {
        CHECK(sm.u[size_t(k)] == 0.0);
        CHECK(sm.v[size_t(k)] == 0.0);
    }
    const GalerkinState sp = model::critical_branch(BranchSign::Plus, 0.3, 4);
    CHECK(sp.u[0] == -0.3);
    CHECK(sp.v[0] == 0.3);

    ModelParams p{.mu = 1.4, .a = 1.2, .eps = 0.0, .k0 = 4};
    for (const auto& s : {sm, sp}) {
        const GalerkinState d = model::vector_field(p, s);
        for (int k = 0; k < 4; ++k) {
            CHECK(std::abs(d.u[size_t(k)]) < 1e-15);
            CHECK(std::abs(d.v[size_t(k)]) < 1e-15);
        }
    }
    CHECK_THROWS_AS(model::critical_branch(BranchSign::Minus, 0.1, 2), std::domain_error);
    CHECK_THROWS_AS(model::critical_branch(BranchSign::Plus, -0.1, 2), std::domain_error);
}

TEST_CASE("initial condition decay law") {
    const double a = 0.9, delta = 0.02, c = -0.25;
    const int k0 = 16;
    const GalerkinState s = model::initial_condition(c, delta, {}, k0, a);
    SUBCASE("delta = 0 reduces to the critical branch") {
        const GalerkinState s0 = model::initial_condition(c, 0.0, {}, k0, a);
        const GalerkinState b = model::critical_branch(BranchSign::Minus, c, k0);
        for (int k = 0; k < k0; ++k) {
            CHECK(s0.u[size_t(k)] == b.u[size_t(k)]);
            CHECK(s0.v[size_t(k)] == b.v[size_t(k)]);
        }
    }
    SUBCASE("Fourier decay bound") {
        const double amp = std::pow(2.0 * a, 3.0) / (spectral::pi * spectral::pi);
        for (int k = 2; k <= k0; ++k)
            CHECK(std::abs(s.v[size_t(k - 1)]) <= amp * delta / double(k * k) + 1e-16);
    }
    SUBCASE("scaled-eigenvalue weighted smallness") {
        for (int k = 2; k <= k0; ++k)
            CHECK(std::abs(spectral::scaled_eigenvalue(k, a) * s.v[size_t(k - 1)]) <=
                  std::pow(2.0 * a, 1.5) * delta + 1e-16);
    }
}

TEST_CASE("nesting of truncations") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-0.3, 0.3);
    ModelParams p3{.mu = 0.5, .a = 1.1, .eps = 1e-3, .k0 = 3};
    ModelParams p6{.mu = 0.5, .a = 1.1, .eps = 1e-3, .k0 = 6};
    GalerkinState s;
    s.u.assign(6, 0.0);
    s.v.assign(6, 0.0);
    for (int k = 0; k < 3; ++k) {
        s.u[size_t(k)] = U(rng);
        s.v[size_t(k)] = U(rng);
    }
    CHECK(model::nesting_check(p3, p6, s));
    s.u[3] = 0.5;  // a live mode above the small truncation breaks agreement
    CHECK_FALSE(model::nesting_check(p3, p6, s));
}

TEST_CASE("first-mode quasi-homogeneity under (u,v,eps) -> (su, sv, s^2 eps)") {
    ModelParams p{.mu = 1.7, .a = 0.6, .eps = 0.0, .k0 = 1};
    const double u = -0.13, v = -0.21, eps = 3e-3;
    for (double s : {2.0, 3.0}) {
        ModelParams ps = p;
        p.eps = eps;
        ps.eps = s * s * eps;
        GalerkinState x{{u}, {v}}, xs{{s * u}, {s * v}};
        const GalerkinState f = model::vector_field(p, x);
        const GalerkinState fs = model::vector_field(ps, xs);
        CHECK(fs.u[0] == doctest::Approx(s * s * f.u[0]).epsilon(1e-13));
        CHECK(fs.v[0] == doctest::Approx(s * s * f.v[0]).epsilon(1e-13));
    }
}

TEST_CASE("linearization at the attracting branch") {
    // u1-eigenvalue 2u1 < 0 and u_k-eigenvalues lhat_k + 2u1, against finite
    // differences of the packed field.
    ModelParams p{.mu = 0.9, .a = 1.4, .eps = 0.0, .k0 = 5};
    const double c = -0.35;
    const GalerkinState s = model::critical_branch(BranchSign::Minus, c, p.k0);
    std::vector<double> x0 = model::pack(s, 0.0, p.a);
    const double h = 1e-7;
    auto jac_col = [&](size_t col) {
        std::vector<double> xp = x0, xm = x0, fp(x0.size()), fm(x0.size());
        xp[col] += h;
        xm[col] -= h;
        model::vector_field(p, xp, fp);
        model::vector_field(p, xm, fm);
        std::vector<double> d(x0.size());
        for (size_t i = 0; i < d.size(); ++i) d[i] = (fp[i] - fm[i]) / (2.0 * h);
        return d;
    };
    const auto du1 = jac_col(0);
    CHECK(du1[0] == doctest::Approx(2.0 * c).epsilon(1e-6));
    for (int k = 2; k <= p.k0; ++k) {
        const auto duk = jac_col(size_t(k - 1));
        CHECK(duk[size_t(k - 1)] == doctest::Approx(spectral::scaled_eigenvalue(k, p.a) + 2.0 * c).epsilon(1e-6));
        CHECK(duk[size_t(k - 1)] < 0.0);
    }
}

TEST_CASE("hooks perturb the field additively") {
    ModelParams p{.mu = 0.0, .a = 1.0, .eps = 0.5, .k0 = 2};
    p.hu = [](int k, std::span<const double>, std::span<const double>, double) { return k == 2 ? 0.125 : 0.0; };
    p.hv = [](int k, std::span<const double>, std::span<const double>, double) { return k == 1 ? 1.0 : 0.0; };
    GalerkinState s{{0.1, 0.2}, {0.0, 0.1}};
    ModelParams p0 = p;
    p0.hu = nullptr;
    p0.hv = nullptr;
    const GalerkinState d = model::vector_field(p, s);
    const GalerkinState d0 = model::vector_field(p0, s);
    CHECK(d.u[1] - d0.u[1] == doctest::Approx(0.125));
    CHECK(d.v[0] - d0.v[0] == doctest::Approx(p.eps * 1.0));
}
