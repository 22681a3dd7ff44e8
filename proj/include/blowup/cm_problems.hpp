#pragma once

// Ready-made center-manifold problems: the shifted original-coordinate system
// at u1 = v1 = c and the chart-K1 system at p_{a,1}^-(a1*), wired for the
// homological oracle and the residual checks. The original-coordinate problem
// works on a reduced layout with the conserved a frozen into the field.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "blowup/charts.hpp"
#include "blowup/homological.hpp"
#include "blowup/jet.hpp"
#include "blowup/manifolds.hpp"
#include "blowup/model.hpp"

namespace blowup::manifolds {

struct CmProblem {
    std::vector<double> x0;  // equilibrium in the problem's layout
    VarSplit split;
    std::vector<std::string> center_names;
    std::vector<std::string> graph_names;
    std::function<void(std::span<const num::Jet2>, std::span<num::Jet2>)> jet_field;
    std::function<void(std::span<const double>, std::span<double>)> dbl_field;

    FieldSplit field_split() const {
        FieldSplit fs;
        fs.field = dbl_field;
        fs.base = x0;
        fs.center_slot = split.center;
        fs.graph_slot = split.graph;
        return fs;
    }

    ManifoldExpansion solve(const OracleOptions& opt = {}) const {
        return solve_invariance_order2(jet_field, x0, split, center_names, graph_names, opt);
    }
};

/// Shifted original-coordinate problem: layout [u_1..u_k0, v_1..v_k0, eps],
/// centers (v1, eps, v_2..), graphs (u_1, u_2..), equilibrium u1 = v1 = c.
inline CmProblem original_cm_problem(int k0, double c, double mu, double a) {
    if (!(c < 0.0)) throw std::domain_error("original_cm_problem: requires c < 0");
    CmProblem pr;
    const size_t n = 2 * size_t(k0) + 1;
    pr.x0.assign(n, 0.0);
    pr.x0[0] = c;
    pr.x0[size_t(k0)] = c;

    for (int k = 0; k < k0; ++k) pr.split.graph.push_back(size_t(k));
    pr.split.center = {size_t(k0), 2 * size_t(k0)};
    for (int k = 2; k <= k0; ++k) pr.split.center.push_back(size_t(k0 + k - 1));

    pr.center_names = {"v1s", "eps"};
    pr.graph_names = {"u1s"};
    for (int k = 2; k <= k0; ++k) {
        pr.center_names.push_back("v" + std::to_string(k));
        pr.graph_names.push_back("u" + std::to_string(k));
    }

    model::ModelParams mp{.mu = mu, .a = a, .eps = 0.0, .k0 = k0};
    auto make_field = [mp, k0, a](auto tag) {
        using T = decltype(tag);
        return [mp, k0, a](std::span<const T> x, std::span<T> dx) {
            std::vector<T> xx(2 * size_t(k0) + 2), dd(2 * size_t(k0) + 2);
            for (size_t i = 0; i < x.size(); ++i) xx[i] = x[i];
            xx[2 * size_t(k0) + 1] = T(a);
            model::rhs_core<T>(mp, xx, dd);
            for (size_t i = 0; i < x.size(); ++i) dx[i] = dd[i];
        };
    };
    pr.jet_field = make_field(num::Jet2{});
    pr.dbl_field = make_field(double{});
    return pr;
}

/// Chart-K1 problem at p_{a,1}^-(a1*), a1* > 0: the full chart layout,
/// centers (r1, eps1, a1, v_{k,1}), graphs (v11, u_{k,1}).
inline CmProblem k1_cm_problem(int k0, double a1_star, double mu) {
    if (!(a1_star > 0.0)) throw std::domain_error("k1_cm_problem: requires a1* > 0 (see k1_cm_problem_reduced)");
    CmProblem pr;
    charts::ChartPoint p = charts::ChartPoint::zero(charts::Chart::K1, k0);
    p.vfirst = -1.0;
    p.a = a1_star;
    pr.x0 = charts::pack(p);

    charts::Layout L{charts::Chart::K1, k0};
    pr.split.graph.push_back(L.vfirst());
    for (int k = 2; k <= k0; ++k) pr.split.graph.push_back(L.mode_u(k));
    pr.split.center = {L.r(), L.eps(), L.a()};
    for (int k = 2; k <= k0; ++k) pr.split.center.push_back(L.mode_v(k));

    pr.center_names = {"r1", "eps1", "a1s"};
    pr.graph_names = {"v11s"};
    for (int k = 2; k <= k0; ++k) {
        pr.center_names.push_back("v" + std::to_string(k) + "_1");
        pr.graph_names.push_back("u" + std::to_string(k) + "_1");
    }

    charts::ChartParams cp{.mu = mu, .k0 = k0};
    pr.jet_field = [cp](std::span<const num::Jet2> x, std::span<num::Jet2> dx) { charts::field_K1<num::Jet2>(cp, x, dx); };
    pr.dbl_field = [cp](std::span<const double> x, std::span<double> dx) { charts::field_K1<double>(cp, x, dx); };
    return pr;
}

/// Chart-K1 problem in the a1* = 0 limit. The u_{k,1} directions are
/// infinitely stable there (the graph vanishes through second order), so the
/// oracle runs on the regular reduced system with the u rows dropped and the
/// wedge-order-3 stiff v-diffusion term removed. Layout:
/// [v11, v_{2,1}..v_{k0,1}, r1, eps1, a1].
inline CmProblem k1_cm_problem_reduced(int k0, double mu) {
    CmProblem pr;
    const size_t n = size_t(k0) + 3;
    pr.x0.assign(n, 0.0);
    pr.x0[0] = -1.0;

    pr.split.graph = {0};
    pr.split.center = {size_t(k0), size_t(k0) + 1, size_t(k0) + 2};
    for (int k = 2; k <= k0; ++k) pr.split.center.push_back(size_t(k - 1));

    pr.center_names = {"r1", "eps1", "a1s"};
    pr.graph_names = {"v11s"};
    for (int k = 2; k <= k0; ++k) pr.center_names.push_back("v" + std::to_string(k) + "_1");

    auto make_field = [k0, mu](auto tag) {
        using T = decltype(tag);
        return [k0, mu](std::span<const T> x, std::span<T> dx) {
            const T& v11 = x[0];
            std::span<const T> w = x.subspan(1, size_t(k0 - 1));
            const T& r1 = x[size_t(k0)];
            const T& eps1 = x[size_t(k0) + 1];
            const T& a1 = x[size_t(k0) + 2];
            T wsum{};
            for (const auto& wk : w) wsum += wk * wk;
            const T F = (1.0 - v11 * v11) + 2.0 * mu * (a1 * eps1) - wsum;
            dx[0] = 2.0 * (a1 * eps1) + v11 * F;
            for (int k = 2; k <= k0; ++k) dx[size_t(k - 1)] = w[size_t(k - 2)] * F;
            dx[size_t(k0)] = (-1.0 / 3.0) * (r1 * F);
            dx[size_t(k0) + 1] = (8.0 / 3.0) * (eps1 * F);
            dx[size_t(k0) + 2] = (-2.0 / 3.0) * (a1 * F);
        };
    };
    pr.jet_field = make_field(num::Jet2{});
    pr.dbl_field = make_field(double{});
    return pr;
}

/// The v11s row of the a1* = 0 closed form, in the reduced problem's center
/// ordering, for direct comparison with k1_cm_problem_reduced's oracle output.
inline ManifoldExpansion cm_closed_form_K1_reduced(int k0, double mu) {
    const ManifoldExpansion full = cm_closed_form_K1(k0, 0.0, mu);
    ManifoldExpansion e;
    e.chart = charts::Chart::K1;
    e.base_point = full.base_point + " (reduced)";
    e.k0 = k0;
    e.center_names = full.center_names;
    e.graph_names = {"v11s"};
    e.rows.resize(1);
    e.rows[0] = full.rows[0];
    return e;
}

}  // namespace blowup::manifolds
