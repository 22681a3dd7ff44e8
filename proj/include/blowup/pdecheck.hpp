#pragma once

// Cross-validation between the Galerkin ODE hierarchy and its PDE readings:
// high-truncation reference runs (the spectral hierarchy is self-validating),
// the chart-K1 free-boundary modal identity, and the scaling-chart singular
// limit against the planar Riccati ODE.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blowup/charts.hpp"
#include "blowup/flow.hpp"
#include "blowup/integrate.hpp"
#include "blowup/model.hpp"

namespace blowup::pdecheck {

struct ReferenceRun {
    int k0_ref = 0;
    std::vector<double> times;
    std::vector<model::GalerkinState> states;
    std::vector<double> norms;  // discrete l2 = L2 norm per snapshot
};

/// High-truncation reference trajectory with dense snapshots; per-step
/// tolerance 1e-10 by default.
inline ReferenceRun reference_solve(const model::ModelParams& p, const model::GalerkinState& init, double T,
                                    int snapshots = 21, double rtol = 1e-10, double atol = 1e-12) {
    p.validate();
    if (init.k0() != p.k0) throw std::invalid_argument("reference_solve: state size mismatch");
    num::Rhs f = [&p](std::span<const double> x, std::span<double> dx) { model::vector_field(p, x, dx); };
    std::vector<double> y0 = model::pack(init, p.eps, p.a);
    num::IntegratorOptions opt{.rtol = rtol, .atol = atol};
    const num::Trajectory tr = num::integrate(f, y0, 0.0, T, opt);
    ReferenceRun run;
    run.k0_ref = p.k0;
    for (int i = 0; i < snapshots; ++i) {
        const double t = T * double(i) / double(snapshots - 1);
        const std::vector<double> y = (i == 0) ? y0 : tr.at(t);
        model::GalerkinState s = model::unpack(y, p.k0);
        run.times.push_back(t);
        run.norms.push_back(s.norm2());
        run.states.push_back(std::move(s));
    }
    return run;
}

/// Max-over-snapshots l2 distance between two runs on the same time grid,
/// modes padded with zeros up to the larger truncation.
inline double run_l2_distance(const ReferenceRun& A, const ReferenceRun& B) {
    if (A.times.size() != B.times.size()) throw std::invalid_argument("run_l2_distance: snapshot grids differ");
    const int kmax = std::max(A.k0_ref, B.k0_ref);
    double sup = 0.0;
    for (size_t i = 0; i < A.times.size(); ++i) {
        double d2 = 0.0;
        for (int k = 0; k < kmax; ++k) {
            const double ua = k < A.k0_ref ? A.states[i].u[size_t(k)] : 0.0;
            const double ub = k < B.k0_ref ? B.states[i].u[size_t(k)] : 0.0;
            const double va = k < A.k0_ref ? A.states[i].v[size_t(k)] : 0.0;
            const double vb = k < B.k0_ref ? B.states[i].v[size_t(k)] : 0.0;
            d2 += (ua - ub) * (ua - ub) + (va - vb) * (va - vb);
        }
        sup = std::max(sup, std::sqrt(d2));
    }
    return sup;
}

/// Self-convergence table: distance between the k0 run and the 2*k0 run for
/// each k0 in the list, same smooth initial data (truncated per run).
struct SelfConvergenceRow {
    int k0 = 0;
    double distance = 0.0;
};

inline std::vector<SelfConvergenceRow> galerkin_self_convergence(const model::ModelParams& base,
                                                                 std::span<const int> k0_list, double c, double delta,
                                                                 double T, double rtol = 1e-10) {
    std::vector<SelfConvergenceRow> rows;
    for (int k0 : k0_list) {
        model::ModelParams pa = base, pb = base;
        pa.k0 = k0;
        pb.k0 = 2 * k0;
        const auto run_a = reference_solve(pa, model::initial_condition(c, delta, {}, pa.k0, pa.a), T, 21, rtol);
        const auto run_b = reference_solve(pb, model::initial_condition(c, delta, {}, pb.k0, pb.a), T, 21, rtol);
        rows.push_back({k0, run_l2_distance(run_a, run_b)});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Chart-K1 modal identity (free-boundary PDE correspondence).

/// Max absolute defect between field_K1 and the spectral projection of the
/// chart-K1 PDE right-hand side, assembled independently from the alpha table
/// and the functional F = 2 a1 eps1 mu + (||u||^2 - ||v||^2). Rows compared:
/// v mode 1 and u, v modes 2..k0 (the pinned u mode 1 is the r1 equation).
inline double k1_pde_consistency(const model::ModelParams& mp, const charts::ChartPoint& p) {
    if (p.chart != charts::Chart::K1) throw std::invalid_argument("k1_pde_consistency: expects a K1 point");
    const int k0 = mp.k0;
    if (p.k0 != k0) throw std::invalid_argument("k1_pde_consistency: k0 mismatch");
    charts::ChartParams cp{.mu = mp.mu, .k0 = k0};
    charts::Layout L{charts::Chart::K1, k0};
    const std::vector<double> x = charts::pack(p);
    std::vector<double> lhs(x.size());
    charts::field_K1<double>(cp, x, lhs);

    // PDE side. Modal coefficients of the function pair (u, v) with the
    // first u mode pinned at -1.
    std::vector<double> uc(size_t(k0), 0.0), vc(size_t(k0), 0.0);
    uc[0] = -1.0;
    vc[0] = p.vfirst;
    for (int k = 2; k <= k0; ++k) {
        uc[size_t(k - 1)] = p.mu[size_t(k - 2)];
        vc[size_t(k - 1)] = p.mv[size_t(k - 2)];
    }
    double nu2 = 0.0, nv2 = 0.0;
    for (int k = 0; k < k0; ++k) {
        nu2 += uc[size_t(k)] * uc[size_t(k)];
        nv2 += vc[size_t(k)] * vc[size_t(k)];
    }
    const double F = 2.0 * p.a * p.eps * mp.mu + (nu2 - nv2);
    const double sq2a = std::sqrt(2.0 * p.a);

    // <(u^2 - v^2), e_k> * sqrt(2 a1) for k >= 2, from the triple products
    auto quad_mode = [&](int k) {
        double s = 2.0 * (uc[0] * uc[size_t(k - 1)] - vc[0] * vc[size_t(k - 1)]);
        for (int i = 2; i <= k0; ++i)
            for (int j = 2; j <= k0; ++j) {
                const double al = spectral::alpha(i, j, k);
                if (al != 0.0)
                    s += std::sqrt(2.0) * al * (uc[size_t(i - 1)] * uc[size_t(j - 1)] - vc[size_t(i - 1)] * vc[size_t(j - 1)]);
            }
        return s;
    };

    double defect = 0.0;
    {
        // v mode 1: sqrt(2a1) eps1 <1, e1> + F v_{1,1}  (lambda_1 = 0)
        const double rhs = sq2a * p.eps * sq2a + F * p.vfirst;
        defect = std::max(defect, std::abs(lhs[L.vfirst()] - rhs));
    }
    const double r8 = std::pow(p.r, 8.0);
    for (int k = 2; k <= k0; ++k) {
        const double lam = spectral::eigenvalue(k, p.a);
        const double rhs_u = sq2a * lam * uc[size_t(k - 1)] + quad_mode(k) + F * uc[size_t(k - 1)];
        defect = std::max(defect, std::abs(lhs[L.mode_u(k)] - rhs_u));
        const double rhs_v = sq2a * p.eps * r8 * lam * vc[size_t(k - 1)] + F * vc[size_t(k - 1)];
        defect = std::max(defect, std::abs(lhs[L.mode_v(k)] - rhs_v));
    }
    return defect;
}

// ---------------------------------------------------------------------------
// Scaling-chart singular limit (appendix A.2): the K2 Galerkin system against
// the planar ODE U' = U^2 - V^2 + mu, V' = 1, compared in the (U, V, T)
// variables u = sqrt(2 a2) U, T = sqrt(2 a2) tau, a2 = a eps^{1/4}.

struct PlanarLimit {
    bool blew_up = false;
    double blowup_T = 0.0;
    num::Trajectory traj;  // state (U, V)
};

inline PlanarLimit planar_limit_solve(double mu, double U0, double V0, double T, double rtol = 1e-12) {
    PlanarLimit out;
    num::Rhs f = [mu](std::span<const double> x, std::span<double> dx) {
        dx[0] = x[0] * x[0] - x[1] * x[1] + mu;
        dx[1] = 1.0;
    };
    std::vector<double> y0 = {U0, V0};
    std::vector<num::EventFn> events(1);
    events[0].g = [](std::span<const double> x) { return std::abs(x[0]) - 1e6; };
    events[0].direction = +1;
    num::IntegratorOptions opt{.rtol = rtol, .atol = 1e-14};
    const auto hit = num::integrate_to_event(f, y0, 0.0, T, events, opt);
    if (hit.found) {
        out.blew_up = true;
        out.blowup_T = hit.t;
    }
    const double t_end = out.blew_up ? hit.t * (1.0 - 1e-9) : T;
    out.traj = num::integrate(f, y0, 0.0, t_end, opt);
    return out;
}

struct K2LimitRow {
    double eps = 0.0;
    double sup_distance = 0.0;
    std::vector<double> snapshot_distance;
};

struct K2LimitResult {
    std::vector<double> T_snapshots;
    bool planar_blew_up = false;
    double blowup_T = 0.0;
    std::vector<K2LimitRow> rows;
};

/// Runs the K2 system on the physical wedge leaf (r2 = eps^{1/8},
/// a2 = a eps^{1/4}) for each eps and measures the (U, V)-variable l2 distance
/// to the planar limit at the T snapshots. The near-constant perturbation
/// `u_mode_pert` sits on the u modes (in U units); v modes start exactly
/// constant, matching the transfer from the entry chart at leading order.
inline K2LimitResult k2_limit_compare(double a, double mu, std::span<const double> eps_list, double T,
                                      double U0, double V0, std::span<const double> u_mode_pert, int k0,
                                      int snapshots = 10, double rtol = 1e-11) {
    if (int(u_mode_pert.size()) > k0 - 1) throw std::invalid_argument("k2_limit_compare: too many mode perturbations");
    K2LimitResult res;
    const PlanarLimit planar = planar_limit_solve(mu, U0, V0, T, rtol);
    res.planar_blew_up = planar.blew_up;
    res.blowup_T = planar.blowup_T;
    const double T_eff = planar.blew_up ? planar.blowup_T * 0.98 : T;
    for (int i = 1; i <= snapshots; ++i) res.T_snapshots.push_back(T_eff * double(i) / double(snapshots));

    for (double eps : eps_list) {
        if (!(eps > 0.0)) throw std::domain_error("k2_limit_compare: eps must be positive");
        const double a2 = a * std::pow(eps, 0.25);
        const double r2 = std::pow(eps, 0.125);
        const double s2a = std::sqrt(2.0 * a2);
        charts::ChartParams cp{.mu = mu, .k0 = k0};
        charts::ChartPoint p = charts::ChartPoint::zero(charts::Chart::K2, k0);
        p.r = r2;
        p.a = a2;
        p.ufirst = s2a * U0;
        p.vfirst = s2a * V0;
        for (size_t m = 0; m < u_mode_pert.size(); ++m) p.mu[m] = s2a * u_mode_pert[m];
        std::vector<double> y0 = charts::pack(p);
        num::Rhs f = [&cp](std::span<const double> x, std::span<double> dx) {
            charts::chart_field(charts::Chart::K2, cp, x, dx);
        };
        num::IntegratorOptions opt{.rtol = rtol, .atol = 1e-13};
        const num::Trajectory tr = num::integrate(f, y0, 0.0, T_eff / s2a, opt);

        K2LimitRow row;
        row.eps = eps;
        charts::Layout L{charts::Chart::K2, k0};
        std::vector<double> pl(2);
        for (double Ts : res.T_snapshots) {
            const std::vector<double> y = tr.at(Ts / s2a);
            planar.traj.eval(Ts, pl);
            double d2 = (y[L.ufirst()] / s2a - pl[0]) * (y[L.ufirst()] / s2a - pl[0]) +
                        (y[L.vfirst()] / s2a - pl[1]) * (y[L.vfirst()] / s2a - pl[1]);
            for (int k = 2; k <= k0; ++k)
                d2 += (y[L.mode_u(k)] / s2a) * (y[L.mode_u(k)] / s2a) + (y[L.mode_v(k)] / s2a) * (y[L.mode_v(k)] / s2a);
            row.snapshot_distance.push_back(std::sqrt(d2));
            row.sup_distance = std::max(row.sup_distance, row.snapshot_distance.back());
        }
        res.rows.push_back(std::move(row));
    }
    return res;
}

/// Constant first-mode-only data at r2 = 0 and fixed a2: the first-mode K2
/// system is exactly the planar limit ODE; returns the sup distance (an
/// integrator-tolerance sized number).
inline double k2_exact_first_mode_distance(double a2, double mu, double T, double U0, double V0,
                                           double rtol = 1e-12) {
    const PlanarLimit planar = planar_limit_solve(mu, U0, V0, T, rtol);
    const double T_eff = planar.blew_up ? planar.blowup_T * 0.98 : T;
    const double s2a = std::sqrt(2.0 * a2);
    charts::ChartParams cp{.mu = mu, .k0 = 1};
    charts::ChartPoint p = charts::ChartPoint::zero(charts::Chart::K2, 1);
    p.r = 0.0;
    p.a = a2;
    p.ufirst = s2a * U0;
    p.vfirst = s2a * V0;
    std::vector<double> y0 = charts::pack(p);
    num::Rhs f = [&cp](std::span<const double> x, std::span<double> dx) {
        charts::chart_field(charts::Chart::K2, cp, x, dx);
    };
    num::IntegratorOptions opt{.rtol = rtol, .atol = 1e-14};
    const num::Trajectory tr = num::integrate(f, y0, 0.0, T_eff / s2a, opt);
    charts::Layout L{charts::Chart::K2, 1};
    double sup = 0.0;
    std::vector<double> pl(2);
    for (int i = 1; i <= 16; ++i) {
        const double Ts = T_eff * double(i) / 16.0;
        const std::vector<double> y = tr.at(Ts / s2a);
        planar.traj.eval(Ts, pl);
        sup = std::max(sup, std::hypot(y[L.ufirst()] / s2a - pl[0], y[L.vfirst()] / s2a - pl[1]));
    }
    return sup;
}

}  // namespace blowup::pdecheck
