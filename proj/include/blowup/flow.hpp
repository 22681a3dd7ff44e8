#pragma once

// Section-event integration and the chart-switching passage tracker: lift the
// entry data into K1, ride the slow manifold to Sigma_1^out, cross the scaling
// chart, and either return through K1 (exchange of stability) or exit through
// K3 (jump), with conserved-quantity and mode-envelope diagnostics.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blowup/charts.hpp"
#include "blowup/integrate.hpp"
#include "blowup/linalg.hpp"
#include "blowup/model.hpp"

namespace blowup::flow {

struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Sum_{k>=2} 1/|b_k| = 2^{3/2}/pi^2 * sum 1/m^2 = 2^{3/2}/6.
inline double b_tail_sum() { return std::pow(2.0, 1.5) / 6.0; }

struct SectionParams {
    double rho = 0.75;   // r = rho entry/exit radius; large enough that r2 = eps^{1/8} < rho
    double beta = 0.25;  // v_{1,2} window half-width on the Sigma_2 sections
    double nu = 1.0;     // validation nu; the trajectory's own a1 at Sigma_1^out is recorded
    double C_u = 1.0;
    double C_v = 1.0;
    double delta = 0.0;  // 0: min(0.1, 0.5 * 4 nu^2 (mu-1)^2 / K^2)
    double Omega = 0.0;  // 0: 2 sqrt(max(mu-1,0)+1)
    double w1_v_radius = 0.5;  // W1 admission window around v_{1,1} = -1

    double K(double /*mu*/) const { return std::max(C_u, C_v) * b_tail_sum(); }

    double delta_value(double mu) const {
        if (delta > 0.0) return delta;
        const double k = K(mu);
        return std::min(0.1, 0.5 * 4.0 * nu * nu * (mu - 1.0) * (mu - 1.0) / (k * k));
    }
    double omega_value(double mu) const { return Omega > 0.0 ? Omega : 2.0 * std::sqrt(std::max(mu - 1.0, 0.0) + 1.0); }

    /// Admissibility constraints on the section parameters; throws config_error
    /// with the violated inequality spelled out.
    void validate(double mu) const {
        if (!(rho > 0.0 && beta > 0.0 && nu > 0.0 && C_u > 0.0 && C_v > 0.0))
            throw config_error("sections: rho, beta, nu, C_u, C_v must be positive");
        if (mu == 1.0) throw config_error("sections: mu = 1 is the excluded canard case");
        const double numax = spectral::pi * spectral::pi / std::sqrt(2.0);
        if (!(nu < numax))
            throw config_error("sections: nu < pi^2/sqrt(2) violated (nu=" + std::to_string(nu) + ")");
        const double k = K(mu);
        const double bound = 4.0 * nu * nu * (mu - 1.0) * (mu - 1.0) / (k * k);
        const double d = delta_value(mu);
        if (!(d < bound))
            throw config_error("sections: delta < 4 nu^2 (mu-1)^2 / K^2 violated (delta=" + std::to_string(d) +
                               ", bound=" + std::to_string(bound) + ")");
    }
};

struct BoxCheck {
    std::string name;
    std::function<double(std::span<const double>)> value;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

struct SectionDef {
    std::string name;
    num::EventFn event;
    std::vector<BoxCheck> boxes;
    bool allow_initial = true;  // report a hit when the condition holds at the start
};

struct BoxViolation {
    std::string section;
    std::string coordinate;
    double value = 0.0, lo = 0.0, hi = 0.0;
};

struct SectionHit {
    bool found = false;
    size_t section_index = 0;
    double tau = 0.0;
    std::vector<double> y;
    std::vector<BoxViolation> violations;
};

struct IntegrationBudget {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_tau = 1e7;
    long max_steps = 100000000L;
    double section_gtol = 1e-10;
};

/// First transversal hit of any of the given sections, with box constraints
/// evaluated at the hit point.
inline SectionHit integrate_to_section(const num::Rhs& rhs, std::span<const double> y0, double tau0,
                                       std::span<const SectionDef> sections, const IntegrationBudget& budget = {},
                                       const num::StepObserver& observe = {}) {
    std::vector<num::EventFn> events;
    events.reserve(sections.size());
    for (const auto& s : sections) events.push_back(s.event);
    num::IntegratorOptions iopt;
    iopt.rtol = budget.rtol;
    iopt.atol = budget.atol;
    iopt.max_steps = budget.max_steps;

    num::EventHit hit;
    bool skip_initial = false;
    for (size_t i = 0; i < sections.size(); ++i)
        if (!sections[i].allow_initial && std::abs(sections[i].event.g(y0)) <= budget.section_gtol) skip_initial = true;
    if (skip_initial) {
        // take one plain step away from the section before arming the events
        num::Stepper st(rhs, y0, tau0, iopt);
        if (!st.step(tau0 + budget.max_tau)) return {};
        std::vector<double> y1(st.y().begin(), st.y().end());
        if (observe) observe(st.t(), y1);
        hit = num::integrate_to_event(rhs, y1, st.t(), tau0 + budget.max_tau, events, iopt, budget.section_gtol,
                                      observe);
    } else {
        hit = num::integrate_to_event(rhs, y0, tau0, tau0 + budget.max_tau, events, iopt, budget.section_gtol,
                                      observe);
    }

    SectionHit out;
    if (!hit.found) return out;
    out.found = true;
    out.section_index = hit.event_index;
    out.tau = hit.t;
    out.y = std::move(hit.y);
    const auto& sec = sections[hit.event_index];
    for (const auto& box : sec.boxes) {
        const double v = box.value(out.y);
        if (v < box.lo || v > box.hi) out.violations.push_back({sec.name, box.name, v, box.lo, box.hi});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Passage tracking.

enum class Outcome { Exchange, Jump, EscapedBox, MaxTime };

inline const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Exchange: return "EXCHANGE";
        case Outcome::Jump: return "JUMP";
        case Outcome::EscapedBox: return "ESCAPED_BOX";
        case Outcome::MaxTime: return "MAX_TIME";
    }
    return "?";
}

struct ItineraryEntry {
    charts::Chart chart;
    std::string section;
    charts::ChartPoint point;
    double leg_tau = 0.0;  // desingularized time within the leg
    double cum_tau = 0.0;  // strictly increasing across the passage
};

struct PassageDiagnostics {
    double drift_r8eps = 0.0;  // max relative drift of r^8 eps per unit tau over K1/K3 legs
    double drift_rm2a = 0.0;   // max relative drift of r^{-2} a per unit tau
    double drift_K2 = 0.0;     // max |r2, a2 deviation| over the K2 leg
    std::vector<double> env_u, env_v;      // per mode 2..k0, max chart amplitude over the itinerary
    std::vector<double> env_ratio_u, env_ratio_v;  // amplitude / active-chart cap
    double nu_effective = 0.0;             // a1 at Sigma_1^out
    double v13_at_sigma3in = 0.0;          // jump case: size O(delta^{1/4})
    std::vector<std::string> warnings;
};

struct PassageReport {
    Outcome outcome = Outcome::MaxTime;
    std::vector<ItineraryEntry> itinerary;
    double exit_v = std::numeric_limits<double>::quiet_NaN();  // slow variable, constant-function units
    double exit_distance = std::numeric_limits<double>::quiet_NaN();  // exchange: to the pair (-rho, rho)
    PassageDiagnostics diag;
    std::string box_violation;
    int n_sections() const { return int(itinerary.size()); }
};

namespace detail {

struct EnvTracker {
    int k0;
    charts::Chart chart;
    double cap_u = 0.0, cap_v = 0.0;  // squared caps at this chart's section scale, times |b_k|
    PassageDiagnostics* diag;

    void operator()(double, std::span<const double> y) const {
        charts::Layout L{chart, k0};
        for (int k = 2; k <= k0; ++k) {
            const double bu = std::abs(y[L.mode_u(k)]);
            const double bv = std::abs(y[L.mode_v(k)]);
            auto& eu = diag->env_u[size_t(k - 2)];
            auto& ev = diag->env_v[size_t(k - 2)];
            eu = std::max(eu, bu);
            ev = std::max(ev, bv);
            const double bk = std::abs(spectral::b_coefficient(k));
            if (cap_u > 0.0)
                diag->env_ratio_u[size_t(k - 2)] = std::max(diag->env_ratio_u[size_t(k - 2)], bu / std::sqrt(cap_u / bk));
            if (cap_v > 0.0)
                diag->env_ratio_v[size_t(k - 2)] = std::max(diag->env_ratio_v[size_t(k - 2)], bv / std::sqrt(cap_v / bk));
        }
    }
};

struct DriftTracker {
    charts::Chart chart;
    int k0;
    double q1_ref = 0.0, q2_ref = 0.0;
    double tau0 = 0.0;
    double max1 = 0.0, max2 = 0.0, span = 0.0;

    void init(double tau, std::span<const double> y) {
        charts::Layout L{chart, k0};
        tau0 = tau;
        if (chart == charts::Chart::K2) {
            q1_ref = y[L.r()];
            q2_ref = y[L.a()];
        } else {
            q1_ref = std::pow(y[L.r()], 8.0) * y[L.eps()];
            q2_ref = y[L.a()] / (y[L.r()] * y[L.r()]);
        }
    }
    void operator()(double tau, std::span<const double> y) {
        charts::Layout L{chart, k0};
        span = std::max(span, tau - tau0);
        if (chart == charts::Chart::K2) {
            max1 = std::max(max1, std::abs(y[L.r()] - q1_ref));
            max2 = std::max(max2, std::abs(y[L.a()] - q2_ref));
        } else {
            const double q1 = std::pow(y[L.r()], 8.0) * y[L.eps()];
            const double q2 = y[L.a()] / (y[L.r()] * y[L.r()]);
            max1 = std::max(max1, std::abs(q1 - q1_ref) / std::max(std::abs(q1_ref), 1e-300));
            max2 = std::max(max2, std::abs(q2 - q2_ref) / std::max(std::abs(q2_ref), 1e-300));
        }
    }
    double rate1() const { return span > 1e-9 ? max1 / span : 0.0; }
    double rate2() const { return span > 1e-9 ? max2 / span : 0.0; }
};

inline std::vector<BoxCheck> mode_caps(charts::Chart chart, int k0, double Cu, double Cv, double scale) {
    std::vector<BoxCheck> boxes;
    charts::Layout L{chart, k0};
    for (int k = 2; k <= k0; ++k) {
        const double bk = std::abs(spectral::b_coefficient(k));
        const double cu = std::sqrt(Cu * scale / bk);
        const double cv = std::sqrt(Cv * scale / bk);
        boxes.push_back({"u" + std::to_string(k), [L, k](std::span<const double> y) { return y[L.mode_u(k)]; }, -cu, cu});
        boxes.push_back({"v" + std::to_string(k), [L, k](std::span<const double> y) { return y[L.mode_v(k)]; }, -cv, cv});
    }
    return boxes;
}

}  // namespace detail

/// Full passage from an original-coordinates entry state near the constant
/// pair (-rho, -rho) through the blow-up charts.
inline PassageReport passage(const model::ModelParams& mp, const model::GalerkinState& entry,
                             const SectionParams& sec = {}, const IntegrationBudget& budget = {}) {
    mp.validate();
    sec.validate(mp.mu);
    if (entry.k0() != mp.k0) throw std::invalid_argument("passage: entry state size mismatch");
    if (!(entry.u[0] < 0.0)) throw std::invalid_argument("passage: entry requires u1 < 0 for the K1 lift");
    if (!(mp.eps > 0.0)) throw std::invalid_argument("passage: requires eps > 0");

    const int k0 = mp.k0;
    const double mu = mp.mu;
    const double delta = sec.delta_value(mu);
    const double rho = sec.rho;
    const double dm38 = std::pow(delta, -0.375);
    charts::ChartParams cp{.mu = mu, .k0 = k0};
    charts::Layout L1{charts::Chart::K1, k0}, L2{charts::Chart::K2, k0}, L3{charts::Chart::K3, k0};

    PassageReport rep;
    rep.diag.env_u.assign(size_t(std::max(k0 - 1, 0)), 0.0);
    rep.diag.env_v.assign(size_t(std::max(k0 - 1, 0)), 0.0);
    rep.diag.env_ratio_u.assign(size_t(std::max(k0 - 1, 0)), 0.0);
    rep.diag.env_ratio_v.assign(size_t(std::max(k0 - 1, 0)), 0.0);
    double cum_tau = 0.0;

    auto rhs_for = [&](charts::Chart c) {
        return num::Rhs([&cp, c](std::span<const double> x, std::span<double> dx) { charts::chart_field(c, cp, x, dx); });
    };
    auto record = [&](charts::Chart c, const std::string& name, std::span<const double> y, double leg_tau) {
        cum_tau += leg_tau;
        rep.itinerary.push_back({c, name, charts::unpack(c, k0, y), leg_tau, cum_tau});
    };
    auto escaped = [&](const SectionHit& hit) {
        rep.outcome = Outcome::EscapedBox;
        rep.box_violation = hit.violations.front().section + "/" + hit.violations.front().coordinate;
        for (const auto& v : hit.violations)
            rep.diag.warnings.push_back("box " + v.section + "/" + v.coordinate + " = " + std::to_string(v.value));
        return rep;
    };

    // --- chart K1: entry leg down to Sigma_1^in = {r1 = rho}, then to
    // Sigma_1^out = {eps1 = delta}.
    charts::ChartPoint p1 = charts::lift(entry, mp.eps, mp.a, charts::Chart::K1);
    std::vector<double> y = charts::pack(p1);

    detail::EnvTracker env1{k0, charts::Chart::K1, sec.C_u * std::pow(delta, 1.5), sec.C_v * std::pow(delta, 1.5),
                            &rep.diag};
    detail::DriftTracker drift1{charts::Chart::K1, k0};
    drift1.init(0.0, y);
    auto obs1 = [&](double t, std::span<const double> yy) {
        env1(t, yy);
        drift1(t, yy);
    };

    {
        std::vector<SectionDef> s1in;
        SectionDef d;
        d.name = "Sigma1_in";
        d.event.g = [L1, rho](std::span<const double> yy) { return yy[L1.r()] - rho; };
        d.event.direction = -1;
        d.boxes = detail::mode_caps(charts::Chart::K1, k0, sec.C_u, sec.C_v, std::pow(delta, 1.5));
        d.boxes.push_back({"v11", [L1](std::span<const double> yy) { return yy[L1.vfirst()]; },
                           -1.0 - sec.w1_v_radius, -1.0 + sec.w1_v_radius});
        s1in.push_back(std::move(d));
        const SectionHit hit = integrate_to_section(rhs_for(charts::Chart::K1), y, 0.0, s1in, budget, obs1);
        if (!hit.found) {
            rep.outcome = Outcome::MaxTime;
            return rep;
        }
        if (!hit.violations.empty()) return escaped(hit);
        y = hit.y;
        record(charts::Chart::K1, "Sigma1_in", y, hit.tau);
    }
    {
        std::vector<SectionDef> s1out;
        SectionDef d;
        d.name = "Sigma1_out";
        d.event.g = [L1, delta](std::span<const double> yy) { return yy[L1.eps()] - delta; };
        d.event.direction = +1;
        d.boxes = detail::mode_caps(charts::Chart::K1, k0, sec.C_u, sec.C_v, std::pow(delta, 1.5));
        s1out.push_back(std::move(d));
        const SectionHit hit = integrate_to_section(rhs_for(charts::Chart::K1), y, 0.0, s1out, budget, obs1);
        if (!hit.found) {
            rep.outcome = Outcome::MaxTime;
            return rep;
        }
        if (!hit.violations.empty()) return escaped(hit);
        y = hit.y;
        record(charts::Chart::K1, "Sigma1_out", y, hit.tau);
        rep.diag.nu_effective = y[L1.a()];
    }
    rep.diag.drift_r8eps = std::max(rep.diag.drift_r8eps, drift1.rate1());
    rep.diag.drift_rm2a = std::max(rep.diag.drift_rm2a, drift1.rate2());

    // --- kappa_12 into the scaling chart; Sigma_2^in boxes.
    charts::ChartPoint p2 = charts::kappa12(charts::unpack(charts::Chart::K1, k0, y));
    y = charts::pack(p2);
    {
        const double vc = -dm38;
        if (std::abs(y[L2.vfirst()] - vc) > sec.beta) {
            rep.outcome = Outcome::EscapedBox;
            rep.box_violation = "Sigma2_in/v12";
            return rep;
        }
        for (const auto& box : detail::mode_caps(charts::Chart::K2, k0, sec.C_u, sec.C_v, std::pow(delta, 0.75))) {
            const double v = box.value(y);
            if (v < box.lo || v > box.hi) {
                rep.outcome = Outcome::EscapedBox;
                rep.box_violation = "Sigma2_in/" + box.name;
                return rep;
            }
        }
        record(charts::Chart::K2, "Sigma2_in", y, 0.0);
    }

    detail::EnvTracker env2{k0, charts::Chart::K2, sec.C_u * std::pow(delta, 0.75), sec.C_v * std::pow(delta, 0.75),
                            &rep.diag};
    detail::DriftTracker drift2{charts::Chart::K2, k0};
    drift2.init(0.0, y);
    auto obs2 = [&](double t, std::span<const double> yy) {
        env2(t, yy);
        drift2(t, yy);
    };

    bool exchange;
    {
        std::vector<SectionDef> s2;
        SectionDef da;
        da.name = "Sigma2_out_a";
        da.event.g = [L2, dm38](std::span<const double> yy) { return yy[L2.ufirst()] + dm38; };
        da.event.direction = -1;
        da.allow_initial = false;
        da.boxes = detail::mode_caps(charts::Chart::K2, k0, sec.C_u, sec.C_v, std::pow(delta, 0.75));
        da.boxes.push_back({"v12", [L2](std::span<const double> yy) { return yy[L2.vfirst()]; }, dm38 - sec.beta,
                            dm38 + sec.beta});
        SectionDef de;
        de.name = "Sigma2_out_e";
        de.event.g = [L2, dm38](std::span<const double> yy) { return yy[L2.ufirst()] - dm38; };
        de.event.direction = +1;
        de.boxes = detail::mode_caps(charts::Chart::K2, k0, sec.C_u, sec.C_v, std::pow(delta, 0.75));
        de.boxes.push_back({"v12", [L2](std::span<const double> yy) { return yy[L2.vfirst()]; },
                            -std::numeric_limits<double>::infinity(), sec.omega_value(mu) * std::pow(delta, -0.125)});
        s2.push_back(std::move(da));
        s2.push_back(std::move(de));
        const SectionHit hit = integrate_to_section(rhs_for(charts::Chart::K2), y, 0.0, s2, budget, obs2);
        if (!hit.found) {
            rep.outcome = Outcome::MaxTime;
            return rep;
        }
        if (!hit.violations.empty()) return escaped(hit);
        exchange = (hit.section_index == 0);
        y = hit.y;
        record(charts::Chart::K2, exchange ? "Sigma2_out_a" : "Sigma2_out_e", y, hit.tau);
    }
    rep.diag.drift_K2 = std::max(drift2.max1, drift2.max2);

    const double sqrt2a = std::sqrt(2.0 * mp.a);
    if (exchange) {
        // --- kappa_21 back into K1 near the v11 = +1 branch; run out to the
        // blow-down of Delta_a^out: v original = rho (constant-function units).
        charts::ChartPoint p1b = charts::kappa21(charts::unpack(charts::Chart::K2, k0, y));
        y = charts::pack(p1b);
        detail::DriftTracker drift3{charts::Chart::K1, k0};
        drift3.init(0.0, y);
        auto obs3 = [&](double t, std::span<const double> yy) {
            env1(t, yy);
            drift3(t, yy);
        };
        std::vector<SectionDef> sa;
        SectionDef d;
        d.name = "Delta_a_out";
        d.event.g = [L1, rho, sqrt2a](std::span<const double> yy) {
            const double r3 = yy[L1.r()] * yy[L1.r()] * yy[L1.r()];
            return r3 * yy[L1.vfirst()] - rho * sqrt2a;
        };
        d.event.direction = +1;
        sa.push_back(std::move(d));
        const SectionHit hit = integrate_to_section(rhs_for(charts::Chart::K1), y, 0.0, sa, budget, obs3);
        if (!hit.found) {
            rep.outcome = Outcome::MaxTime;
            return rep;
        }
        y = hit.y;
        record(charts::Chart::K1, "Delta_a_out", y, hit.tau);
        rep.diag.drift_r8eps = std::max(rep.diag.drift_r8eps, drift3.rate1());
        rep.diag.drift_rm2a = std::max(rep.diag.drift_rm2a, drift3.rate2());

        const auto bd = charts::blowdown(charts::unpack(charts::Chart::K1, k0, y));
        rep.exit_v = bd.state.v[0] / sqrt2a;
        double d2 = (bd.state.u[0] + rho * sqrt2a) * (bd.state.u[0] + rho * sqrt2a) +
                    (bd.state.v[0] - rho * sqrt2a) * (bd.state.v[0] - rho * sqrt2a);
        for (int k = 2; k <= k0; ++k)
            d2 += bd.state.u[size_t(k - 1)] * bd.state.u[size_t(k - 1)] +
                  bd.state.v[size_t(k - 1)] * bd.state.v[size_t(k - 1)];
        rep.exit_distance = std::sqrt(d2) / sqrt2a;
        rep.outcome = Outcome::Exchange;
        return rep;
    }

    // --- kappa_23 into the exit chart at Sigma_3^in = {eps3 = delta}; ride
    // out to Sigma_3^out = {r3 = rho}.
    charts::ChartPoint p3 = charts::kappa23(charts::unpack(charts::Chart::K2, k0, y));
    y = charts::pack(p3);
    rep.diag.v13_at_sigma3in = y[L3.vfirst()];
    record(charts::Chart::K3, "Sigma3_in", y, 0.0);

    detail::EnvTracker env3{k0, charts::Chart::K3, sec.C_u * std::pow(delta, 0.75), sec.C_v * std::pow(delta, 0.75),
                            &rep.diag};
    detail::DriftTracker drift4{charts::Chart::K3, k0};
    drift4.init(0.0, y);
    auto obs4 = [&](double t, std::span<const double> yy) {
        env3(t, yy);
        drift4(t, yy);
    };
    {
        std::vector<SectionDef> s3;
        SectionDef d;
        d.name = "Sigma3_out";
        d.event.g = [L3, rho](std::span<const double> yy) { return yy[L3.r()] - rho; };
        d.event.direction = +1;
        s3.push_back(std::move(d));
        const SectionHit hit = integrate_to_section(rhs_for(charts::Chart::K3), y, 0.0, s3, budget, obs4);
        if (!hit.found) {
            rep.outcome = Outcome::MaxTime;
            return rep;
        }
        y = hit.y;
        record(charts::Chart::K3, "Sigma3_out", y, hit.tau);
    }
    rep.diag.drift_r8eps = std::max(rep.diag.drift_r8eps, drift4.rate1());
    rep.diag.drift_rm2a = std::max(rep.diag.drift_rm2a, drift4.rate2());

    const auto bd = charts::blowdown(charts::unpack(charts::Chart::K3, k0, y));
    rep.exit_v = bd.state.v[0] / sqrt2a;
    rep.outcome = Outcome::Jump;
    return rep;
}

/// Default entry data for a passage: the constant pair (-rho, -rho) in
/// function units plus a Fourier-decay mode perturbation of amplitude delta.
inline model::GalerkinState passage_entry(const model::ModelParams& mp, double rho, double mode_delta = 0.0) {
    model::GalerkinState s = model::initial_condition(-rho * std::sqrt(2.0 * mp.a), mode_delta, {}, mp.k0, mp.a);
    return s;
}

// ---------------------------------------------------------------------------
// Exit scaling fit (jump case).

struct ExitScalingResult {
    double slope = 0.0;
    std::vector<double> eps;
    std::vector<double> exit_v;
    std::vector<PassageReport> reports;
};

/// Runs a passage per eps (mu > 1), collects |exit_v| at the blow-down of
/// Sigma_3^out and fits log|exit_v| against log eps.
inline ExitScalingResult exit_scaling_fit(model::ModelParams base, std::span<const double> eps_list,
                                          const SectionParams& sec = {}, const IntegrationBudget& budget = {},
                                          double entry_mode_delta = 0.0) {
    if (!(base.mu > 1.0)) throw config_error("exit_scaling_fit: requires mu > 1");
    if (eps_list.size() < 2) throw config_error("exit_scaling_fit: need at least two eps values");
    double lo = eps_list[0], hi = eps_list[0];
    for (double e : eps_list) {
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    if (std::log10(hi / lo) < 1.5) throw config_error("exit_scaling_fit: eps list must span >= 1.5 decades");

    ExitScalingResult res;
    std::vector<double> le, lv;
    for (double eps : eps_list) {
        model::ModelParams mp = base;
        mp.eps = eps;
        const model::GalerkinState entry = passage_entry(mp, sec.rho, entry_mode_delta);
        PassageReport rep = passage(mp, entry, sec, budget);
        if (rep.outcome != Outcome::Jump)
            throw std::runtime_error("exit_scaling_fit: passage at eps=" + std::to_string(eps) + " ended " +
                                     outcome_name(rep.outcome) + ", not JUMP");
        res.eps.push_back(eps);
        res.exit_v.push_back(rep.exit_v);
        le.push_back(std::log(eps));
        lv.push_back(std::log(std::abs(rep.exit_v)));
        res.reports.push_back(std::move(rep));
    }
    res.slope = num::fit_line(le, lv).slope;
    return res;
}

// ---------------------------------------------------------------------------
// Desingularization consistency: the blow-down of a chart trajectory traces
// the same curve as the original-coordinates trajectory once the chart time
// tau is converted back through dt/dtau = r^{-3}.

inline double desing_consistency_check(const model::ModelParams& mp, charts::Chart chart,
                                       const charts::ChartPoint& start, double tau_span,
                                       const IntegrationBudget& budget = {}, int samples = 50) {
    const int k0 = mp.k0;
    charts::ChartParams cp{.mu = mp.mu, .k0 = k0};
    charts::Layout L{chart, k0};
    const size_t n = charts::chart_dim(k0);

    num::Rhs aug = [&](std::span<const double> x, std::span<double> dx) {
        charts::chart_field(chart, cp, x.subspan(0, n), dx.subspan(0, n));
        dx[n] = std::pow(x[L.r()], -3.0);  // dt/dtau
    };
    std::vector<double> y0 = charts::pack(start);
    y0.push_back(0.0);
    num::IntegratorOptions iopt{.rtol = budget.rtol, .atol = budget.atol, .max_steps = budget.max_steps};
    const num::Trajectory chart_tr = num::integrate(aug, y0, 0.0, tau_span, iopt);

    const auto bd0 = charts::blowdown(start);
    model::ModelParams mp_run = mp;
    mp_run.eps = bd0.eps;
    mp_run.a = bd0.a;
    const std::vector<double> x0 = model::pack(bd0.state, bd0.eps, bd0.a);
    const double t_end = chart_tr.y_end.back();
    num::Rhs orig = [&](std::span<const double> x, std::span<double> dx) { model::vector_field(mp_run, x, dx); };
    const num::Trajectory orig_tr = num::integrate(orig, x0, 0.0, t_end, iopt);

    double sup = 0.0;
    std::vector<double> buf(n + 1);
    for (int i = 1; i <= samples; ++i) {
        const double tau = tau_span * double(i) / double(samples);
        chart_tr.eval(tau, buf);
        const charts::ChartPoint p = charts::unpack(chart, k0, std::span<const double>(buf).subspan(0, n));
        const auto bd = charts::blowdown(p);
        const std::vector<double> xo = orig_tr.at(std::min(buf[n], t_end));
        for (int k = 0; k < k0; ++k) {
            sup = std::max(sup, std::abs(bd.state.u[size_t(k)] - xo[size_t(k)]));
            sup = std::max(sup, std::abs(bd.state.v[size_t(k)] - xo[size_t(k0 + k)]));
        }
        sup = std::max(sup, std::abs(bd.eps - xo[size_t(2 * k0)]));
    }
    return sup;
}

/// Per-mode max amplitudes of a completed passage against the section caps.
struct ModeEnvelope {
    std::vector<int> k;
    std::vector<double> max_u, max_v;
    std::vector<double> ratio_u, ratio_v;  // against the active chart's cap
    bool caps_ok = true;
};

inline ModeEnvelope mode_envelope(const PassageReport& rep) {
    ModeEnvelope env;
    for (size_t i = 0; i < rep.diag.env_u.size(); ++i) {
        env.k.push_back(int(i) + 2);
        env.max_u.push_back(rep.diag.env_u[i]);
        env.max_v.push_back(rep.diag.env_v[i]);
        env.ratio_u.push_back(rep.diag.env_ratio_u[i]);
        env.ratio_v.push_back(rep.diag.env_ratio_v[i]);
        if (rep.diag.env_ratio_u[i] > 1.0 || rep.diag.env_ratio_v[i] > 1.0) env.caps_ok = false;
    }
    return env;
}

}  // namespace blowup::flow
