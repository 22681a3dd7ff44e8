#pragma once

// Embedded Dormand-Prince 5(4) with PI step control, the classical quartic
// dense-output interpolant, and section-event location on the dense output.
// Explicit stepping is sufficient at desk scale; a step-size underflow is
// reported as a structured stiffness error.

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blowup::num {

struct stiffness_error : std::runtime_error {
    double t;
    double h;
    long steps;
    stiffness_error(double t_, double h_, long n)
        : std::runtime_error("integrator: step size underflow at t=" + std::to_string(t_) +
                             " (h=" + std::to_string(h_) + ", steps=" + std::to_string(n) + ")"),
          t(t_), h(h_), steps(n) {}
};

using Rhs = std::function<void(std::span<const double>, std::span<double>)>;

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 0.0;  // 0: choose automatically
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 200000000L;
};

/// One accepted step with the dopri5 interpolant: y(t0 + theta h).
struct DenseStep {
    double t0 = 0.0, h = 0.0;
    std::vector<double> r1, r2, r3, r4, r5;

    void eval(double t, std::span<double> out) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        for (size_t i = 0; i < r1.size(); ++i)
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
    }
};

/// Streaming stepper: advances one accepted step at a time and keeps the
/// dense interpolant of the latest step only.
class Stepper {
  public:
    Stepper(Rhs f, std::span<const double> y0, double t0, IntegratorOptions opt = {})
        : f_(std::move(f)), opt_(opt), t_(t0), y_(y0.begin(), y0.end()) {
        const size_t n = y_.size();
        k_.assign(7, std::vector<double>(n));
        work_.assign(n, 0.0);
        f_(y_, k_[0]);  // FSAL seed
        nfev_ = 1;
        if (opt_.h_init > 0.0) {
            h_ = opt_.h_init;
        } else {
            double ny = 0.0, nf = 0.0;
            for (size_t i = 0; i < n; ++i) {
                ny = std::max(ny, std::abs(y_[i]));
                nf = std::max(nf, std::abs(k_[0][i]));
            }
            h_ = (nf > 0.0) ? 0.01 * std::max(ny, 1e-6) / nf : 1e-6;
        }
        h_ = std::min(h_, opt_.h_max);
    }

    double t() const { return t_; }
    std::span<const double> y() const { return y_; }
    const DenseStep& last_step() const { return dense_; }
    long steps_taken() const { return nsteps_; }
    long evals() const { return nfev_; }

    /// Advance by one accepted step toward t_end (never past it).
    /// Returns false once t_end has been reached.
    bool step(double t_end) {
        if (t_ >= t_end) return false;
        const size_t n = y_.size();
        bool rejected = false;
        for (;;) {
            if (nsteps_ >= opt_.max_steps)
                throw stiffness_error(t_, h_, nsteps_);
            double h = std::min({h_, opt_.h_max, t_end - t_});
            if (!(h > 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t_), 1.0)))
                throw stiffness_error(t_, h, nsteps_);

            // stages 2..6 (k_[0] is FSAL from the previous step); a stage that
            // leaves the field's domain (throw or non-finite) rejects the step
            std::vector<double>& ynew = work_;
            bool finite = true;
            try {
                for (int s = 1; s < 6; ++s) {
                    for (size_t i = 0; i < n; ++i) {
                        double acc = 0.0;
                        for (int j = 0; j < s; ++j) acc += A[s - 1][j] * k_[size_t(j)][i];
                        work_[i] = y_[i] + h * acc;
                    }
                    f_(work_, k_[size_t(s)]);
                    ++nfev_;
                }
                // 5th-order solution (stage 7 = FSAL evaluation at y_new)
                for (size_t i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < 6; ++j) acc += B[j] * k_[size_t(j)][i];
                    ynew[i] = y_[i] + h * acc;
                }
                f_(ynew, k_[6]);
                ++nfev_;
            } catch (const std::exception&) {
                finite = false;
            }

            double err = 0.0;
            for (size_t i = 0; i < n && finite; ++i) {
                double e = 0.0;
                for (int j = 0; j < 7; ++j) e += E[j] * k_[size_t(j)][i];
                const double sc = opt_.atol + opt_.rtol * std::max(std::abs(y_[i]), std::abs(ynew[i]));
                const double q = h * e / sc;
                if (!std::isfinite(q)) finite = false;
                err += q * q;
            }
            err = finite ? std::sqrt(err / double(n)) : std::numeric_limits<double>::infinity();

            if (err <= 1.0) {
                build_dense(h, ynew);
                t_ += h;
                std::swap(y_, ynew);
                std::swap(k_[0], k_[6]);  // FSAL
                ++nsteps_;
                const double fac11 = std::pow(std::max(err, 1e-10), 0.2 - beta * 0.75);
                double fac = fac11 / std::pow(facold_, beta);
                fac = std::max(0.1, std::min(5.0, fac / 0.9));
                double hnew = h / fac;
                if (rejected) hnew = std::min(hnew, h);
                h_ = hnew;
                facold_ = std::max(err, 1e-4);
                return true;
            }
            rejected = true;
            const double fac11 = std::pow(err, 0.2 - beta * 0.75);
            h_ = h / std::min(5.0, fac11 / 0.9);
        }
    }

  private:
    static constexpr double beta = 0.04;
    static constexpr double A[5][5] = {
        {1.0 / 5, 0, 0, 0, 0},
        {3.0 / 40, 9.0 / 40, 0, 0, 0},
        {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656}};
    static constexpr double B[6] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84};
    static constexpr double E[7] = {71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200, 22.0 / 525,
                                    -1.0 / 40};
    static constexpr double D[7] = {-12715105075.0 / 11282082432.0,
                                    0.0,
                                    87487479700.0 / 32700410799.0,
                                    -10690763975.0 / 1880347072.0,
                                    701980252875.0 / 199316789632.0,
                                    -1453857185.0 / 822651844.0,
                                    69997945.0 / 29380423.0};

    void build_dense(double h, const std::vector<double>& ynew) {
        const size_t n = y_.size();
        dense_.t0 = t_;
        dense_.h = h;
        dense_.r1.assign(y_.begin(), y_.end());
        dense_.r2.resize(n);
        dense_.r3.resize(n);
        dense_.r4.resize(n);
        dense_.r5.resize(n);
        for (size_t i = 0; i < n; ++i) {
            const double ydiff = ynew[i] - y_[i];
            const double bspl = h * k_[0][i] - ydiff;
            dense_.r2[i] = ydiff;
            dense_.r3[i] = bspl;
            dense_.r4[i] = ydiff - h * k_[6][i] - bspl;
            double acc = 0.0;
            for (int j = 0; j < 7; ++j) acc += D[j] * k_[size_t(j)][i];
            dense_.r5[i] = h * acc;
        }
    }

    Rhs f_;
    IntegratorOptions opt_;
    double t_;
    std::vector<double> y_;
    std::vector<std::vector<double>> k_;
    std::vector<double> work_;
    DenseStep dense_;
    double h_ = 0.0;
    double facold_ = 1e-4;
    long nsteps_ = 0;
    long nfev_ = 0;
};

/// Stored trajectory with dense output over the whole span.
struct Trajectory {
    std::vector<DenseStep> steps;
    double t0 = 0.0, t1 = 0.0;
    std::vector<double> y_end;

    void eval(double t, std::span<double> out) const {
        if (steps.empty()) throw std::logic_error("Trajectory: empty");
        size_t lo = 0, hi = steps.size() - 1;
        while (lo < hi) {
            const size_t mid = (lo + hi + 1) / 2;
            if (steps[mid].t0 <= t) lo = mid; else hi = mid - 1;
        }
        steps[lo].eval(t, out);
    }
    std::vector<double> at(double t) const {
        std::vector<double> out(y_end.size());
        eval(t, out);
        return out;
    }
};

inline Trajectory integrate(const Rhs& f, std::span<const double> y0, double t0, double t_end,
                            const IntegratorOptions& opt = {}) {
    Stepper st(f, y0, t0, opt);
    Trajectory tr;
    tr.t0 = t0;
    while (st.step(t_end)) tr.steps.push_back(st.last_step());
    tr.t1 = st.t();
    tr.y_end.assign(st.y().begin(), st.y().end());
    return tr;
}

// ---------------------------------------------------------------------------
// Event location.

struct EventFn {
    std::function<double(std::span<const double>)> g;
    int direction = 0;  // +1: - to +, -1: + to -, 0: any sign change
};

struct EventHit {
    bool found = false;
    size_t event_index = 0;
    double t = 0.0;
    std::vector<double> y;
};

using StepObserver = std::function<void(double t, std::span<const double> y)>;

/// First zero of any event function along the flow, located on the dense
/// output by bisection to |g| <= gtol (or a time bracket of machine width).
/// Events already satisfied at the start report a hit at t0. The observer,
/// when given, sees every accepted step endpoint.
inline EventHit integrate_to_event(const Rhs& f, std::span<const double> y0, double t0, double t_max,
                                   std::span<const EventFn> events, const IntegratorOptions& opt = {},
                                   double gtol = 1e-10, const StepObserver& observe = {}) {
    EventHit hit;
    std::vector<double> gprev(events.size());
    for (size_t e = 0; e < events.size(); ++e) {
        gprev[e] = events[e].g(y0);
        if (std::abs(gprev[e]) <= gtol) {
            hit.found = true;
            hit.event_index = e;
            hit.t = t0;
            hit.y.assign(y0.begin(), y0.end());
            return hit;
        }
    }
    Stepper st(f, y0, t0, opt);
    std::vector<double> buf(y0.size());
    const int nsub = 4;  // interior samples per step guard against grazing
    while (st.step(t_max)) {
        const DenseStep& ds = st.last_step();
        double ta = ds.t0;
        std::vector<double> ga = gprev;
        for (int s = 1; s <= nsub; ++s) {
            const double tb = ds.t0 + ds.h * double(s) / double(nsub);
            ds.eval(tb, buf);
            for (size_t e = 0; e < events.size(); ++e) {
                const double gb = events[e].g(buf);
                const bool crossed = (ga[e] < 0.0 && gb >= 0.0 && events[e].direction >= 0) ||
                                     (ga[e] > 0.0 && gb <= 0.0 && events[e].direction <= 0);
                if (!crossed) {
                    ga[e] = gb;
                    continue;
                }
                // bisect on [ta, tb]
                double lo = ta, hi = tb, glo = ga[e];
                for (int it = 0; it < 200; ++it) {
                    const double tm = 0.5 * (lo + hi);
                    ds.eval(tm, buf);
                    const double gm = events[e].g(buf);
                    if (std::abs(gm) <= gtol || (hi - lo) < 1e-15 * std::max(1.0, std::abs(tm))) {
                        hit.found = true;
                        hit.event_index = e;
                        hit.t = tm;
                        hit.y = buf;
                        return hit;
                    }
                    if ((glo < 0.0) == (gm < 0.0)) {
                        lo = tm;
                        glo = gm;
                    } else {
                        hi = tm;
                    }
                }
                ds.eval(hi, buf);
                hit.found = true;
                hit.event_index = e;
                hit.t = hi;
                hit.y = buf;
                return hit;
            }
            ta = tb;
        }
        for (size_t e = 0; e < events.size(); ++e) {
            // refresh gprev at the step end
            gprev[e] = events[e].g(st.y());
        }
        if (observe) observe(st.t(), st.y());
    }
    return hit;  // no event before t_max
}

}  // namespace blowup::num
