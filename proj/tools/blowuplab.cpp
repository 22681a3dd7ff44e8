// blowuplab: batch front-end for the blow-up laboratory.
//
// Subcommands
//   coeffs    closed-form center-manifold coefficients against the
//             order-2 homological oracle
//   passage   one chart-switching passage, itinerary and diagnostics
//   sweep     passages over a (mu, eps, k0) grid, with the exit-scaling fit
//   converge  manifold convergence toward the reference truncation
//   pdecheck  chart-K1 modal identity, K2 singular limit, self-convergence
//
// Exit codes: 0 pass, 1 check failure, 2 config error, 3 numeric error.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "blowup/cm_problems.hpp"
#include "blowup/flow.hpp"
#include "blowup/homological.hpp"
#include "blowup/io.hpp"
#include "blowup/manifolds.hpp"
#include "blowup/pdecheck.hpp"

using namespace blowup;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config_path;
    std::string out_dir = "out";
    int jobs = 0;
    long seed = -1;
    double tol = 0.0;  // 0: per-command default
    io::Config cfg;

    void load() {
        if (!config_path.empty()) cfg = io::Config::load(config_path);
        cfg.apply_env_overrides();
        fs::create_directories(out_dir);
    }
    std::string path(const std::string& name) const { return (fs::path(out_dir) / name).string(); }
    int effective_jobs() const {
        if (jobs > 0) return jobs;
        const unsigned hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1 : int(hc);
    }
};

model::ModelParams model_from(const io::Config& c) {
    model::ModelParams mp;
    mp.mu = c.get("model.mu", 0.5);
    mp.a = c.get("model.a", 1.0);
    mp.eps = c.get("model.eps", 1e-4);
    mp.k0 = int(c.get_long("model.k0", 8));
    return mp;
}

flow::SectionParams sections_from(const io::Config& c) {
    flow::SectionParams s;
    s.rho = c.get("sections.rho", s.rho);
    s.beta = c.get("sections.beta", s.beta);
    s.nu = c.get("sections.nu", s.nu);
    s.C_u = c.get("sections.C_u", s.C_u);
    s.C_v = c.get("sections.C_v", s.C_v);
    s.delta = c.get("sections.delta", 0.0);
    s.Omega = c.get("sections.Omega", 0.0);
    s.w1_v_radius = c.get("sections.w1_v_radius", s.w1_v_radius);
    return s;
}

flow::IntegrationBudget budget_from(const io::Config& c) {
    flow::IntegrationBudget b;
    b.rtol = c.get("run.rtol", b.rtol);
    b.atol = c.get("run.atol", b.atol);
    b.max_tau = c.get("run.max_tau", b.max_tau);
    b.max_steps = c.get_long("run.max_steps", b.max_steps);
    return b;
}

void write_summary(const Common& common, const std::string& cmd, bool pass, io::json metrics) {
    io::json j;
    j["command"] = cmd;
    j["pass"] = pass;
    j["config_hash"] = common.cfg.hash_hex();
    j["metrics"] = std::move(metrics);
    std::ofstream f(common.path("summary_" + cmd + ".json"));
    f << j.dump(2) << "\n";
}

// --------------------------------------------------------------- coeffs ----

int cmd_coeffs(Common& common) {
    const double tol = common.tol > 0.0 ? common.tol : common.cfg.get("coeffs.tol", 1e-8);
    const auto k0s = common.cfg.get_int_list("coeffs.k0_list", {1, 2, 3, 8});
    const auto mus = common.cfg.get_list("coeffs.mu_list", {0.0, 0.5, 2.0});
    const auto cs = common.cfg.get_list("coeffs.c_list", {-0.1, -0.5});
    const auto as = common.cfg.get_list("coeffs.a_list", {0.5, 1.0});
    const auto a1s = common.cfg.get_list("coeffs.a1s_list", {0.0, 0.2});
    const auto k1k0s = common.cfg.get_int_list("coeffs.k1_k0_list", {3, 8});

    for (double c : cs)
        if (c >= 0.0) {
            std::cerr << "coeffs: c = " << c << " rejected: normal hyperbolicity lost (requires c < 0)\n";
            return 2;
        }

    io::CsvWriter csv(common.path("coeffs.csv"), "system,k0,c,mu,a,a1s,max_rel_diff", common.cfg.hash_hex());
    double worst = 0.0;
    for (int k0 : k0s)
        for (double mu : mus)
            for (double c : cs)
                for (double a : as) {
                    const auto problem = manifolds::original_cm_problem(k0, c, mu, a);
                    const auto oracle = problem.solve();
                    const auto closed = manifolds::cm_closed_form(k0, c, mu, a);
                    const double d = manifolds::max_rel_coeff_diff(oracle, closed);
                    worst = std::max(worst, d);
                    csv.row("orig", k0, c, mu, a, "", d);
                }
    for (int k0 : k1k0s)
        for (double mu : mus)
            for (double A : a1s) {
                double d = 0.0;
                if (A > 0.0) {
                    const auto problem = manifolds::k1_cm_problem(k0, A, mu);
                    d = manifolds::max_rel_coeff_diff(problem.solve(), manifolds::cm_closed_form_K1(k0, A, mu));
                } else {
                    const auto problem = manifolds::k1_cm_problem_reduced(k0, mu);
                    d = manifolds::max_rel_coeff_diff(problem.solve(), manifolds::cm_closed_form_K1_reduced(k0, mu));
                    const auto full = manifolds::cm_closed_form_K1(k0, 0.0, mu);
                    for (int k = 2; k <= k0; ++k)
                        if (!full.rows[size_t(k - 1)].empty()) d = std::max(d, 1.0);
                }
                worst = std::max(worst, d);
                csv.row("K1", k0, "", mu, "", A, d);
            }

    const bool pass = worst < tol;
    write_summary(common, "coeffs", pass, {{"max_rel_diff", worst}, {"tol", tol}});
    std::cout << (pass ? "PASS" : "FAIL") << " coeffs: max relative deviation " << worst << " (tol " << tol << ")\n";
    return pass ? 0 : 1;
}

// -------------------------------------------------------------- passage ----

io::json report_json(const flow::PassageReport& rep) {
    io::json j;
    j["outcome"] = flow::outcome_name(rep.outcome);
    j["exit_v"] = rep.exit_v;
    j["exit_distance"] = rep.exit_distance;
    j["n_sections"] = rep.n_sections();
    j["drift_r8eps"] = rep.diag.drift_r8eps;
    j["drift_rm2a"] = rep.diag.drift_rm2a;
    j["nu_effective"] = rep.diag.nu_effective;
    j["v13_at_sigma3in"] = rep.diag.v13_at_sigma3in;
    if (!rep.box_violation.empty()) j["box_violation"] = rep.box_violation;
    io::json itin = io::json::array();
    for (const auto& e : rep.itinerary) {
        io::json je;
        je["chart"] = charts::chart_name(e.chart);
        je["section"] = e.section;
        je["leg_tau"] = e.leg_tau;
        je["cum_tau"] = e.cum_tau;
        je["point"] = io::to_json(e.point);
        itin.push_back(je);
    }
    j["itinerary"] = itin;
    return j;
}

double mode_env_max(const flow::PassageReport& rep) {
    double m = 0.0;
    for (double x : rep.diag.env_u) m = std::max(m, x);
    for (double x : rep.diag.env_v) m = std::max(m, x);
    return m;
}

int cmd_passage(Common& common) {
    const model::ModelParams mp = model_from(common.cfg);
    const flow::SectionParams sec = sections_from(common.cfg);
    const flow::IntegrationBudget budget = budget_from(common.cfg);
    sec.validate(mp.mu);
    const double mode_delta = common.cfg.get("passage.mode_delta", 1e-3);
    const auto entry = flow::passage_entry(mp, sec.rho, mode_delta);
    const auto rep = flow::passage(mp, entry, sec, budget);

    io::CsvWriter csv(common.path("passage.csv"), "index,chart,section,leg_tau,cum_tau,r,eps_i,a_i,vfirst",
                      common.cfg.hash_hex());
    for (size_t i = 0; i < rep.itinerary.size(); ++i) {
        const auto& e = rep.itinerary[i];
        csv.row(i, charts::chart_name(e.chart), e.section, e.leg_tau, e.cum_tau, e.point.r, e.point.eps, e.point.a,
                e.point.vfirst);
    }
    std::ofstream fj(common.path("passage_itinerary.json"));
    fj << report_json(rep).dump(2) << "\n";

    const bool expected_exchange = mp.mu < 1.0;
    const bool pass = (rep.outcome == (expected_exchange ? flow::Outcome::Exchange : flow::Outcome::Jump));
    write_summary(common, "passage", pass, report_json(rep));
    std::cout << (pass ? "PASS" : "FAIL") << " passage: outcome " << flow::outcome_name(rep.outcome) << ", exit_v "
              << rep.exit_v << "\n";
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------- sweep ----

int cmd_sweep(Common& common) {
    const model::ModelParams base = model_from(common.cfg);
    const flow::SectionParams sec = sections_from(common.cfg);
    const flow::IntegrationBudget budget = budget_from(common.cfg);
    const auto mus = common.cfg.get_list("sweep.mu_list", {0.5, 2.0});
    const auto epss = common.cfg.get_list("sweep.eps_list", {1e-3, 1e-4});
    const auto k0s = common.cfg.get_int_list("sweep.k0_list", {4, 8});
    const double mode_delta = common.cfg.get("sweep.mode_delta", 1e-3);
    for (double mu : mus) sec.validate(mu);

    struct Row {
        double mu, eps;
        int k0;
        flow::PassageReport rep;
    };
    std::vector<Row> rows;
    for (double mu : mus)
        for (double eps : epss)
            for (int k0 : k0s) rows.push_back({mu, eps, k0, {}});

    std::atomic<size_t> next{0};
    std::atomic<bool> numeric_error{false};
    std::string error_msg;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= rows.size()) return;
            try {
                model::ModelParams mp = base;
                mp.mu = rows[i].mu;
                mp.eps = rows[i].eps;
                mp.k0 = rows[i].k0;
                const auto entry = flow::passage_entry(mp, sec.rho, mode_delta);
                rows[i].rep = flow::passage(mp, entry, sec, budget);
            } catch (const std::exception& e) {
                std::scoped_lock lock(error_mutex);
                numeric_error = true;
                error_msg = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < common.effective_jobs(); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (numeric_error) {
        std::cerr << "sweep: numeric error: " << error_msg << "\n";
        return 3;
    }

    io::CsvWriter csv(common.path("sweep.csv"),
                      "mu,eps,k0,outcome,exit_v,n_sections,drift_max,mode_env_max", common.cfg.hash_hex());
    const bool dump = common.cfg.get_str("sweep.dump_itineraries", "") == "on";
    bool all_expected = true;
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const double drift = std::max(r.rep.diag.drift_r8eps, r.rep.diag.drift_rm2a);
        csv.row(r.mu, r.eps, r.k0, flow::outcome_name(r.rep.outcome), r.rep.exit_v, r.rep.n_sections(), drift,
                mode_env_max(r.rep));
        const auto expect = r.mu < 1.0 ? flow::Outcome::Exchange : flow::Outcome::Jump;
        if (r.rep.outcome != expect) all_expected = false;
        if (dump) {
            std::ofstream fj(common.path("sweep_itinerary_" + std::to_string(i) + ".json"));
            fj << report_json(r.rep).dump(2) << "\n";
        }
    }

    // exit-scaling fits per (mu > 1, k0) across the eps grid
    io::json slopes = io::json::array();
    for (double mu : mus) {
        if (mu <= 1.0) continue;
        for (int k0 : k0s) {
            std::vector<double> le, lv;
            for (const auto& r : rows)
                if (r.mu == mu && r.k0 == k0 && r.rep.outcome == flow::Outcome::Jump) {
                    le.push_back(std::log(r.eps));
                    lv.push_back(std::log(std::abs(r.rep.exit_v)));
                }
            if (le.size() >= 2) {
                const double slope = num::fit_line(le, lv).slope;
                slopes.push_back({{"mu", mu}, {"k0", k0}, {"slope", slope}});
            }
        }
    }
    write_summary(common, "sweep", all_expected, {{"slopes", slopes}, {"runs", rows.size()}});

    if (common.cfg.get_str("sweep.gnuplot", "") == "on") {
        std::ofstream gp(common.path("sweep.gp"));
        gp << "set logscale xy\nset xlabel 'eps'\nset ylabel '|exit_v|'\n"
           << "plot 'sweep.csv' using 2:(abs($5)) with points title 'exit scaling'\n";
    }
    std::cout << (all_expected ? "PASS" : "FAIL") << " sweep: " << rows.size() << " passages\n";
    return all_expected ? 0 : 1;
}

// ------------------------------------------------------------- converge ----

int cmd_converge(Common& common) {
    const auto k0s = common.cfg.get_int_list("converge.k0_list", {2, 4, 8, 16, 32});
    const int kref = int(common.cfg.get_long("converge.kref", 64));
    const double c = common.cfg.get("converge.c", -0.3);
    const double mu = common.cfg.get("converge.mu", 0.5);
    const double a = common.cfg.get("converge.a", 1.0);
    manifolds::GridSpec grid;
    grid.points = int(common.cfg.get_long("converge.points", 5));
    grid.v1_range = common.cfg.get("converge.v1_range", grid.v1_range);
    grid.eps_max = common.cfg.get("converge.eps_max", grid.eps_max);
    grid.mode_norm = common.cfg.get("converge.mode_norm", grid.mode_norm);
    grid.seed = common.seed;

    const auto rep = manifolds::convergence_report(k0s, c, mu, a, grid, kref);
    io::CsvWriter csv(common.path("converge.csv"), "k0,sup_dist,hausdorff", common.cfg.hash_hex());
    bool monotone = true;
    for (size_t i = 0; i < rep.table.size(); ++i) {
        csv.row(rep.table[i].k0, rep.table[i].sup_dist, rep.table[i].hausdorff);
        if (i > 0 && rep.table[i].sup_dist > rep.table[i - 1].sup_dist) monotone = false;
    }
    const bool pass = monotone && rep.decay_exponent >= 1.0;
    write_summary(common, "converge", pass,
                  {{"monotone", monotone}, {"decay_exponent", rep.decay_exponent}, {"kref", kref}});
    if (common.cfg.get_str("converge.gnuplot", "") == "on") {
        std::ofstream gp(common.path("converge.gp"));
        gp << "set logscale xy\nset xlabel 'k0'\nset ylabel 'sup distance'\n"
           << "plot 'converge.csv' using 1:2 with linespoints title 'h^{k0} vs h^{ref}'\n";
    }
    std::cout << (pass ? "PASS" : "FAIL") << " converge: decay exponent " << rep.decay_exponent << "\n";
    return pass ? 0 : 1;
}

// ------------------------------------------------------------- pdecheck ----

int cmd_pdecheck(Common& common) {
    const double tol_identity = common.cfg.get("pdecheck.identity_tol", 1e-10);
    const int k0 = int(common.cfg.get_long("pdecheck.k0", 8));
    const double mu = common.cfg.get("pdecheck.mu", 0.5);

    // chart-K1 modal identity on sampled points
    std::mt19937 rng(common.seed >= 0 ? unsigned(common.seed) : 12345u);
    std::uniform_real_distribution<double> U(0.2, 0.9), S(-0.3, 0.3);
    double max_defect = 0.0;
    model::ModelParams mp{.mu = mu, .a = 1.0, .eps = 0.0, .k0 = k0};
    for (int trial = 0; trial < 32; ++trial) {
        charts::ChartPoint p = charts::ChartPoint::zero(charts::Chart::K1, k0);
        p.r = U(rng);
        p.eps = U(rng);
        p.a = U(rng) + 0.3;
        p.vfirst = -1.0 + S(rng);
        for (auto& x : p.mu) x = S(rng);
        for (auto& x : p.mv) x = S(rng);
        max_defect = std::max(max_defect, pdecheck::k1_pde_consistency(mp, p));
    }

    // K2 singular limit table
    const auto epss = common.cfg.get_list("pdecheck.eps_list", {1e-2, 1e-3, 1e-4});
    const double T = common.cfg.get("pdecheck.T", 1.0);
    const std::vector<double> pert = common.cfg.get_list("pdecheck.u_mode_pert", {1e-3, 5e-4});
    const auto lim = pdecheck::k2_limit_compare(1.0, mu, epss, T, -1.0, -1.2, pert, std::min(k0, 6));
    io::CsvWriter csv(common.path("pdecheck.csv"), "eps,k0,T_snapshot,l2_distance", common.cfg.hash_hex());
    bool monotone = true;
    for (size_t i = 0; i < lim.rows.size(); ++i) {
        for (size_t j = 0; j < lim.T_snapshots.size(); ++j)
            csv.row(lim.rows[i].eps, std::min(k0, 6), lim.T_snapshots[j], lim.rows[i].snapshot_distance[j]);
        if (i > 0 && lim.rows[i].sup_distance > lim.rows[i - 1].sup_distance) monotone = false;
    }
    const double exact0 = pdecheck::k2_exact_first_mode_distance(0.7, mu, T, -1.0, -1.2);

    // Galerkin self-convergence
    const auto k0list = common.cfg.get_int_list("pdecheck.selfconv_k0_list", {8, 16, 32});
    model::ModelParams base{.mu = mu, .a = 1.0, .eps = 1e-3, .k0 = 0};
    const auto rows = pdecheck::galerkin_self_convergence(base, k0list, -0.3, 0.05, T);
    bool self_monotone = true;
    for (size_t i = 1; i < rows.size(); ++i)
        if (rows[i].distance > rows[i - 1].distance) self_monotone = false;

    const bool pass = (max_defect < tol_identity) && monotone && self_monotone && (exact0 < 1e-8);
    io::json metrics = {{"k1_identity_max_defect", max_defect},
                        {"k2_limit_monotone", monotone},
                        {"k2_exact_first_mode", exact0},
                        {"self_convergence_monotone", self_monotone}};
    write_summary(common, "pdecheck", pass, metrics);
    std::cout << (pass ? "PASS" : "FAIL") << " pdecheck: identity defect " << max_defect << ", limit monotone "
              << monotone << ", self-convergence monotone " << self_monotone << "\n";
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blowuplab: spectral Galerkin blow-up laboratory"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "configuration file");
    app.add_option("--jobs", common.jobs, "worker threads for sweeps (default: cores)");
    app.add_option("--out", common.out_dir, "output directory");
    app.add_option("--seed", common.seed, "seed for sampled grids");
    app.add_option("--tol", common.tol, "override the pass tolerance");

    auto* c1 = app.add_subcommand("coeffs", "oracle vs closed-form coefficients");
    auto* c2 = app.add_subcommand("passage", "single chart-switching passage");
    auto* c3 = app.add_subcommand("sweep", "passage sweep over (mu, eps, k0)");
    auto* c4 = app.add_subcommand("converge", "manifold convergence report");
    auto* c5 = app.add_subcommand("pdecheck", "PDE correspondence checks");
    for (auto* sub : {c1, c2, c3, c4, c5}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        common.load();
        if (c1->parsed()) return cmd_coeffs(common);
        if (c2->parsed()) return cmd_passage(common);
        if (c3->parsed()) return cmd_sweep(common);
        if (c4->parsed()) return cmd_converge(common);
        if (c5->parsed()) return cmd_pdecheck(common);
    } catch (const flow::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
