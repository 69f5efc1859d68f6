// Acceptance gate: ten end-to-end criteria for the deep-stall perch landing
// pipeline, one PASS/FAIL line each. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "perch/experiments.hpp"
#include "perch/trim.hpp"

using namespace perch;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    if (!ok) ++g_failures;
    std::printf("[%s] %2d. %-28s %s\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
}

double now_minus(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// --- 1: trim fixed point --------------------------------------------------

void criterion_trim(const Config& cfg, TrimSolution& trim_out) {
    TrimSpec ts;
    trim_out = solve_trim(ts, cfg.params);
    const TrimSolution& tr = trim_out;

    // steady level flight: x advances linearly, everything else constant
    const double h = 0.01;
    State s = tr.state0;
    for (int k = 0; k < 1000; ++k)
        s = rk4_arc(s, tr.input0, 0.0, 0.0, 0.0, 0.0, cfg.params, h);
    const double xdot = std::cos(tr.state0.theta) * tr.state0.u +
                        std::sin(tr.state0.theta) * tr.state0.w;
    double drift = 0.0;
    drift = std::max(drift, std::abs(s.x - (tr.state0.x + 10.0 * xdot)));
    drift = std::max(drift, std::abs(s.z - tr.state0.z));
    drift = std::max(drift, std::abs(s.u - tr.state0.u));
    drift = std::max(drift, std::abs(s.w - tr.state0.w));
    drift = std::max(drift, std::abs(s.theta - tr.state0.theta));
    drift = std::max(drift, std::abs(s.omega_y - tr.state0.omega_y));

    report(1, "trim fixed point", tr.residual_norm <= 1e-8 && drift < 1e-3,
           fmt("residual=%.2e, 10 s drift=%.2e", tr.residual_norm, drift));
}

// --- 2: lift-curve peak ---------------------------------------------------

void criterion_cl_peak(const Config& cfg) {
    double best_alpha = 0.0, best_cl = -1e9;
    for (double a = 0.0; a <= 60.0 * kDeg; a += 1e-5) {
        double cl, cd, cm;
        aero_coefficients(a, cfg.params, cl, cd, cm);
        if (cl > best_cl) {
            best_cl = cl;
            best_alpha = a;
        }
    }
    const double peak_deg = best_alpha / kDeg;
    report(2, "critical AoA", std::abs(peak_deg - 24.07) <= 0.5,
           fmt("C_L peaks at %.3f deg (C_L=%.4f)", peak_deg, best_cl));
}

// --- 9: numerics hygiene --------------------------------------------------

void criterion_numerics(const Config& cfg, const TrimSolution& trim) {
    // (a) dual-number arc Jacobian vs central differences, 100 random points
    std::mt19937_64 rng(12345);
    auto uni = [&](double lo, double hi) {
        return lo + (hi - lo) * std::uniform_real_distribution<double>()(rng);
    };
    double worst_rel = 0.0;
    for (int pt = 0; pt < 100; ++pt) {
        State s{uni(-300, 0), uni(-250, -1), uni(2, 30), uni(-10, 10),
                uni(-0.5, 2.0), uni(-1.2, 1.2)};
        ControlInput in{uni(-0.6, 0.6), uni(0.0, 1.0)};
        const double us = uni(-6, 2), ws = uni(-1, 1);
        const double gu = uni(-0.2, 0.2), gw = uni(-0.2, 0.2);
        const double h = 0.1;

        using D = ad::Dual2<8>;
        StateT<D> sd;
        sd.x = D::variable(s.x, 0);
        sd.z = D::variable(s.z, 1);
        sd.u = D::variable(s.u, 2);
        sd.w = D::variable(s.w, 3);
        sd.theta = D::variable(s.theta, 4);
        sd.omega_y = D::variable(s.omega_y, 5);
        ControlInputT<D> ind;
        ind.delta_e = D::variable(in.delta_e, 6);
        ind.delta_t = D::variable(in.delta_t, 7);
        const auto outd = rk4_arc(sd, ind, us, ws, gu, gw, cfg.params, h);
        const std::array<D, 6> rows = outd.as_array();

        for (int j = 0; j < 8; ++j) {
            const double eps = 1e-6 * std::max(1.0, std::abs(j < 6
                ? s.as_array()[j] : (j == 6 ? in.delta_e : in.delta_t)));
            auto eval = [&](double d) {
                State sp = s;
                ControlInput ip = in;
                double* f[8] = {&sp.x, &sp.z, &sp.u, &sp.w, &sp.theta,
                                &sp.omega_y, &ip.delta_e, &ip.delta_t};
                *f[j] += d;
                return rk4_arc(sp, ip, us, ws, gu, gw, cfg.params, h);
            };
            const auto op = eval(eps).as_array(), om = eval(-eps).as_array();
            for (int i = 0; i < 6; ++i) {
                const double fd = (op[i] - om[i]) / (2.0 * eps);
                const double an = rows[i].g[j];
                const double rel = std::abs(fd - an) /
                                   std::max(1.0, std::max(std::abs(fd), std::abs(an)));
                worst_rel = std::max(worst_rel, rel);
            }
        }
    }
    const bool deriv_ok = worst_rel <= 1e-5;

    // (b) RK4 order-4 self-convergence on a cruise segment
    auto integrate = [&](double h, double T) {
        State s = trim.state0;
        const int n = static_cast<int>(std::lround(T / h));
        for (int k = 0; k < n; ++k)
            s = rk4_arc(s, trim.input0, 0.0, 0.0, 0.1, -0.05, cfg.params, h);
        return s;
    };
    const State ref = integrate(1.0 / 1024.0, 1.0);
    auto err = [&](double h) {
        const State s = integrate(h, 1.0);
        const auto a = s.as_array(), b = ref.as_array();
        double e = 0.0;
        for (int i = 0; i < 6; ++i) e = std::max(e, std::abs(a[i] - b[i]));
        return e;
    };
    const double e1 = err(1.0 / 8.0), e2 = err(1.0 / 16.0);
    const double order = std::log2(e1 / e2);
    const bool rk4_ok = order > 3.5 && order < 4.5;

    // (c) corridor branch seam continuity at x = 0
    State seam = trim.state0;
    seam.x = 0.0;
    seam.z = -3.0;
    WindSample nw{0.0, 0.0};
    std::vector<double> pre, post;
    residuals_XMPC_branch(seam, nw, cfg.bounds, cfg.corridor, cfg.net, true, pre);
    residuals_XMPC_branch(seam, nw, cfg.bounds, cfg.corridor, cfg.net, false, post);
    double seam_gap = 0.0;
    for (size_t i = 0; i < pre.size(); ++i)
        seam_gap = std::max(seam_gap, std::abs(pre[i] - post[i]));
    const bool seam_ok = seam_gap <= 1e-12;

    report(9, "numerics hygiene", deriv_ok && rk4_ok && seam_ok,
           fmt("deriv rel=%.1e, RK4 order=%.2f, seam gap=%.1e", worst_rel,
               order, seam_gap));
}

// --- 3: nominal generation ------------------------------------------------

bool solve_generation(const Config& cfg, const TrimSolution& trim,
                      ReferenceTrajectory& ref, FeasibilityAudit& audit,
                      std::string& status) {
    const GenerationProblem gp = cfg.generation_problem(trim);
    const auto built = build_generation_nlp(gp);
    nlp::SolveOptions opt;
    opt.constraint_tolerance = cfg.gen_constraint_tolerance;
    opt.optimality_tolerance = cfg.gen_optimality_tolerance;
    opt.max_iterations = cfg.gen_max_iterations;
    opt.mu_init = cfg.gen_mu_init;
    const auto sol = nlp::solve(*built.nlp, initial_guess_generation(gp), opt);
    status = nlp::to_string(sol.report.status);
    if (sol.report.status != nlp::SolveStatus::kOptimal) return false;
    ref = extract_reference(gp, sol.x);
    audit = audit_reference(gp, ref);
    return true;
}

void criterion_generation(const Config& cfg, const TrimSolution& trim,
                          ReferenceTrajectory& ref_out, bool& ok_out) {
    const auto t0 = std::chrono::steady_clock::now();
    FeasibilityAudit audit;
    std::string status;
    const bool solved = solve_generation(cfg, trim, ref_out, audit, status);
    const double wall = now_minus(t0);
    if (!solved) {
        ok_out = false;
        report(3, "nominal generation", false,
               fmt("status=%s after %.0f s", status.c_str(), wall));
        return;
    }
    const State& xf = ref_out.state_at(ref_out.t_f);
    const auto air = air_state(
        xf, wind_in_body(ref_out.steady_u_I, ref_out.steady_w_I, xf.theta, {}));
    const double tol = 1e-6;
    const bool terminal_ok = xf.x >= -tol && xf.x <= 1e-4 + tol &&
                             xf.z >= -4.2 - tol && xf.z <= -2.2 + tol &&
                             air.V_a <= 7.0 + tol;
    ok_out = audit.ok && terminal_ok && wall < 300.0;
    report(3, "nominal generation", ok_out,
           fmt("status=optimal, audit max=%.1e, x_f=%.2e z_f=%.4f V_a=%.4f, %.0f s",
               std::max({audit.max_gap, audit.max_path_violation,
                         audit.max_terminal_violation}),
               xf.x, xf.z, air.V_a, wall));
}

}  // namespace

int main() {
    std::printf("acceptance gate — deep-stall perch landing pipeline\n");
    const Config cfg;
    std::printf("config hash: %llu\n\n",
                static_cast<unsigned long long>(config_hash(cfg)));
    const std::string out = "acceptance_runs";
    std::filesystem::remove_all(out);

    TrimSolution trim;
    criterion_trim(cfg, trim);
    criterion_cl_peak(cfg);
    criterion_numerics(cfg, trim);

    ReferenceTrajectory ref;
    bool gen_ok = false;
    criterion_generation(cfg, trim, ref, gen_ok);

    // 4 (nominal half), 6, 7, 10 need the nominal reference.
    PlateauStats nominal_plateau;
    if (gen_ok) nominal_plateau = deep_stall_plateau(ref);

    // --- 6: zero-gust tracking fixed point
    if (gen_ok) {
        const auto t0 = std::chrono::steady_clock::now();
        const TrackingConfig tc = cfg.tracking_config(0);
        WindField wind;  // nominal: no steady wind, no gusts
        const RunRecord rec =
            track(ref, tc, wind, cfg.bounds, cfg.corridor, cfg.net, cfg.params);
        const double wall = now_minus(t0);
        double worst_err = 0.0, sum_obj = 0.0;
        for (const auto& s : rec.samples) {
            const auto a = s.state.as_array(), b = ref.state_at(s.t).as_array();
            for (int i = 0; i < 6; ++i)
                worst_err = std::max(worst_err, std::abs(a[i] - b[i]));
            if (s.has_solve) sum_obj += s.objective;
        }
        report(6, "zero-gust tracking",
               !rec.aborted && worst_err < 1e-4 && sum_obj < 1e-8 && wall < 120.0,
               fmt("max err=%.1e, total objective=%.1e, %.0f s", worst_err,
                   sum_obj, wall));
    } else {
        report(6, "zero-gust tracking", false, "skipped: no nominal reference");
    }

    // --- 10: byte-identical reproducibility
    if (gen_ok) {
        ReferenceTrajectory ref2;
        FeasibilityAudit audit2;
        std::string status2;
        bool repro = solve_generation(cfg, trim, ref2, audit2, status2);
        if (repro) {
            write_reference_csv(out + "/ref_a.csv", ref);
            write_reference_csv(out + "/ref_b.csv", ref2);
            repro = slurp(out + "/ref_a.csv") == slurp(out + "/ref_b.csv");
        }
        bool mc_repro = false;
        if (repro) {
            monte_carlo(cfg, ref, 2, cfg.base_seed, out + "/mc_a");
            monte_carlo(cfg, ref, 2, cfg.base_seed, out + "/mc_b");
            mc_repro = true;
            for (const char* f : {"run_1.csv", "run_2.csv", "summary.json"})
                mc_repro = mc_repro && slurp(out + "/mc_a/" + f) ==
                                           slurp(out + "/mc_b/" + f) &&
                           !slurp(out + "/mc_a/" + f).empty();
        }
        report(10, "reproducibility", repro && mc_repro,
               repro ? (mc_repro ? "generation and tracking CSVs byte-identical"
                                 : "tracking CSVs differ")
                     : "generation CSVs differ");
    } else {
        report(10, "reproducibility", false, "skipped: no nominal reference");
    }

    // --- 5: wind sweep (also supplies the -6 m/s plateau for criterion 4)
    const WindSweepResult sweep = sweep_wind(cfg, out + "/sweep-wind");
    int deviations = 0;
    std::string pattern;
    PlateauStats headwind6_plateau;
    for (const auto& pt : sweep.points) {
        const bool expect_feasible = pt.u_s <= 0.0;
        if (pt.feasible != expect_feasible) ++deviations;
        pattern += fmt("%+.0f:%s ", pt.u_s, pt.feasible ? "F" : "i");
        if (pt.u_s == -6.0) headwind6_plateau = pt.plateau;
    }
    report(5, "wind-sweep pattern", deviations <= 1,
           fmt("%s(%d deviation%s)", pattern.c_str(), deviations,
               deviations == 1 ? "" : "s"));

    // --- 4: deep-stall plateaus
    {
        const bool nom_ok =
            gen_ok && nominal_plateau.duration_s >= 8.0 &&
            std::abs(nominal_plateau.alpha_deg - 49.11) <= 2.0;
        const bool hw_ok = std::abs(headwind6_plateau.alpha_deg - 27.93) <= 2.0 &&
                           headwind6_plateau.duration_s > 0.0;
        report(4, "deep-stall plateaus", nom_ok && hw_ok,
               fmt("nominal %.2f deg for %.1f s; -6 m/s %.2f deg for %.1f s",
                   nominal_plateau.alpha_deg, nominal_plateau.duration_s,
                   headwind6_plateau.alpha_deg, headwind6_plateau.duration_s));
    }

    // --- 7: Monte Carlo
    if (gen_ok) {
        const auto t0 = std::chrono::steady_clock::now();
        const MonteCarloResult mc =
            monte_carlo(cfg, ref, cfg.mc_runs, cfg.base_seed, out + "/montecarlo");
        const double wall = now_minus(t0);
        const bool count_ok = mc.successes >= 85 && mc.successes <= 100;
        const bool means_ok = std::abs(mc.mean_x - 0.0399) <= 3.0 * 0.0476 &&
                              std::abs(mc.mean_z - -4.2292) <= 3.0 * 0.0250 &&
                              std::abs(mc.mean_va - 7.0957) <= 3.0 * 0.0967;
        report(7, "Monte Carlo", count_ok && means_ok,
               fmt("%d/%d success; mean x=%.4f z=%.4f V_a=%.4f; %.0f s",
                   mc.successes, mc.runs, mc.mean_x, mc.mean_z, mc.mean_va,
                   wall));
    } else {
        report(7, "Monte Carlo", false, "skipped: no nominal reference");
    }

    // --- 8: initial-position grid
    {
        const InitPosResult grid =
            sweep_initial_positions(cfg, out + "/sweep-initpos");
        std::string coords;
        for (const auto& pt : grid.points)
            if (!pt.feasible) coords += fmt("(%.0f,%.0f) ", pt.x_b, pt.z_b);
        report(8, "initial-position grid", grid.feasible_count >= 110,
               fmt("%d/121 feasible, max path V_a=%.1f; infeasible: %s",
                   grid.feasible_count, grid.max_path_airspeed,
                   coords.empty() ? "none" : coords.c_str()));
    }

    std::printf("\n%d of 10 criteria failed\n", g_failures);
    return g_failures;
}
