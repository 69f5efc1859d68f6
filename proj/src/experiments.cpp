#include "perch/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace perch {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
}

/// Run tasks [0, n) over a fixed-size worker pool. Each task owns its
/// output slot, so the aggregate is identical however the pool schedules.
void run_pool(int n, const std::function<void(int)>& task) {
    const unsigned workers =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(n)));
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) task(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

PlateauStats deep_stall_plateau(const ReferenceTrajectory& ref) {
    PlateauStats out;
    const int nn = ref.num_nodes();
    constexpr double band = 1.0 * kDeg;
    int best_lo = -1, best_len = 0;
    int lo = 0;
    // two-pointer scan for the longest deep-stall window with AoA spread <= band
    for (int hi = 0; hi < nn; ++hi) {
        if (ref.phase[hi] != "deep-stall") {
            lo = hi + 1;
            continue;
        }
        while (lo < hi) {
            double mn = ref.alpha[hi], mx = ref.alpha[hi];
            for (int k = lo; k <= hi; ++k) {
                mn = std::min(mn, ref.alpha[k]);
                mx = std::max(mx, ref.alpha[k]);
            }
            if (mx - mn <= band) break;
            ++lo;
        }
        if (hi - lo + 1 > best_len) {
            best_len = hi - lo + 1;
            best_lo = lo;
        }
    }
    if (best_lo < 0) return out;
    double sum = 0.0;
    for (int k = best_lo; k < best_lo + best_len; ++k) sum += ref.alpha[k];
    out.alpha_deg = sum / best_len / kDeg;
    out.start_t = ref.t0 + best_lo * ref.dt;
    out.duration_s = (best_len - 1) * ref.dt;
    return out;
}

PhaseLandmarks phase_landmarks(const ReferenceTrajectory& ref) {
    PhaseLandmarks lm;
    const int nn = ref.num_nodes();
    int first_stall = -1;
    for (int k = 0; k < nn; ++k)
        if (ref.phase[k] == "deep-stall") {
            first_stall = k;
            break;
        }
    if (first_stall < 0) return lm;
    lm.stall_entry_t = ref.t0 + first_stall * ref.dt;

    const PlateauStats p = deep_stall_plateau(ref);
    lm.deep_stall_start_t = p.start_t;
    lm.deep_stall_end_t = p.start_t + p.duration_s;

    // The terminal flare raises AoA back above critical, so the escape from
    // stall is the start of the last below-critical ("recovery") run before
    // the over-net phase, not the last above-critical sample.
    int perch_start = nn;
    for (int k = 0; k < nn; ++k)
        if (ref.phase[k] == "perch") {
            perch_start = k;
            break;
        }
    int exit_k = -1;
    for (int k = 0; k < perch_start; ++k)
        if (ref.phase[k] == "recovery" && (k == 0 || ref.phase[k - 1] != "recovery"))
            exit_k = k;
    lm.stall_exit_t =
        exit_k >= 0 ? ref.t0 + exit_k * ref.dt : lm.deep_stall_end_t;

    // Recovery onset: first meaningful throttle after the stable plateau.
    lm.recovery_t = lm.stall_exit_t;
    const auto plateau_end =
        static_cast<size_t>(std::lround((lm.deep_stall_end_t - ref.t0) / ref.dt));
    for (size_t k = plateau_end; k < ref.inputs.size(); ++k) {
        if (ref.inputs[k].delta_t > 0.01) {
            lm.recovery_t = ref.t0 + k * ref.dt;
            break;
        }
    }
    return lm;
}

WindSweepResult sweep_wind(const Config& config, const std::string& out_dir,
                           int verbosity) {
    ensure_dir(out_dir);
    const std::vector<double> winds{2, 1, 0, -1, -2, -3, -4, -5, -6};
    WindSweepResult res;
    res.points.resize(winds.size());

    for (size_t i = 0; i < winds.size(); ++i) {
        WindSweepPoint& pt = res.points[i];
        pt.u_s = winds[i];
        Config c = config;
        c.steady_u_I = winds[i];
        try {
            TrimSpec ts;
            ts.V_a_ref = c.V_a_ref;
            ts.steady_wind_u_I = c.steady_u_I;
            ts.steady_wind_w_I = c.steady_w_I;
            ts.x0 = c.x0;
            ts.z0 = c.z0;
            const TrimSolution trim = solve_trim(ts, c.params);
            const GenerationProblem gp = c.generation_problem(trim);
            pt.t_f = gp.t_f;
            const auto built = build_generation_nlp(gp);
            nlp::SolveOptions opt;
            opt.constraint_tolerance = c.gen_constraint_tolerance;
            opt.optimality_tolerance = c.gen_optimality_tolerance;
            opt.max_iterations = c.gen_max_iterations;
            opt.mu_init = c.gen_mu_init;
            opt.verbosity = verbosity;
            const auto sol =
                nlp::solve(*built.nlp, initial_guess_generation(gp), opt);
            pt.report = sol.report;
            pt.status = nlp::to_string(sol.report.status);
            if (sol.report.status == nlp::SolveStatus::kOptimal ||
                sol.report.status == nlp::SolveStatus::kAcceptable) {
                ReferenceTrajectory ref = extract_reference(gp, sol.x);
                const FeasibilityAudit audit = audit_reference(gp, ref);
                pt.audit_violation =
                    std::max({audit.max_gap, audit.max_path_violation,
                              audit.max_terminal_violation});
                pt.feasible = audit.ok;
                pt.plateau = deep_stall_plateau(ref);
                char name[64];
                std::snprintf(name, sizeof name, "/us_%+03d.csv",
                              static_cast<int>(winds[i]));
                write_reference_csv(out_dir + name, ref);
                pt.reference = std::move(ref);
            }
        } catch (const std::exception& e) {
            pt.status = std::string("error: ") + e.what();
        }
        if (verbosity > 0)
            std::printf("[sweep-wind] u_s=%+.0f status=%s feasible=%d\n", pt.u_s,
                        pt.status.c_str(), static_cast<int>(pt.feasible));
    }

    json j;
    j["config_hash"] = config_hash(config);
    for (const auto& pt : res.points) {
        json e;
        e["u_s"] = pt.u_s;
        e["t_f"] = pt.t_f;
        e["feasible"] = pt.feasible;
        e["status"] = pt.status;
        e["audit_violation"] = pt.audit_violation;
        e["plateau_alpha_deg"] = pt.plateau.alpha_deg;
        e["plateau_duration_s"] = pt.plateau.duration_s;
        e["iterations"] = pt.report.iterations;
        e["wall_time_s"] = pt.report.wall_time_s;
        j["points"].push_back(e);
    }
    std::ofstream(out_dir + "/summary.json") << j.dump(2) << "\n";
    return res;
}

MonteCarloResult monte_carlo(const Config& config, const ReferenceTrajectory& ref,
                             int n_runs, uint64_t base_seed,
                             const std::string& out_dir, int verbosity) {
    ensure_dir(out_dir);
    MonteCarloResult res;
    res.runs = n_runs;
    res.records.resize(n_runs);

    const double duration = ref.t_f - ref.t0;
    run_pool(n_runs, [&](int i) {
        const uint64_t seed = base_seed + static_cast<uint64_t>(i);
        DrydenParams dp = config.dryden;
        dp.sample_dt = config.dt;
        dp.seed = seed;
        WindField wind;
        wind.steady_u_I = ref.steady_u_I;
        wind.steady_w_I = ref.steady_w_I;
        wind.sample_dt = config.dt;
        wind.gust_series = dryden_gust_series(dp, duration);
        const TrackingConfig tc = config.tracking_config(seed);
        res.records[i] = track(ref, tc, wind, config.bounds, config.corridor,
                               config.net, config.params);
        if (verbosity > 0)
            std::printf("[montecarlo] seed=%llu success=%d x=%.4f z=%.4f Va=%.4f\n",
                        static_cast<unsigned long long>(seed),
                        static_cast<int>(res.records[i].verdict.success),
                        res.records[i].verdict.x_f, res.records[i].verdict.z_f,
                        res.records[i].verdict.V_a_f);
    });

    double sx = 0, sz = 0, sv = 0;
    for (const auto& r : res.records)
        if (r.verdict.success) {
            ++res.successes;
            sx += r.verdict.x_f;
            sz += r.verdict.z_f;
            sv += r.verdict.V_a_f;
        }
    if (res.successes > 0) {
        res.mean_x = sx / res.successes;
        res.mean_z = sz / res.successes;
        res.mean_va = sv / res.successes;
        double vx = 0, vz = 0, vv = 0;
        for (const auto& r : res.records)
            if (r.verdict.success) {
                vx += (r.verdict.x_f - res.mean_x) * (r.verdict.x_f - res.mean_x);
                vz += (r.verdict.z_f - res.mean_z) * (r.verdict.z_f - res.mean_z);
                vv += (r.verdict.V_a_f - res.mean_va) * (r.verdict.V_a_f - res.mean_va);
            }
        // sample standard deviation (n - 1), degenerate single-run case -> 0
        const double dof = std::max(1, res.successes - 1);
        res.std_x = std::sqrt(vx / dof);
        res.std_z = std::sqrt(vz / dof);
        res.std_va = std::sqrt(vv / dof);
    }

    for (int i = 0; i < n_runs; ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "/run_%llu.csv",
                      static_cast<unsigned long long>(base_seed + i));
        write_run_csv(out_dir + name, res.records[i]);
    }
    json j;
    j["config_hash"] = config_hash(config);
    j["runs"] = res.runs;
    j["base_seed"] = base_seed;
    j["success_count"] = res.successes;
    j["terminal_mean"] = {{"x", res.mean_x}, {"z", res.mean_z}, {"V_a", res.mean_va}};
    j["terminal_std"] = {{"x", res.std_x}, {"z", res.std_z}, {"V_a", res.std_va}};
    for (const auto& r : res.records) {
        j["verdicts"].push_back({{"seed", r.seed},
                                 {"success", r.verdict.success},
                                 {"failure", r.verdict.failure()}});
    }
    std::ofstream(out_dir + "/summary.json") << j.dump(2) << "\n";
    return res;
}

InitPosResult sweep_initial_positions(const Config& config,
                                      const std::string& out_dir, int verbosity) {
    ensure_dir(out_dir);
    InitPosResult res;
    for (double x_b = -290.0; x_b <= -270.0 + 1e-9; x_b += 2.0)
        for (double z_b = -210.0; z_b <= -190.0 + 1e-9; z_b += 2.0)
            res.points.push_back({x_b, z_b, false, ""});

    std::vector<std::optional<ReferenceTrajectory>> refs(res.points.size());
    run_pool(static_cast<int>(res.points.size()), [&](int i) {
        InitPosPoint& pt = res.points[i];
        Config c = config;
        c.x0 = pt.x_b;
        c.z0 = pt.z_b;
        try {
            TrimSpec ts;
            ts.V_a_ref = c.V_a_ref;
            ts.steady_wind_u_I = c.steady_u_I;
            ts.steady_wind_w_I = c.steady_w_I;
            ts.x0 = pt.x_b;
            ts.z0 = pt.z_b;
            const TrimSolution trim = solve_trim(ts, c.params);
            const GenerationProblem gp = c.generation_problem(trim);
            const auto built = build_generation_nlp(gp);
            nlp::SolveOptions opt;
            opt.constraint_tolerance = c.gen_constraint_tolerance;
            opt.optimality_tolerance = c.gen_optimality_tolerance;
            opt.max_iterations = c.gen_max_iterations;
            opt.mu_init = c.gen_mu_init;
            const auto sol =
                nlp::solve(*built.nlp, initial_guess_generation(gp), opt);
            pt.status = nlp::to_string(sol.report.status);
            if (sol.report.status == nlp::SolveStatus::kOptimal ||
                sol.report.status == nlp::SolveStatus::kAcceptable) {
                ReferenceTrajectory ref = extract_reference(gp, sol.x);
                pt.feasible = audit_reference(gp, ref).ok;
                if (pt.feasible) refs[i] = std::move(ref);
            }
        } catch (const std::exception& e) {
            pt.status = std::string("error: ") + e.what();
        }
        if (verbosity > 0)
            std::printf("[sweep-initpos] x=%.0f z=%.0f status=%s feasible=%d\n",
                        pt.x_b, pt.z_b, pt.status.c_str(),
                        static_cast<int>(pt.feasible));
    });

    std::ofstream map(out_dir + "/feasibility_map.csv");
    map << "x_b,z_b,status\n";
    for (size_t i = 0; i < res.points.size(); ++i) {
        const auto& pt = res.points[i];
        if (pt.feasible) ++res.feasible_count;
        map << fmt(pt.x_b) << ',' << fmt(pt.z_b) << ','
            << (pt.feasible ? "feasible" : "infeasible") << "\n";
        if (refs[i]) {
            char name[64];
            std::snprintf(name, sizeof name, "/x%+04d_z%+04d.csv",
                          static_cast<int>(pt.x_b), static_cast<int>(pt.z_b));
            write_reference_csv(out_dir + name, *refs[i]);
            for (double va : refs[i]->V_a)
                res.max_path_airspeed = std::max(res.max_path_airspeed, va);
        }
    }

    json j;
    j["config_hash"] = config_hash(config);
    j["grid_points"] = res.points.size();
    j["feasible_count"] = res.feasible_count;
    j["max_path_airspeed"] = res.max_path_airspeed;
    json infeasible = json::array();
    for (const auto& pt : res.points)
        if (!pt.feasible)
            infeasible.push_back({{"x_b", pt.x_b}, {"z_b", pt.z_b},
                                  {"status", pt.status}});
    j["infeasible_points"] = infeasible;
    std::ofstream(out_dir + "/summary.json") << j.dump(2) << "\n";
    return res;
}

}  // namespace perch
