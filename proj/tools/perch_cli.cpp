// Command-line shell around the landing pipeline. Subcommands:
//   trim        solve the steady-level trim and print it as JSON
//   generate    solve the landing-generation problem, write a reference CSV
//   track       one closed-loop tracking run against a reference CSV
//   montecarlo  batch of seeded tracking runs with summary statistics
//   sweep-wind  steady-wind feasibility sweep
//   sweep-initpos  initial-position feasibility grid
//
// Exit codes: 0 success, 2 usage error, 3 configuration error, 4 missing or
// unreadable input file, 5 solver did not produce a feasible solution,
// 6 trim failure, 1 anything else. Errors are emitted as JSON on stderr.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "perch/experiments.hpp"

using namespace perch;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitMissingFile = 4;
constexpr int kExitInfeasible = 5;
constexpr int kExitTrim = 6;

struct CliError {
    int code;
    std::string kind;
    std::string message;
};

[[noreturn]] void fail(int code, const std::string& kind, const std::string& msg) {
    throw CliError{code, kind, msg};
}

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    bool json_out = false;

    Config make_config() const {
        Config c;
        try {
            if (!config_path.empty()) c = load_config(config_path);
            for (const auto& ov : overrides) apply_override(c, ov);
        } catch (const ConfigError& e) {
            fail(kExitConfig, "config", e.what());
        }
        return c;
    }

    std::string resolve_out() const {
        if (!out_dir.empty()) return out_dir;
        if (const char* env = std::getenv("PERCH_OUT_DIR")) return env;
        return "runs";
    }
};

void add_common(CLI::App* sub, Common& common) {
    sub->add_option("--config", common.config_path, "parameter file");
    sub->add_option("--set", common.overrides,
                    "override a config key, key=value[:unit] (repeatable)");
    sub->add_option("--out", common.out_dir,
                    "output directory (default $PERCH_OUT_DIR or ./runs)");
    sub->add_flag("--json", common.json_out, "machine-readable stdout");
}

void emit(const Common& common, const json& j, const std::string& text) {
    if (common.json_out)
        std::printf("%s\n", j.dump(2).c_str());
    else
        std::fputs(text.c_str(), stdout);
}

TrimSolution trim_or_fail(const Config& c) {
    TrimSpec ts;
    ts.V_a_ref = c.V_a_ref;
    ts.steady_wind_u_I = c.steady_u_I;
    ts.steady_wind_w_I = c.steady_w_I;
    ts.x0 = c.x0;
    ts.z0 = c.z0;
    try {
        return solve_trim(ts, c.params);
    } catch (const NoTrimFound& e) {
        fail(kExitTrim, "trim", e.what());
    }
}

ReferenceTrajectory generate_or_fail(const Config& c, FeasibilityAudit* audit_out,
                                     int verbosity) {
    const TrimSolution trim = trim_or_fail(c);
    const GenerationProblem gp = c.generation_problem(trim);
    const auto built = build_generation_nlp(gp);
    nlp::SolveOptions opt;
    opt.constraint_tolerance = c.gen_constraint_tolerance;
    opt.optimality_tolerance = c.gen_optimality_tolerance;
    opt.max_iterations = c.gen_max_iterations;
    opt.mu_init = c.gen_mu_init;
    opt.verbosity = verbosity;
    const auto sol = nlp::solve(*built.nlp, initial_guess_generation(gp), opt);
    if (sol.report.status != nlp::SolveStatus::kOptimal &&
        sol.report.status != nlp::SolveStatus::kAcceptable)
        fail(kExitInfeasible, "solver",
             "generation solve ended with status '" +
                 nlp::to_string(sol.report.status) + "'");
    ReferenceTrajectory ref = extract_reference(gp, sol.x);
    const FeasibilityAudit audit = audit_reference(gp, ref);
    if (audit_out) *audit_out = audit;
    if (!audit.ok)
        fail(kExitInfeasible, "audit",
             "solved trajectory failed the independent feasibility audit: " +
                 audit.detail);
    return ref;
}

ReferenceTrajectory read_reference_or_fail(const std::string& path) {
    if (!std::filesystem::exists(path))
        fail(kExitMissingFile, "missing-file", "reference file '" + path +
                                                   "' does not exist");
    try {
        return read_reference_csv(path);
    } catch (const std::exception& e) {
        fail(kExitMissingFile, "missing-file", e.what());
    }
}

json verdict_json(const LandingVerdict& v) {
    return {{"success", v.success},
            {"airspeed_ok", v.airspeed_ok},
            {"net_window_ok", v.net_window_ok},
            {"horizontal_ok", v.horizontal_ok},
            {"x_f", v.x_f},
            {"z_f", v.z_f},
            {"V_a_f", v.V_a_f},
            {"failure", v.failure()}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep-stall perch landing pipeline"};
    app.require_subcommand(1);

    Common common;
    int verbosity = 0;
    app.add_flag("-v,--verbose", verbosity, "solver progress output");

    // --- trim ---
    auto* cmd_trim = app.add_subcommand("trim", "steady-level trim as JSON");
    add_common(cmd_trim, common);
    double va_override = -1.0;
    cmd_trim->add_option("--va", va_override, "commanded airspeed, m/s");

    // --- generate ---
    auto* cmd_gen =
        app.add_subcommand("generate", "solve the landing-generation problem");
    add_common(cmd_gen, common);
    double wind_override = std::nan("");
    std::string gen_output = "reference.csv";
    cmd_gen->add_option("--wind", wind_override, "steady inertial wind u, m/s");
    cmd_gen->add_option("--output", gen_output, "reference CSV path");

    // --- track ---
    auto* cmd_track = app.add_subcommand("track", "one closed-loop tracking run");
    add_common(cmd_track, common);
    std::string track_ref = "reference.csv";
    uint64_t track_seed = 1;
    bool no_gust = false;
    std::string track_output;
    cmd_track->add_option("--reference", track_ref, "reference CSV to track");
    cmd_track->add_option("--seed", track_seed, "gust seed");
    cmd_track->add_flag("--no-gust", no_gust, "disable gusts");
    cmd_track->add_option("--output", track_output, "run CSV path");

    // --- montecarlo ---
    auto* cmd_mc = app.add_subcommand("montecarlo", "batch of seeded runs");
    add_common(cmd_mc, common);
    std::string mc_ref;
    int mc_runs = -1;
    uint64_t mc_seed = 0;
    bool mc_have_seed = false;
    cmd_mc->add_option("--reference", mc_ref,
                       "reference CSV (solved fresh when omitted)");
    cmd_mc->add_option("--runs", mc_runs, "number of runs");
    cmd_mc->add_option("--seed", mc_seed, "base seed")
        ->each([&](const std::string&) { mc_have_seed = true; });

    // --- sweeps ---
    auto* cmd_sw = app.add_subcommand("sweep-wind", "steady-wind feasibility sweep");
    add_common(cmd_sw, common);
    auto* cmd_si =
        app.add_subcommand("sweep-initpos", "initial-position feasibility grid");
    add_common(cmd_si, common);

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) return app.exit(e);  // --help
            fail(kExitUsage, "usage", e.what());
        }

        Config config = common.make_config();
        const uint64_t hash = config_hash(config);

        if (*cmd_trim) {
            if (va_override > 0.0) config.V_a_ref = va_override;
            const TrimSolution trim = trim_or_fail(config);
            json j;
            j["config_hash"] = hash;
            j["V_a_ref"] = config.V_a_ref;
            j["alpha0_deg"] = trim.alpha0 / kDeg;
            j["theta0_deg"] = trim.theta0 / kDeg;
            j["alpha0"] = trim.alpha0;
            j["theta0"] = trim.theta0;
            j["delta_e0"] = trim.delta_e0;
            j["delta_t0"] = trim.delta_t0;
            j["residual_norm"] = trim.residual_norm;
            std::printf("%s\n", j.dump(2).c_str());  // trim always prints JSON
            return 0;
        }

        if (*cmd_gen) {
            if (!std::isnan(wind_override)) config.steady_u_I = wind_override;
            FeasibilityAudit audit;
            const ReferenceTrajectory ref =
                generate_or_fail(config, &audit, verbosity);
            write_reference_csv(gen_output, ref);
            const auto plateau = deep_stall_plateau(ref);
            json j;
            j["config_hash"] = config_hash(config);
            j["output"] = gen_output;
            j["t_f"] = ref.t_f;
            j["audit_ok"] = audit.ok;
            j["max_gap"] = audit.max_gap;
            j["plateau_alpha_deg"] = plateau.alpha_deg;
            j["plateau_duration_s"] = plateau.duration_s;
            char text[256];
            std::snprintf(text, sizeof text,
                          "wrote %s (t_f=%.1f s, plateau %.2f deg for %.1f s)\n",
                          gen_output.c_str(), ref.t_f, plateau.alpha_deg,
                          plateau.duration_s);
            emit(common, j, text);
            return 0;
        }

        if (*cmd_track) {
            const ReferenceTrajectory ref = read_reference_or_fail(track_ref);
            WindField wind;
            wind.steady_u_I = ref.steady_u_I;
            wind.steady_w_I = ref.steady_w_I;
            wind.sample_dt = config.dt;
            if (!no_gust) {
                DrydenParams dp = config.dryden;
                dp.sample_dt = config.dt;
                dp.seed = track_seed;
                wind.gust_series = dryden_gust_series(dp, ref.t_f - ref.t0);
            }
            const TrackingConfig tc = config.tracking_config(track_seed);
            const RunRecord rec = track(ref, tc, wind, config.bounds,
                                        config.corridor, config.net, config.params);
            if (!track_output.empty()) write_run_csv(track_output, rec);
            json j = json::parse(run_summary_json(rec));
            j["gusts"] = !no_gust;
            char text[256];
            std::snprintf(text, sizeof text,
                          "seed=%llu config_hash=%llu success=%s terminal "
                          "x=%.4f z=%.4f V_a=%.4f\n",
                          static_cast<unsigned long long>(rec.seed),
                          static_cast<unsigned long long>(rec.config_hash),
                          rec.verdict.success ? "yes" : "no", rec.verdict.x_f,
                          rec.verdict.z_f, rec.verdict.V_a_f);
            emit(common, j, text);
            return rec.verdict.success ? 0 : kExitInfeasible;
        }

        if (*cmd_mc) {
            const int runs = mc_runs > 0 ? mc_runs : config.mc_runs;
            const uint64_t seed = mc_have_seed ? mc_seed : config.base_seed;
            const ReferenceTrajectory ref =
                mc_ref.empty() ? generate_or_fail(config, nullptr, verbosity)
                               : read_reference_or_fail(mc_ref);
            const std::string out = common.resolve_out() + "/montecarlo";
            const auto res =
                monte_carlo(config, ref, runs, seed, out, verbosity);
            json j;
            j["config_hash"] = config_hash(config);
            j["base_seed"] = seed;
            j["runs"] = res.runs;
            j["success_count"] = res.successes;
            j["terminal_mean"] = {{"x", res.mean_x}, {"z", res.mean_z},
                                  {"V_a", res.mean_va}};
            j["terminal_std"] = {{"x", res.std_x}, {"z", res.std_z},
                                 {"V_a", res.std_va}};
            j["out_dir"] = out;
            char text[256];
            std::snprintf(text, sizeof text,
                          "%d/%d successful; terminal mean x=%.4f z=%.4f "
                          "V_a=%.4f; outputs in %s\n",
                          res.successes, res.runs, res.mean_x, res.mean_z,
                          res.mean_va, out.c_str());
            emit(common, j, text);
            return 0;
        }

        if (*cmd_sw) {
            const std::string out = common.resolve_out() + "/sweep-wind";
            const auto res = sweep_wind(config, out, verbosity);
            json j;
            j["config_hash"] = config_hash(config);
            j["out_dir"] = out;
            std::string text;
            for (const auto& pt : res.points) {
                char line[128];
                std::snprintf(line, sizeof line, "u_s=%+.0f  %-12s %s\n", pt.u_s,
                              pt.feasible ? "feasible" : "infeasible",
                              pt.status.c_str());
                text += line;
                j["points"].push_back({{"u_s", pt.u_s},
                                       {"feasible", pt.feasible},
                                       {"status", pt.status}});
            }
            emit(common, j, text);
            return 0;
        }

        if (*cmd_si) {
            const std::string out = common.resolve_out() + "/sweep-initpos";
            const auto res = sweep_initial_positions(config, out, verbosity);
            json j;
            j["config_hash"] = config_hash(config);
            j["out_dir"] = out;
            j["feasible_count"] = res.feasible_count;
            j["grid_points"] = res.points.size();
            j["max_path_airspeed"] = res.max_path_airspeed;
            for (const auto& pt : res.points)
                if (!pt.feasible)
                    j["infeasible"].push_back({{"x_b", pt.x_b}, {"z_b", pt.z_b}});
            char text[128];
            std::snprintf(text, sizeof text,
                          "%d/%zu feasible; map in %s/feasibility_map.csv\n",
                          res.feasible_count, res.points.size(), out.c_str());
            emit(common, j, text);
            return 0;
        }
        return kExitUsage;
    } catch (const CliError& e) {
        json err{{"error", e.kind}, {"message", e.message}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return e.code;
    } catch (const std::exception& e) {
        json err{{"error", "internal"}, {"message", e.what()}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 1;
    }
}
