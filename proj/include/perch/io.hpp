// Configuration ingestion and file serialization: a human-editable
// key = value parameter format with explicit unit suffixes, and CSV/JSON
// emission for references and tracking runs. Doubles are written with 17
// significant digits so every file round-trips bit-exactly.

#ifndef PERCH_IO_HPP
#define PERCH_IO_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

#include "perch/nmpc.hpp"
#include "perch/transcribe.hpp"
#include "perch/wind.hpp"

namespace perch {

/// Raised on malformed configuration input; the message names the
/// offending key or invariant.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every tunable of the pipeline in SI + radians. Defaults reproduce the
/// shipped parameter file exactly; load_config overlays a file on top.
struct Config {
    AircraftParams params;
    BoundTable bounds;
    CorridorParams corridor;
    NetGeometry net;
    GenerationWeights gen_weights;
    NmpcWeights nmpc_weights;
    DrydenParams dryden;

    // generation horizon
    double t0 = 0.0;
    double t_f = 24.0;
    double T_p = 0.5;
    double dt = 0.1;
    double V_a_ref = 25.0;
    double steady_u_I = 0.0;
    double steady_w_I = 0.0;

    // initial position (overridden by the grid sweep)
    double x0 = -280.0;
    double z0 = -200.0;

    // solver and experiment knobs
    double gen_constraint_tolerance = 1e-6;
    double gen_optimality_tolerance = 1e-6;
    int gen_max_iterations = 3000;
    double gen_mu_init = 1.0;  // initial barrier for the generation solve
    int mc_runs = 100;
    uint64_t base_seed = 1;

    /// Generation problem for this config's wind and horizon; applies the
    /// headwind horizon stretch when `stretch` is set.
    GenerationProblem generation_problem(const TrimSolution& trim,
                                         bool stretch = true) const;
    TrackingConfig tracking_config(uint64_t gust_seed) const;
};

/// Parse `key = value [unit]` lines (''#'' comments, blank lines allowed)
/// over the defaults. Unknown keys, malformed numbers, wrong unit
/// suffixes, and invariant violations all raise ConfigError naming the key.
Config load_config(const std::string& path);

/// Overlay a single `key=value[:unit]` assignment (CLI override syntax).
void apply_override(Config& config, const std::string& assignment);

/// Digest of every field, stable across runs and builds.
uint64_t config_hash(const Config& config);

// --- reference trajectory CSV -------------------------------------------
// Column order (stable interface):
//   t,x,z,u,w,theta,omega_y,delta_e,delta_t,V_a,alpha,phase
// One row per node; the input columns of row k hold the arc-k input (the
// terminal row repeats the last arc). Horizon metadata rides in leading
// `# key=value` comment lines.
void write_reference_csv(const std::string& path, const ReferenceTrajectory& ref);
ReferenceTrajectory read_reference_csv(const std::string& path);

// --- tracking run emission ----------------------------------------------
// Column order: t,x,z,u,w,theta,omega_y,delta_e,delta_t,gust_u,gust_w,
//               solve_status,objective
// Wall-clock timings are deliberately excluded so repeated runs with the
// same seed and configuration emit byte-identical files.
void write_run_csv(const std::string& path, const RunRecord& record);
/// JSON summary: verdict, terminal x/z/V_a, seed, config hash, abort info.
std::string run_summary_json(const RunRecord& record);

}  // namespace perch

#endif  // PERCH_IO_HPP
