// The three evaluation studies: a steady-wind feasibility sweep of the
// generation problem, a seeded gust Monte Carlo of the tracking loop,
// and an initial-position feasibility grid. Each
// writes per-run CSVs plus a summary.json under a caller-chosen directory
// and returns everything in memory as well.

#ifndef PERCH_EXPERIMENTS_HPP
#define PERCH_EXPERIMENTS_HPP

#include <optional>
#include <string>
#include <vector>

#include "perch/io.hpp"
#include "perch/nmpc.hpp"
#include "perch/transcribe.hpp"

namespace perch {

/// Longest contiguous stretch of deep-stall samples whose angle of attack
/// stays within a 1 degree band; the "stable deep stall" segment.
struct PlateauStats {
    double alpha_deg = 0.0;   // mean AoA over the stretch
    double start_t = 0.0;
    double duration_s = 0.0;  // 0 when no deep-stall samples exist
};
PlateauStats deep_stall_plateau(const ReferenceTrajectory& ref);

/// Reporting landmarks from the reference phase labels (heuristic:
/// stall boundaries from AoA vs the critical angle, recovery from the
/// first throttle command after deep stall).
struct PhaseLandmarks {
    double stall_entry_t = 0.0;      // first sample above the critical AoA
    double deep_stall_start_t = 0.0; // start of the stable plateau
    double deep_stall_end_t = 0.0;   // end of the stable plateau
    double stall_exit_t = 0.0;       // last sample above the critical AoA
    double recovery_t = 0.0;         // first throttle > 0.01 after deep stall
};
PhaseLandmarks phase_landmarks(const ReferenceTrajectory& ref);

struct WindSweepPoint {
    double u_s = 0.0;
    double t_f = 0.0;          // stretched horizon actually solved
    bool feasible = false;     // solver success AND independent audit pass
    std::string status;        // solver status string
    double audit_violation = 0.0;
    PlateauStats plateau;
    std::optional<ReferenceTrajectory> reference;  // present when feasible
    nlp::SolveReport report;
};

struct WindSweepResult {
    std::vector<WindSweepPoint> points;
};

/// Solve the generation problem for u_s in {+2, +1, 0, -1, ..., -6} m/s
/// with the headwind horizon stretch. Failures are recorded, not fatal.
WindSweepResult sweep_wind(const Config& config, const std::string& out_dir,
                           int verbosity = 0);

struct MonteCarloResult {
    int runs = 0;
    int successes = 0;
    // statistics over successful runs only
    double mean_x = 0.0, mean_z = 0.0, mean_va = 0.0;
    double std_x = 0.0, std_z = 0.0, std_va = 0.0;
    std::vector<RunRecord> records;
};

/// Track the reference n_runs times under gust seeds base_seed + i.
MonteCarloResult monte_carlo(const Config& config, const ReferenceTrajectory& ref,
                             int n_runs, uint64_t base_seed,
                             const std::string& out_dir, int verbosity = 0);

struct InitPosPoint {
    double x_b = 0.0, z_b = 0.0;
    bool feasible = false;
    std::string status;
};

struct InitPosResult {
    std::vector<InitPosPoint> points;  // row-major over the grid
    int feasible_count = 0;
    /// Worst path airspeed over all feasible references.
    double max_path_airspeed = 0.0;
};

/// 11 x 11 grid of initial positions, x_b in [-290, -270], z_b in
/// [-210, -190], 2 m spacing, nominal wind and horizon.
InitPosResult sweep_initial_positions(const Config& config,
                                      const std::string& out_dir,
                                      int verbosity = 0);

}  // namespace perch

#endif  // PERCH_EXPERIMENTS_HPP
