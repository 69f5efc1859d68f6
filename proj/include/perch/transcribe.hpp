// Direct multiple-shooting transcription of the two optimal-control
// problems: offline landing-trajectory generation and the per-iteration
// receding-horizon tracking subproblem (in error coordinates).
//
// Decision-vector layouts are fixed and documented on the structs below;
// they are part of the interface consumed by the solver and the tracker.

#ifndef PERCH_TRANSCRIBE_HPP
#define PERCH_TRANSCRIBE_HPP

#include <memory>
#include <string>
#include <vector>

#include "perch/block_nlp.hpp"
#include "perch/constraints.hpp"
#include "perch/trim.hpp"

namespace perch {

/// Map [x, z, V_a, alpha, theta, omega_y, u_s_I, w_s_I] to a state: body
/// velocity from airspeed/AoA plus the steady wind rotated through theta.
State xi_to_state(const std::array<double, 8>& xi);

struct GenerationWeights {
    double P_delta_t = 1000.0;              // throttle-use weight
    Eigen::Vector2d P_delta_u{4000.0, 4000.0};  // input-increment weights
};

struct GenerationProblem {
    double t0 = 0.0;
    double t_f = 24.0;   // net-crossing time, s
    double T_p = 0.5;    // over-net augmentation horizon, s
    double dt = 0.1;     // arc length, s
    int N = 245;         // arc count; (t_f - t0 + T_p) / dt
    double V_a_ref = 25.0;
    TrimSolution trim;   // initial state/input pair
    double steady_u_I = 0.0;
    double steady_w_I = 0.0;
    GenerationWeights weights;
    BoundTable bounds;
    NetGeometry net;
    CorridorParams corridor;
    AircraftParams params;

    int num_nodes() const { return N + 1; }
    /// Node index where the net is crossed (t = t_f).
    int net_node() const;
    /// Throws std::invalid_argument when N * dt does not match the horizon.
    void validate() const;
};

/// Decision-vector layout: states node-major first, then inputs arc-major.
struct GenerationLayout {
    int nodes = 0, arcs = 0;
    int state_index(int k, int i) const { return 6 * k + i; }
    int input_index(int k, int i) const { return 6 * nodes + 2 * k + i; }
    int num_vars() const { return 6 * nodes + 2 * arcs; }
};

struct GenerationNlp {
    GenerationLayout layout;
    std::unique_ptr<nlp::BlockNlp> nlp;
};

GenerationNlp build_generation_nlp(const GenerationProblem& problem);

/// States linearly interpolated between the cruise anchor at t0 and an
/// over-net deep-stall anchor at t_f + T_p, mapped through xi_to_state;
/// inputs all zero.
nlp::VectorXd initial_guess_generation(const GenerationProblem& problem);

/// The solved landing reference: per-node states (and derived airspeed,
/// angle of attack, phase label), per-arc zero-order-hold inputs.
struct ReferenceTrajectory {
    double t0 = 0.0, dt = 0.1, t_f = 24.0, T_p = 0.5;
    double steady_u_I = 0.0, steady_w_I = 0.0;
    std::vector<State> states;          // N + 1
    std::vector<ControlInput> inputs;   // N
    std::vector<double> V_a, alpha;     // per node
    std::vector<std::string> phase;     // per node

    int num_nodes() const { return static_cast<int>(states.size()); }
    /// Index of the sample at time t (t must lie on the grid to 1e-6).
    int node_of(double t) const;
    const State& state_at(double t) const { return states[node_of(t)]; }
    /// Arc input active over [t, t + dt); the last arc extends to the end.
    const ControlInput& input_at(double t) const;
};

ReferenceTrajectory extract_reference(const GenerationProblem& problem,
                                      const nlp::VectorXd& x);

/// Independent re-check of a reference against the generation constraint
/// sets and shooting dynamics (no solver state involved).
struct FeasibilityAudit {
    bool ok = false;
    double max_gap = 0.0;                 // worst shooting-gap residual
    double max_path_violation = 0.0;      // worst pre-net set violation
    double max_terminal_violation = 0.0;  // worst over-net/terminal violation
    std::string detail;                   // first offending item, if any
};

FeasibilityAudit audit_reference(const GenerationProblem& problem,
                                 const ReferenceTrajectory& ref,
                                 double tol = 1e-6);

struct NmpcWeights {
    Eigen::Matrix<double, 6, 1> Qx{200.0, 200.0, 10.0, 10.0, 1.0, 1.0};
    double Qxf_scale = 10.0;
    Eigen::Vector2d Qu{20.0, 20.0};
    double slack_weight = 1e4;  // L1 penalty on softened state constraints
};

/// Layout: error states node-major, then error inputs, then slacks.
struct NmpcLayout {
    int arcs = 5;
    int num_slacks = 0;
    int state_index(int k, int i) const { return 6 * k + i; }
    int input_index(int k, int i) const { return 6 * (arcs + 1) + 2 * k + i; }
    int slack_index(int j) const { return 6 * (arcs + 1) + 2 * arcs + j; }
    int num_vars() const { return 6 * (arcs + 1) + 2 * arcs + num_slacks; }
};

struct NmpcNlp {
    NmpcLayout layout;
    std::unique_ptr<nlp::BlockNlp> nlp;
    bool start_violates = false;  // measured state outside the tracking set
};

/// Tracking subproblem at time t: minimize weighted error energy over
/// T_p = arcs * dt, subject to error shooting dynamics, hard shifted input
/// boxes, and L1-softened tracking-set membership per node.
NmpcNlp build_nmpc_nlp(double t, const State& x_e_t,
                       const ReferenceTrajectory& ref, const NmpcWeights& weights,
                       const BoundTable& bounds, const CorridorParams& corridor,
                       const NetGeometry& net, const AircraftParams& params,
                       int arcs = 5);

}  // namespace perch

#endif  // PERCH_TRANSCRIBE_HPP
