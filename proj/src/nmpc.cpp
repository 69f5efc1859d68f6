#include "perch/nmpc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace perch {

namespace {

// FNV-1a over the little-endian byte image of a double. Canonical: every
// double has one byte image, so equal configs hash equal across builds.
void fnv_mix(uint64_t& h, double v) {
    unsigned char b[sizeof v];
    std::memcpy(b, &v, sizeof v);
    for (unsigned char c : b) {
        h ^= c;
        h *= 1099511628211ULL;
    }
}

}  // namespace

int TrackingConfig::horizon_arcs() const {
    return static_cast<int>(std::lround(T_p / sample_dt));
}

void TrackingConfig::validate() const {
    if (!(sample_dt > 0.0))
        throw std::invalid_argument("tracking: sample_dt must be positive");
    if (!(T_p > sample_dt))
        throw std::invalid_argument("tracking: horizon must exceed sample_dt");
    const double arcs = T_p / sample_dt;
    if (std::abs(arcs - std::lround(arcs)) > 1e-9)
        throw std::invalid_argument(
            "tracking: horizon must be an integer number of samples");
}

uint64_t tracking_config_hash(const TrackingConfig& config) {
    uint64_t h = 1469598103934665603ULL;
    fnv_mix(h, config.T_p);
    fnv_mix(h, config.sample_dt);
    for (int i = 0; i < 6; ++i) fnv_mix(h, config.weights.Qx[i]);
    fnv_mix(h, config.weights.Qxf_scale);
    fnv_mix(h, config.weights.Qu[0]);
    fnv_mix(h, config.weights.Qu[1]);
    fnv_mix(h, config.weights.slack_weight);
    fnv_mix(h, config.solver.constraint_tolerance);
    fnv_mix(h, config.solver.optimality_tolerance);
    fnv_mix(h, static_cast<double>(config.solver.max_iterations));
    fnv_mix(h, static_cast<double>(config.gust_seed));
    return h;
}

StateDerivative error_dynamics(const State& x_e, const ControlInput& u_e,
                               double t, const ReferenceTrajectory& ref,
                               const AircraftParams& params) {
    const State& xr = ref.state_at(t);
    const ControlInput& ur = ref.input_at(t);
    const State abs_state{x_e.x + xr.x,         x_e.z + xr.z,
                          x_e.u + xr.u,         x_e.w + xr.w,
                          x_e.theta + xr.theta, x_e.omega_y + xr.omega_y};
    const ControlInput abs_input{u_e.delta_e + ur.delta_e,
                                 u_e.delta_t + ur.delta_t};
    const State fa = dynamics_steady_wind(abs_state, abs_input, ref.steady_u_I,
                                          ref.steady_w_I, 0.0, 0.0, params);
    const State fr = dynamics_steady_wind(xr, ur, ref.steady_u_I,
                                          ref.steady_w_I, 0.0, 0.0, params);
    return {fa.x - fr.x,         fa.z - fr.z,         fa.u - fr.u,
            fa.w - fr.w,         fa.theta - fr.theta, fa.omega_y - fr.omega_y};
}

RunRecord track(const ReferenceTrajectory& ref, const TrackingConfig& config,
                const WindField& wind_field, const BoundTable& bounds,
                const CorridorParams& corridor, const NetGeometry& net,
                const AircraftParams& params) {
    config.validate();
    const int arcs = config.horizon_arcs();
    const double h = config.sample_dt;
    const int steps =
        static_cast<int>(std::lround((ref.t_f - ref.t0) / h));

    RunRecord rec;
    rec.seed = config.gust_seed;
    rec.config_hash = tracking_config_hash(config);
    rec.samples.reserve(steps + 1);

    State x = ref.states.front();

    // Previous subproblem solution in error coordinates, used to warm-start
    // the next solve shifted by one arc with a zero arc appended. The first
    // solve starts from all-zero error (the reference itself).
    std::vector<std::array<double, 6>> warm_states(
        static_cast<size_t>(arcs + 1), std::array<double, 6>{});
    std::vector<std::array<double, 2>> warm_inputs(
        static_cast<size_t>(arcs), std::array<double, 2>{});

    for (int step = 0; step < steps; ++step) {
        const double t = ref.t0 + step * h;
        const State& xr = ref.state_at(t);
        const ControlInput& ur = ref.input_at(t);
        const State x_e{x.x - xr.x,         x.z - xr.z,
                        x.u - xr.u,         x.w - xr.w,
                        x.theta - xr.theta, x.omega_y - xr.omega_y};

        NmpcNlp sub = build_nmpc_nlp(t, x_e, ref, config.weights, bounds,
                                     corridor, net, params, arcs);
        const NmpcLayout& L = sub.layout;

        nlp::VectorXd guess = nlp::VectorXd::Zero(L.num_vars());
        for (int k = 0; k <= arcs; ++k)
            for (int i = 0; i < 6; ++i)
                guess[L.state_index(k, i)] = warm_states[k][i];
        for (int k = 0; k < arcs; ++k)
            for (int d = 0; d < 2; ++d)
                guess[L.input_index(k, d)] = warm_inputs[k][d];
        for (int i = 0; i < 6; ++i)
            guess[L.state_index(0, i)] = x_e.as_array()[i];

        const nlp::SolveResult sol = nlp::solve(*sub.nlp, guess, config.solver);

        TrackingSample sample;
        sample.t = t;
        sample.state = x;
        sample.gust = wind_field.gust_at(t);
        sample.solve_status = sol.report.status;
        sample.solve_wall_time_s = sol.report.wall_time_s;
        sample.objective = sol.report.objective;
        sample.has_solve = true;

        if (sol.report.status == nlp::SolveStatus::kNumericalFailure) {
            rec.aborted = true;
            rec.abort_reason = "tracking solve failed numerically at t=" +
                               std::to_string(t);
            rec.samples.push_back(sample);
            break;
        }

        // First arc of the correction on top of the reference input, kept
        // inside the hard input box regardless of solver slop.
        ControlInput applied{
            ur.delta_e + sol.x[L.input_index(0, 0)],
            ur.delta_t + sol.x[L.input_index(0, 1)]};
        applied.delta_e = std::clamp(applied.delta_e, -bounds.elevator_limit,
                                     bounds.elevator_limit);
        applied.delta_t =
            std::clamp(applied.delta_t, bounds.throttle_lo, bounds.throttle_hi);
        sample.applied = applied;
        rec.samples.push_back(sample);

        x = rk4_arc(x, applied, wind_field.steady_u_I, wind_field.steady_w_I,
                    sample.gust.u_g, sample.gust.w_g, params, h);

        for (int k = 0; k < arcs; ++k)
            for (int i = 0; i < 6; ++i)
                warm_states[k][i] = sol.x[L.state_index(k + 1, i)];
        warm_states[arcs] = {};
        for (int k = 0; k + 1 < arcs; ++k)
            for (int d = 0; d < 2; ++d)
                warm_inputs[k][d] = sol.x[L.input_index(k + 1, d)];
        warm_inputs[arcs - 1] = {};
    }

    if (!rec.aborted) {
        TrackingSample last;
        last.t = ref.t_f;
        last.state = x;
        last.gust = wind_field.gust_at(ref.t_f);
        last.has_solve = false;
        rec.samples.push_back(last);
    }

    const State& xf = rec.samples.back().state;
    const WindSample wf =
        wind_in_body(wind_field.steady_u_I, wind_field.steady_w_I, xf.theta,
                     wind_field.gust_at(rec.samples.back().t));
    rec.verdict = check_success(xf, wf, corridor, net, h);
    return rec;
}

}  // namespace perch
