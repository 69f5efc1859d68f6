#include "perch/trim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace perch {

void body_velocity_from_air(double V_a, double alpha, double theta,
                            double steady_u_I, double steady_w_I,
                            double& u, double& w) {
    const WindSample wind =
        wind_in_body_t(steady_u_I, steady_w_I, theta, 0.0, 0.0);
    u = V_a * std::cos(alpha) + wind.u_w;
    w = V_a * std::sin(alpha) + wind.w_w;
}

namespace {

State trim_candidate_state(const TrimSpec& spec, double alpha) {
    State s;
    s.x = spec.x0;
    s.z = spec.z0;
    s.theta = alpha;  // level flight: gamma = 0
    s.omega_y = 0.0;
    body_velocity_from_air(spec.V_a_ref, alpha, s.theta, spec.steady_wind_u_I,
                           spec.steady_wind_w_I, s.u, s.w);
    return s;
}

// Residual of the level-flight conditions: [udot, wdot, omega_ydot].
Eigen::Vector3d trim_residual(const TrimSpec& spec, const AircraftParams& p,
                              const Eigen::Vector3d& q) {
    const State s = trim_candidate_state(spec, q[0]);
    const ControlInput in{q[1], q[2]};
    const WindSample wind = wind_in_body_t(spec.steady_wind_u_I,
                                           spec.steady_wind_w_I, s.theta, 0.0, 0.0);
    const State d = dynamics(s, in, wind, p);
    return {d.u, d.w, d.omega_y};
}

double full_residual_norm(const TrimSpec& spec, const AircraftParams& p,
                          const Eigen::Vector3d& q) {
    const State s = trim_candidate_state(spec, q[0]);
    const ControlInput in{q[1], q[2]};
    const WindSample wind = wind_in_body_t(spec.steady_wind_u_I,
                                           spec.steady_wind_w_I, s.theta, 0.0, 0.0);
    const State d = dynamics(s, in, wind, p);
    return std::max({std::abs(d.u), std::abs(d.w), std::abs(d.z), std::abs(d.omega_y)});
}

bool newton_polish(const TrimSpec& spec, const AircraftParams& p,
                   Eigen::Vector3d& q, int max_iter = 50) {
    constexpr double fd_step = 1e-6;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::Vector3d r = trim_residual(spec, p, q);
        if (r.lpNorm<Eigen::Infinity>() <= kTrimTolerance) return true;
        Eigen::Matrix3d jac;
        for (int j = 0; j < 3; ++j) {
            Eigen::Vector3d qp = q, qm = q;
            qp[j] += fd_step;
            qm[j] -= fd_step;
            jac.col(j) = (trim_residual(spec, p, qp) - trim_residual(spec, p, qm)) /
                         (2.0 * fd_step);
        }
        const Eigen::Vector3d step = jac.fullPivLu().solve(-r);
        if (!step.allFinite()) return false;
        // backtrack on the residual norm
        double lambda = 1.0;
        const double r0 = r.norm();
        for (int ls = 0; ls < 30; ++ls) {
            const Eigen::Vector3d trial = q + lambda * step;
            if (trim_residual(spec, p, trial).norm() < r0) {
                q = trial;
                break;
            }
            lambda *= 0.5;
            if (ls == 29) return false;
        }
    }
    return trim_residual(spec, p, q).lpNorm<Eigen::Infinity>() <= kTrimTolerance;
}

}  // namespace

TrimSolution solve_trim(const TrimSpec& spec, const AircraftParams& params) {
    if (spec.V_a_ref <= 0.0) throw std::invalid_argument("trim: V_a_ref must be > 0");

    const double deg = M_PI / 180.0;
    std::vector<Eigen::Vector3d> starts;
    starts.push_back({4.0 * deg, 0.0, 0.4});  // documented default start

    // Coarse grid scan fallback: best residual over alpha x delta_e, with
    // delta_t chosen from a short 1-D scan.
    {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Vector3d best_q{0, 0, 0.4};
        for (double a = -5.0 * deg; a <= 15.0 * deg; a += 0.5 * deg) {
            for (double de = -10.0 * deg; de <= 10.0 * deg; de += 1.0 * deg) {
                for (double dt = 0.05; dt <= 0.95; dt += 0.05) {
                    const Eigen::Vector3d q{a, de, dt};
                    const double r = trim_residual(spec, params, q).norm();
                    if (r < best) {
                        best = r;
                        best_q = q;
                    }
                }
            }
        }
        starts.push_back(best_q);
    }

    double best_residual = std::numeric_limits<double>::infinity();
    for (auto& q : starts) {
        Eigen::Vector3d cand = q;
        if (newton_polish(spec, params, cand)) {
            TrimSolution sol;
            sol.alpha0 = cand[0];
            sol.theta0 = cand[0];
            sol.delta_e0 = cand[1];
            sol.delta_t0 = cand[2];
            sol.state0 = trim_candidate_state(spec, cand[0]);
            sol.input0 = {cand[1], cand[2]};
            sol.residual_norm = full_residual_norm(spec, params, cand);
            return sol;
        }
        best_residual = std::min(best_residual,
                                 trim_residual(spec, params, cand).norm());
    }
    throw NoTrimFound(best_residual);
}

}  // namespace perch
