// Steady-level-flight trim: solve for (alpha0, delta_e0, delta_t0) such that
// udot = wdot = omega_ydot = 0 at a commanded airspeed with theta = alpha and
// omega_y = 0. Supplies the landing phase's initial state/input pair.

#ifndef PERCH_TRIM_HPP
#define PERCH_TRIM_HPP

#include <stdexcept>

#include "perch/airframe.hpp"

namespace perch {

struct TrimSpec {
    double V_a_ref = 25.0;            // commanded airspeed, m/s
    double steady_wind_u_I = 0.0;     // steady inertial wind, m/s
    double steady_wind_w_I = 0.0;
    double x0 = -280.0;               // initial position, m
    double z0 = -200.0;
};

struct TrimSolution {
    double alpha0 = 0.0;    // rad
    double theta0 = 0.0;    // rad (= alpha0, level flight)
    double delta_e0 = 0.0;  // rad
    double delta_t0 = 0.0;
    State state0;
    ControlInput input0;
    double residual_norm = 0.0;  // inf-norm of [udot, wdot, zdot, omega_ydot]
};

struct NoTrimFound : std::runtime_error {
    double best_residual;
    explicit NoTrimFound(double r)
        : std::runtime_error("trim: root-finder failed to converge"),
          best_residual(r) {}
};

inline constexpr double kTrimTolerance = 1e-8;

/// Body velocities from airspeed/AoA plus steady inertial wind rotated
/// through the pitch angle (gust-free wind triangle).
void body_velocity_from_air(double V_a, double alpha, double theta,
                            double steady_u_I, double steady_w_I,
                            double& u, double& w);

/// Newton iteration with central finite-difference Jacobian; coarse grid
/// scan fallback. Throws NoTrimFound when no start converges.
TrimSolution solve_trim(const TrimSpec& spec, const AircraftParams& params);

}  // namespace perch

#endif  // PERCH_TRIM_HPP
