// Admissible sets for the landing problem as residual functions g(x) <= 0.
// The same residual code backs both membership tests and NLP constraints so
// the "check" and "optimize" semantics cannot drift.
//
// Residual orderings are part of the contract and documented per function.

#ifndef PERCH_CONSTRAINTS_HPP
#define PERCH_CONSTRAINTS_HPP

#include <string>
#include <vector>

#include "perch/airframe.hpp"

namespace perch {

inline constexpr double kDeg = M_PI / 180.0;

/// Recovery-net geometry and terminal margins.
struct NetGeometry {
    double x_net = 0.0;
    double z_net_lo = -4.7;          // m, bottom of the net (most negative z)
    double z_net_hi = -1.7;          // m, top of the net
    double delta_z_margin = 0.5;     // m, generation terminal shrink
    double delta_x_terminal = 1e-4;  // m, terminal x window
    double safe_altitude_dz = 0.3;   // m, path altitude margin below net top
};

/// Line-of-sight corridor slopes and airspeed scaling.
struct CorridorParams {
    double a1 = 0.9812;
    double a2 = 0.55;
    double c1 = 0.3;
    double c2 = 0.25;
    double V_a_ref = 25.0;  // m/s
};

/// Per-phase state and input bounds (generation path, generation terminal
/// window, NMPC tracking, input box).
struct BoundTable {
    // generation path
    double gen_speed_limit = 40.0;          // |u|, |w| <= 40 m/s
    double gen_alpha_lo = -10.0 * kDeg;
    double gen_alpha_hi = 110.0 * kDeg;
    double gen_theta_lo = 0.0;
    double gen_theta_hi = 150.0 * kDeg;
    double gen_omega_limit = 1.46;          // rad/s
    double gen_altitude_ceiling = -2.0;     // z <= -2 m
    // generation terminal window
    double term_z_lo = -4.2;
    double term_z_hi = -2.2;
    double term_va_limit = 7.0;
    double term_alpha_lo = 90.0 * kDeg;
    double term_alpha_hi = 110.0 * kDeg;
    double term_theta_lo = 0.0;
    double term_theta_hi = 90.0 * kDeg;
    // NMPC tracking
    double mpc_theta_lo = -50.0 * kDeg;
    double mpc_theta_hi = 180.0 * kDeg;
    double mpc_omega_limit = M_PI / 2.0;
    // input box
    double elevator_limit = 40.0 * kDeg;
    double throttle_lo = 0.0;
    double throttle_hi = 1.0;
};

/// X_g1, the pre-net generation path set. Residuals (<= 0 satisfied), in
/// order: [x, z-altitude, alpha_hi, alpha_lo, u_hi, u_lo, w_hi, w_lo,
/// theta_hi, theta_lo, omega_hi, omega_lo].
template <class T>
void residuals_Xg1(const StateT<T>& s, const WindSampleT<T>& wind,
                   const BoundTable& b, const NetGeometry& net,
                   std::vector<T>& out) {
    const AirStateT<T> air = air_state(s, wind);
    out.clear();
    out.push_back(s.x);
    out.push_back(s.z - (net.z_net_hi - net.safe_altitude_dz));
    out.push_back(air.alpha - b.gen_alpha_hi);
    out.push_back(b.gen_alpha_lo - air.alpha);
    out.push_back(s.u - b.gen_speed_limit);
    out.push_back(-1.0 * s.u - b.gen_speed_limit);
    out.push_back(s.w - b.gen_speed_limit);
    out.push_back(-1.0 * s.w - b.gen_speed_limit);
    out.push_back(s.theta - b.gen_theta_hi);
    out.push_back(b.gen_theta_lo - s.theta);
    out.push_back(s.omega_y - b.gen_omega_limit);
    out.push_back(-1.0 * s.omega_y - b.gen_omega_limit);
}

/// X_g2, the over-net terminal window. Residuals in order: [-x, z_hi, z_lo,
/// V_a, alpha_hi, alpha_lo, theta_hi, theta_lo, omega_hi, omega_lo].
template <class T>
void residuals_Xg2(const StateT<T>& s, const WindSampleT<T>& wind,
                   const BoundTable& b, std::vector<T>& out) {
    const AirStateT<T> air = air_state(s, wind);
    out.clear();
    out.push_back(-1.0 * s.x);
    out.push_back(s.z - b.term_z_hi);
    out.push_back(b.term_z_lo - s.z);
    out.push_back(air.V_a - b.term_va_limit);
    out.push_back(air.alpha - b.term_alpha_hi);
    out.push_back(b.term_alpha_lo - air.alpha);
    out.push_back(s.theta - b.term_theta_hi);
    out.push_back(b.term_theta_lo - s.theta);
    out.push_back(s.omega_y - b.gen_omega_limit);
    out.push_back(-1.0 * s.omega_y - b.gen_omega_limit);
}

/// X_f = X_g2 with x pinned into [0, delta_x]. Appends [x - delta_x, -x].
template <class T>
void residuals_Xf(const StateT<T>& s, const WindSampleT<T>& wind,
                  const BoundTable& b, const NetGeometry& net,
                  std::vector<T>& out) {
    residuals_Xg2(s, wind, b, out);
    out.push_back(s.x - net.delta_x_terminal);
    out.push_back(-1.0 * s.x);
}

/// X_MPC with an explicit corridor branch (pre-net x < 0 vs over-net). The
/// NLP picks the branch from the reference trajectory's x sign so the
/// constraint stays smooth. Residuals in order: [pos_corridor_lo,
/// pos_corridor_hi, va_corridor, va_nonneg, alpha_hi, alpha_lo, theta_hi,
/// theta_lo, omega_hi, omega_lo].
template <class T>
void residuals_XMPC_branch(const StateT<T>& s, const WindSampleT<T>& wind,
                           const BoundTable& b, const CorridorParams& c,
                           const NetGeometry& net, bool pre_net,
                           std::vector<T>& out) {
    const AirStateT<T> air = air_state(s, wind);
    out.clear();
    if (pre_net) {
        out.push_back(-1.0 * s.z + net.z_net_lo + c.a1 * s.x);
    } else {
        out.push_back(-1.0 * s.z + net.z_net_lo);
    }
    out.push_back(s.z - net.z_net_hi);
    if (pre_net) {
        out.push_back(air.V_a - c.c1 * c.V_a_ref + c.a2 * s.x);
    } else {
        out.push_back(air.V_a - c.c1 * c.V_a_ref);
    }
    out.push_back(-1.0 * air.V_a);
    out.push_back(air.alpha - b.gen_alpha_hi);
    out.push_back(b.gen_alpha_lo - air.alpha);
    out.push_back(s.theta - b.mpc_theta_hi);
    out.push_back(b.mpc_theta_lo - s.theta);
    out.push_back(s.omega_y - b.mpc_omega_limit);
    out.push_back(-1.0 * s.omega_y - b.mpc_omega_limit);
}

/// X_MPC as a membership residual: branch picked from the state's own x.
template <class T>
void residuals_XMPC(const StateT<T>& s, const WindSampleT<T>& wind,
                    const BoundTable& b, const CorridorParams& c,
                    const NetGeometry& net, std::vector<T>& out) {
    residuals_XMPC_branch(s, wind, b, c, net, ad::value(s.x) < 0.0, out);
}

template <class T>
bool inside(const std::vector<T>& residuals, double tol = 0.0) {
    for (const T& r : residuals)
        if (ad::value(r) > tol) return false;
    return true;
}

/// Landing verdict against the tracking requirements: final airspeed,
/// vertical net window, horizontal tolerance |x| <= xdot * dt.
struct LandingVerdict {
    bool success = false;
    bool airspeed_ok = false;
    bool net_window_ok = false;
    bool horizontal_ok = false;
    double V_a_f = 0.0;
    double z_f = 0.0;
    double x_f = 0.0;
    double xdot_f = 0.0;
    std::string failure() const;  // empty when success
};

LandingVerdict check_success(const State& final_state, const WindSample& wind,
                             const CorridorParams& corridor, const NetGeometry& net,
                             double dt);

}  // namespace perch

#endif  // PERCH_CONSTRAINTS_HPP
