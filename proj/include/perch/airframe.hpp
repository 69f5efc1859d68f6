// Longitudinal rigid-body dynamics of a small fixed-wing UAV with blended
// pre/post-stall aerodynamics (linear + flat-plate, sigmoid blending) and a
// fixed-step RK4 integrator.
//
// Axes: inertial x north, inertial z down (altitude above ground is -z).
// The core routines are templated on the scalar type so the same code path
// serves plain simulation and derivative propagation.

#ifndef PERCH_AIRFRAME_HPP
#define PERCH_AIRFRAME_HPP

#include <array>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "perch/ad.hpp"

namespace perch {

/// [x, z, u, w, theta, omega_y]: inertial position, body velocities,
/// pitch, pitch rate.
template <class T>
struct StateT {
    T x{};        // horizontal position, m (inertial)
    T z{};        // vertical position, m (inertial, down; negative above ground)
    T u{};        // body longitudinal velocity, m/s
    T w{};        // body vertical velocity, m/s
    T theta{};    // pitch angle, rad
    T omega_y{};  // pitch rate, rad/s

    std::array<T, 6> as_array() const { return {x, z, u, w, theta, omega_y}; }
    static StateT from_array(const std::array<T, 6>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }
};
using State = StateT<double>;
using StateDerivative = State;

/// [delta_e, delta_t]: elevator deflection (rad) and throttle PWM in [0,1].
template <class T>
struct ControlInputT {
    T delta_e{};
    T delta_t{};
};
using ControlInput = ControlInputT<double>;

/// Body-frame wind components along x^B and z^B.
template <class T>
struct WindSampleT {
    T u_w{};
    T w_w{};
};
using WindSample = WindSampleT<double>;

/// Airspeed and angle of attack.
template <class T>
struct AirStateT {
    T V_a{};
    T alpha{};
};
using AirState = AirStateT<double>;

/// Physical, aerodynamic, and propulsion parameters (config-ingested).
struct AircraftParams {
    double m = 13.5;          // kg
    double J_y = 1.135;       // kg m^2
    double S = 0.55;          // m^2
    double c = 0.18994;       // m
    double rho = 1.2682;      // kg/m^3
    double C_L0 = 0.28;
    double C_Lalpha = 3.45;
    double C_Dp = 0.0437;
    double e_oswald = 0.9;
    double AR = 15.24;        // b^2/S
    double C_m0 = -0.02338;
    double C_malpha = -0.38;
    double C_Lq = 0.0;
    double C_Ldelta_e = -0.36;
    double C_Dq = 0.0;
    double C_Ddelta_e = 0.0;
    double C_mq = -3.6;
    double C_mdelta_e = -0.5;
    double M_tilde = 50.0;          // blending transition rate
    double alpha_0_cutoff = 0.4712; // blending cutoff AoA, rad
    double S_prop = 0.2027;         // m^2
    double C_prop = 1.0;
    double k_motor = 80.0;
    double g = 9.81;                // m/s^2
    double length = 1.7;            // m
};

inline constexpr double kEpsilonAirspeed = 1e-9;  // guard for alpha definition only

/// R_B^I(theta): rotates body-frame vectors into the inertial frame.
/// Inverse equals transpose.
inline Eigen::Matrix2d rotation_body_to_inertial(double theta) {
    Eigen::Matrix2d r;
    r << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
    return r;
}

/// Airspeed and quadrant-aware AoA from body velocity and body-frame wind.
/// Valid over the whole landing envelope (alpha beyond 90 deg).
template <class T>
AirStateT<T> air_state(const StateT<T>& s, const WindSampleT<T>& wind) {
    using ad::value;
    const T u_a = s.u - wind.u_w;
    const T w_a = s.w - wind.w_w;
    AirStateT<T> out;
    out.V_a = ad::sqrt(ad::sqr(u_a) + ad::sqr(w_a) + T(0.0));
    if (value(out.V_a) < kEpsilonAirspeed) {
        out.alpha = T(0.0);
    } else {
        out.alpha = ad::atan2(w_a, u_a);
    }
    return out;
}

/// Sigmoid blend between pre-stall and flat-plate regimes.
template <class T>
T sigma_blend(const T& alpha, const AircraftParams& p) {
    return 1.0 / (1.0 + ad::exp(-p.M_tilde * (alpha - p.alpha_0_cutoff)));
}

/// Blended lift, drag, and pitching-moment coefficients.
template <class T>
void aero_coefficients(const T& alpha, const AircraftParams& p, T& C_L, T& C_D, T& C_m) {
    const T sigma = sigma_blend(alpha, p);
    const T cl_pre = p.C_L0 + p.C_Lalpha * alpha;
    const T cl_post = ad::sin(2.0 * alpha);
    const T cd_pre = p.C_Dp + ad::sqr(cl_pre) / (M_PI * p.e_oswald * p.AR);
    const T cd_post = 2.0 * ad::sqr(ad::sin(alpha));
    C_L = (1.0 - sigma) * cl_pre + sigma * cl_post;
    C_D = (1.0 - sigma) * cd_pre + sigma * cd_post;
    C_m = p.C_m0 + p.C_malpha * alpha;
}

/// Total body-frame forces and pitching moment: gravity + aero + propulsion.
/// The rate terms are multiplied through by V_a so V_a = 0 is regular.
template <class T>
void forces_and_moment(const StateT<T>& s, const ControlInputT<T>& in,
                       const WindSampleT<T>& wind, const AircraftParams& p,
                       T& f_x, T& f_z, T& M) {
    const AirStateT<T> air = air_state(s, wind);
    const T& V_a = air.V_a;
    const T& alpha = air.alpha;

    T C_L, C_D, C_m;
    aero_coefficients(alpha, p, C_L, C_D, C_m);

    const double qS = 0.5 * p.rho * p.S;
    const T Va2 = ad::sqr(V_a);
    // F_i = qS [ V_a^2 (C_i + C_i_de * de) + V_a (c/2) C_i_q * wy ]
    const T F_L = qS * (Va2 * (C_L + p.C_Ldelta_e * in.delta_e) +
                        V_a * (0.5 * p.c) * p.C_Lq * s.omega_y);
    const T F_D = qS * (Va2 * (C_D + p.C_Ddelta_e * in.delta_e) +
                        V_a * (0.5 * p.c) * p.C_Dq * s.omega_y);
    M = qS * p.c * (Va2 * (C_m + p.C_mdelta_e * in.delta_e) +
                    V_a * (0.5 * p.c) * p.C_mq * s.omega_y);

    const T sa = ad::sin(alpha), ca = ad::cos(alpha);
    // Aero force rotated into body axes; gravity rotated by pitch.
    const T fa_x = sa * F_L - ca * F_D;
    const T fa_z = -ca * F_L - sa * F_D;
    const T fg_x = -ad::sin(s.theta) * (p.m * p.g);
    const T fg_z = ad::cos(s.theta) * (p.m * p.g);
    const T fp_x = 0.5 * p.rho * p.S_prop * p.C_prop *
                   (ad::sqr(p.k_motor * in.delta_t) - Va2);

    f_x = fg_x + fa_x + fp_x;
    f_z = fg_z + fa_z;
}

/// Longitudinal rigid-body state derivative.
template <class T>
StateT<T> dynamics(const StateT<T>& s, const ControlInputT<T>& in,
                   const WindSampleT<T>& wind, const AircraftParams& p) {
    T f_x, f_z, M;
    forces_and_moment(s, in, wind, p, f_x, f_z, M);
    const T ct = ad::cos(s.theta), st = ad::sin(s.theta);
    StateT<T> d;
    d.x = ct * s.u + st * s.w;
    d.z = -st * s.u + ct * s.w;
    d.u = -s.omega_y * s.w + f_x / p.m;
    d.w = s.omega_y * s.u + f_z / p.m;
    d.theta = s.omega_y;
    d.omega_y = M / p.J_y;
    return d;
}

/// Known steady wind (inertial) rotated into the body frame plus a
/// body-frame gust.
template <class T>
WindSampleT<T> wind_in_body_t(double steady_u_I, double steady_w_I,
                              const T& theta, double gust_u, double gust_w) {
    const T ct = ad::cos(theta), st = ad::sin(theta);
    WindSampleT<T> w;
    // R_I^B = R_B^I(theta)^T = [[cos, -sin], [sin, cos]]
    w.u_w = ct * steady_u_I - st * steady_w_I + gust_u;
    w.w_w = st * steady_u_I + ct * steady_w_I + gust_w;
    return w;
}

/// Derivative with the body-frame wind derived from steady inertial wind
/// (through the current pitch) plus a frozen body-frame gust.
template <class T>
StateT<T> dynamics_steady_wind(const StateT<T>& s, const ControlInputT<T>& in,
                               double steady_u_I, double steady_w_I,
                               double gust_u, double gust_w,
                               const AircraftParams& p) {
    const WindSampleT<T> wind =
        wind_in_body_t(steady_u_I, steady_w_I, s.theta, gust_u, gust_w);
    return dynamics(s, in, wind, p);
}

namespace detail {

template <class T>
StateT<T> axpy(const StateT<T>& s, double a, const StateT<T>& d) {
    return {s.x + a * d.x, s.z + a * d.z, s.u + a * d.u,
            s.w + a * d.w, s.theta + a * d.theta, s.omega_y + a * d.omega_y};
}

}  // namespace detail

/// One classical RK4 step with zero-order-hold input. The body-frame wind is
/// supplied as a function of time.
State rk4_step(const State& s, const ControlInput& in,
               const std::function<WindSample(double)>& wind_fn,
               const AircraftParams& p, double t, double h);

/// One classical RK4 step against steady inertial wind plus a gust frozen
/// over the step; the steady wind is re-rotated with the stage pitch. This
/// is the arc map shared by transcription and the truth simulation.
template <class T>
StateT<T> rk4_arc(const StateT<T>& s, const ControlInputT<T>& in,
                  double steady_u_I, double steady_w_I, double gust_u,
                  double gust_w, const AircraftParams& p, double h) {
    const auto f = [&](const StateT<T>& y) {
        return dynamics_steady_wind(y, in, steady_u_I, steady_w_I, gust_u, gust_w, p);
    };
    const StateT<T> k1 = f(s);
    const StateT<T> k2 = f(detail::axpy(s, 0.5 * h, k1));
    const StateT<T> k3 = f(detail::axpy(s, 0.5 * h, k2));
    const StateT<T> k4 = f(detail::axpy(s, h, k3));
    StateT<T> out = s;
    const double c = h / 6.0;
    out.x = s.x + c * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    out.z = s.z + c * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
    out.u = s.u + c * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
    out.w = s.w + c * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w);
    out.theta = s.theta + c * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta);
    out.omega_y =
        s.omega_y + c * (k1.omega_y + 2.0 * k2.omega_y + 2.0 * k3.omega_y + k4.omega_y);
    return out;
}

bool all_finite(const State& s);

}  // namespace perch

#endif  // PERCH_AIRFRAME_HPP
