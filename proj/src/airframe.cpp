#include "perch/airframe.hpp"

#include <stdexcept>

namespace perch {

State rk4_step(const State& s, const ControlInput& in,
               const std::function<WindSample(double)>& wind_fn,
               const AircraftParams& p, double t, double h) {
    const auto f = [&](const State& y, double tau) {
        return dynamics(y, in, wind_fn(tau), p);
    };
    const State k1 = f(s, t);
    const State k2 = f(detail::axpy(s, 0.5 * h, k1), t + 0.5 * h);
    const State k3 = f(detail::axpy(s, 0.5 * h, k2), t + 0.5 * h);
    const State k4 = f(detail::axpy(s, h, k3), t + h);
    State out;
    const double c = h / 6.0;
    out.x = s.x + c * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    out.z = s.z + c * (k1.z + 2 * k2.z + 2 * k3.z + k4.z);
    out.u = s.u + c * (k1.u + 2 * k2.u + 2 * k3.u + k4.u);
    out.w = s.w + c * (k1.w + 2 * k2.w + 2 * k3.w + k4.w);
    out.theta = s.theta + c * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta);
    out.omega_y = s.omega_y + c * (k1.omega_y + 2 * k2.omega_y + 2 * k3.omega_y + k4.omega_y);
    if (!all_finite(out)) throw std::runtime_error("rk4_step: non-finite state");
    return out;
}

bool all_finite(const State& s) {
    return std::isfinite(s.x) && std::isfinite(s.z) && std::isfinite(s.u) &&
           std::isfinite(s.w) && std::isfinite(s.theta) && std::isfinite(s.omega_y);
}

}  // namespace perch
