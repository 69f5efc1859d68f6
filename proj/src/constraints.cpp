#include "perch/constraints.hpp"

namespace perch {

std::string LandingVerdict::failure() const {
    if (success) return {};
    std::string out;
    if (!airspeed_ok) out += "final airspeed above c1*Va_ref; ";
    if (!net_window_ok) out += "final z outside net window; ";
    if (!horizontal_ok) out += "final x outside horizontal tolerance; ";
    if (!out.empty()) out.erase(out.size() - 2);
    return out;
}

LandingVerdict check_success(const State& final_state, const WindSample& wind,
                             const CorridorParams& corridor, const NetGeometry& net,
                             double dt) {
    LandingVerdict v;
    const AirState air = air_state(final_state, wind);
    v.V_a_f = air.V_a;
    v.z_f = final_state.z;
    v.x_f = final_state.x;
    v.xdot_f = std::cos(final_state.theta) * final_state.u +
               std::sin(final_state.theta) * final_state.w;
    v.airspeed_ok = v.V_a_f <= corridor.c1 * corridor.V_a_ref;
    v.net_window_ok = net.z_net_lo <= v.z_f && v.z_f <= net.z_net_hi;
    v.horizontal_ok = -v.xdot_f * dt <= v.x_f && v.x_f <= v.xdot_f * dt;
    v.success = v.airspeed_ok && v.net_window_ok && v.horizontal_ok;
    return v;
}

}  // namespace perch
