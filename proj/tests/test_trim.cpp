#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "perch/trim.hpp"

using namespace perch;

namespace {
const AircraftParams kP{};
}

TEST_CASE("trim at 25 m/s satisfies the steady-level conditions") {
    TrimSpec spec;
    const TrimSolution t = solve_trim(spec, kP);

    CHECK(t.residual_norm <= kTrimTolerance);
    CHECK(t.theta0 == t.alpha0);
    CHECK(t.delta_t0 > 0.0);
    CHECK(t.delta_t0 < 1.0);
    // Small positive angle of attack in level cruise.
    CHECK(t.alpha0 > 0.0);
    CHECK(t.alpha0 < 10.0 * M_PI / 180.0);

    // Independent fixed-point check on the dynamics themselves.
    const WindSample wind = wind_in_body_t(0.0, 0.0, t.state0.theta, 0.0, 0.0);
    const State d = dynamics(t.state0, t.input0, wind, kP);
    CHECK(std::abs(d.u) <= kTrimTolerance);
    CHECK(std::abs(d.w) <= kTrimTolerance);
    CHECK(std::abs(d.omega_y) <= kTrimTolerance);
    CHECK(std::abs(d.z) <= 1e-7);  // level flight: no climb

    // Airspeed realized by the trim state.
    const AirState a = air_state(t.state0, wind);
    CHECK(a.V_a == doctest::Approx(25.0).epsilon(1e-10));
    CHECK(a.alpha == doctest::Approx(t.alpha0).epsilon(1e-10));

    CHECK(t.state0.x == doctest::Approx(spec.x0));
    CHECK(t.state0.z == doctest::Approx(spec.z0));
}

TEST_CASE("trim triple matches frozen regression values") {
    const TrimSolution t = solve_trim(TrimSpec{}, kP);
    // Frozen from a converged run; guards against silent model drift.
    CHECK(t.alpha0 == doctest::Approx(0.082320904828).epsilon(1e-8));
    CHECK(t.delta_e0 == doctest::Approx(-0.109323887669).epsilon(1e-8));
    CHECK(t.delta_t0 == doctest::Approx(0.333523468310).epsilon(1e-8));
}

TEST_CASE("trim is invariant to steady horizontal wind") {
    TrimSpec calm, windy;
    windy.steady_wind_u_I = -6.0;
    const TrimSolution a = solve_trim(calm, kP);
    const TrimSolution b = solve_trim(windy, kP);
    CHECK(a.alpha0 == doctest::Approx(b.alpha0).epsilon(1e-8));
    CHECK(a.delta_e0 == doctest::Approx(b.delta_e0).epsilon(1e-8));
    CHECK(a.delta_t0 == doctest::Approx(b.delta_t0).epsilon(1e-8));
}

TEST_CASE("re-solving from the solution is a fixed point") {
    const TrimSolution a = solve_trim(TrimSpec{}, kP);
    const TrimSolution b = solve_trim(TrimSpec{}, kP);
    CHECK(a.alpha0 == b.alpha0);
    CHECK(a.delta_e0 == b.delta_e0);
    CHECK(a.delta_t0 == b.delta_t0);
}

TEST_CASE("simulating from trim holds altitude and speed") {
    const TrimSolution t = solve_trim(TrimSpec{}, kP);
    State s = t.state0;
    for (int k = 0; k < 100; ++k)
        s = rk4_arc(s, t.input0, 0.0, 0.0, 0.0, 0.0, kP, 0.1);
    CHECK(s.z == doctest::Approx(t.state0.z).epsilon(1e-6));
    CHECK(s.u == doctest::Approx(t.state0.u).epsilon(1e-6));
    CHECK(s.w == doctest::Approx(t.state0.w).epsilon(1e-6));
}

TEST_CASE("invalid airspeed is rejected") {
    TrimSpec spec;
    spec.V_a_ref = -1.0;
    CHECK_THROWS_AS(solve_trim(spec, kP), std::invalid_argument);
}
