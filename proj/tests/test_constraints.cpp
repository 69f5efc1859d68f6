#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "perch/constraints.hpp"

using namespace perch;

namespace {
const BoundTable kB{};
const NetGeometry kNet{};
const CorridorParams kC{};
const WindSample kCalm{};

State make_state(double x, double z, double u, double w, double theta, double wy) {
    return State{x, z, u, w, theta, wy};
}
}  // namespace

TEST_CASE("cruise-like states lie inside the pre-net path set") {
    std::vector<double> r;
    residuals_Xg1(make_state(-50.0, -30.0, 20.0, 2.0, 0.3, 0.0), kCalm, kB, kNet, r);
    CHECK(r.size() == 12);
    CHECK(inside(r));
}

TEST_CASE("pre-net path set rejects each violated bound") {
    std::vector<double> r;
    // positive x (already past the net)
    residuals_Xg1(make_state(1.0, -30.0, 20.0, 2.0, 0.3, 0.0), kCalm, kB, kNet, r);
    CHECK_FALSE(inside(r));
    // too low: z above the safe-altitude line (z > z_net_hi - dz = -2.0)
    residuals_Xg1(make_state(-50.0, -1.0, 20.0, 2.0, 0.3, 0.0), kCalm, kB, kNet, r);
    CHECK_FALSE(inside(r));
    // angle of attack past 110 degrees (air velocity pointing backwards)
    residuals_Xg1(make_state(-50.0, -30.0, -3.0, 4.0, 0.3, 0.0), kCalm, kB, kNet, r);
    CHECK_FALSE(inside(r));
    // speed beyond the 40 m/s box
    residuals_Xg1(make_state(-50.0, -30.0, 41.0, 2.0, 0.3, 0.0), kCalm, kB, kNet, r);
    CHECK_FALSE(inside(r));
    // pitch below zero
    residuals_Xg1(make_state(-50.0, -30.0, 20.0, 2.0, -0.01, 0.0), kCalm, kB, kNet, r);
    CHECK_FALSE(inside(r));
    // pitch rate beyond 1.46 rad/s
    residuals_Xg1(make_state(-50.0, -30.0, 20.0, 2.0, 0.3, 1.5), kCalm, kB, kNet, r);
    CHECK_FALSE(inside(r));
}

TEST_CASE("deep-stall terminal states lie inside the over-net window") {
    // past-vertical airflow, slow, nose high: u slightly negative, w ~ 6
    std::vector<double> r;
    const State s = make_state(0.05, -3.2, -0.5, 6.0, 80.0 * kDeg, 0.1);
    residuals_Xg2(s, kCalm, kB, r);
    CHECK(r.size() == 10);
    const AirState a = air_state(s, kCalm);
    CHECK(a.V_a < kB.term_va_limit);
    CHECK(a.alpha > kB.term_alpha_lo);
    CHECK(inside(r));
}

TEST_CASE("over-net window rejects fast or shallow arrivals") {
    std::vector<double> r;
    // too fast
    residuals_Xg2(make_state(0.05, -3.2, 1.0, 8.0, 80.0 * kDeg, 0.1), kCalm, kB, r);
    CHECK_FALSE(inside(r));
    // too shallow (small angle of attack)
    residuals_Xg2(make_state(0.05, -3.2, 6.0, 0.5, 80.0 * kDeg, 0.1), kCalm, kB, r);
    CHECK_FALSE(inside(r));
    // outside the shrunk vertical window
    residuals_Xg2(make_state(0.05, -4.5, -0.5, 6.0, 80.0 * kDeg, 0.1), kCalm, kB, r);
    CHECK_FALSE(inside(r));
    // behind the net
    residuals_Xg2(make_state(-0.05, -3.2, -0.5, 6.0, 80.0 * kDeg, 0.1), kCalm, kB, r);
    CHECK_FALSE(inside(r));
}

TEST_CASE("terminal set is the over-net window with x pinned") {
    std::vector<double> rf, rg;
    const State s = make_state(5e-5, -3.2, -0.5, 6.0, 80.0 * kDeg, 0.1);
    residuals_Xf(s, kCalm, kB, kNet, rf);
    residuals_Xg2(s, kCalm, kB, rg);
    CHECK(rf.size() == rg.size() + 2);
    for (size_t i = 0; i < rg.size(); ++i) CHECK(rf[i] == rg[i]);
    CHECK(inside(rf));
    // membership in the terminal set implies membership in the window
    // (structurally: the first residuals are identical)
    std::vector<double> rf2;
    residuals_Xf(make_state(0.5, -3.2, -0.5, 6.0, 80.0 * kDeg, 0.1), kCalm, kB, kNet, rf2);
    CHECK_FALSE(inside(rf2));  // x beyond the terminal tolerance
}

TEST_CASE("tracking corridor branches join continuously at the net plane") {
    std::vector<double> pre, post;
    const State s = make_state(0.0, -3.0, 5.0, 3.0, 40.0 * kDeg, 0.2);
    residuals_XMPC_branch(s, kCalm, kB, kC, kNet, true, pre);
    residuals_XMPC_branch(s, kCalm, kB, kC, kNet, false, post);
    REQUIRE(pre.size() == post.size());
    for (size_t i = 0; i < pre.size(); ++i)
        CHECK(std::abs(pre[i] - post[i]) < 1e-12);
}

TEST_CASE("line-of-sight corridor widens with distance to the net") {
    std::vector<double> r;
    // 100 m out: altitude corridor allows z down to -4.7 - 98.12 m and
    // airspeed up to 7.5 + 55 m/s.
    const State far = make_state(-100.0, -60.0, 25.0, 1.0, 20.0 * kDeg, 0.0);
    residuals_XMPC(far, kCalm, kB, kC, kNet, r);
    CHECK(inside(r));
    // the same altitude/airspeed right at the net violates the corridor
    const State close = make_state(-0.5, -60.0, 25.0, 1.0, 20.0 * kDeg, 0.0);
    residuals_XMPC(close, kCalm, kB, kC, kNet, r);
    CHECK_FALSE(inside(r));
}

TEST_CASE("tracking set enforces the ceiling over the whole approach") {
    std::vector<double> r;
    // too high (z above the net top)
    residuals_XMPC(make_state(-100.0, -0.5, 25.0, 1.0, 20.0 * kDeg, 0.0), kCalm, kB,
                   kC, kNet, r);
    CHECK_FALSE(inside(r));
}

TEST_CASE("landing verdict accepts a textbook arrival and names failures") {
    // slow, inside the net window, tiny overshoot
    State good = make_state(0.01, -3.0, 1.0, 6.0, 80.0 * kDeg, 0.0);
    const LandingVerdict v = check_success(good, kCalm, kC, kNet, 0.1);
    CHECK(v.success);
    CHECK(v.failure().empty());

    // too fast
    State fast = good;
    fast.w = 9.0;
    const LandingVerdict vf = check_success(fast, kCalm, kC, kNet, 0.1);
    CHECK_FALSE(vf.success);
    CHECK(vf.failure().find("airspeed") != std::string::npos);

    // under the net
    State low = good;
    low.z = -5.0;
    const LandingVerdict vl = check_success(low, kCalm, kC, kNet, 0.1);
    CHECK_FALSE(vl.success);
    CHECK(vl.failure().find("net window") != std::string::npos);

    // short of the net by more than one sample of travel
    State shortfall = good;
    shortfall.x = -2.0;
    const LandingVerdict vs = check_success(shortfall, kCalm, kC, kNet, 0.1);
    CHECK_FALSE(vs.success);
    CHECK(vs.failure().find("horizontal") != std::string::npos);
}

TEST_CASE("membership tolerance is honored") {
    std::vector<double> r = {-1.0, 1e-9};
    CHECK_FALSE(inside(r));
    CHECK(inside(r, 1e-8));
}
