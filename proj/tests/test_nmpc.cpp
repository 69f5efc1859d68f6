#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "perch/nmpc.hpp"
#include "perch/trim.hpp"

using namespace perch;

namespace {

ReferenceTrajectory solved_reference() {
    static ReferenceTrajectory ref = [] {
        GenerationProblem gp;
        TrimSpec ts;
        gp.trim = solve_trim(ts, gp.params);
        gp.validate();
        auto g = build_generation_nlp(gp);
        nlp::SolveOptions opt;
        opt.mu_init = 1.0;  // matches the shipped generation default
        const auto r = nlp::solve(*g.nlp, initial_guess_generation(gp), opt);
        REQUIRE(r.report.status == nlp::SolveStatus::kOptimal);
        return extract_reference(gp, r.x);
    }();
    return ref;
}

}  // namespace

TEST_CASE("error dynamics vanish on the reference") {
    const auto ref = solved_reference();
    for (double t : {0.0, 5.0, 12.3, 20.0, 23.9}) {
        const auto g0 = error_dynamics({}, {}, t, ref, AircraftParams{});
        for (double v : g0.as_array()) CHECK(std::abs(v) < 1e-12);
    }
}

TEST_CASE("error dynamics are genuinely nonlinear (documented non-property)") {
    const auto ref = solved_reference();
    const double t = 10.0;  // deep-stall phase
    const State x_e{1.0, -2.0, 0.8, 0.5, 0.1, 0.05};
    const ControlInput u_e{0.05, 0.1};
    const AircraftParams p;
    const auto gx = error_dynamics(x_e, {}, t, ref, p);
    const auto gu = error_dynamics({}, u_e, t, ref, p);
    const auto gxu = error_dynamics(x_e, u_e, t, ref, p);
    double gap = 0.0;
    const auto ax = gx.as_array(), au = gu.as_array(), axu = gxu.as_array();
    for (int i = 0; i < 6; ++i)
        gap = std::max(gap, std::abs(ax[i] + au[i] - axu[i]));
    CHECK(gap > 1e-6);  // superposition fails beyond first order
}

TEST_CASE("config hash is stable and sensitive") {
    TrackingConfig a, b;
    CHECK(tracking_config_hash(a) == tracking_config_hash(b));
    b.weights.Qx[0] += 1.0;
    CHECK(tracking_config_hash(a) != tracking_config_hash(b));
    TrackingConfig c;
    c.gust_seed = 17;
    CHECK(tracking_config_hash(a) != tracking_config_hash(c));
}

TEST_CASE("config validation rejects non-integral horizons") {
    TrackingConfig c;
    c.T_p = 0.45;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.T_p = 0.5;
    CHECK_NOTHROW(c.validate());
    c.sample_dt = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("zero-gust tracking reproduces the reference") {
    const auto ref = solved_reference();
    TrackingConfig cfg;
    WindField wind;  // no steady wind, no gusts
    const GenerationProblem gp;  // default tables match the reference build
    const auto rec =
        track(ref, cfg, wind, gp.bounds, gp.corridor, gp.net, gp.params);

    REQUIRE(!rec.aborted);
    REQUIRE(static_cast<int>(rec.samples.size()) == 241);

    double worst_err = 0.0, worst_obj = 0.0;
    for (const auto& s : rec.samples) {
        const auto& xr = ref.state_at(s.t);
        const auto a = s.state.as_array(), b = xr.as_array();
        for (int i = 0; i < 6; ++i)
            worst_err = std::max(worst_err, std::abs(a[i] - b[i]));
        if (s.has_solve) worst_obj = std::max(worst_obj, s.objective);
    }
    CHECK(worst_err < 1e-4);
    CHECK(worst_obj < 1e-8);

    // applied inputs always inside the hard box
    for (const auto& s : rec.samples) {
        if (!s.has_solve) continue;
        CHECK(std::abs(s.applied.delta_e) <= gp.bounds.elevator_limit + 1e-12);
        CHECK(s.applied.delta_t >= gp.bounds.throttle_lo - 1e-12);
        CHECK(s.applied.delta_t <= gp.bounds.throttle_hi + 1e-12);
    }
    CHECK(rec.verdict.success);
}

TEST_CASE("gusty run is deterministic per seed and verdict is re-derivable") {
    const auto ref = solved_reference();
    TrackingConfig cfg;
    cfg.gust_seed = 3;
    DrydenParams dp;
    dp.seed = cfg.gust_seed;
    WindField wind;
    wind.gust_series = dryden_gust_series(dp, ref.t_f - ref.t0);
    const GenerationProblem gp;

    const auto r1 = track(ref, cfg, wind, gp.bounds, gp.corridor, gp.net, gp.params);
    const auto r2 = track(ref, cfg, wind, gp.bounds, gp.corridor, gp.net, gp.params);
    REQUIRE(r1.samples.size() == r2.samples.size());
    for (size_t i = 0; i < r1.samples.size(); ++i) {
        const auto a = r1.samples[i].state.as_array();
        const auto b = r2.samples[i].state.as_array();
        for (int j = 0; j < 6; ++j) CHECK(a[j] == b[j]);
    }

    const auto& xf = r1.final_state();
    const WindSample wf = wind_in_body(wind.steady_u_I, wind.steady_w_I,
                                       xf.theta, wind.gust_at(ref.t_f));
    const auto verdict = check_success(xf, wf, gp.corridor, gp.net, cfg.sample_dt);
    CHECK(verdict.success == r1.verdict.success);
}
