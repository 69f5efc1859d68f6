#include "perch/transcribe.hpp"

#include <cmath>
#include <stdexcept>

namespace perch {

using nlp::BlockNlp;
using nlp::VectorXd;

namespace {
constexpr double kFree = BlockNlp::kUnboundedValue;
}

State xi_to_state(const std::array<double, 8>& xi) {
    State s;
    s.x = xi[0];
    s.z = xi[1];
    const double V_a = xi[2], alpha = xi[3];
    s.theta = xi[4];
    s.omega_y = xi[5];
    const WindSample wind = wind_in_body_t(xi[6], xi[7], s.theta, 0.0, 0.0);
    s.u = V_a * std::cos(alpha) + wind.u_w;
    s.w = V_a * std::sin(alpha) + wind.w_w;
    return s;
}

int GenerationProblem::net_node() const {
    return static_cast<int>(std::lround((t_f - t0) / dt));
}

void GenerationProblem::validate() const {
    if (dt <= 0.0 || N <= 0) throw std::invalid_argument("generation: dt and N must be positive");
    const double horizon = t_f - t0 + T_p;
    if (std::abs(N * dt - horizon) > 1e-9)
        throw std::invalid_argument("generation: N*dt does not match t_f - t0 + T_p");
    if (T_p < 0.0) throw std::invalid_argument("generation: T_p must be >= 0");
    const int net = net_node();
    if (net < 1 || net > N)
        throw std::invalid_argument("generation: t_f outside the discretized horizon");
}

GenerationNlp build_generation_nlp(const GenerationProblem& pr) {
    pr.validate();
    const int nodes = pr.num_nodes(), arcs = pr.N, net = pr.net_node();
    GenerationNlp out;
    out.layout = {nodes, arcs};
    out.nlp = std::make_unique<BlockNlp>(out.layout.num_vars());
    BlockNlp& nlp = *out.nlp;
    const GenerationLayout& L = out.layout;

    const AircraftParams p = pr.params;
    const BoundTable& b = pr.bounds;
    const double us = pr.steady_u_I, ws = pr.steady_w_I, h = pr.dt;

    // --- variable bounds ------------------------------------------------
    for (int i = 0; i < 6; ++i) {
        const auto s0 = pr.trim.state0.as_array();
        nlp.fix_var(L.state_index(0, i), s0[i]);
    }
    for (int k = 1; k < nodes; ++k) {
        const bool pre = k < net;        // strictly before the net crossing
        const bool at_net = k == net;
        double xl, xu, zl, zu, tl, tu;
        if (pre) {
            xl = -kFree;
            xu = 0.0;
            zl = -kFree;
            zu = pr.net.z_net_hi - pr.net.safe_altitude_dz;
            tl = b.gen_theta_lo;
            tu = b.gen_theta_hi;
        } else {
            xl = 0.0;
            xu = at_net ? pr.net.delta_x_terminal : kFree;
            zl = b.term_z_lo;
            zu = b.term_z_hi;
            tl = b.term_theta_lo;
            tu = b.term_theta_hi;
        }
        nlp.set_var_bounds(L.state_index(k, 0), xl, xu);
        nlp.set_var_bounds(L.state_index(k, 1), zl, zu);
        nlp.set_var_bounds(L.state_index(k, 2), -b.gen_speed_limit, b.gen_speed_limit);
        nlp.set_var_bounds(L.state_index(k, 3), -b.gen_speed_limit, b.gen_speed_limit);
        nlp.set_var_bounds(L.state_index(k, 4), tl, tu);
        nlp.set_var_bounds(L.state_index(k, 5), -b.gen_omega_limit, b.gen_omega_limit);
    }
    nlp.fix_var(L.input_index(0, 0), pr.trim.input0.delta_e);
    nlp.fix_var(L.input_index(0, 1), pr.trim.input0.delta_t);
    for (int k = 1; k < arcs; ++k) {
        nlp.set_var_bounds(L.input_index(k, 0), -b.elevator_limit, b.elevator_limit);
        nlp.set_var_bounds(L.input_index(k, 1), b.throttle_lo, b.throttle_hi);
    }

    // --- objective: throttle use + input increments, dt-weighted --------
    for (int k = 0; k < arcs; ++k)
        nlp.add_objective_quadratic(L.input_index(k, 1), L.input_index(k, 1),
                                    pr.weights.P_delta_t * h);
    for (int k = 0; k + 1 < arcs; ++k)
        for (int d = 0; d < 2; ++d) {
            const int a = L.input_index(k, d), c = L.input_index(k + 1, d);
            const double w = pr.weights.P_delta_u[d] * h;
            nlp.add_objective_quadratic(a, a, w);
            nlp.add_objective_quadratic(c, c, w);
            nlp.add_objective_quadratic(a, c, -2.0 * w);
        }

    // --- shooting gaps ---------------------------------------------------
    for (int k = 0; k < arcs; ++k) {
        std::vector<int> vars(8);
        for (int i = 0; i < 6; ++i) vars[i] = L.state_index(k, i);
        vars[6] = L.input_index(k, 0);
        vars[7] = L.input_index(k, 1);
        auto& blk = nlp.add_block(
            std::move(vars), 6, 0.0, 0.0, [p, us, ws, h](const auto* in, auto* out) {
                using T = std::decay_t<decltype(in[0])>;
                const StateT<T> s{in[0], in[1], in[2], in[3], in[4], in[5]};
                const ControlInputT<T> u{in[6], in[7]};
                const StateT<T> n = rk4_arc(s, u, us, ws, 0.0, 0.0, p, h);
                const auto a = n.as_array();
                for (int i = 0; i < 6; ++i) out[i] = a[i];
            });
        for (int i = 0; i < 6; ++i)
            blk.linear.emplace_back(blk.row0 + i, L.state_index(k + 1, i), -1.0);
    }

    // --- per-node nonlinear residuals (angle of attack, airspeed) -------
    for (int k = 1; k < nodes; ++k) {
        const bool pre = k < net;
        const double alo = pre ? b.gen_alpha_lo : b.term_alpha_lo;
        const double ahi = pre ? b.gen_alpha_hi : b.term_alpha_hi;
        nlp.add_block({L.state_index(k, 2), L.state_index(k, 3), L.state_index(k, 4)},
                      1, alo, ahi, [us, ws](const auto* in, auto* out) {
                          using T = std::decay_t<decltype(in[0])>;
                          StateT<T> s{};
                          s.u = in[0];
                          s.w = in[1];
                          s.theta = in[2];
                          const WindSampleT<T> wind =
                              wind_in_body_t(us, ws, s.theta, 0.0, 0.0);
                          out[0] = air_state(s, wind).alpha;
                      });
        if (!pre) {
            nlp.add_block(
                {L.state_index(k, 2), L.state_index(k, 3), L.state_index(k, 4)}, 1,
                -kFree, b.term_va_limit, [us, ws](const auto* in, auto* out) {
                    using T = std::decay_t<decltype(in[0])>;
                    StateT<T> s{};
                    s.u = in[0];
                    s.w = in[1];
                    s.theta = in[2];
                    const WindSampleT<T> wind =
                        wind_in_body_t(us, ws, s.theta, 0.0, 0.0);
                    out[0] = air_state(s, wind).V_a;
                });
        }
    }
    return out;
}

VectorXd initial_guess_generation(const GenerationProblem& pr) {
    pr.validate();
    const GenerationLayout L{pr.num_nodes(), pr.N};
    VectorXd g = VectorXd::Zero(L.num_vars());

    const std::array<double, 8> xi0 = {pr.trim.state0.x, pr.trim.state0.z,
                                       pr.V_a_ref,       pr.trim.alpha0,
                                       pr.trim.theta0,   0.0,
                                       pr.steady_u_I,    0.0};
    const std::array<double, 8> xif = {0.0,  -3.2, 7.0, 110.0 * kDeg,
                                       90.0 * kDeg, 0.0, pr.steady_u_I, 0.0};
    const auto s0 = xi_to_state(xi0).as_array();
    const auto sf = xi_to_state(xif).as_array();
    for (int k = 0; k < L.nodes; ++k) {
        const double f = static_cast<double>(k) / pr.N;
        for (int i = 0; i < 6; ++i)
            g[L.state_index(k, i)] = (1.0 - f) * s0[i] + f * sf[i];
    }
    // inputs stay [0, 0]
    return g;
}

int ReferenceTrajectory::node_of(double t) const {
    const double f = (t - t0) / dt;
    const int k = static_cast<int>(std::lround(f));
    if (k < 0 || k >= num_nodes() || std::abs(f - k) > 1e-6)
        throw std::out_of_range("reference: time off the sample grid");
    return k;
}

const ControlInput& ReferenceTrajectory::input_at(double t) const {
    const int k = std::min(node_of(t), static_cast<int>(inputs.size()) - 1);
    return inputs[k];
}

ReferenceTrajectory extract_reference(const GenerationProblem& pr,
                                      const VectorXd& x) {
    const GenerationLayout L{pr.num_nodes(), pr.N};
    ReferenceTrajectory ref;
    ref.t0 = pr.t0;
    ref.dt = pr.dt;
    ref.t_f = pr.t_f;
    ref.T_p = pr.T_p;
    ref.steady_u_I = pr.steady_u_I;
    ref.steady_w_I = pr.steady_w_I;
    ref.states.resize(L.nodes);
    ref.inputs.resize(L.arcs);
    ref.V_a.resize(L.nodes);
    ref.alpha.resize(L.nodes);
    ref.phase.resize(L.nodes);
    for (int k = 0; k < L.nodes; ++k) {
        State s;
        s.x = x[L.state_index(k, 0)];
        s.z = x[L.state_index(k, 1)];
        s.u = x[L.state_index(k, 2)];
        s.w = x[L.state_index(k, 3)];
        s.theta = x[L.state_index(k, 4)];
        s.omega_y = x[L.state_index(k, 5)];
        ref.states[k] = s;
        const WindSample wind =
            wind_in_body_t(pr.steady_u_I, pr.steady_w_I, s.theta, 0.0, 0.0);
        const AirState a = air_state(s, wind);
        ref.V_a[k] = a.V_a;
        ref.alpha[k] = a.alpha;
    }
    for (int k = 0; k < L.arcs; ++k)
        ref.inputs[k] = {x[L.input_index(k, 0)], x[L.input_index(k, 1)]};

    // Phase labels: entry until the AoA first exceeds the critical value,
    // deep stall while above it, recovery after it drops back, perch over
    // the net (t >= t_f). Documented heuristic for reporting only.
    const double alpha_c = 24.07 * kDeg;
    bool seen_stall = false;
    for (int k = 0; k < L.nodes; ++k) {
        const double t = pr.t0 + k * pr.dt;
        if (t >= pr.t_f - 1e-9) {
            ref.phase[k] = "perch";
        } else if (ref.alpha[k] > alpha_c) {
            ref.phase[k] = "deep-stall";
            seen_stall = true;
        } else {
            ref.phase[k] = seen_stall ? "recovery" : "stall-entry";
        }
    }
    return ref;
}

FeasibilityAudit audit_reference(const GenerationProblem& pr,
                                 const ReferenceTrajectory& ref, double tol) {
    FeasibilityAudit a;
    const int nodes = ref.num_nodes(), net = pr.net_node();
    auto note = [&](double v, const std::string& what) {
        if (v > tol && a.detail.empty()) a.detail = what;
    };
    for (int k = 0; k + 1 < nodes; ++k) {
        const State pred = rk4_arc(ref.states[k], ref.inputs[k], pr.steady_u_I,
                                   pr.steady_w_I, 0.0, 0.0, pr.params, pr.dt);
        const auto pa = pred.as_array(), na = ref.states[k + 1].as_array();
        for (int i = 0; i < 6; ++i)
            a.max_gap = std::max(a.max_gap, std::abs(pa[i] - na[i]));
    }
    note(a.max_gap, "shooting gap");

    std::vector<double> r;
    for (int k = 1; k < nodes; ++k) {
        const State& s = ref.states[k];
        const WindSample wind =
            wind_in_body_t(pr.steady_u_I, pr.steady_w_I, s.theta, 0.0, 0.0);
        if (k < net) {
            residuals_Xg1(s, wind, pr.bounds, pr.net, r);
            for (double v : r) a.max_path_violation = std::max(a.max_path_violation, v);
        } else {
            if (k == net)
                residuals_Xf(s, wind, pr.bounds, pr.net, r);
            else
                residuals_Xg2(s, wind, pr.bounds, r);
            for (double v : r)
                a.max_terminal_violation = std::max(a.max_terminal_violation, v);
        }
    }
    note(a.max_path_violation, "pre-net path constraint");
    note(a.max_terminal_violation, "over-net constraint");

    for (size_t k = 1; k < ref.inputs.size(); ++k) {
        const double de = std::abs(ref.inputs[k].delta_e) - pr.bounds.elevator_limit;
        const double dtv = std::max(pr.bounds.throttle_lo - ref.inputs[k].delta_t,
                                    ref.inputs[k].delta_t - pr.bounds.throttle_hi);
        a.max_path_violation = std::max({a.max_path_violation, de, dtv});
    }
    note(a.max_path_violation, "input box");

    a.ok = a.max_gap <= tol && a.max_path_violation <= tol &&
           a.max_terminal_violation <= tol;
    return a;
}

NmpcNlp build_nmpc_nlp(double t, const State& x_e_t, const ReferenceTrajectory& ref,
                       const NmpcWeights& w, const BoundTable& b,
                       const CorridorParams& c, const NetGeometry& net,
                       const AircraftParams& params, int arcs) {
    NmpcNlp out;
    out.layout.arcs = arcs;
    out.layout.num_slacks = 11 * arcs;  // one per softened residual, nodes 1..arcs
    const NmpcLayout L = out.layout;
    out.nlp = std::make_unique<BlockNlp>(L.num_vars());
    BlockNlp& nlp = *out.nlp;

    const double h = ref.dt;
    const double us = ref.steady_u_I, ws = ref.steady_w_I;

    // --- variable bounds -------------------------------------------------
    {
        const auto e0 = x_e_t.as_array();
        for (int i = 0; i < 6; ++i) nlp.fix_var(L.state_index(0, i), e0[i]);
    }
    for (int k = 0; k < arcs; ++k) {
        const ControlInput& ur = ref.input_at(t + k * h);
        nlp.set_var_bounds(L.input_index(k, 0), -b.elevator_limit - ur.delta_e,
                           b.elevator_limit - ur.delta_e);
        nlp.set_var_bounds(L.input_index(k, 1), b.throttle_lo - ur.delta_t,
                           b.throttle_hi - ur.delta_t);
    }
    for (int j = 0; j < L.num_slacks; ++j) {
        nlp.set_var_bounds(L.slack_index(j), 0.0, kFree);
        nlp.add_objective_linear(L.slack_index(j), w.slack_weight);
    }

    // --- objective: weighted error energy --------------------------------
    for (int k = 0; k < arcs; ++k) {
        for (int i = 0; i < 6; ++i)
            nlp.add_objective_quadratic(L.state_index(k, i), L.state_index(k, i),
                                        w.Qx[i] * h);
        for (int d = 0; d < 2; ++d)
            nlp.add_objective_quadratic(L.input_index(k, d), L.input_index(k, d),
                                        w.Qu[d] * h);
    }
    for (int i = 0; i < 6; ++i)
        nlp.add_objective_quadratic(L.state_index(arcs, i), L.state_index(arcs, i),
                                    w.Qxf_scale * w.Qx[i]);

    // --- error shooting gaps ---------------------------------------------
    for (int k = 0; k < arcs; ++k) {
        const State& xr = ref.state_at(t + k * h);
        const State& xr1 = ref.state_at(t + (k + 1) * h);
        const ControlInput& ur = ref.input_at(t + k * h);
        const auto xr1a = xr1.as_array();
        std::vector<int> vars(8);
        for (int i = 0; i < 6; ++i) vars[i] = L.state_index(k, i);
        vars[6] = L.input_index(k, 0);
        vars[7] = L.input_index(k, 1);
        auto& blk = nlp.add_block(
            std::move(vars), 6, 0.0, 0.0,
            [params, us, ws, h, xr, ur, xr1a](const auto* in, auto* out) {
                using T = std::decay_t<decltype(in[0])>;
                const StateT<T> s{in[0] + xr.x,     in[1] + xr.z,
                                  in[2] + xr.u,     in[3] + xr.w,
                                  in[4] + xr.theta, in[5] + xr.omega_y};
                const ControlInputT<T> u{in[6] + ur.delta_e, in[7] + ur.delta_t};
                const StateT<T> n = rk4_arc(s, u, us, ws, 0.0, 0.0, params, h);
                const auto a = n.as_array();
                for (int i = 0; i < 6; ++i) out[i] = a[i] - xr1a[i];
            });
        for (int i = 0; i < 6; ++i)
            blk.linear.emplace_back(blk.row0 + i, L.state_index(k + 1, i), -1.0);
    }

    // --- softened tracking-set membership, nodes 1..arcs ------------------
    for (int k = 1; k <= arcs; ++k) {
        const State& xr = ref.state_at(t + k * h);
        const bool pre_net = xr.x < 0.0;  // corridor branch from the reference
        std::vector<int> vars(6);
        for (int i = 0; i < 6; ++i) vars[i] = L.state_index(k, i);
        auto& blk = nlp.add_block(
            std::move(vars), 11, -kFree, 0.0,
            [b, c, net, us, ws, xr, pre_net](const auto* in, auto* out) {
                using T = std::decay_t<decltype(in[0])>;
                const StateT<T> s{in[0] + xr.x,     in[1] + xr.z,
                                  in[2] + xr.u,     in[3] + xr.w,
                                  in[4] + xr.theta, in[5] + xr.omega_y};
                const WindSampleT<T> wind =
                    wind_in_body_t(us, ws, s.theta, 0.0, 0.0);
                std::vector<T> r;
                residuals_XMPC_branch(s, wind, b, c, net, pre_net, r);
                for (size_t i = 0; i < r.size(); ++i) out[i] = r[i];
            });
        for (int j = 0; j < 11; ++j)
            blk.linear.emplace_back(blk.row0 + j, L.slack_index(11 * (k - 1) + j),
                                    -1.0);
    }

    // informational: does the measured absolute state already violate the set?
    {
        const State& xr0 = ref.state_at(t);
        State abs0 = x_e_t;
        abs0.x += xr0.x;
        abs0.z += xr0.z;
        abs0.u += xr0.u;
        abs0.w += xr0.w;
        abs0.theta += xr0.theta;
        abs0.omega_y += xr0.omega_y;
        const WindSample wind = wind_in_body_t(us, ws, abs0.theta, 0.0, 0.0);
        std::vector<double> r;
        residuals_XMPC_branch(abs0, wind, b, c, net, xr0.x < 0.0, r);
        out.start_violates = !inside(r, 1e-9);
    }
    return out;
}

}  // namespace perch
