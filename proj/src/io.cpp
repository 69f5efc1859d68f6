#include "perch/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace perch {

namespace {

using nlohmann::json;

// Unit families a key may carry. Angles convert deg -> rad; the others
// only validate that the suffix (when present) matches the key's family.
enum class Unit { kNone, kAngle, kLength, kTime, kSpeed, kMass, kArea };

struct KeyRef {
    enum Kind { kDouble, kInt, kU64 } kind = kDouble;
    double* d = nullptr;
    int* i = nullptr;
    uint64_t* u = nullptr;
    Unit unit = Unit::kNone;
};

struct KeyTable {
    std::vector<std::pair<std::string, KeyRef>> entries;

    void add(const std::string& name, double& field, Unit u = Unit::kNone) {
        entries.push_back({name, {KeyRef::kDouble, &field, nullptr, nullptr, u}});
    }
    void add(const std::string& name, int& field) {
        entries.push_back({name, {KeyRef::kInt, nullptr, &field, nullptr, Unit::kNone}});
    }
    void add(const std::string& name, uint64_t& field) {
        entries.push_back({name, {KeyRef::kU64, nullptr, nullptr, &field, Unit::kNone}});
    }
    const KeyRef* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.first == name) return &e.second;
        return nullptr;
    }
};

KeyTable key_table(Config& c) {
    KeyTable t;
    // airframe
    t.add("mass", c.params.m, Unit::kMass);
    t.add("J_y", c.params.J_y);
    t.add("wing_area", c.params.S, Unit::kArea);
    t.add("chord", c.params.c, Unit::kLength);
    t.add("air_density", c.params.rho);
    t.add("C_L0", c.params.C_L0);
    t.add("C_Lalpha", c.params.C_Lalpha);
    t.add("C_Dp", c.params.C_Dp);
    t.add("oswald_efficiency", c.params.e_oswald);
    t.add("aspect_ratio", c.params.AR);
    t.add("C_m0", c.params.C_m0);
    t.add("C_malpha", c.params.C_malpha);
    t.add("C_Lq", c.params.C_Lq);
    t.add("C_Ldelta_e", c.params.C_Ldelta_e);
    t.add("C_Dq", c.params.C_Dq);
    t.add("C_Ddelta_e", c.params.C_Ddelta_e);
    t.add("C_mq", c.params.C_mq);
    t.add("C_mdelta_e", c.params.C_mdelta_e);
    t.add("blend_rate", c.params.M_tilde);
    t.add("blend_cutoff_alpha", c.params.alpha_0_cutoff, Unit::kAngle);
    t.add("prop_area", c.params.S_prop, Unit::kArea);
    t.add("prop_coefficient", c.params.C_prop);
    t.add("motor_k", c.params.k_motor);
    t.add("gravity", c.params.g);
    t.add("fuselage_length", c.params.length, Unit::kLength);
    // bounds
    t.add("gen_speed_limit", c.bounds.gen_speed_limit, Unit::kSpeed);
    t.add("gen_alpha_lo", c.bounds.gen_alpha_lo, Unit::kAngle);
    t.add("gen_alpha_hi", c.bounds.gen_alpha_hi, Unit::kAngle);
    t.add("gen_theta_lo", c.bounds.gen_theta_lo, Unit::kAngle);
    t.add("gen_theta_hi", c.bounds.gen_theta_hi, Unit::kAngle);
    t.add("gen_omega_limit", c.bounds.gen_omega_limit);
    t.add("gen_altitude_ceiling", c.bounds.gen_altitude_ceiling, Unit::kLength);
    t.add("term_z_lo", c.bounds.term_z_lo, Unit::kLength);
    t.add("term_z_hi", c.bounds.term_z_hi, Unit::kLength);
    t.add("term_va_limit", c.bounds.term_va_limit, Unit::kSpeed);
    t.add("term_alpha_lo", c.bounds.term_alpha_lo, Unit::kAngle);
    t.add("term_alpha_hi", c.bounds.term_alpha_hi, Unit::kAngle);
    t.add("term_theta_lo", c.bounds.term_theta_lo, Unit::kAngle);
    t.add("term_theta_hi", c.bounds.term_theta_hi, Unit::kAngle);
    t.add("mpc_theta_lo", c.bounds.mpc_theta_lo, Unit::kAngle);
    t.add("mpc_theta_hi", c.bounds.mpc_theta_hi, Unit::kAngle);
    t.add("mpc_omega_limit", c.bounds.mpc_omega_limit);
    t.add("elevator_limit", c.bounds.elevator_limit, Unit::kAngle);
    t.add("throttle_lo", c.bounds.throttle_lo);
    t.add("throttle_hi", c.bounds.throttle_hi);
    // corridor + net
    t.add("corridor_a1", c.corridor.a1);
    t.add("corridor_a2", c.corridor.a2);
    t.add("corridor_c1", c.corridor.c1);
    t.add("corridor_c2", c.corridor.c2);
    t.add("corridor_va_ref", c.corridor.V_a_ref, Unit::kSpeed);
    t.add("x_net", c.net.x_net, Unit::kLength);
    t.add("z_net_lo", c.net.z_net_lo, Unit::kLength);
    t.add("z_net_hi", c.net.z_net_hi, Unit::kLength);
    t.add("net_z_margin", c.net.delta_z_margin, Unit::kLength);
    t.add("terminal_x_window", c.net.delta_x_terminal, Unit::kLength);
    t.add("safe_altitude_margin", c.net.safe_altitude_dz, Unit::kLength);
    // objective weights
    t.add("P_delta_t", c.gen_weights.P_delta_t);
    t.add("P_delta_u_e", c.gen_weights.P_delta_u[0]);
    t.add("P_delta_u_t", c.gen_weights.P_delta_u[1]);
    t.add("Qx_x", c.nmpc_weights.Qx[0]);
    t.add("Qx_z", c.nmpc_weights.Qx[1]);
    t.add("Qx_u", c.nmpc_weights.Qx[2]);
    t.add("Qx_w", c.nmpc_weights.Qx[3]);
    t.add("Qx_theta", c.nmpc_weights.Qx[4]);
    t.add("Qx_omega", c.nmpc_weights.Qx[5]);
    t.add("Qxf_scale", c.nmpc_weights.Qxf_scale);
    t.add("Qu_e", c.nmpc_weights.Qu[0]);
    t.add("Qu_t", c.nmpc_weights.Qu[1]);
    t.add("slack_weight", c.nmpc_weights.slack_weight);
    // gusts
    t.add("dryden_sigma_u", c.dryden.sigma_u, Unit::kSpeed);
    t.add("dryden_sigma_w", c.dryden.sigma_w, Unit::kSpeed);
    t.add("dryden_L_u", c.dryden.L_u, Unit::kLength);
    t.add("dryden_L_w", c.dryden.L_w, Unit::kLength);
    t.add("dryden_va", c.dryden.V_aD, Unit::kSpeed);
    t.add("dryden_noise_std", c.dryden.noise_std);
    t.add("gust_bound", c.dryden.gust_bound, Unit::kSpeed);
    // horizon and scenario
    t.add("t0", c.t0, Unit::kTime);
    t.add("t_f", c.t_f, Unit::kTime);
    t.add("T_p", c.T_p, Unit::kTime);
    t.add("dt", c.dt, Unit::kTime);
    t.add("va_ref", c.V_a_ref, Unit::kSpeed);
    t.add("steady_u_I", c.steady_u_I, Unit::kSpeed);
    t.add("steady_w_I", c.steady_w_I, Unit::kSpeed);
    t.add("x0", c.x0, Unit::kLength);
    t.add("z0", c.z0, Unit::kLength);
    // solver / experiments
    t.add("gen_constraint_tolerance", c.gen_constraint_tolerance);
    t.add("gen_optimality_tolerance", c.gen_optimality_tolerance);
    t.add("gen_max_iterations", c.gen_max_iterations);
    t.add("gen_mu_init", c.gen_mu_init);
    t.add("mc_runs", c.mc_runs);
    t.add("base_seed", c.base_seed);
    return t;
}

bool unit_matches(Unit family, const std::string& suffix) {
    switch (family) {
        case Unit::kNone: return false;
        case Unit::kAngle: return suffix == "deg" || suffix == "rad";
        case Unit::kLength: return suffix == "m";
        case Unit::kTime: return suffix == "s";
        case Unit::kSpeed: return suffix == "m/s";
        case Unit::kMass: return suffix == "kg";
        case Unit::kArea: return suffix == "m2";
    }
    return false;
}

std::string trim_ws(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void apply_assignment(Config& config, const std::string& key,
                      const std::string& rhs, const std::string& where) {
    KeyTable table = key_table(config);
    const KeyRef* ref = table.find(key);
    if (!ref) throw ConfigError(where + ": unknown key '" + key + "'");

    std::istringstream in(rhs);
    std::string value_tok, unit_tok, extra;
    in >> value_tok >> unit_tok >> extra;
    if (value_tok.empty())
        throw ConfigError(where + ": key '" + key + "' has no value");
    if (!extra.empty())
        throw ConfigError(where + ": trailing junk after value of '" + key + "'");

    char* end = nullptr;
    const double parsed = std::strtod(value_tok.c_str(), &end);
    if (end == value_tok.c_str() || *end != '\0')
        throw ConfigError(where + ": malformed number '" + value_tok + "' for key '" +
                          key + "'");

    if (!unit_tok.empty() && !unit_matches(ref->unit, unit_tok))
        throw ConfigError(where + ": unit '" + unit_tok + "' does not apply to key '" +
                          key + "'");

    switch (ref->kind) {
        case KeyRef::kDouble:
            *ref->d = (ref->unit == Unit::kAngle && unit_tok == "deg")
                          ? parsed * kDeg
                          : parsed;
            break;
        case KeyRef::kInt:
            if (parsed != std::floor(parsed))
                throw ConfigError(where + ": key '" + key + "' requires an integer");
            *ref->i = static_cast<int>(parsed);
            break;
        case KeyRef::kU64:
            if (parsed < 0.0 || parsed != std::floor(parsed))
                throw ConfigError(where + ": key '" + key +
                                  "' requires a nonnegative integer");
            *ref->u = static_cast<uint64_t>(parsed);
            break;
    }
}

void validate(const Config& c) {
    const auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
    if (!(c.params.m > 0.0)) fail("mass must be positive");
    if (!(c.dt > 0.0)) fail("dt must be positive");
    if (!(c.t_f > c.t0)) fail("t_f must exceed t0");
    if (!(c.T_p > 0.0)) fail("T_p must be positive");
    const double arcs = (c.t_f - c.t0 + c.T_p) / c.dt;
    if (std::abs(arcs - std::lround(arcs)) > 1e-9)
        fail("horizon (t_f - t0 + T_p) must be an integer number of arcs");
    if (!(c.bounds.throttle_lo >= 0.0 && c.bounds.throttle_hi <= 1.0 &&
          c.bounds.throttle_lo < c.bounds.throttle_hi))
        fail("throttle bounds must satisfy 0 <= lo < hi <= 1 (PWM)");
    if (!(c.net.z_net_lo < c.net.z_net_hi)) fail("z_net_lo must lie below z_net_hi");
    if (!(c.bounds.gen_alpha_lo < c.bounds.gen_alpha_hi))
        fail("gen_alpha bounds inverted");
    if (!(c.bounds.term_z_lo < c.bounds.term_z_hi)) fail("term_z bounds inverted");
    if (!(c.bounds.elevator_limit > 0.0)) fail("elevator_limit must be positive");
    if (!(c.gen_constraint_tolerance > 0.0 && c.gen_optimality_tolerance > 0.0))
        fail("solver tolerances must be positive");
    if (c.gen_max_iterations <= 0) fail("gen_max_iterations must be positive");
    if (!(c.gen_mu_init > 0.0)) fail("gen_mu_init must be positive");
    if (c.mc_runs <= 0) fail("mc_runs must be positive");
    if (!(c.dryden.gust_bound >= 0.0)) fail("gust_bound must be nonnegative");
}

void fnv_mix(uint64_t& h, double v) {
    unsigned char b[sizeof v];
    std::memcpy(b, &v, sizeof v);
    for (unsigned char x : b) {
        h ^= x;
        h *= 1099511628211ULL;
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& tok, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw ConfigError(where + ": malformed number '" + tok + "'");
    return v;
}

}  // namespace

GenerationProblem Config::generation_problem(const TrimSolution& trim,
                                             bool stretch) const {
    GenerationProblem gp;
    gp.t0 = t0;
    gp.t_f = t_f;
    if (stretch && steady_u_I < 0.0) gp.t_f += -10.0 * steady_u_I;
    gp.T_p = T_p;
    gp.dt = dt;
    gp.N = static_cast<int>(std::lround((gp.t_f - gp.t0 + gp.T_p) / gp.dt));
    gp.V_a_ref = V_a_ref;
    gp.trim = trim;
    gp.steady_u_I = steady_u_I;
    gp.steady_w_I = steady_w_I;
    gp.weights = gen_weights;
    gp.bounds = bounds;
    gp.net = net;
    gp.corridor = corridor;
    gp.params = params;
    return gp;
}

TrackingConfig Config::tracking_config(uint64_t gust_seed) const {
    TrackingConfig tc;
    tc.T_p = T_p;
    tc.sample_dt = dt;
    tc.weights = nmpc_weights;
    tc.gust_seed = gust_seed;
    return tc;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    Config config;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim_ws(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        const std::string key = trim_ws(line.substr(0, eq));
        const std::string rhs = trim_ws(line.substr(eq + 1));
        apply_assignment(config, key, rhs,
                         path + ":" + std::to_string(lineno));
    }
    validate(config);
    return config;
}

void apply_override(Config& config, const std::string& assignment) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "': expected key=value");
    const std::string key = trim_ws(assignment.substr(0, eq));
    std::string rhs = trim_ws(assignment.substr(eq + 1));
    // allow key=value:unit so overrides stay a single shell word
    const size_t colon = rhs.find(':');
    if (colon != std::string::npos) rhs[colon] = ' ';
    apply_assignment(config, key, rhs, "override");
    validate(config);
}

uint64_t config_hash(const Config& config) {
    Config copy = config;
    const KeyTable table = key_table(copy);
    uint64_t h = 1469598103934665603ULL;
    for (const auto& [name, ref] : table.entries) {
        for (char ch : name) {
            h ^= static_cast<unsigned char>(ch);
            h *= 1099511628211ULL;
        }
        switch (ref.kind) {
            case KeyRef::kDouble: fnv_mix(h, *ref.d); break;
            case KeyRef::kInt: fnv_mix(h, static_cast<double>(*ref.i)); break;
            case KeyRef::kU64: fnv_mix(h, static_cast<double>(*ref.u)); break;
        }
    }
    return h;
}

void write_reference_csv(const std::string& path, const ReferenceTrajectory& ref) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "# t0=" << fmt(ref.t0) << " dt=" << fmt(ref.dt) << " t_f=" << fmt(ref.t_f)
        << " T_p=" << fmt(ref.T_p) << " steady_u_I=" << fmt(ref.steady_u_I)
        << " steady_w_I=" << fmt(ref.steady_w_I) << "\n";
    out << "t,x,z,u,w,theta,omega_y,delta_e,delta_t,V_a,alpha,phase\n";
    const int nn = ref.num_nodes();
    for (int k = 0; k < nn; ++k) {
        const State& s = ref.states[k];
        const ControlInput& in =
            ref.inputs[std::min<size_t>(k, ref.inputs.size() - 1)];
        out << fmt(ref.t0 + k * ref.dt) << ',' << fmt(s.x) << ',' << fmt(s.z) << ','
            << fmt(s.u) << ',' << fmt(s.w) << ',' << fmt(s.theta) << ','
            << fmt(s.omega_y) << ',' << fmt(in.delta_e) << ',' << fmt(in.delta_t)
            << ',' << fmt(ref.V_a[k]) << ',' << fmt(ref.alpha[k]) << ','
            << ref.phase[k] << "\n";
    }
}

ReferenceTrajectory read_reference_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open reference '" + path + "'");
    ReferenceTrajectory ref;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw ConfigError(path + ": missing metadata line");
    {
        std::istringstream meta(line.substr(2));
        std::string tok;
        while (meta >> tok) {
            const size_t eq = tok.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ": malformed metadata token '" + tok + "'");
            const std::string key = tok.substr(0, eq);
            const double v = parse_double(tok.substr(eq + 1), path);
            if (key == "t0") ref.t0 = v;
            else if (key == "dt") ref.dt = v;
            else if (key == "t_f") ref.t_f = v;
            else if (key == "T_p") ref.T_p = v;
            else if (key == "steady_u_I") ref.steady_u_I = v;
            else if (key == "steady_w_I") ref.steady_w_I = v;
            else throw ConfigError(path + ": unknown metadata key '" + key + "'");
        }
    }
    if (!std::getline(in, line) || line.rfind("t,x,z", 0) != 0)
        throw ConfigError(path + ": missing column header");
    while (std::getline(in, line)) {
        if (trim_ws(line).empty()) continue;
        std::istringstream row(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(row, tok, ',')) cols.push_back(tok);
        if (cols.size() != 12)
            throw ConfigError(path + ": expected 12 columns, got " +
                              std::to_string(cols.size()));
        State s;
        s.x = parse_double(cols[1], path);
        s.z = parse_double(cols[2], path);
        s.u = parse_double(cols[3], path);
        s.w = parse_double(cols[4], path);
        s.theta = parse_double(cols[5], path);
        s.omega_y = parse_double(cols[6], path);
        ref.states.push_back(s);
        ref.inputs.push_back(
            {parse_double(cols[7], path), parse_double(cols[8], path)});
        ref.V_a.push_back(parse_double(cols[9], path));
        ref.alpha.push_back(parse_double(cols[10], path));
        ref.phase.push_back(cols[11]);
    }
    if (ref.states.size() < 2) throw ConfigError(path + ": too few rows");
    ref.inputs.pop_back();  // the terminal row repeats the last arc input
    return ref;
}

void write_run_csv(const std::string& path, const RunRecord& record) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "# seed=" << record.seed << " config_hash=" << record.config_hash
        << "\n";
    // No wall-clock column: run CSVs must be byte-identical across
    // repeated runs with the same seed and configuration.
    out << "t,x,z,u,w,theta,omega_y,delta_e,delta_t,gust_u,gust_w,"
           "solve_status,objective\n";
    for (const auto& s : record.samples) {
        out << fmt(s.t) << ',' << fmt(s.state.x) << ',' << fmt(s.state.z) << ','
            << fmt(s.state.u) << ',' << fmt(s.state.w) << ',' << fmt(s.state.theta)
            << ',' << fmt(s.state.omega_y) << ',' << fmt(s.applied.delta_e) << ','
            << fmt(s.applied.delta_t) << ',' << fmt(s.gust.u_g) << ','
            << fmt(s.gust.w_g) << ','
            << (s.has_solve ? nlp::to_string(s.solve_status) : std::string("none"))
            << ',' << fmt(s.objective) << "\n";
    }
}

std::string run_summary_json(const RunRecord& record) {
    const State& xf = record.final_state();
    json j;
    j["seed"] = record.seed;
    j["config_hash"] = record.config_hash;
    j["aborted"] = record.aborted;
    if (record.aborted) j["abort_reason"] = record.abort_reason;
    j["success"] = record.verdict.success;
    j["airspeed_ok"] = record.verdict.airspeed_ok;
    j["net_window_ok"] = record.verdict.net_window_ok;
    j["horizontal_ok"] = record.verdict.horizontal_ok;
    j["terminal"] = {{"x", record.verdict.x_f},
                     {"z", record.verdict.z_f},
                     {"V_a", record.verdict.V_a_f},
                     {"theta", xf.theta}};
    j["samples"] = record.samples.size();
    return j.dump(2);
}

}  // namespace perch
