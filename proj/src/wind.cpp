#include "perch/wind.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perch {

namespace {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

// xoshiro256++ seeded via splitmix64; Box-Muller on top. The stream is
// fully specified here, independent of the standard library.
GaussianStream::GaussianStream(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

uint64_t GaussianStream::next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double GaussianStream::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // uniforms in (0,1]
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
}

std::vector<GustSample> dryden_gust_series(const DrydenParams& p, double duration) {
    if (duration <= 0.0) throw std::invalid_argument("dryden: duration must be > 0");
    if (p.L_u <= 0.0 || p.L_w <= 0.0 || p.V_aD <= 0.0)
        throw std::invalid_argument("dryden: L_u, L_w, V_aD must be > 0");

    const double dt = p.sample_dt;
    const auto n = static_cast<size_t>(std::ceil(duration / dt)) + 1;

    // H_u(s) = K_u / (s + a): exact ZOH discretization.
    const double a = p.V_aD / p.L_u;
    const double K_u = p.sigma_u * std::sqrt(2.0 * p.V_aD / (M_PI * p.L_u));
    const double Au = std::exp(-a * dt);
    const double Bu = K_u * (1.0 - Au) / a;

    // H_w(s) = K_w / (s + b)^2: two-state chain, exact ZOH.
    const double b = p.V_aD / p.L_w;
    const double K_w = p.sigma_w * std::sqrt(3.0 * p.V_aD / (M_PI * p.L_w));
    const double eb = std::exp(-b * dt);
    const double A11 = eb, A12 = dt * eb, A22 = eb;
    const double B1 = K_w * (1.0 - (1.0 + b * dt) * eb) / (b * b);
    const double B2 = K_w * (1.0 - eb) / b;

    GaussianStream rng(p.seed);
    std::vector<GustSample> out(n);
    double xu = 0.0, x1 = 0.0, x2 = 0.0;
    for (size_t k = 0; k < n; ++k) {
        const double clip = p.gust_bound;
        out[k].u_g = std::clamp(xu, -clip, clip);
        out[k].w_g = std::clamp(x1, -clip, clip);
        const double nu = p.noise_std * rng.next();
        const double nw = p.noise_std * rng.next();
        xu = Au * xu + Bu * nu;
        const double x1n = A11 * x1 + A12 * x2 + B1 * nw;
        x2 = A22 * x2 + B2 * nw;
        x1 = x1n;
    }
    return out;
}

WindSample wind_in_body(double steady_u_I, double steady_w_I, double theta,
                        const GustSample& gust) {
    return wind_in_body_t(steady_u_I, steady_w_I, theta, gust.u_g, gust.w_g);
}

double dryden_u_stationary_std(const DrydenParams& p) {
    const double a = p.V_aD / p.L_u;
    const double K_u = p.sigma_u * std::sqrt(2.0 * p.V_aD / (M_PI * p.L_u));
    const double Au = std::exp(-a * p.sample_dt);
    const double Bu = K_u * (1.0 - Au) / a;
    return std::sqrt(Bu * Bu * p.noise_std * p.noise_std / (1.0 - Au * Au));
}

}  // namespace perch
