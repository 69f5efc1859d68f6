// Steady wind plus Dryden gusts. The gust channels are first- and
// second-order shaping filters driven by seeded Gaussian white noise,
// discretized exactly (zero-order hold) at the controller sampling time,
// with outputs clipped to a configurable bound.

#ifndef PERCH_WIND_HPP
#define PERCH_WIND_HPP

#include <cstdint>
#include <vector>

#include "perch/airframe.hpp"

namespace perch {

struct DrydenParams {
    double sigma_u = 1.06;   // turbulence intensity, m/s (low altitude, light)
    double sigma_w = 0.7;
    double L_u = 200.0;      // spatial wavelength, m
    double L_w = 50.0;
    double V_aD = 25.0;      // assumed constant airspeed, m/s
    double noise_std = 0.7071067811865476;  // white noise std (variance 0.5)
    double gust_bound = 0.2; // m/s, clip
    double sample_dt = 0.1;  // s
    uint64_t seed = 0;
};

struct GustSample {
    double u_g = 0.0;  // body frame, m/s
    double w_g = 0.0;
};

/// Steady inertial wind plus an immutable per-sample body-frame gust series.
struct WindField {
    double steady_u_I = 0.0;
    double steady_w_I = 0.0;
    double sample_dt = 0.1;
    std::vector<GustSample> gust_series;

    /// Gust held constant within each sample interval; zero past the series.
    GustSample gust_at(double t) const {
        if (gust_series.empty() || t < 0.0) return {};
        const auto k = static_cast<size_t>(t / sample_dt + 1e-9);
        return k < gust_series.size() ? gust_series[k] : gust_series.back();
    }
};

/// Deterministic seeded standard-normal stream (xoshiro256++ with explicit
/// Box-Muller, so the byte stream is implementation-independent).
class GaussianStream {
public:
    explicit GaussianStream(uint64_t seed);
    double next();

private:
    uint64_t s_[4];
    uint64_t next_u64();
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Discrete gust series over [0, duration] (inclusive endpoints grid).
std::vector<GustSample> dryden_gust_series(const DrydenParams& params, double duration);

/// Body-frame wind: steady inertial wind rotated by pitch plus gust.
WindSample wind_in_body(double steady_u_I, double steady_w_I, double theta,
                        const GustSample& gust);

/// Stationary standard deviation of the discretized first-order channel
/// output (analysis oracle for tests).
double dryden_u_stationary_std(const DrydenParams& params);

}  // namespace perch

#endif  // PERCH_WIND_HPP
