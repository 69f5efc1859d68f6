// Forward-mode automatic differentiation carrying value, gradient, and a
// dense Hessian over a small fixed set of independent variables. Sized for
// multiple-shooting blocks (state + input per arc = 8 independents).

#ifndef PERCH_AD_HPP
#define PERCH_AD_HPP

#include <array>
#include <cmath>
#include <cstddef>

namespace perch::ad {

/// Second-order dual number over N independents: v + g·dx + 0.5 dxᵀ H dx.
template <int N>
struct Dual2 {
    double v = 0.0;
    std::array<double, N> g{};
    std::array<double, N * N> h{};  // symmetric, row-major

    Dual2() = default;
    Dual2(double value) : v(value) {}  // NOLINT: implicit constant lift

    static Dual2 variable(double value, int index) {
        Dual2 d(value);
        d.g[index] = 1.0;
        return d;
    }

    double& H(int i, int j) { return h[i * N + j]; }
    double H(int i, int j) const { return h[i * N + j]; }
};

namespace detail {

// out = f(u) with df, d2f the first and second derivatives at u.v
template <int N>
inline Dual2<N> chain(const Dual2<N>& u, double f, double df, double d2f) {
    Dual2<N> out(f);
    for (int i = 0; i < N; ++i) out.g[i] = df * u.g[i];
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            out.h[i * N + j] = df * u.h[i * N + j] + d2f * u.g[i] * u.g[j];
    return out;
}

}  // namespace detail

template <int N>
inline Dual2<N> operator+(const Dual2<N>& a, const Dual2<N>& b) {
    Dual2<N> out(a.v + b.v);
    for (int i = 0; i < N; ++i) out.g[i] = a.g[i] + b.g[i];
    for (int i = 0; i < N * N; ++i) out.h[i] = a.h[i] + b.h[i];
    return out;
}

template <int N>
inline Dual2<N> operator-(const Dual2<N>& a, const Dual2<N>& b) {
    Dual2<N> out(a.v - b.v);
    for (int i = 0; i < N; ++i) out.g[i] = a.g[i] - b.g[i];
    for (int i = 0; i < N * N; ++i) out.h[i] = a.h[i] - b.h[i];
    return out;
}

template <int N>
inline Dual2<N> operator-(const Dual2<N>& a) {
    Dual2<N> out(-a.v);
    for (int i = 0; i < N; ++i) out.g[i] = -a.g[i];
    for (int i = 0; i < N * N; ++i) out.h[i] = -a.h[i];
    return out;
}

template <int N>
inline Dual2<N> operator*(const Dual2<N>& a, const Dual2<N>& b) {
    Dual2<N> out(a.v * b.v);
    for (int i = 0; i < N; ++i) out.g[i] = a.g[i] * b.v + a.v * b.g[i];
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            out.h[i * N + j] = a.h[i * N + j] * b.v + a.v * b.h[i * N + j] +
                               a.g[i] * b.g[j] + a.g[j] * b.g[i];
    return out;
}

template <int N>
inline Dual2<N> operator*(double a, const Dual2<N>& b) {
    Dual2<N> out(a * b.v);
    for (int i = 0; i < N; ++i) out.g[i] = a * b.g[i];
    for (int i = 0; i < N * N; ++i) out.h[i] = a * b.h[i];
    return out;
}

template <int N>
inline Dual2<N> operator*(const Dual2<N>& a, double b) { return b * a; }

template <int N>
inline Dual2<N> operator+(const Dual2<N>& a, double b) { return a + Dual2<N>(b); }
template <int N>
inline Dual2<N> operator+(double a, const Dual2<N>& b) { return Dual2<N>(a) + b; }
template <int N>
inline Dual2<N> operator-(const Dual2<N>& a, double b) { return a - Dual2<N>(b); }
template <int N>
inline Dual2<N> operator-(double a, const Dual2<N>& b) { return Dual2<N>(a) - b; }

template <int N>
inline Dual2<N> inverse(const Dual2<N>& a) {
    const double iv = 1.0 / a.v;
    return detail::chain(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}

template <int N>
inline Dual2<N> operator/(const Dual2<N>& a, const Dual2<N>& b) {
    return a * inverse(b);
}
template <int N>
inline Dual2<N> operator/(const Dual2<N>& a, double b) { return a * (1.0 / b); }
template <int N>
inline Dual2<N> operator/(double a, const Dual2<N>& b) { return a * inverse(b); }

template <int N>
inline Dual2<N> sin(const Dual2<N>& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return detail::chain(a, s, c, -s);
}

template <int N>
inline Dual2<N> cos(const Dual2<N>& a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return detail::chain(a, c, -s, -c);
}

template <int N>
inline Dual2<N> exp(const Dual2<N>& a) {
    const double e = std::exp(a.v);
    return detail::chain(a, e, e, e);
}

template <int N>
inline Dual2<N> sqrt(const Dual2<N>& a) {
    const double r = std::sqrt(a.v);
    return detail::chain(a, r, 0.5 / r, -0.25 / (r * a.v));
}

template <int N>
inline Dual2<N> sqr(const Dual2<N>& a) { return a * a; }

/// Quadrant-aware arctangent. Differentiable away from the origin; the
/// branch cut follows std::atan2 (derivatives of atan2 are branch-free).
template <int N>
inline Dual2<N> atan2(const Dual2<N>& y, const Dual2<N>& x) {
    const double r2 = x.v * x.v + y.v * y.v;
    Dual2<N> out(std::atan2(y.v, x.v));
    if (r2 == 0.0) return out;  // value defined, derivatives left at zero
    // d/dy = x/r2, d/dx = -y/r2
    const Dual2<N> r2d = x * x + y * y;
    const Dual2<N> gy = x / r2d;
    const Dual2<N> gx = -1.0 * (y / r2d);
    for (int i = 0; i < N; ++i) out.g[i] = gy.v * y.g[i] + gx.v * x.g[i];
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            out.h[i * N + j] = gy.v * y.h[i * N + j] + gx.v * x.h[i * N + j] +
                               gy.g[j] * y.g[i] + gx.g[j] * x.g[i];
    return out;
}

template <int N>
inline bool operator<(const Dual2<N>& a, const Dual2<N>& b) { return a.v < b.v; }
template <int N>
inline bool operator<(const Dual2<N>& a, double b) { return a.v < b; }
template <int N>
inline bool operator<(double a, const Dual2<N>& b) { return a < b.v; }
template <int N>
inline bool operator>(const Dual2<N>& a, double b) { return a.v > b; }

template <int N>
inline double value(const Dual2<N>& a) { return a.v; }
inline double value(double a) { return a; }

// Generic-scalar math shims so templated dynamics code can call perch::ad::fn
// on plain doubles as well.
inline double sin(double a) { return std::sin(a); }
inline double cos(double a) { return std::cos(a); }
inline double exp(double a) { return std::exp(a); }
inline double sqrt(double a) { return std::sqrt(a); }
inline double sqr(double a) { return a * a; }
inline double atan2(double y, double x) { return std::atan2(y, x); }

}  // namespace perch::ad

#endif  // PERCH_AD_HPP
