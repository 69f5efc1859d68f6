#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>

#include "perch/nlp.hpp"

using namespace perch::nlp;

namespace {

constexpr double kUnbounded = 1e20;

/// min x^2 + y^2  s.t.  x + y = 1  ->  (0.5, 0.5)
class EqualityQp : public Nlp {
public:
    int num_vars() const override { return 2; }
    int num_cons() const override { return 1; }
    void var_bounds(VectorXd& xl, VectorXd& xu) const override {
        xl = VectorXd::Constant(2, -kUnbounded);
        xu = VectorXd::Constant(2, kUnbounded);
    }
    void con_bounds(VectorXd& cl, VectorXd& cu) const override {
        cl = VectorXd::Constant(1, 1.0);
        cu = VectorXd::Constant(1, 1.0);
    }
    double objective(const VectorXd& x) const override { return x.squaredNorm(); }
    void gradient(const VectorXd& x, VectorXd& g) const override { g = 2.0 * x; }
    void constraints(const VectorXd& x, VectorXd& c) const override {
        c = VectorXd::Constant(1, x.sum());
    }
    void jacobian(const VectorXd&, Triplets& j) const override {
        j = {{0, 0, 1.0}, {0, 1, 1.0}};
    }
    void lagrangian_hessian(const VectorXd&, double ow, const VectorXd&,
                            Triplets& h) const override {
        h = {{0, 0, 2.0 * ow}, {1, 1, 2.0 * ow}};
    }
};

/// Rosenbrock with box bounds; unique minimum at (1, 1).
class BoxRosenbrock : public Nlp {
public:
    int num_vars() const override { return 2; }
    int num_cons() const override { return 0; }
    void var_bounds(VectorXd& xl, VectorXd& xu) const override {
        xl = VectorXd::Constant(2, -2.0);
        xu = VectorXd::Constant(2, 2.0);
    }
    void con_bounds(VectorXd& cl, VectorXd& cu) const override {
        cl.resize(0);
        cu.resize(0);
    }
    double objective(const VectorXd& v) const override {
        const double x = v[0], y = v[1];
        return (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x);
    }
    void gradient(const VectorXd& v, VectorXd& g) const override {
        const double x = v[0], y = v[1];
        g.resize(2);
        g[0] = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
        g[1] = 200.0 * (y - x * x);
    }
    void constraints(const VectorXd&, VectorXd& c) const override { c.resize(0); }
    void jacobian(const VectorXd&, Triplets& j) const override { j.clear(); }
    void lagrangian_hessian(const VectorXd& v, double ow, const VectorXd&,
                            Triplets& h) const override {
        const double x = v[0], y = v[1];
        h = {{0, 0, ow * (2.0 - 400.0 * (y - x * x) + 800.0 * x * x)},
             {1, 0, ow * (-400.0 * x)},
             {1, 1, ow * 200.0}};
    }
};

/// min (x + 1)^2  s.t.  x >= 0: active bound at x = 0.
class ActiveBound : public Nlp {
public:
    int num_vars() const override { return 1; }
    int num_cons() const override { return 0; }
    void var_bounds(VectorXd& xl, VectorXd& xu) const override {
        xl = VectorXd::Constant(1, 0.0);
        xu = VectorXd::Constant(1, kUnbounded);
    }
    void con_bounds(VectorXd& cl, VectorXd& cu) const override {
        cl.resize(0);
        cu.resize(0);
    }
    double objective(const VectorXd& x) const override {
        return (x[0] + 1.0) * (x[0] + 1.0);
    }
    void gradient(const VectorXd& x, VectorXd& g) const override {
        g = VectorXd::Constant(1, 2.0 * (x[0] + 1.0));
    }
    void constraints(const VectorXd&, VectorXd& c) const override { c.resize(0); }
    void jacobian(const VectorXd&, Triplets& j) const override { j.clear(); }
    void lagrangian_hessian(const VectorXd&, double ow, const VectorXd&,
                            Triplets& h) const override {
        h = {{0, 0, 2.0 * ow}};
    }
};

/// Minimum-energy discrete double integrator steered to a target state.
/// The equality-constrained QP has a unique solution recoverable from the
/// dense linear KKT system, which serves as the oracle.
class DoubleIntegrator : public Nlp {
public:
    static constexpr int kSteps = 10;     // controls u_0..u_{N-1}
    static constexpr double kDt = 0.2;
    // variables: [p_1..p_N, v_1..v_N, u_0..u_{N-1}] with p_0 = v_0 = 0
    int num_vars() const override { return 3 * kSteps; }
    int num_cons() const override { return 2 * kSteps + 2; }
    void var_bounds(VectorXd& xl, VectorXd& xu) const override {
        xl = VectorXd::Constant(3 * kSteps, -kUnbounded);
        xu = VectorXd::Constant(3 * kSteps, kUnbounded);
    }
    void con_bounds(VectorXd& cl, VectorXd& cu) const override {
        cl = VectorXd::Zero(2 * kSteps + 2);
        cu = cl;
        cl[2 * kSteps] = cu[2 * kSteps] = 1.0;      // p_N = 1
        cl[2 * kSteps + 1] = cu[2 * kSteps + 1] = 0.0;  // v_N = 0
    }
    double objective(const VectorXd& x) const override {
        return x.tail(kSteps).squaredNorm();
    }
    void gradient(const VectorXd& x, VectorXd& g) const override {
        g = VectorXd::Zero(3 * kSteps);
        g.tail(kSteps) = 2.0 * x.tail(kSteps);
    }
    void constraints(const VectorXd& x, VectorXd& c) const override {
        c.resize(2 * kSteps + 2);
        for (int k = 0; k < kSteps; ++k) {
            const double pk = k == 0 ? 0.0 : x[k - 1];
            const double vk = k == 0 ? 0.0 : x[kSteps + k - 1];
            const double uk = x[2 * kSteps + k];
            c[k] = x[k] - pk - kDt * vk;                    // p_{k+1}
            c[kSteps + k] = x[kSteps + k] - vk - kDt * uk;  // v_{k+1}
        }
        c[2 * kSteps] = x[kSteps - 1];
        c[2 * kSteps + 1] = x[2 * kSteps - 1];
    }
    void jacobian(const VectorXd&, Triplets& j) const override {
        j.clear();
        for (int k = 0; k < kSteps; ++k) {
            j.emplace_back(k, k, 1.0);
            if (k > 0) {
                j.emplace_back(k, k - 1, -1.0);
                j.emplace_back(k, kSteps + k - 1, -kDt);
                j.emplace_back(kSteps + k, kSteps + k - 1, -1.0);
            }
            j.emplace_back(kSteps + k, kSteps + k, 1.0);
            j.emplace_back(kSteps + k, 2 * kSteps + k, -kDt);
        }
        j.emplace_back(2 * kSteps, kSteps - 1, 1.0);
        j.emplace_back(2 * kSteps + 1, 2 * kSteps - 1, 1.0);
    }
    void lagrangian_hessian(const VectorXd&, double ow, const VectorXd&,
                            Triplets& h) const override {
        h.clear();
        for (int k = 0; k < kSteps; ++k)
            h.emplace_back(2 * kSteps + k, 2 * kSteps + k, 2.0 * ow);
    }

    /// Dense KKT oracle for the equality-constrained QP.
    VectorXd oracle() const {
        const int n = num_vars(), m = num_cons();
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
        for (int k = 0; k < kSteps; ++k)
            kkt(2 * kSteps + k, 2 * kSteps + k) = 2.0;
        Triplets j;
        jacobian(VectorXd::Zero(n), j);
        for (const auto& t : j) {
            kkt(n + t.row(), t.col()) = t.value();
            kkt(t.col(), n + t.row()) = t.value();
        }
        VectorXd rhs = VectorXd::Zero(n + m);
        VectorXd cl(m), cu(m);
        con_bounds(cl, cu);
        rhs.tail(m) = cl;
        const VectorXd sol = kkt.fullPivLu().solve(rhs);
        return sol.head(n);
    }
};

/// x in [-kInf, 0] with the constraint 1 <= x <= 2: infeasible by design.
class Contradiction : public Nlp {
public:
    int num_vars() const override { return 1; }
    int num_cons() const override { return 1; }
    void var_bounds(VectorXd& xl, VectorXd& xu) const override {
        xl = VectorXd::Constant(1, -kUnbounded);
        xu = VectorXd::Constant(1, 0.0);
    }
    void con_bounds(VectorXd& cl, VectorXd& cu) const override {
        cl = VectorXd::Constant(1, 1.0);
        cu = VectorXd::Constant(1, 2.0);
    }
    double objective(const VectorXd& x) const override { return x[0] * x[0]; }
    void gradient(const VectorXd& x, VectorXd& g) const override { g = 2.0 * x; }
    void constraints(const VectorXd& x, VectorXd& c) const override { c = x; }
    void jacobian(const VectorXd&, Triplets& j) const override {
        j = {{0, 0, 1.0}};
    }
    void lagrangian_hessian(const VectorXd&, double ow, const VectorXd&,
                            Triplets& h) const override {
        h = {{0, 0, 2.0 * ow}};
    }
};

/// Nonconvex inequality problem with a known solution:
/// min (x-2)^2 + (y-1)^2  s.t.  x^2 + y^2 <= 1: optimum on the circle at
/// (2, 1)/sqrt(5).
class CircleProjection : public Nlp {
public:
    int num_vars() const override { return 2; }
    int num_cons() const override { return 1; }
    void var_bounds(VectorXd& xl, VectorXd& xu) const override {
        xl = VectorXd::Constant(2, -kUnbounded);
        xu = VectorXd::Constant(2, kUnbounded);
    }
    void con_bounds(VectorXd& cl, VectorXd& cu) const override {
        cl = VectorXd::Constant(1, -kUnbounded);
        cu = VectorXd::Constant(1, 1.0);
    }
    double objective(const VectorXd& v) const override {
        return (v[0] - 2.0) * (v[0] - 2.0) + (v[1] - 1.0) * (v[1] - 1.0);
    }
    void gradient(const VectorXd& v, VectorXd& g) const override {
        g.resize(2);
        g[0] = 2.0 * (v[0] - 2.0);
        g[1] = 2.0 * (v[1] - 1.0);
    }
    void constraints(const VectorXd& v, VectorXd& c) const override {
        c = VectorXd::Constant(1, v.squaredNorm());
    }
    void jacobian(const VectorXd& v, Triplets& j) const override {
        j = {{0, 0, 2.0 * v[0]}, {0, 1, 2.0 * v[1]}};
    }
    void lagrangian_hessian(const VectorXd&, double ow, const VectorXd& lam,
                            Triplets& h) const override {
        h = {{0, 0, 2.0 * ow + 2.0 * lam[0]}, {1, 1, 2.0 * ow + 2.0 * lam[0]}};
    }
};

}  // namespace

TEST_CASE("equality QP solves to the analytic point") {
    EqualityQp qp;
    SolveOptions opt;
    const SolveResult r = solve(qp, VectorXd::Zero(2), opt);
    CHECK(r.report.status == SolveStatus::kOptimal);
    CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.report.max_constraint_violation <= opt.constraint_tolerance);
}

TEST_CASE("box-bounded Rosenbrock converges to (1, 1)") {
    BoxRosenbrock p;
    SolveOptions opt;
    VectorXd x0(2);
    x0 << -1.2, 1.0;
    const SolveResult r = solve(p, x0, opt);
    CHECK(r.report.status == SolveStatus::kOptimal);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("active bound is identified") {
    ActiveBound p;
    SolveOptions opt;
    const SolveResult r = solve(p, VectorXd::Constant(1, 3.0), opt);
    CHECK(r.report.status == SolveStatus::kOptimal);
    CHECK(r.x[0] == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("double-integrator steering matches the dense KKT oracle") {
    DoubleIntegrator p;
    SolveOptions opt;
    const SolveResult r = solve(p, VectorXd::Zero(p.num_vars()), opt);
    CHECK(r.report.status == SolveStatus::kOptimal);
    const VectorXd ref = p.oracle();
    CHECK((r.x - ref).lpNorm<Eigen::Infinity>() < 1e-3);
}

TEST_CASE("projection onto a circle satisfies the known geometry") {
    CircleProjection p;
    SolveOptions opt;
    VectorXd x0(2);
    x0 << 0.0, 0.0;
    const SolveResult r = solve(p, x0, opt);
    CHECK(r.report.status == SolveStatus::kOptimal);
    const double s = std::sqrt(5.0);
    CHECK(r.x[0] == doctest::Approx(2.0 / s).epsilon(1e-5));
    CHECK(r.x[1] == doctest::Approx(1.0 / s).epsilon(1e-5));
}

TEST_CASE("contradictory constraints are never reported optimal") {
    Contradiction p;
    SolveOptions opt;
    opt.max_iterations = 200;
    const SolveResult r = solve(p, VectorXd::Constant(1, -0.5), opt);
    CHECK(r.report.status != SolveStatus::kOptimal);
    CHECK(r.report.status != SolveStatus::kAcceptable);
    CHECK(r.report.max_constraint_violation > opt.constraint_tolerance);
}

TEST_CASE("warm start from the solution converges in a few iterations") {
    EqualityQp qp;
    SolveOptions opt;
    const SolveResult first = solve(qp, VectorXd::Zero(2), opt);
    REQUIRE(first.report.status == SolveStatus::kOptimal);
    SolveOptions warm = opt;
    warm.mu_init = 1e-6;
    const SolveResult second = solve(qp, first.x, warm);
    CHECK(second.report.status == SolveStatus::kOptimal);
    CHECK(second.report.iterations <= 10);
}

TEST_CASE("finite-difference fallback reproduces the exact-derivative answer") {
    CircleProjection p;
    SolveOptions opt;
    opt.derivative_mode = DerivativeMode::kFiniteDifference;
    VectorXd x0(2);
    x0 << 0.5, -0.5;
    const SolveResult r = solve(p, x0, opt);
    CHECK((r.report.status == SolveStatus::kOptimal ||
           r.report.status == SolveStatus::kAcceptable));
    const double s = std::sqrt(5.0);
    CHECK(r.x[0] == doctest::Approx(2.0 / s).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(1.0 / s).epsilon(1e-4));
}

TEST_CASE("derivative audit flags a broken Jacobian") {
    CircleProjection good;
    VectorXd x(2);
    x << 0.3, -0.7;
    CHECK(max_derivative_mismatch(good, x) < 1e-6);

    class Broken : public CircleProjection {
        void jacobian(const VectorXd& v, Triplets& j) const override {
            j = {{0, 0, 2.0 * v[0] + 0.5}, {0, 1, 2.0 * v[1]}};
        }
    } broken;
    CHECK(max_derivative_mismatch(broken, x) > 1e-2);
}

TEST_CASE("iteration log is written when requested") {
    EqualityQp qp;
    SolveOptions opt;
    opt.iteration_log_path = "ipm_test_log.csv";
    const SolveResult r = solve(qp, VectorXd::Zero(2), opt);
    CHECK(r.report.status == SolveStatus::kOptimal);
    std::FILE* f = std::fopen("ipm_test_log.csv", "r");
    REQUIRE(f != nullptr);
    char header[64] = {0};
    REQUIRE(std::fgets(header, sizeof(header), f) != nullptr);
    CHECK(std::string(header).find("iter") != std::string::npos);
    std::fclose(f);
    std::remove("ipm_test_log.csv");
}

TEST_CASE("status strings are stable") {
    CHECK(to_string(SolveStatus::kOptimal) == "optimal");
    CHECK(to_string(SolveStatus::kInfeasible) == "infeasible");
}
