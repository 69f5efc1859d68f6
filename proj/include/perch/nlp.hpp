// Backend-neutral sparse NLP contract:
//
//     min f(x)   s.t.  cl <= c(x) <= cu,   xl <= x <= xu
//
// Equalities are rows with cl == cu. Jacobian and Lagrangian Hessian are
// reported as triplets (Hessian: lower triangle, duplicates summed).

#ifndef PERCH_NLP_HPP
#define PERCH_NLP_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace perch::nlp {

using Triplet = Eigen::Triplet<double>;
using Triplets = std::vector<Triplet>;
using Eigen::VectorXd;

class Nlp {
public:
    virtual ~Nlp() = default;
    virtual int num_vars() const = 0;
    virtual int num_cons() const = 0;
    virtual void var_bounds(VectorXd& xl, VectorXd& xu) const = 0;
    virtual void con_bounds(VectorXd& cl, VectorXd& cu) const = 0;
    virtual double objective(const VectorXd& x) const = 0;
    virtual void gradient(const VectorXd& x, VectorXd& grad) const = 0;
    virtual void constraints(const VectorXd& x, VectorXd& c) const = 0;
    virtual void jacobian(const VectorXd& x, Triplets& jac) const = 0;
    /// H = obj_weight * grad^2 f + sum_i lambda_i grad^2 c_i, lower triangle.
    virtual void lagrangian_hessian(const VectorXd& x, double obj_weight,
                                    const VectorXd& lambda, Triplets& hess) const = 0;
};

enum class DerivativeMode { kExact, kFiniteDifference };

struct SolveOptions {
    double constraint_tolerance = 1e-6;
    double optimality_tolerance = 1e-6;
    int max_iterations = 3000;
    DerivativeMode derivative_mode = DerivativeMode::kExact;
    int verbosity = 0;
    double mu_init = 0.1;
    bool allow_restoration = true;
    std::string iteration_log_path;  // optional CSV (iter, obj, infeas, step)
};

enum class SolveStatus {
    kOptimal,
    kAcceptable,
    kInfeasible,
    kIterationLimit,
    kNumericalFailure,
};

std::string to_string(SolveStatus s);

struct SolveReport {
    SolveStatus status = SolveStatus::kNumericalFailure;
    double objective = 0.0;
    double max_constraint_violation = 0.0;
    double dual_infeasibility = 0.0;
    int iterations = 0;
    double wall_time_s = 0.0;
};

struct SolveResult {
    VectorXd x;
    VectorXd lambda;  // constraint multipliers at the solution
    SolveReport report;
};

/// Primal-dual interior-point solve; see ipm.cpp for the algorithm.
SolveResult solve(const Nlp& problem, const VectorXd& guess,
                  const SolveOptions& options);

/// Wraps an Nlp, replacing gradient/Jacobian/Hessian with central finite
/// differences. Dense cost; intended for cross-checking on small problems.
class FiniteDifferenceNlp : public Nlp {
public:
    explicit FiniteDifferenceNlp(const Nlp& inner, double step = 1e-6)
        : inner_(inner), step_(step) {}
    int num_vars() const override { return inner_.num_vars(); }
    int num_cons() const override { return inner_.num_cons(); }
    void var_bounds(VectorXd& xl, VectorXd& xu) const override {
        inner_.var_bounds(xl, xu);
    }
    void con_bounds(VectorXd& cl, VectorXd& cu) const override {
        inner_.con_bounds(cl, cu);
    }
    double objective(const VectorXd& x) const override { return inner_.objective(x); }
    void constraints(const VectorXd& x, VectorXd& c) const override {
        inner_.constraints(x, c);
    }
    void gradient(const VectorXd& x, VectorXd& grad) const override;
    void jacobian(const VectorXd& x, Triplets& jac) const override;
    void lagrangian_hessian(const VectorXd& x, double obj_weight,
                            const VectorXd& lambda, Triplets& hess) const override;

private:
    const Nlp& inner_;
    double step_;
};

/// Compares exact derivatives against central differences at x; returns the
/// worst relative mismatch over gradient and Jacobian entries.
double max_derivative_mismatch(const Nlp& problem, const VectorXd& x,
                               double fd_step = 1e-6);

}  // namespace perch::nlp

#endif  // PERCH_NLP_HPP
