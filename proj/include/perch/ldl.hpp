// Sparse LDL^T factorization without pivoting (up-looking, fixed AMD
// ordering), for symmetric quasi-definite KKT systems. Reports the inertia
// through the signs of D, which drives the interior-point regularization.

#ifndef PERCH_LDL_HPP
#define PERCH_LDL_HPP

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace perch::nlp {

class LdlSolver {
public:
    /// Symbolic analysis on the pattern of A (full symmetric matrix).
    void analyze(const Eigen::SparseMatrix<double>& a);

    /// Numeric factorization; pattern must match analyze(). Returns false on
    /// a zero pivot (factorization breakdown).
    bool factorize(const Eigen::SparseMatrix<double>& a);

    int num_positive() const { return num_pos_; }
    int num_negative() const { return num_neg_; }
    int num_zero() const { return num_zero_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

private:
    int n_ = 0;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_;
    std::vector<int> parent_, lnz_, lp_;
    // numeric factors
    std::vector<int> li_;
    std::vector<double> lx_;
    Eigen::VectorXd d_;
    int num_pos_ = 0, num_neg_ = 0, num_zero_ = 0;

    Eigen::SparseMatrix<double> permuted_upper(const Eigen::SparseMatrix<double>& a) const;
};

}  // namespace perch::nlp

#endif  // PERCH_LDL_HPP
