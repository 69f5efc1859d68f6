#include "perch/ldl.hpp"

#include <cmath>

#include <Eigen/OrderingMethods>

namespace perch::nlp {

Eigen::SparseMatrix<double> LdlSolver::permuted_upper(
    const Eigen::SparseMatrix<double>& a) const {
    Eigen::SparseMatrix<double> p(a.rows(), a.cols());
    p = a.twistedBy(perm_);
    return p.triangularView<Eigen::Upper>();
}

void LdlSolver::analyze(const Eigen::SparseMatrix<double>& a) {
    n_ = static_cast<int>(a.rows());
    // AMD needs the full symmetric pattern, not a triangle. The ordering it
    // returns must be applied inverted to reproduce the low-fill pattern
    // (twistedBy composes with the opposite convention).
    Eigen::AMDOrdering<int> ordering;
    ordering(a, perm_);
    perm_ = perm_.inverse().eval();

    const Eigen::SparseMatrix<double> up = permuted_upper(a);
    parent_.assign(n_, -1);
    lnz_.assign(n_, 0);
    std::vector<int> flag(n_, -1);
    for (int k = 0; k < n_; ++k) {
        parent_[k] = -1;
        flag[k] = k;
        for (Eigen::SparseMatrix<double>::InnerIterator it(up, k); it; ++it) {
            int i = it.row();
            // walk up the elimination tree from i to k
            for (; i < k && flag[i] != k; i = parent_[i]) {
                if (parent_[i] == -1) parent_[i] = k;
                ++lnz_[i];
                flag[i] = k;
            }
        }
    }
    lp_.assign(n_ + 1, 0);
    for (int k = 0; k < n_; ++k) lp_[k + 1] = lp_[k] + lnz_[k];
    li_.assign(lp_[n_], 0);
    lx_.assign(lp_[n_], 0.0);
    d_.resize(n_);
}

bool LdlSolver::factorize(const Eigen::SparseMatrix<double>& a) {
    const Eigen::SparseMatrix<double> up = permuted_upper(a);
    std::vector<double> y(n_, 0.0);
    std::vector<int> pattern(n_), flag(n_, -1), lnz_cur(n_, 0);
    num_pos_ = num_neg_ = num_zero_ = 0;

    for (int k = 0; k < n_; ++k) {
        int top = n_;
        flag[k] = k;
        y[k] = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(up, k); it; ++it) {
            const int i = it.row();
            if (i > k) continue;
            y[i] += it.value();
            int len = 0;
            int j = i;
            for (; j != -1 && flag[j] != k; j = parent_[j]) {
                pattern[len++] = j;
                flag[j] = k;
            }
            if (j == -1) {  // pattern inconsistent with the symbolic analysis
                num_zero_ = n_;
                return false;
            }
            while (len > 0) pattern[--top] = pattern[--len];
        }
        double dk = y[k];
        y[k] = 0.0;
        for (; top < n_; ++top) {
            const int i = pattern[top];
            const double yi = y[i];
            y[i] = 0.0;
            const int p2 = lp_[i] + lnz_cur[i];
            for (int p = lp_[i]; p < p2; ++p) y[li_[p]] -= lx_[p] * yi;
            const double l_ki = yi / d_[i];
            dk -= l_ki * yi;
            li_[p2] = k;
            lx_[p2] = l_ki;
            ++lnz_cur[i];
        }
        d_[k] = dk;
        if (dk > 0.0)
            ++num_pos_;
        else if (dk < 0.0)
            ++num_neg_;
        else {
            ++num_zero_;
            return false;
        }
    }
    return true;
}

Eigen::VectorXd LdlSolver::solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd y = perm_ * rhs;
    // L y = b
    for (int j = 0; j < n_; ++j) {
        for (int p = lp_[j]; p < lp_[j + 1]; ++p) y[li_[p]] -= lx_[p] * y[j];
    }
    y.array() /= d_.array();
    // L^T x = y
    for (int j = n_ - 1; j >= 0; --j) {
        for (int p = lp_[j]; p < lp_[j + 1]; ++p) y[j] -= lx_[p] * y[li_[p]];
    }
    return perm_.inverse() * y;
}

}  // namespace perch::nlp
