// Sparse NLP assembled from parts, shaped for multiple-shooting problems:
//   - a quadratic-plus-linear objective given term by term,
//   - standalone linear constraint rows,
//   - "functional blocks": rows computed from at most eight variables by a
//     user closure, evaluated either on plain doubles (values) or on
//     second-order dual numbers (exact Jacobian and Hessian), optionally
//     with extra linear terms on the same rows (e.g. the -x_{k+1} coupling
//     of a shooting gap).

#ifndef PERCH_BLOCK_NLP_HPP
#define PERCH_BLOCK_NLP_HPP

#include <functional>
#include <utility>
#include <vector>

#include "perch/ad.hpp"
#include "perch/nlp.hpp"

namespace perch::nlp {

inline constexpr int kBlockMaxVars = 8;
using BlockDual = perch::ad::Dual2<kBlockMaxVars>;

struct FunctionalBlock {
    std::vector<int> vars;  // global variable indices, at most kBlockMaxVars
    int row0 = 0;
    int nout = 0;
    std::function<void(const double*, double*)> value;
    std::function<void(const BlockDual*, BlockDual*)> deriv;
    Triplets linear;  // extra linear terms on this block's rows (global cols)
};

class BlockNlp : public Nlp {
public:
    explicit BlockNlp(int nvars)
        : nv_(nvars),
          xl_(VectorXd::Constant(nvars, -kUnboundedValue)),
          xu_(VectorXd::Constant(nvars, kUnboundedValue)) {}

    static constexpr double kUnboundedValue = 1e20;

    void set_var_bounds(int i, double lo, double hi) {
        xl_[i] = lo;
        xu_[i] = hi;
    }
    void fix_var(int i, double v) { set_var_bounds(i, v, v); }

    /// f += coeff * x_i * x_j (i == j allowed).
    void add_objective_quadratic(int i, int j, double coeff) {
        quad_.push_back({i, j, coeff});
    }
    void add_objective_linear(int i, double coeff) { lin_obj_.push_back({i, coeff}); }

    /// Appends `count` empty constraint rows with the given bounds.
    int add_rows(int count, double lo, double hi) {
        const int r0 = static_cast<int>(cl_.size());
        for (int i = 0; i < count; ++i) {
            cl_.push_back(lo);
            cu_.push_back(hi);
        }
        return r0;
    }
    void set_row_bounds(int r, double lo, double hi) {
        cl_[r] = lo;
        cu_[r] = hi;
    }

    /// Adds a linear term to any existing row.
    void add_linear_entry(int row, int col, double coeff) {
        linear_.emplace_back(row, col, coeff);
    }

    /// Adds rows computed by a generic callable f(const T* in, T* out) that
    /// must be valid for T = double and T = BlockDual.
    template <class F>
    FunctionalBlock& add_block(std::vector<int> vars, int nout, double lo,
                               double hi, F f) {
        FunctionalBlock b;
        b.vars = std::move(vars);
        b.nout = nout;
        b.row0 = add_rows(nout, lo, hi);
        b.value = [f](const double* in, double* out) { f(in, out); };
        b.deriv = [f](const BlockDual* in, BlockDual* out) { f(in, out); };
        blocks_.push_back(std::move(b));
        return blocks_.back();
    }

    int num_vars() const override { return nv_; }
    int num_cons() const override { return static_cast<int>(cl_.size()); }
    void var_bounds(VectorXd& xl, VectorXd& xu) const override {
        xl = xl_;
        xu = xu_;
    }
    void con_bounds(VectorXd& cl, VectorXd& cu) const override {
        cl = Eigen::Map<const VectorXd>(cl_.data(), cl_.size());
        cu = Eigen::Map<const VectorXd>(cu_.data(), cu_.size());
    }
    double objective(const VectorXd& x) const override;
    void gradient(const VectorXd& x, VectorXd& grad) const override;
    void constraints(const VectorXd& x, VectorXd& c) const override;
    void jacobian(const VectorXd& x, Triplets& jac) const override;
    void lagrangian_hessian(const VectorXd& x, double obj_weight,
                            const VectorXd& lambda, Triplets& hess) const override;

private:
    struct QuadTerm {
        int i, j;
        double c;
    };
    struct LinTerm {
        int i;
        double c;
    };

    int nv_;
    VectorXd xl_, xu_;
    std::vector<double> cl_, cu_;
    std::vector<QuadTerm> quad_;
    std::vector<LinTerm> lin_obj_;
    Triplets linear_;
    std::vector<FunctionalBlock> blocks_;
};

}  // namespace perch::nlp

#endif  // PERCH_BLOCK_NLP_HPP
