#include "perch/block_nlp.hpp"

#include <array>

namespace perch::nlp {

double BlockNlp::objective(const VectorXd& x) const {
    double f = 0.0;
    for (const auto& q : quad_) f += q.c * x[q.i] * x[q.j];
    for (const auto& l : lin_obj_) f += l.c * x[l.i];
    return f;
}

void BlockNlp::gradient(const VectorXd& x, VectorXd& grad) const {
    grad = VectorXd::Zero(nv_);
    for (const auto& q : quad_) {
        if (q.i == q.j) {
            grad[q.i] += 2.0 * q.c * x[q.i];
        } else {
            grad[q.i] += q.c * x[q.j];
            grad[q.j] += q.c * x[q.i];
        }
    }
    for (const auto& l : lin_obj_) grad[l.i] += l.c;
}

void BlockNlp::constraints(const VectorXd& x, VectorXd& c) const {
    c = VectorXd::Zero(num_cons());
    for (const auto& t : linear_) c[t.row()] += t.value() * x[t.col()];
    std::array<double, kBlockMaxVars> in{};
    std::array<double, 64> out{};
    for (const auto& b : blocks_) {
        for (size_t i = 0; i < b.vars.size(); ++i) in[i] = x[b.vars[i]];
        b.value(in.data(), out.data());
        for (int r = 0; r < b.nout; ++r) c[b.row0 + r] += out[r];
        for (const auto& t : b.linear) c[t.row()] += t.value() * x[t.col()];
    }
}

void BlockNlp::jacobian(const VectorXd& x, Triplets& jac) const {
    jac.clear();
    jac.insert(jac.end(), linear_.begin(), linear_.end());
    std::array<BlockDual, kBlockMaxVars> in;
    std::vector<BlockDual> out;
    for (const auto& b : blocks_) {
        const int nin = static_cast<int>(b.vars.size());
        for (int i = 0; i < nin; ++i)
            in[i] = BlockDual::variable(x[b.vars[i]], i);
        out.assign(b.nout, BlockDual{});
        b.deriv(in.data(), out.data());
        for (int r = 0; r < b.nout; ++r)
            for (int i = 0; i < nin; ++i)
                if (out[r].g[i] != 0.0)
                    jac.emplace_back(b.row0 + r, b.vars[i], out[r].g[i]);
        jac.insert(jac.end(), b.linear.begin(), b.linear.end());
    }
}

void BlockNlp::lagrangian_hessian(const VectorXd& x, double obj_weight,
                                  const VectorXd& lambda, Triplets& hess) const {
    (void)x;
    hess.clear();
    for (const auto& q : quad_) {
        const double v = obj_weight * q.c;
        if (v == 0.0) continue;
        if (q.i == q.j)
            hess.emplace_back(q.i, q.i, 2.0 * v);
        else
            hess.emplace_back(std::max(q.i, q.j), std::min(q.i, q.j), v);
    }
    std::array<BlockDual, kBlockMaxVars> in;
    std::vector<BlockDual> out;
    for (const auto& b : blocks_) {
        const int nin = static_cast<int>(b.vars.size());
        bool active = false;
        for (int r = 0; r < b.nout; ++r)
            if (lambda[b.row0 + r] != 0.0) active = true;
        if (!active) continue;
        for (int i = 0; i < nin; ++i)
            in[i] = BlockDual::variable(x[b.vars[i]], i);
        out.assign(b.nout, BlockDual{});
        b.deriv(in.data(), out.data());
        for (int r = 0; r < b.nout; ++r) {
            const double lam = lambda[b.row0 + r];
            if (lam == 0.0) continue;
            for (int i = 0; i < nin; ++i)
                for (int j = 0; j <= i; ++j) {
                    double h = lam * out[r].H(i, j);
                    if (h == 0.0) continue;
                    const int gi = b.vars[i], gj = b.vars[j];
                    if (i == j) {
                        hess.emplace_back(gi, gi, h);
                    } else {
                        hess.emplace_back(std::max(gi, gj), std::min(gi, gj), h);
                    }
                }
        }
    }
}

}  // namespace perch::nlp
