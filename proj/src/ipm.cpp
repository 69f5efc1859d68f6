// Primal-dual interior-point method with filter line search. Inequality
// rows get slacks carrying their bounds; equality rows (cl == cu) are kept
// as direct equalities:
//
//   min f(x) - mu * sum log(bound slacks)
//   s.t. c_E(x) = b,  c_I(x) - s = 0,  s in [cl, cu],  x in [xl, xu]
//
// KKT systems are regularized to symmetric quasi-definiteness and factored
// by the sparse LDL^T in ldl.cpp, whose inertia drives the regularization
// ladder. Stalled line searches fall back to an elastic l1 restoration
// phase solved with the same machinery.

#include <cstdlib>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "perch/ldl.hpp"
#include "perch/nlp.hpp"

namespace perch::nlp {

namespace {

constexpr double kInf = 1e19;
constexpr double kSmax = 100.0;

struct Work {
    const Nlp& prob;
    int n = 0, m = 0;          // vars, constraint rows
    int mi = 0;                // inequality rows (slack-carrying)
    int ny = 0;                // n + mi
    std::vector<int> slack_of_row;  // -1 for equality rows
    std::vector<int> row_of_slack;
    VectorXd cl, cu;           // unscaled constraint bounds
    VectorXd ylo, yhi;         // bounds on y = (x, s)
    std::vector<char> has_lo, has_up;
    std::vector<char> fixed;   // ylo == yhi: treated as a pinned parameter

    explicit Work(const Nlp& p) : prob(p) {
        n = p.num_vars();
        m = p.num_cons();
        VectorXd xl(n), xu(n);
        p.var_bounds(xl, xu);
        cl.resize(m);
        cu.resize(m);
        p.con_bounds(cl, cu);
        slack_of_row.assign(m, -1);
        for (int r = 0; r < m; ++r) {
            if (cu[r] - cl[r] > 0.0) {
                slack_of_row[r] = mi++;
                row_of_slack.push_back(r);
            }
        }
        ny = n + mi;
        ylo.resize(ny);
        yhi.resize(ny);
        ylo.head(n) = xl;
        yhi.head(n) = xu;
        for (int k = 0; k < mi; ++k) {
            ylo[n + k] = cl[row_of_slack[k]];
            yhi[n + k] = cu[row_of_slack[k]];
        }
        has_lo.resize(ny);
        has_up.resize(ny);
        fixed.resize(ny);
        for (int i = 0; i < ny; ++i) {
            fixed[i] = yhi[i] - ylo[i] <= 1e-12 && ylo[i] > -kInf;
            has_lo[i] = !fixed[i] && ylo[i] > -kInf;
            has_up[i] = !fixed[i] && yhi[i] < kInf;
        }
    }
};

double barrier_value(const Work& w, double mu, const VectorXd& y, double f) {
    double phi = f;
    for (int i = 0; i < w.ny; ++i) {
        if (w.has_lo[i]) phi -= mu * std::log(y[i] - w.ylo[i]);
        if (w.has_up[i]) phi -= mu * std::log(w.yhi[i] - y[i]);
    }
    return phi;
}

// Push a point strictly inside its bounds (kappa_1 = kappa_2 = 1e-2 for the
// initial point; callers that already hold a near-feasible point pass a tiny
// pad so active-set information is not wiped out).
void project_interior(const Work& w, VectorXd& y, double k1 = 1e-2,
                      double k2 = 1e-2) {
    for (int i = 0; i < w.ny; ++i) {
        if (w.fixed[i]) {
            y[i] = 0.5 * (w.ylo[i] + w.yhi[i]);
            continue;
        }
        const bool lo = w.has_lo[i], up = w.has_up[i];
        if (lo && up) {
            const double pad = std::min(k1 * std::max(1.0, std::abs(w.ylo[i])),
                                        k2 * (w.yhi[i] - w.ylo[i]));
            y[i] = std::clamp(y[i], w.ylo[i] + pad, w.yhi[i] - pad);
        } else if (lo) {
            y[i] = std::max(y[i], w.ylo[i] + k1 * std::max(1.0, std::abs(w.ylo[i])));
        } else if (up) {
            y[i] = std::min(y[i], w.yhi[i] - k1 * std::max(1.0, std::abs(w.yhi[i])));
        }
    }
}

struct FilterEntry {
    double theta, phi;
};

// Elastic feasibility problem for the restoration phase:
//   min sum(p + n) + 0.5 * zeta * ||D (x - x_ref)||^2
//   s.t. cl <= c(x) + p - n <= cu,  p, n >= 0
class RestorationNlp : public Nlp {
public:
    RestorationNlp(const Nlp& inner, const VectorXd& x_ref, double zeta,
                   const VectorXd& row_w)
        : inner_(inner), x_ref_(x_ref), row_w_(row_w), zeta_(zeta) {
        n_ = inner.num_vars();
        m_ = inner.num_cons();
        d_ = x_ref.cwiseAbs().cwiseMax(1.0).cwiseInverse();
    }
    int num_vars() const override { return n_ + 2 * m_; }
    int num_cons() const override { return m_; }
    void var_bounds(VectorXd& xl, VectorXd& xu) const override {
        xl.resize(n_ + 2 * m_);
        xu.resize(n_ + 2 * m_);
        VectorXd il(n_), iu(n_);
        inner_.var_bounds(il, iu);
        xl << il, VectorXd::Zero(2 * m_);
        xu << iu, VectorXd::Constant(2 * m_, 2.0 * kInf);
    }
    void con_bounds(VectorXd& cl, VectorXd& cu) const override {
        inner_.con_bounds(cl, cu);
    }
    double objective(const VectorXd& v) const override {
        const VectorXd x = v.head(n_);
        // Elastic magnitudes are weighted the same way the caller measures
        // infeasibility, so optimality here translates into caller progress.
        const double elastic = row_w_.dot(v.segment(n_, m_) + v.tail(m_));
        const VectorXd dx = d_.cwiseProduct(x - x_ref_);
        return elastic + 0.5 * zeta_ * dx.squaredNorm();
    }
    void gradient(const VectorXd& v, VectorXd& grad) const override {
        grad.resize(n_ + 2 * m_);
        const VectorXd x = v.head(n_);
        grad.head(n_) = zeta_ * d_.cwiseProduct(d_.cwiseProduct(x - x_ref_));
        grad.segment(n_, m_) = row_w_;
        grad.tail(m_) = row_w_;
    }
    void constraints(const VectorXd& v, VectorXd& c) const override {
        inner_.constraints(v.head(n_), c);
        c += v.segment(n_, m_) - v.tail(m_);
    }
    void jacobian(const VectorXd& v, Triplets& jac) const override {
        inner_.jacobian(v.head(n_), jac);
        for (int i = 0; i < m_; ++i) {
            jac.emplace_back(i, n_ + i, 1.0);
            jac.emplace_back(i, n_ + m_ + i, -1.0);
        }
    }
    void lagrangian_hessian(const VectorXd& v, double obj_w, const VectorXd& lam,
                            Triplets& hess) const override {
        inner_.lagrangian_hessian(v.head(n_), 0.0, lam, hess);
        for (int i = 0; i < n_; ++i)
            hess.emplace_back(i, i, obj_w * zeta_ * d_[i] * d_[i]);
    }

private:
    const Nlp& inner_;
    VectorXd x_ref_, row_w_, d_;
    double zeta_;
    int n_, m_;
};

class IpmSolver {
public:
    IpmSolver(const Nlp& prob, const SolveOptions& opt, bool in_restoration)
        : w_(prob), opt_(opt), in_restoration_(in_restoration) {}

    SolveResult run(const VectorXd& guess);

private:
    Work w_;
    SolveOptions opt_;
    bool in_restoration_;

    double f_scale_ = 1.0;
    double resto_fail_theta_ = -1.0;  // violation level of the last failed
                                      // restoration attempt, if any
    VectorXd c_scale_;

    VectorXd y_, lam_, zl_, zu_;
    double mu_ = 0.1, tau_ = 0.99;
    std::vector<FilterEntry> filter_;
    double delta_w_last_ = 0.0;
    double theta_max_ = 0.0, theta_min_ = 0.0;

    LdlSolver kkt_;
    std::vector<int> kkt_pattern_;  // outer+inner indices of the last analysis
    VectorXd last_rhs_top_;         // dual part of the last KKT right-hand side

    // Constraint curvature is dropped from the KKT Hessian while the
    // iterate is far from feasibility; exact curvature takes over for the
    // local phase. Keeps early multiplier estimates from poisoning steps.
    bool hess_gn_ = true;
    int soc_accepts_ = 0;

    // cached evaluations at y_
    double f_ = 0.0;
    VectorXd grad_, c_, e_;
    Triplets jac_, hess_;

    double grad_y(int i) const { return i < w_.n ? grad_[i] : 0.0; }

    void compute_scaling(const VectorXd& x0);
    VectorXd residual_e(const VectorXd& y, const VectorXd& c_scaled) const;
    void eval_all();
    double eval_theta(const VectorXd& y) const;
    double eval_phi(const VectorXd& y) const;
    bool solve_kkt(VectorXd& dy, VectorXd& dlam);
    /// Re-solve the most recent KKT factorization with the constraint part of
    /// the right-hand side replaced by -e_target (second-order corrections).
    bool resolve_kkt(const VectorXd& e_target, VectorXd& dy, VectorXd& dlam);
    VectorXd residual_at(const VectorXd& y) const;
    double fraction_to_boundary(const VectorXd& dy) const;
    double kkt_error(double mu, double* primal, double* dual, double* comp) const;
    bool restoration();
    void reset_filter(double theta_seed);
};

void IpmSolver::compute_scaling(const VectorXd& x0) {
    constexpr double gmax = 100.0;
    VectorXd g(w_.n);
    w_.prob.gradient(x0, g);
    const double gn = g.lpNorm<Eigen::Infinity>();
    f_scale_ = gn > gmax ? gmax / gn : 1.0;
    Triplets j;
    w_.prob.jacobian(x0, j);
    VectorXd rownorm = VectorXd::Zero(w_.m);
    for (const auto& t : j)
        rownorm[t.row()] = std::max(rownorm[t.row()], std::abs(t.value()));
    c_scale_.resize(w_.m);
    for (int i = 0; i < w_.m; ++i)
        c_scale_[i] = rownorm[i] > gmax ? gmax / rownorm[i] : 1.0;
    // fold constraint scaling into the slack bounds
    for (int k = 0; k < w_.mi; ++k) {
        const int r = w_.row_of_slack[k];
        if (w_.has_lo[w_.n + k]) w_.ylo[w_.n + k] *= c_scale_[r];
        if (w_.has_up[w_.n + k]) w_.yhi[w_.n + k] *= c_scale_[r];
    }
}

VectorXd IpmSolver::residual_e(const VectorXd& y, const VectorXd& c_scaled) const {
    VectorXd e(w_.m);
    for (int r = 0; r < w_.m; ++r) {
        const int k = w_.slack_of_row[r];
        if (k < 0)
            e[r] = c_scaled[r] - c_scale_[r] * w_.cl[r];
        else
            e[r] = c_scaled[r] - y[w_.n + k];
    }
    return e;
}

void IpmSolver::eval_all() {
    const VectorXd x = y_.head(w_.n);
    f_ = f_scale_ * w_.prob.objective(x);
    w_.prob.gradient(x, grad_);
    grad_ *= f_scale_;
    w_.prob.constraints(x, c_);
    c_ = c_scale_.cwiseProduct(c_);
    e_ = residual_e(y_, c_);
    jac_.clear();
    w_.prob.jacobian(x, jac_);
    for (auto& t : jac_) t = Triplet(t.row(), t.col(), t.value() * c_scale_[t.row()]);
    hess_.clear();
    VectorXd lam_inner = c_scale_.cwiseProduct(lam_);
    if (hess_gn_) lam_inner.setZero();
    w_.prob.lagrangian_hessian(x, f_scale_, lam_inner, hess_);
}

double IpmSolver::eval_theta(const VectorXd& y) const {
    VectorXd c(w_.m);
    w_.prob.constraints(y.head(w_.n), c);
    return residual_e(y, c_scale_.cwiseProduct(c)).lpNorm<1>();
}

double IpmSolver::eval_phi(const VectorXd& y) const {
    const double f = f_scale_ * w_.prob.objective(y.head(w_.n));
    return barrier_value(w_, mu_, y, f);
}

double IpmSolver::kkt_error(double mu, double* primal, double* dual,
                            double* comp) const {
    VectorXd rd = VectorXd::Zero(w_.ny);
    rd.head(w_.n) = grad_;
    for (const auto& t : jac_) rd[t.col()] += t.value() * lam_[t.row()];
    for (int k = 0; k < w_.mi; ++k) rd[w_.n + k] -= lam_[w_.row_of_slack[k]];
    rd -= zl_;
    rd += zu_;
    for (int i = 0; i < w_.ny; ++i)
        if (w_.fixed[i]) rd[i] = 0.0;  // gradient absorbed by the pin multiplier

    double comp_err = 0.0, zsum = 0.0;
    int nb = 0;
    for (int i = 0; i < w_.ny; ++i) {
        if (w_.has_lo[i]) {
            comp_err = std::max(comp_err, std::abs(zl_[i] * (y_[i] - w_.ylo[i]) - mu));
            zsum += std::abs(zl_[i]);
            ++nb;
        }
        if (w_.has_up[i]) {
            comp_err = std::max(comp_err, std::abs(zu_[i] * (w_.yhi[i] - y_[i]) - mu));
            zsum += std::abs(zu_[i]);
            ++nb;
        }
    }
    const double sd =
        std::max(kSmax, (lam_.lpNorm<1>() + zsum) / std::max(1, w_.m + nb)) / kSmax;
    const double sc = std::max(kSmax, zsum / std::max(1, nb)) / kSmax;

    const double p = e_.lpNorm<Eigen::Infinity>();
    const double d = rd.lpNorm<Eigen::Infinity>() / sd;
    const double cmp = nb > 0 ? comp_err / sc : 0.0;
    if (primal) *primal = p;
    if (dual) *dual = d;
    if (comp) *comp = cmp;
    return std::max({p, d, cmp});
}

bool IpmSolver::solve_kkt(VectorXd& dy, VectorXd& dlam) {
    const int ny = w_.ny, m = w_.m, n = w_.n;
    const int dim = ny + m;

    VectorXd sigma = VectorXd::Zero(ny);
    VectorXd rhs(dim);
    for (int i = 0; i < ny; ++i) {
        double r = -grad_y(i);
        if (w_.has_lo[i]) {
            const double sl = y_[i] - w_.ylo[i];
            sigma[i] += zl_[i] / sl;
            r += mu_ / sl;
        }
        if (w_.has_up[i]) {
            const double su = w_.yhi[i] - y_[i];
            sigma[i] += zu_[i] / su;
            r -= mu_ / su;
        }
        rhs[i] = r;
    }
    for (const auto& t : jac_) rhs[t.col()] -= t.value() * lam_[t.row()];
    for (int k = 0; k < w_.mi; ++k) rhs[n + k] += lam_[w_.row_of_slack[k]];
    rhs.tail(m) = -e_;
    // Pinned parameters: force a (numerically) zero step regardless of the
    // surrounding system by a stiff diagonal and zero right-hand side.
    constexpr double kPin = 1e16;
    for (int i = 0; i < ny; ++i)
        if (w_.fixed[i]) {
            sigma[i] = kPin;
            rhs[i] = 0.0;
        }

    double delta_c = 1e-11;
    constexpr double kDwMax = 1e40;
    // The curvature-free Hessian always has empty rows, so the unregularized
    // first rung cannot factor; skip straight to the damped one.
    double dw = 0.0;
    for (size_t trial = hess_gn_ ? 1 : 0;; ++trial) {
        if (trial == 1)
            dw = delta_w_last_ > 0.0 ? std::max(1e-8, delta_w_last_ / 3.0) : 1e-4;
        else if (trial > 1)
            dw *= trial == 2 ? 100.0 : 10.0;
        if (dw > kDwMax) break;
        Triplets t;
        t.reserve(hess_.size() + jac_.size() + 2 * ny + 2 * m);
        for (const auto& h : hess_) t.push_back(h);  // lower triangle, x block
        for (int i = 0; i < ny; ++i) t.emplace_back(i, i, sigma[i] + dw);
        for (const auto& j : jac_) t.emplace_back(ny + j.row(), j.col(), j.value());
        for (int k = 0; k < w_.mi; ++k)
            t.emplace_back(ny + w_.row_of_slack[k], n + k, -1.0);
        for (int i = 0; i < m; ++i) t.emplace_back(ny + i, ny + i, -delta_c);
        Eigen::SparseMatrix<double> low(dim, dim);
        low.setFromTriplets(t.begin(), t.end());
        Eigen::SparseMatrix<double> full = low.selfadjointView<Eigen::Lower>();
        // Redo the symbolic analysis whenever the sparsity pattern changes
        // (finite-difference backends drop exact zeros nondeterministically).
        std::vector<int> pattern;
        pattern.reserve(dim + 1 + full.nonZeros());
        pattern.insert(pattern.end(), full.outerIndexPtr(), full.outerIndexPtr() + dim + 1);
        pattern.insert(pattern.end(), full.innerIndexPtr(),
                       full.innerIndexPtr() + full.nonZeros());
        if (pattern != kkt_pattern_) {
            kkt_.analyze(full);
            kkt_pattern_ = std::move(pattern);
        }
        if (!kkt_.factorize(full)) {
            if (opt_.verbosity > 1)
                std::printf("       [kkt] trial=%zu dw=%.1e factorize failed\n", trial, dw);
            delta_c = std::max(delta_c * 100.0, 1e-8);
            continue;
        }
        if (kkt_.num_positive() != ny || kkt_.num_negative() != m) {
            if (opt_.verbosity > 1)
                std::printf("       [kkt] trial=%zu dw=%.1e inertia (%d,%d,%d) want (%d,%d)\n",
                            trial, dw, kkt_.num_positive(), kkt_.num_negative(),
                            kkt_.num_zero(), ny, m);
            continue;
        }
        VectorXd sol = kkt_.solve(rhs);
        bool sane = sol.allFinite();
        if (sane) {
            // Guard against numerically singular factorizations that slip
            // past the inertia test: demand a small linear-system residual,
            // with one pass of iterative refinement before giving up.
            const double rhs_norm = 1.0 + rhs.norm();
            VectorXd resid = full * sol - rhs;
            if (resid.norm() > 1e-8 * rhs_norm) {
                const VectorXd corr = kkt_.solve(resid);
                if (corr.allFinite()) {
                    sol -= corr;
                    resid = full * sol - rhs;
                }
            }
            sane = sol.allFinite() && resid.norm() <= 1e-6 * rhs_norm &&
                   sol.lpNorm<Eigen::Infinity>() < 1e12;
        }
        if (!sane) {
            if (opt_.verbosity > 1)
                std::printf("       [kkt] trial=%zu dw=%.1e unreliable solution\n", trial, dw);
            delta_c = std::max(delta_c * 100.0, 1e-8);
            continue;
        }
        dy = sol.head(ny);
        for (int i = 0; i < ny; ++i)
            if (w_.fixed[i]) dy[i] = 0.0;
        dlam = sol.tail(m);
        delta_w_last_ = dw;
        last_rhs_top_ = rhs.head(ny);
        return true;
    }
    return false;
}

bool IpmSolver::resolve_kkt(const VectorXd& e_target, VectorXd& dy, VectorXd& dlam) {
    const int ny = w_.ny, m = w_.m;
    VectorXd rhs(ny + m);
    rhs.head(ny) = last_rhs_top_;
    rhs.tail(m) = -e_target;
    const VectorXd sol = kkt_.solve(rhs);
    if (!sol.allFinite()) return false;
    dy = sol.head(ny);
    for (int i = 0; i < ny; ++i)
        if (w_.fixed[i]) dy[i] = 0.0;
    dlam = sol.tail(m);
    return true;
}

VectorXd IpmSolver::residual_at(const VectorXd& y) const {
    VectorXd c(w_.m);
    w_.prob.constraints(y.head(w_.n), c);
    return residual_e(y, c_scale_.cwiseProduct(c));
}

double IpmSolver::fraction_to_boundary(const VectorXd& dy) const {
    double a = 1.0;
    for (int i = 0; i < w_.ny; ++i) {
        if (w_.has_lo[i] && dy[i] < 0.0)
            a = std::min(a, -tau_ * (y_[i] - w_.ylo[i]) / dy[i]);
        if (w_.has_up[i] && dy[i] > 0.0)
            a = std::min(a, tau_ * (w_.yhi[i] - y_[i]) / dy[i]);
    }
    return a;
}

void IpmSolver::reset_filter(double theta_seed) {
    filter_.clear();
    filter_.push_back({std::max(theta_max_, 1e4 * std::max(1.0, theta_seed)),
                       -std::numeric_limits<double>::infinity()});
}

SolveResult IpmSolver::run(const VectorXd& guess) {
    const auto t_start = std::chrono::steady_clock::now();
    SolveResult res;
    const int n = w_.n, m = w_.m, ny = w_.ny;

    std::ofstream log;
    if (!opt_.iteration_log_path.empty()) {
        log.open(opt_.iteration_log_path);
        if (log) log << "iter,objective,infeasibility,step\n";
    }

    c_scale_ = VectorXd::Ones(m);
    compute_scaling(guess);

    y_.resize(ny);
    y_.head(n) = guess;
    {
        VectorXd c0(m);
        w_.prob.constraints(guess, c0);
        for (int k = 0; k < w_.mi; ++k)
            y_[n + k] = c_scale_[w_.row_of_slack[k]] * c0[w_.row_of_slack[k]];
    }
    project_interior(w_, y_);
    lam_ = VectorXd::Zero(m);
    zl_ = VectorXd::Zero(ny);
    zu_ = VectorXd::Zero(ny);
    // Multipliers consistent with the initial barrier parameter, so that
    // narrow boxes start with the stiffness the barrier implies for them.
    for (int i = 0; i < ny; ++i) {
        if (w_.has_lo[i])
            zl_[i] = std::clamp(opt_.mu_init / (y_[i] - w_.ylo[i]), 1e-8, 1e8);
        if (w_.has_up[i])
            zu_[i] = std::clamp(opt_.mu_init / (w_.yhi[i] - y_[i]), 1e-8, 1e8);
    }

    mu_ = opt_.mu_init;
    tau_ = std::max(0.99, 1.0 - mu_);
    const double tol = opt_.optimality_tolerance;

    eval_all();
    const double theta0 = eval_theta(y_);
    theta_max_ = 1e4 * std::max(1.0, theta0);
    theta_min_ = 1e-4 * std::max(1.0, theta0);
    reset_filter(theta0);

    int iter = 0;
    double last_alpha = 0.0;
    int creep = 0;  // consecutive accepted steps with negligible progress
    SolveStatus status = SolveStatus::kIterationLimit;

    for (; iter < opt_.max_iterations; ++iter) {
        double prim, dual, comp;
        const double err0 = kkt_error(0.0, &prim, &dual, &comp);
        if (log)
            log << iter << ',' << f_ / f_scale_ << ',' << prim << ',' << last_alpha
                << '\n';
        if (opt_.verbosity > 0) {
            std::printf("[ipm] it=%4d f=%12.5e theta=%9.2e dual=%9.2e mu=%8.1e a=%6.2e soc=%d\n",
                        iter, f_ / f_scale_, prim, dual, mu_, last_alpha, soc_accepts_);
        }
        if (err0 <= tol && prim <= opt_.constraint_tolerance) {
            status = SolveStatus::kOptimal;
            break;
        }
        {
            // While constraint curvature is dropped, dual infeasibility
            // cannot converge, so the barrier schedule is gated on primal
            // feasibility and complementarity only.
            double p_g, d_g, c_g;
            kkt_error(mu_, &p_g, &d_g, &c_g);
            const double gate = hess_gn_ ? std::max(p_g, c_g)
                                         : std::max({p_g, d_g, c_g});
            if (gate <= 10.0 * mu_ && mu_ > tol / 11.0) {
                mu_ = std::max(tol / 11.0, std::min(0.2 * mu_, std::pow(mu_, 1.5)));
                tau_ = std::max(0.99, 1.0 - mu_);
                reset_filter(e_.lpNorm<1>());
                continue;
            }
        }
        if (hess_gn_ && mu_ <= 1e-3 && e_.lpNorm<1>() <= 1e-3) {
            hess_gn_ = false;
            delta_w_last_ = 0.0;
            eval_all();
            reset_filter(e_.lpNorm<1>());
            if (opt_.verbosity > 0) std::printf("[ipm] exact-curvature phase\n");
        }

        const auto t_kkt0 = std::chrono::steady_clock::now();
        VectorXd dy, dlam;
        if (!solve_kkt(dy, dlam)) {
            status = SolveStatus::kNumericalFailure;
            break;
        }

        double alpha_max = 1.0;
        int lim_idx = -1;
        for (int i = 0; i < ny; ++i) {
            double a_i = 1.0;
            if (w_.has_lo[i] && dy[i] < 0.0)
                a_i = std::min(a_i, -tau_ * (y_[i] - w_.ylo[i]) / dy[i]);
            if (w_.has_up[i] && dy[i] > 0.0)
                a_i = std::min(a_i, tau_ * (w_.yhi[i] - y_[i]) / dy[i]);
            if (a_i < alpha_max) {
                alpha_max = a_i;
                lim_idx = i;
            }
        }
        if (opt_.verbosity > 1)
            std::printf("       amax=%.2e lim=%d dy_lim=%.2e |dy|=%.2e\n", alpha_max,
                        lim_idx, lim_idx >= 0 ? dy[lim_idx] : 0.0,
                        dy.lpNorm<Eigen::Infinity>());

        VectorXd grad_phi(ny);
        for (int i = 0; i < ny; ++i) {
            double g = grad_y(i);
            if (w_.has_lo[i]) g -= mu_ / (y_[i] - w_.ylo[i]);
            if (w_.has_up[i]) g += mu_ / (w_.yhi[i] - y_[i]);
            grad_phi[i] = g;
        }
        const double dphi = grad_phi.dot(dy);

        const double theta_cur = e_.lpNorm<1>();
        const double phi_cur = barrier_value(w_, mu_, y_, f_);

        constexpr double gamma_theta = 1e-5, gamma_phi = 1e-5;
        constexpr double s_theta = 1.1, s_phi = 2.3, eta = 1e-4, delta_sw = 1.0;

        // Returns 0 = rejected, 1 = accepted (h-type), 2 = accepted (f-type).
        const auto judge = [&](double theta_t, double phi_t, double alpha_eff) {
            if (!std::isfinite(theta_t) || !std::isfinite(phi_t)) return 0;
            for (const auto& fe : filter_)
                if (theta_t >= (1.0 - gamma_theta) * fe.theta &&
                    phi_t >= fe.phi - gamma_phi * fe.theta)
                    return 0;
            const bool switching =
                dphi < 0.0 && alpha_eff * std::pow(-dphi, s_phi) >
                                  delta_sw * std::pow(theta_cur, s_theta);
            if (theta_cur <= theta_min_ && switching)
                return phi_t <= phi_cur + eta * alpha_eff * dphi ? 2 : 0;
            return theta_t <= (1.0 - gamma_theta) * theta_cur ||
                           phi_t <= phi_cur - gamma_phi * theta_cur
                       ? 1
                       : 0;
        };

        double alpha = alpha_max;
        bool accepted = false;
        bool f_type_accept = false;
        VectorXd y_trial;
        for (int ls = 0; ls < 60 && alpha > 1e-12; ++ls, alpha *= 0.5) {
            y_trial = y_ + alpha * dy;
            const double theta_t = eval_theta(y_trial);
            const double phi_t = eval_phi(y_trial);
            if (const int verdict = judge(theta_t, phi_t, alpha)) {
                accepted = true;
                f_type_accept = verdict == 2;
                break;
            }
            // Second-order corrections: when the full step fails on
            // infeasibility, re-solve with the constraint residual evaluated
            // at the trial point (same factorization) to cancel the
            // linearization error, up to four times.
            if (ls == 0 && std::isfinite(theta_t) && theta_t >= theta_cur) {
                VectorXd e_soc = alpha * e_ + residual_at(y_trial);
                double theta_soc_prev = theta_t;
                for (int p = 0; p < 4; ++p) {
                    VectorXd dy_c, dlam_c;
                    if (!resolve_kkt(e_soc, dy_c, dlam_c)) break;
                    const double a_soc = fraction_to_boundary(dy_c);
                    const VectorXd y_soc = y_ + a_soc * dy_c;
                    const double th_s = eval_theta(y_soc);
                    const double ph_s = eval_phi(y_soc);
                    if (const int verdict = judge(th_s, ph_s, a_soc)) {
                        ++soc_accepts_;
                        accepted = true;
                        f_type_accept = verdict == 2;
                        y_trial = y_soc;
                        alpha = a_soc;
                        dy = dy_c;
                        dlam = dlam_c;
                        break;
                    }
                    if (!std::isfinite(th_s) || th_s > 0.99 * theta_soc_prev) break;
                    theta_soc_prev = th_s;
                    e_soc = a_soc * e_soc + residual_at(y_soc);
                }
                if (accepted) break;
            }
        }

        // A long run of microscopic accepted steps far from feasibility is
        // the signature of a locally infeasible (or badly conditioned)
        // target; treat it like a failed search so the restoration and
        // barrier-tightening escalation below decides, instead of creeping
        // through the whole iteration budget.
        if (accepted && alpha < 1e-3 &&
            theta_cur > 1e2 * opt_.constraint_tolerance) {
            if (++creep >= 30) {
                accepted = false;
                creep = 0;
                if (opt_.verbosity > 0)
                    std::printf("[ipm] creep detected at theta=%.2e\n", theta_cur);
            }
        } else if (accepted) {
            creep = 0;
        }

        if (!accepted && hess_gn_) {
            // Before declaring a dead end, retry with exact constraint
            // curvature; the curvature-free model may simply be out of road.
            hess_gn_ = false;
            delta_w_last_ = 0.0;
            eval_all();
            reset_filter(e_.lpNorm<1>());
            last_alpha = 0.0;
            if (opt_.verbosity > 0)
                std::printf("[ipm] exact-curvature phase (stalled line search)\n");
            continue;
        }
        if (!accepted) {
            // Skip restoration while the violation sits where it already
            // failed once; re-running it there just repeats the failure.
            const bool resto_blocked =
                resto_fail_theta_ > 0.0 && theta_cur > 0.5 * resto_fail_theta_;
            if (opt_.allow_restoration && !in_restoration_ && !resto_blocked) {
                if (restoration()) {
                    resto_fail_theta_ = -1.0;
                    eval_all();
                    last_alpha = 0.0;
                    continue;
                }
                resto_fail_theta_ = theta_cur;
            }
            // A stalled search with the barrier still strong usually means
            // the iterate is pinned against bounds the solution rides;
            // tighten the barrier and retry before giving up.
            if (mu_ > tol / 11.0) {
                mu_ = std::max(tol / 11.0, std::min(0.2 * mu_, std::pow(mu_, 1.5)));
                tau_ = std::max(0.99, 1.0 - mu_);
                reset_filter(e_.lpNorm<1>());
                last_alpha = 0.0;
                if (opt_.verbosity > 0)
                    std::printf("[ipm] stalled: barrier tightened to mu=%.1e\n", mu_);
                continue;
            }
            status = theta_cur <= opt_.constraint_tolerance
                         ? SolveStatus::kAcceptable
                         : SolveStatus::kInfeasible;
            break;
        }

        if (!f_type_accept) filter_.push_back({theta_cur, phi_cur});

        double alpha_z = 1.0;
        VectorXd dzl = VectorXd::Zero(ny), dzu = VectorXd::Zero(ny);
        for (int i = 0; i < ny; ++i) {
            if (w_.has_lo[i]) {
                const double sl = y_[i] - w_.ylo[i];
                dzl[i] = mu_ / sl - zl_[i] - (zl_[i] / sl) * dy[i];
                if (dzl[i] < 0.0) alpha_z = std::min(alpha_z, -tau_ * zl_[i] / dzl[i]);
            }
            if (w_.has_up[i]) {
                const double su = w_.yhi[i] - y_[i];
                dzu[i] = mu_ / su - zu_[i] + (zu_[i] / su) * dy[i];
                if (dzu[i] < 0.0) alpha_z = std::min(alpha_z, -tau_ * zu_[i] / dzu[i]);
            }
        }

        y_ = y_trial;
        lam_ += alpha * dlam;
        zl_ += alpha_z * dzl;
        zu_ += alpha_z * dzu;
        for (int i = 0; i < ny; ++i) {
            if (w_.has_lo[i]) {
                const double sl = y_[i] - w_.ylo[i];
                zl_[i] = std::clamp(zl_[i], mu_ / (1e10 * sl), 1e10 * mu_ / sl);
            }
            if (w_.has_up[i]) {
                const double su = w_.yhi[i] - y_[i];
                zu_[i] = std::clamp(zu_[i], mu_ / (1e10 * su), 1e10 * mu_ / su);
            }
        }
        last_alpha = alpha;
        eval_all();
        if (opt_.verbosity > 1) {
            const double dt_it = std::chrono::duration<double>(
                                     std::chrono::steady_clock::now() - t_kkt0)
                                     .count();
            std::printf("       it_time=%.3fs filter=%zu\n", dt_it, filter_.size());
        }
    }

    double prim = 0.0, dual = 0.0;
    const double err_final = kkt_error(0.0, &prim, &dual, nullptr);
    if (status == SolveStatus::kIterationLimit &&
        prim <= opt_.constraint_tolerance && err_final <= 100.0 * tol) {
        status = SolveStatus::kAcceptable;
    }

    res.x = y_.head(n);
    res.lambda = c_scale_.cwiseProduct(lam_) / f_scale_;
    res.report.status = status;
    res.report.objective = w_.prob.objective(res.x);
    {
        VectorXd c(m);
        w_.prob.constraints(res.x, c);
        double viol = 0.0;
        for (int i = 0; i < m; ++i)
            viol = std::max({viol, w_.cl[i] - c[i], c[i] - w_.cu[i]});
        VectorXd xl(n), xu(n);
        w_.prob.var_bounds(xl, xu);
        for (int i = 0; i < n; ++i)
            viol = std::max({viol, xl[i] - res.x[i], res.x[i] - xu[i]});
        res.report.max_constraint_violation = std::max(0.0, viol);
    }
    res.report.dual_infeasibility = dual;
    res.report.iterations = iter;
    res.report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    if (res.report.status == SolveStatus::kOptimal &&
        res.report.max_constraint_violation > opt_.constraint_tolerance) {
        res.report.status = SolveStatus::kAcceptable;
    }
    return res;
}

bool IpmSolver::restoration() {
    const VectorXd x_ref = y_.head(w_.n);
    SolveOptions ropt = opt_;
    ropt.max_iterations = 300;
    ropt.allow_restoration = false;
    ropt.iteration_log_path.clear();
    ropt.verbosity = 0;

    VectorXd rguess(w_.n + 2 * w_.m);
    rguess.head(w_.n) = x_ref;
    VectorXd c(w_.m);
    w_.prob.constraints(x_ref, c);
    for (int i = 0; i < w_.m; ++i) {
        rguess[w_.n + i] = std::max(0.0, w_.cl[i] - c[i]) + 1e-4;
        rguess[w_.n + w_.m + i] = std::max(0.0, c[i] - w_.cu[i]) + 1e-4;
    }

    const double theta_before = eval_theta(y_);
    VectorXd y_new;
    double theta_after = kInf;
    // The proximal weight trades conditioning against how far the elastic
    // problem may move x. Start heavy and relax until the violation actually
    // drops, re-using the previous elastic solution as the next guess.
    for (double zeta = std::sqrt(mu_); zeta >= 1e-10; zeta *= 1e-2) {
        RestorationNlp resto(w_.prob, x_ref, zeta, c_scale_);
        IpmSolver rsolver(resto, ropt, /*in_restoration=*/true);
        const SolveResult rres = rsolver.run(rguess);
        const VectorXd x_new = rres.x.head(w_.n);

        VectorXd y_try = y_;
        y_try.head(w_.n) = x_new;
        VectorXd cn(w_.m);
        w_.prob.constraints(x_new, cn);
        for (int k = 0; k < w_.mi; ++k)
            y_try[w_.n + k] = c_scale_[w_.row_of_slack[k]] * cn[w_.row_of_slack[k]];
        project_interior(w_, y_try, 1e-9, 1e-9);
        const double theta_try = eval_theta(y_try);
        if (opt_.verbosity > 0)
            std::printf(
                "[ipm] restoration: zeta=%.1e status=%s its=%d theta %.3e -> %.3e\n",
                zeta, to_string(rres.report.status).c_str(), rres.report.iterations,
                theta_before, theta_try);
        if (theta_try < theta_after) {
            theta_after = theta_try;
            y_new = y_try;
        }
        if (theta_after < 0.1 * theta_before) break;
        rguess = rres.x;
    }
    if (!(theta_after < 0.9 * theta_before)) return false;

    y_ = y_new;
    lam_.setZero();
    for (int i = 0; i < w_.ny; ++i) {
        if (w_.has_lo[i]) zl_[i] = std::min(zl_[i], 1.0);
        if (w_.has_up[i]) zu_[i] = std::min(zu_[i], 1.0);
    }
    reset_filter(theta_after);
    return true;
}

}  // namespace

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::kOptimal: return "optimal";
        case SolveStatus::kAcceptable: return "acceptable";
        case SolveStatus::kInfeasible: return "infeasible";
        case SolveStatus::kIterationLimit: return "iteration-limit";
        case SolveStatus::kNumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

SolveResult solve(const Nlp& problem, const VectorXd& guess,
                  const SolveOptions& options) {
    if (options.derivative_mode == DerivativeMode::kFiniteDifference) {
        FiniteDifferenceNlp fd(problem);
        IpmSolver solver(fd, options, false);
        return solver.run(guess);
    }
    IpmSolver solver(problem, options, false);
    return solver.run(guess);
}

void FiniteDifferenceNlp::gradient(const VectorXd& x, VectorXd& grad) const {
    const int n = num_vars();
    grad.resize(n);
    VectorXd xp = x, xm = x;
    for (int i = 0; i < n; ++i) {
        xp[i] += step_;
        xm[i] -= step_;
        grad[i] = (inner_.objective(xp) - inner_.objective(xm)) / (2.0 * step_);
        xp[i] = x[i];
        xm[i] = x[i];
    }
}

void FiniteDifferenceNlp::jacobian(const VectorXd& x, Triplets& jac) const {
    const int n = num_vars(), m = num_cons();
    VectorXd cp(m), cm(m);
    VectorXd xp = x, xm = x;
    for (int j = 0; j < n; ++j) {
        xp[j] += step_;
        xm[j] -= step_;
        inner_.constraints(xp, cp);
        inner_.constraints(xm, cm);
        for (int i = 0; i < m; ++i) {
            const double v = (cp[i] - cm[i]) / (2.0 * step_);
            if (v != 0.0) jac.emplace_back(i, j, v);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
}

void FiniteDifferenceNlp::lagrangian_hessian(const VectorXd& x, double obj_weight,
                                             const VectorXd& lambda,
                                             Triplets& hess) const {
    const int n = num_vars();
    const auto lag_grad = [&](const VectorXd& xx) {
        VectorXd g;
        gradient(xx, g);
        g *= obj_weight;
        Triplets j;
        jacobian(xx, j);
        for (const auto& t : j) g[t.col()] += lambda[t.row()] * t.value();
        return g;
    };
    VectorXd xp = x, xm = x;
    const double h = std::sqrt(step_);
    for (int j = 0; j < n; ++j) {
        xp[j] += h;
        xm[j] -= h;
        const VectorXd col = (lag_grad(xp) - lag_grad(xm)) / (2.0 * h);
        for (int i = j; i < n; ++i)
            if (col[i] != 0.0) hess.emplace_back(i, j, col[i]);
        xp[j] = x[j];
        xm[j] = x[j];
    }
}

double max_derivative_mismatch(const Nlp& problem, const VectorXd& x,
                               double fd_step) {
    const int n = problem.num_vars(), m = problem.num_cons();
    VectorXd g;
    problem.gradient(x, g);
    FiniteDifferenceNlp fd(problem, fd_step);
    VectorXd gfd;
    fd.gradient(x, gfd);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double scale = std::max({1.0, std::abs(g[i]), std::abs(gfd[i])});
        worst = std::max(worst, std::abs(g[i] - gfd[i]) / scale);
    }
    Triplets jt;
    problem.jacobian(x, jt);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, n);
    for (const auto& t : jt) J(t.row(), t.col()) += t.value();
    Triplets jfdt;
    fd.jacobian(x, jfdt);
    Eigen::MatrixXd Jfd = Eigen::MatrixXd::Zero(m, n);
    for (const auto& t : jfdt) Jfd(t.row(), t.col()) += t.value();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            const double scale =
                std::max({1.0, std::abs(J(i, j)), std::abs(Jfd(i, j))});
            worst = std::max(worst, std::abs(J(i, j) - Jfd(i, j)) / scale);
        }
    return worst;
}

}  // namespace perch::nlp
