// Damped Gauss-Newton (Levenberg-Marquardt) minimisation of a weighted sum of
// squares, with optional box bounds enforced by projection.
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qphot {

struct LevMarOptions {
    int max_iterations = 500;
    double initial_damping = 1e-3;
    double relative_tolerance = 1e-12;  // on chi^2 decrease and on step size
    std::optional<Eigen::VectorXd> lower;
    std::optional<Eigen::VectorXd> upper;
};

struct LevMarResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;  // (J^T J)^-1 at the solution
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

/// Minimises sum r_i(p)^2. `model(p, r, J)` fills the residual vector `r`
/// (already divided by the per-point sigma) and its Jacobian `J` = dr/dp.
template <class Model>
LevMarResult levenberg_marquardt(Model&& model, Eigen::VectorXd p, const LevMarOptions& opt = {}) {
    const auto n = p.size();
    auto project = [&](Eigen::VectorXd& q) {
        if (opt.lower) q = q.cwiseMax(*opt.lower);
        if (opt.upper) q = q.cwiseMin(*opt.upper);
    };
    project(p);

    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    model(p, r, jac);
    double chi2 = r.squaredNorm();
    double damping = opt.initial_damping;

    LevMarResult out;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd grad = jac.transpose() * r;
        if (grad.lpNorm<Eigen::Infinity>() == 0.0) {
            out.converged = true;
            out.message = "zero gradient";
            break;
        }

        // Parameters sitting on a bound with the descent direction pointing
        // outwards are held fixed for this step.
        std::vector<bool> active(static_cast<std::size_t>(n), false);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (opt.lower && p(i) <= (*opt.lower)(i) && grad(i) > 0.0) active[static_cast<std::size_t>(i)] = true;
            if (opt.upper && p(i) >= (*opt.upper)(i) && grad(i) < 0.0) active[static_cast<std::size_t>(i)] = true;
        }

        bool accepted = false;
        bool small_step = false;
        while (damping < 1e16) {
            Eigen::MatrixXd a = jtj;
            Eigen::VectorXd rhs = -grad;
            for (Eigen::Index i = 0; i < n; ++i) {
                a(i, i) += damping * std::max(jtj(i, i), 1e-300);
                if (active[static_cast<std::size_t>(i)]) {
                    a.row(i).setZero();
                    a.col(i).setZero();
                    a(i, i) = 1.0;
                    rhs(i) = 0.0;
                }
            }
            Eigen::VectorXd step = a.ldlt().solve(rhs);
            Eigen::VectorXd trial = p + step;
            project(trial);
            Eigen::VectorXd r_trial;
            Eigen::MatrixXd j_trial;
            model(trial, r_trial, j_trial);
            const double chi2_trial = r_trial.squaredNorm();
            if (std::isfinite(chi2_trial) && chi2_trial <= chi2) {
                const double decrease = chi2 - chi2_trial;
                small_step = (trial - p).norm() <= opt.relative_tolerance * (p.norm() + opt.relative_tolerance) ||
                             decrease <= opt.relative_tolerance * std::max(chi2, 1e-300);
                p = trial;
                r = std::move(r_trial);
                jac = std::move(j_trial);
                chi2 = chi2_trial;
                damping = std::max(damping / 10.0, 1e-15);
                accepted = true;
                break;
            }
            damping *= 10.0;
        }
        if (!accepted) {
            // No downhill step at any damping: at a minimum to machine precision.
            out.converged = true;
            out.message = "no further decrease";
            break;
        }
        if (small_step) {
            out.converged = true;
            out.message = "converged";
            ++it;
            break;
        }
    }
    if (!out.converged) out.message = "iteration cap reached";

    out.params = p;
    out.chi2 = chi2;
    out.iterations = it;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    out.covariance = lu.isInvertible() ? Eigen::MatrixXd(lu.inverse())
                                       : Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    return out;
}

}  // namespace qphot
