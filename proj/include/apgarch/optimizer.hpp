#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

namespace apgarch {

struct BfgsOptions {
    int max_iters = 1000;
    double grad_tol = 1e-5;   ///< stop when max |g_i| falls below this
    double max_step = 5.0;    ///< cap on the Euclidean length of a trial step
    int max_backtracks = 60;
    double armijo = 1e-4;
};

struct BfgsResult {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

/**
 * @brief BFGS with Armijo backtracking.
 *
 * fg(x, g) returns f(x) and fills g; a non-finite return marks x as inadmissible and the
 * line search backs off. The inverse Hessian is reset when the line search stalls and
 * updates with s'y <= 0 are skipped.
 */
template <class FG>
[[nodiscard]] BfgsResult bfgs_minimize(FG&& fg, Eigen::VectorXd x0, const BfgsOptions& opt = {}) {
    using Eigen::VectorXd;
    const Eigen::Index k = x0.size();
    BfgsResult res;
    res.x = std::move(x0);
    res.grad = VectorXd::Zero(k);
    res.f = fg(res.x, res.grad);
    if (!std::isfinite(res.f)) {
        res.message = "objective is not finite at the starting point";
        return res;
    }
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(k, k);
    bool fresh = true;
    VectorXd g_new(k), x_new(k);
    for (int it = 0; it < opt.max_iters; ++it) {
        res.iterations = it;
        if (res.grad.cwiseAbs().maxCoeff() < opt.grad_tol) {
            res.converged = true;
            res.message = "gradient tolerance reached";
            return res;
        }
        VectorXd dir = -hinv * res.grad;
        double slope = res.grad.dot(dir);
        if (!(slope < 0.0)) {
            hinv.setIdentity();
            fresh = true;
            dir = -res.grad;
            slope = res.grad.dot(dir);
        }
        const double len = dir.norm();
        double step = len > opt.max_step ? opt.max_step / len : 1.0;
        bool accepted = false;
        double f_new = 0.0;
        for (int bt = 0; bt < opt.max_backtracks; ++bt) {
            x_new = res.x + step * dir;
            f_new = fg(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= res.f + opt.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!fresh) {
                hinv.setIdentity();
                fresh = true;
                continue;
            }
            res.message = "line search failed";
            return res;
        }
        const VectorXd s = x_new - res.x;
        const VectorXd y = g_new - res.grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh) {
                hinv *= sy / y.squaredNorm();
                fresh = false;
            }
            const double rho = 1.0 / sy;
            const VectorXd hy = hinv * y;
            hinv += (rho * rho * y.dot(hy) + rho) * s * s.transpose() - rho * (hy * s.transpose() + s * hy.transpose());
        }
        res.x = x_new;
        res.f = f_new;
        res.grad = g_new;
    }
    res.iterations = opt.max_iters;
    res.converged = res.grad.cwiseAbs().maxCoeff() < opt.grad_tol;
    res.message = res.converged ? "gradient tolerance reached" : "iteration limit reached";
    return res;
}

} // namespace apgarch
