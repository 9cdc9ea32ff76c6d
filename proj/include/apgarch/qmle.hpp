#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "apgarch/errors.hpp"
#include "apgarch/filter.hpp"
#include "apgarch/linalg_stats.hpp"
#include "apgarch/model.hpp"
#include "apgarch/optimizer.hpp"

namespace apgarch {

struct QuasiLoglik {
    double total = 0.0; ///< mean of per_t
    Vector per_t;       ///< eps' H^{-1} eps + log det H
};

[[nodiscard]] inline QuasiLoglik quasi_loglik(const VolatilityPath& path, const SeriesMatrix& series) {
    QuasiLoglik out;
    const Eigen::Index n = series.rows();
    out.per_t.resize(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const auto e = series.row(t).transpose();
        out.per_t(t) = e.dot(path.H_inv[t] * e) + path.logdet(t);
    }
    out.total = out.per_t.mean();
    return out;
}

[[nodiscard]] inline QuasiLoglik quasi_loglik(const ModelOrder& order, const Params& params, const SeriesMatrix& series,
                                              const InitPolicy& init = InitPolicy::omega_start()) {
    return quasi_loglik(volatility_filter(order, params, series, init, false), series);
}

/// Per-t score, n x s0: Tr[(H^{-1} - H^{-1} eps eps' H^{-1}) dH_k].
[[nodiscard]] inline Matrix score(const ModelOrder& order, const SeriesMatrix& series, const VolatilityPath& path,
                                  const DerivStack& derivs) {
    if (derivs.s0 != order.n_params())
        throw ModeMismatch("derivative stack does not match the model's parameter count");
    const int d = order.d, s0 = derivs.s0;
    const Eigen::Index n = series.rows();
    Matrix out(n, s0);
    Matrix m(d, d);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Vector u = path.H_inv[t] * series.row(t).transpose();
        m = path.H_inv[t] - u * u.transpose();
        for (int k = 0; k < s0; ++k) out(t, k) = (m.array() * derivs.dH_block(t, k).array()).sum();
    }
    return out;
}

struct InformationMatrices {
    Matrix I_hat;
    Matrix J_hat;
    Matrix vcov; ///< J^{-1} I J^{-1} / n
    Matrix J_inv;
};

/// Condition number of a symmetric matrix from its eigenvalues (infinite when not PD).
[[nodiscard]] inline double sym_condition(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

[[nodiscard]] inline InformationMatrices information_matrices(const ModelOrder& order, const SeriesMatrix& series,
                                                              const VolatilityPath& path, const DerivStack& derivs) {
    const int d = order.d, s0 = derivs.s0;
    const Eigen::Index n = series.rows();
    const Matrix sc = score(order, series, path, derivs);
    InformationMatrices out;
    out.I_hat = sc.transpose() * sc / static_cast<double>(n);
    out.J_hat = Matrix::Zero(s0, s0);
    Matrix pt(d, d * s0), a(d * d, s0), b(d * d, s0);
    for (Eigen::Index t = 0; t < n; ++t) {
        pt.noalias() = path.H_inv[t] * derivs.dH[t];
        for (int k = 0; k < s0; ++k) {
            const auto blk = pt.middleCols(k * d, d);
            b.col(k) = blk.reshaped();
            a.col(k) = blk.transpose().reshaped();
        }
        out.J_hat.noalias() += a.transpose() * b;
    }
    out.J_hat /= static_cast<double>(n);
    out.J_hat = 0.5 * (out.J_hat + out.J_hat.transpose()).eval();
    out.I_hat = 0.5 * (out.I_hat + out.I_hat.transpose()).eval();
    // judge and invert J on the unit-diagonal scale: coordinates differ by orders of magnitude
    const Vector scale = out.J_hat.diagonal().cwiseSqrt();
    if (!(scale.minCoeff() > 0.0)) throw SingularJ("information matrix J is numerically singular");
    const Vector inv_scale = scale.cwiseInverse();
    const Matrix unit = inv_scale.asDiagonal() * out.J_hat * inv_scale.asDiagonal();
    if (sym_condition(unit) > 1e12) throw SingularJ("information matrix J is numerically singular");
    out.J_inv = inv_scale.asDiagonal() * unit.ldlt().solve(Matrix::Identity(s0, s0)) * inv_scale.asDiagonal();
    out.J_inv = 0.5 * (out.J_inv + out.J_inv.transpose()).eval();
    out.vcov = out.J_inv * out.I_hat * out.J_inv / static_cast<double>(n);
    out.vcov = 0.5 * (out.vcov + out.vcov.transpose()).eval();
    return out;
}

/**
 * @brief Smooth map between the admissible parameter box and R^{s0}.
 *
 * omega = exp(u); A and B entries = eps_floor + softplus(u); rho = tanh(u);
 * delta = lo + (hi - lo) * logistic(u).
 */
class Reparam {
public:
    static constexpr double eps_floor = 1e-8;

    Reparam(ModelOrder order, double delta_lo, double delta_hi)
        : order_(order), lo_(delta_lo), hi_(delta_hi) {
        if (!(delta_lo > 0.0 && delta_lo < delta_hi)) throw DomainError("delta bounds must satisfy 0 < lo < hi");
    }

    [[nodiscard]] Vector to_model(const Vector& u) const {
        Vector x(u.size());
        for (Eigen::Index k = 0; k < u.size(); ++k) x(k) = forward(kind(k), u(k));
        return x;
    }

    [[nodiscard]] Vector to_free(const Vector& x) const {
        Vector u(x.size());
        for (Eigen::Index k = 0; k < x.size(); ++k) u(k) = inverse(kind(k), x(k));
        return u;
    }

    /// dx/du, diagonal.
    [[nodiscard]] Vector jacobian(const Vector& u) const {
        Vector j(u.size());
        for (Eigen::Index k = 0; k < u.size(); ++k) j(k) = slope(kind(k), u(k));
        return j;
    }

    /// Pulls a model-space point strictly inside the box so that to_free is finite.
    [[nodiscard]] Vector interior(const Vector& x) const {
        Vector y = x;
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            switch (kind(k)) {
            case Kind::Coef: y(k) = std::max(y(k), eps_floor + 1e-6); break;
            case Kind::Rho: y(k) = std::clamp(y(k), -0.995, 0.995); break;
            case Kind::Delta: {
                const double pad = 1e-3 * (hi_ - lo_);
                y(k) = std::clamp(y(k), lo_ + pad, hi_ - pad);
                break;
            }
            case Kind::Omega: y(k) = std::max(y(k), 1e-12); break;
            }
        }
        return y;
    }

    [[nodiscard]] double delta_lo() const noexcept { return lo_; }
    [[nodiscard]] double delta_hi() const noexcept { return hi_; }

private:
    enum class Kind { Omega, Coef, Rho, Delta };

    [[nodiscard]] Kind kind(Eigen::Index k) const {
        if (k < order_.d) return Kind::Omega;
        if (k < order_.off_rho()) return Kind::Coef;
        if (k < order_.off_delta()) return Kind::Rho;
        return Kind::Delta;
    }

    static double softplus(double u) { return u > 35.0 ? u : std::log1p(std::exp(u)); }
    static double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

    [[nodiscard]] double forward(Kind kd, double u) const {
        switch (kd) {
        case Kind::Omega: return std::exp(u);
        case Kind::Coef: return eps_floor + softplus(u);
        case Kind::Rho: return std::tanh(u);
        case Kind::Delta: return lo_ + (hi_ - lo_) * logistic(u);
        }
        return 0.0;
    }

    [[nodiscard]] double inverse(Kind kd, double x) const {
        switch (kd) {
        case Kind::Omega: return std::log(x);
        case Kind::Coef: {
            const double y = x - eps_floor;
            return y > 35.0 ? y : std::log(std::expm1(y));
        }
        case Kind::Rho: return std::atanh(x);
        case Kind::Delta: {
            const double s = (x - lo_) / (hi_ - lo_);
            return std::log(s / (1.0 - s));
        }
        }
        return 0.0;
    }

    [[nodiscard]] double slope(Kind kd, double u) const {
        switch (kd) {
        case Kind::Omega: return std::exp(u);
        case Kind::Coef: return logistic(u);
        case Kind::Rho: {
            const double th = std::tanh(u);
            return 1.0 - th * th;
        }
        case Kind::Delta: {
            const double s = logistic(u);
            return (hi_ - lo_) * s * (1.0 - s);
        }
        }
        return 0.0;
    }

    ModelOrder order_;
    double lo_;
    double hi_;
};

struct FitConfig {
    std::optional<Params> init_params; ///< empty: automatic starting values
    Vector delta;                      ///< known power, or starting power when estimated (default 2)
    int max_iters = 1000;
    double grad_tol = 1e-5;
    double delta_lo = 0.1;
    double delta_hi = 10.0;
    InitPolicy init = InitPolicy::omega_start();
    bool throw_on_failure = true; ///< throw NotConverged instead of returning converged = false
};

struct FitResult {
    ModelOrder order;
    Params params_hat;
    Vector theta_hat;
    double objective = 0.0;   ///< (1/n) sum l_t, the minimized criterion
    double loglik_mean = 0.0; ///< -objective / 2
    Matrix I_hat;
    Matrix J_hat;
    Matrix J_inv;
    Matrix vcov;
    Matrix residuals;   ///< n x d, H^{-1/2} eps with the symmetric root
    Vector quad_form;   ///< eps' H^{-1} eps
    bool converged = false;
    Eigen::Index n_used = 0;
    int iterations = 0;
    double grad_max = 0.0;
    std::string start;  ///< "auto" or "user"
    InitPolicy init;
    std::vector<std::string> warnings;
};

/// Starting values used when FitConfig has no init_params.
[[nodiscard]] inline Params auto_init(const ModelOrder& order, const SeriesMatrix& series, const Vector& delta) {
    const int d = order.d;
    Params p = zero_params(order);
    p.delta = delta.size() == d ? delta : Vector::Constant(d, 2.0);
    const Eigen::Index n = series.rows();
    const Vector mean = series.colwise().mean().transpose();
    const Matrix centered = series.rowwise() - mean.transpose();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
    const double persistence = order.p > 0 ? 0.85 : 0.0;
    for (int i = 0; i < d; ++i)
        p.omega(i) = 0.7 * (1.0 - persistence) * std::pow(std::max(cov(i, i), 1e-12), p.delta(i) / 2.0);
    auto seed_matrix = [d](double diag) {
        Matrix m = Matrix::Constant(d, d, 0.01);
        m.diagonal().setConstant(diag);
        return m;
    };
    for (int i = 0; i < order.q; ++i) p.a_plus[i] = p.a_minus[i] = seed_matrix(0.05);
    for (int j = 0; j < order.p; ++j) p.b[j] = seed_matrix(j == 0 ? 0.85 : 0.01);
    for (int i = 1; i < d; ++i)
        for (int j = 0; j < i; ++j)
            p.rho(rho_index(i, j)) = std::clamp(cov(i, j) / std::sqrt(cov(i, i) * cov(j, j)), -0.95, 0.95);
    return p;
}

namespace detail {

/// Everything evaluated at a fitted point.
inline void finalize_fit(FitResult& fr, const SeriesMatrix& series) {
    const ModelOrder& order = fr.order;
    const auto path = volatility_filter(order, fr.params_hat, series, fr.init, true);
    const auto ds = volatility_derivatives(order, fr.params_hat, series, path);
    const auto ql = quasi_loglik(path, series);
    fr.objective = ql.total;
    fr.loglik_mean = -0.5 * ql.total;
    const Eigen::Index n = series.rows();
    fr.residuals.resize(n, order.d);
    fr.quad_form.resize(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Vector e = series.row(t).transpose();
        fr.residuals.row(t) = (path.H_inv_sqrt[t] * e).transpose();
        fr.quad_form(t) = e.dot(path.H_inv[t] * e);
    }
    const auto im = information_matrices(order, series, path, ds);
    fr.I_hat = im.I_hat;
    fr.J_hat = im.J_hat;
    fr.J_inv = im.J_inv;
    fr.vcov = im.vcov;
    fr.n_used = n;
}

} // namespace detail

/// Minimizes the mean quasi-likelihood criterion over the reparameterized space.
[[nodiscard]] inline FitResult fit(const ModelOrder& order, const SeriesMatrix& series, const FitConfig& config = {}) {
    order.check();
    const int d = order.d, s0 = order.n_params();
    if (series.cols() != d) throw DomainError("fit: series has the wrong number of columns");
    if (series.rows() <= order.max_lag() + 1) throw EmptySeries("fit: series too short for the model order");
    if (!series.allFinite()) throw DomainError("fit: series has non-finite entries");
    if (config.grad_tol <= 0.0) throw DomainError("fit: grad_tol must be positive");

    FitResult fr;
    fr.order = order;
    fr.init = config.init;
    if (series.rows() < 10 * s0)
        fr.warnings.push_back("sample size below 10 times the number of parameters");

    Params start;
    if (config.init_params) {
        start = validate_params(order, *config.init_params);
        if (config.delta.size() == d && !order.estimated_delta()) start.delta = config.delta;
        fr.start = "user";
    } else {
        start = auto_init(order, series, config.delta);
        fr.start = "auto";
    }
    const Vector known_delta = start.delta;
    const Reparam rp(order, config.delta_lo, config.delta_hi);
    const Vector u0 = rp.to_free(rp.interior(pack(order, start)));

    const InitPolicy init = config.init;
    auto fg = [&](const Vector& u, Vector& g) -> double {
        const Vector x = rp.to_model(u);
        try {
            const Params pr = unpack(order, x, known_delta);
            const auto path = volatility_filter(order, pr, series, init, false);
            const auto ds = volatility_derivatives(order, pr, series, path);
            const auto ql = quasi_loglik(path, series);
            if (!std::isfinite(ql.total)) return std::numeric_limits<double>::infinity();
            const Vector gx = score(order, series, path, ds).colwise().mean().transpose();
            g = gx.cwiseProduct(rp.jacobian(u));
            if (!g.allFinite()) return std::numeric_limits<double>::infinity();
            return ql.total;
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    BfgsOptions bo;
    bo.max_iters = config.max_iters;
    bo.grad_tol = config.grad_tol;
    const BfgsResult br = bfgs_minimize(fg, u0, bo);

    fr.theta_hat = rp.to_model(br.x);
    fr.params_hat = unpack(order, fr.theta_hat, known_delta);
    fr.iterations = br.iterations;
    fr.grad_max = br.grad.size() > 0 ? br.grad.cwiseAbs().maxCoeff() : 0.0;
    fr.converged = br.converged;
    if (!br.converged && config.throw_on_failure)
        throw NotConverged("fit did not converge: " + br.message, fr.theta_hat);
    detail::finalize_fit(fr, series);
    return fr;
}

/// Fills a FitResult for a given parameter (no optimization), e.g. the true value.
[[nodiscard]] inline FitResult evaluate_at(const ModelOrder& order, const Params& params, const SeriesMatrix& series,
                                           const InitPolicy& init = InitPolicy::omega_start()) {
    FitResult fr;
    fr.order = order;
    fr.params_hat = validate_params(order, params);
    fr.theta_hat = pack(order, params);
    fr.init = init;
    fr.converged = true;
    fr.start = "user";
    detail::finalize_fit(fr, series);
    return fr;
}

} // namespace apgarch
