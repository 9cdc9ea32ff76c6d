#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "apgarch/errors.hpp"
#include "apgarch/filter.hpp"
#include "apgarch/linalg_stats.hpp"
#include "apgarch/qmle.hpp"

namespace apgarch {

/// Residual sums of squares and their building blocks.
struct DiagnosticSeries {
    Vector S_hat;   ///< eps' H^{-1} eps - d
    Matrix s_vecs;  ///< n x d^2, vec(eta eta' - I)
    double kappa_hat = 0.0;
};

[[nodiscard]] inline DiagnosticSeries residual_diagnostics(const FitResult& fit, int d) {
    const Eigen::Index n = fit.residuals.rows();
    if (n == 0 || fit.residuals.cols() != d) throw DomainError("residual_diagnostics: fit has no residuals of width d");
    DiagnosticSeries out;
    out.S_hat = fit.quad_form.array() - static_cast<double>(d);
    out.s_vecs.resize(n, d * d);
    const Matrix eye = Matrix::Identity(d, d);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Vector eta = fit.residuals.row(t).transpose();
        const Matrix s = eta * eta.transpose() - eye;
        out.s_vecs.row(t) = s.reshaped().transpose();
    }
    out.kappa_hat = out.S_hat.squaredNorm() / static_cast<double>(n);
    return out;
}

struct Autocov {
    Vector r_hat;
    Vector rho_hat;
    double r0 = 0.0;
};

/// r_h = (1/n) sum_{t>h} S_t S_{t-h} for h = 1..m; rho_h = r_h / r_0.
[[nodiscard]] inline Autocov autocov_sum_sq(const Vector& S, int m) {
    const Eigen::Index n = S.size();
    if (m < 1) throw DomainError("autocov_sum_sq: m must be positive");
    if (m >= n) throw LagTooLarge("maximum lag must be smaller than the sample size");
    Autocov out;
    out.r_hat.resize(m);
    out.r0 = S.squaredNorm() / static_cast<double>(n);
    for (int h = 1; h <= m; ++h)
        out.r_hat(h - 1) = S.tail(n - h).dot(S.head(n - h)) / static_cast<double>(n);
    out.rho_hat = out.r_hat / out.r0;
    return out;
}

[[nodiscard]] inline Autocov autocov_sum_sq(const DiagnosticSeries& diag, int m) { return autocov_sum_sq(diag.S_hat, m); }

enum class DMethod { General, LingLiSimplified };

/// Per-t quantities at the fitted point shared by every lag.
struct DiagnosticInputs {
    Matrix traces; ///< n x s0: Tr(H^{-1} dH_k)
    Matrix hvec_s; ///< n x s0: h_t(k)' vec(s_t), h_t(k) = vec(H^{-1/2} dH_k H^{-1/2})
};

[[nodiscard]] inline DiagnosticInputs diagnostic_inputs(const ModelOrder& order, const VolatilityPath& path,
                                                        const DerivStack& derivs, const DiagnosticSeries& diag) {
    if (!path.has_roots()) throw DomainError("diagnostic_inputs: volatility path was built without roots");
    const int s0 = derivs.s0;
    const Eigen::Index n = derivs.n();
    (void)order;
    DiagnosticInputs out;
    out.traces.resize(n, s0);
    out.hvec_s.resize(n, s0);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Matrix& hi = path.H_inv[t];
        const Matrix& hr = path.H_inv_sqrt[t];
        for (int k = 0; k < s0; ++k) {
            const auto blk = derivs.dH_block(t, k);
            out.traces(t, k) = (hi.array() * blk.array()).sum();
            const Matrix a = hr * blk * hr;
            out.hvec_s(t, k) = a.reshaped().dot(diag.s_vecs.row(t).transpose());
        }
    }
    return out;
}

struct CovarianceAssembly {
    Matrix C_m_hat;   ///< m x s0
    Matrix Sigma_hat; ///< s0 x m
    Matrix D_hat;     ///< m x m
    Matrix D_rho_hat; ///< m x m
    double asymmetry = 0.0; ///< relative asymmetry of D before symmetrization
    double kappa4 = 0.0;    ///< pooled fourth moment (simplified method only)
    DMethod method = DMethod::General;
};

/**
 * @brief Asymptotic covariance of sqrt(n) r_hat.
 *
 * General: kappa^2 I + C J^{-1} I J^{-1} C' + C Sigma + Sigma' C'. The simplified form
 * replaces the moment terms by their values under a symmetric innovation law with
 * pooled fourth moment kappa4.
 */
[[nodiscard]] inline CovarianceAssembly assemble_D(const FitResult& fit, const DiagnosticSeries& diag,
                                                   const DiagnosticInputs& in, int m, DMethod method) {
    const Eigen::Index n = diag.S_hat.size();
    const int d = fit.order.d;
    const int s0 = fit.order.n_params();
    if (m < 1) throw DomainError("assemble_D: m must be positive");
    if (m >= n) throw LagTooLarge("maximum lag must be smaller than the sample size");
    if (in.traces.rows() != n || in.traces.cols() != s0) throw DomainError("assemble_D: inputs do not match the fit");
    const double dn = static_cast<double>(n);
    const Vector& S = diag.S_hat;

    CovarianceAssembly out;
    out.method = method;
    out.C_m_hat.resize(m, s0);
    out.Sigma_hat.resize(s0, m);
    for (int h = 1; h <= m; ++h) {
        const Eigen::Index len = n - h;
        out.C_m_hat.row(h - 1) = -(S.head(len).transpose() * in.traces.bottomRows(len)) / dn;
        const Vector w = S.tail(len).cwiseProduct(S.head(len));
        out.Sigma_hat.col(h - 1) = fit.J_inv * (in.hvec_s.bottomRows(len).transpose() * w) / dn;
    }
    const Matrix omega = fit.J_inv * fit.I_hat * fit.J_inv;
    const Matrix& C = out.C_m_hat;
    Matrix D;
    if (method == DMethod::General) {
        D = diag.kappa_hat * diag.kappa_hat * Matrix::Identity(m, m) + C * omega * C.transpose() +
            C * out.Sigma_hat + out.Sigma_hat.transpose() * C.transpose();
    } else {
        out.kappa4 = fit.residuals.array().pow(4).sum() / (dn * d);
        const double k1 = out.kappa4 - 1.0;
        D = static_cast<double>(d * d) * k1 * k1 * Matrix::Identity(m, m) +
            C * (omega - 2.0 * k1 * fit.J_inv) * C.transpose();
    }
    const double scale = D.norm();
    out.asymmetry = scale > 0.0 ? (D - D.transpose()).norm() / scale : 0.0;
    out.D_hat = 0.5 * (D + D.transpose());
    out.D_rho_hat = out.D_hat / (diag.kappa_hat * diag.kappa_hat);
    return out;
}

/// Leading m x m block of an assembly computed for a larger lag.
[[nodiscard]] inline CovarianceAssembly leading_block(const CovarianceAssembly& a, int m) {
    CovarianceAssembly out;
    out.method = a.method;
    out.kappa4 = a.kappa4;
    out.asymmetry = a.asymmetry;
    out.C_m_hat = a.C_m_hat.topRows(m);
    out.Sigma_hat = a.Sigma_hat.leftCols(m);
    out.D_hat = a.D_hat.topLeftCorner(m, m);
    out.D_rho_hat = a.D_rho_hat.topLeftCorner(m, m);
    return out;
}

struct TestReport {
    int m = 0;
    Vector r_hat;
    Vector rho_hat;
    double stat_r = 0.0;
    double stat_rho = 0.0;
    double pvalue_r = 1.0;
    double pvalue_rho = 1.0;
    Vector bands; ///< half-widths; the band for lag h is [-bands(h-1), bands(h-1)]
    double alpha = 0.05;
    double condition = 1.0; ///< condition number of D_hat
};

inline constexpr double singular_d_condition = 1e12;

[[nodiscard]] inline TestReport portmanteau_test(const CovarianceAssembly& a, const Vector& r_hat, const Vector& rho_hat,
                                                 Eigen::Index n, double alpha, bool estimated_delta = false) {
    const int m = static_cast<int>(r_hat.size());
    if (a.D_hat.rows() != m || rho_hat.size() != m) throw DomainError("portmanteau_test: dimensions disagree");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("portmanteau_test: alpha must lie in (0,1)");
    TestReport rep;
    rep.m = m;
    rep.r_hat = r_hat;
    rep.rho_hat = rho_hat;
    rep.alpha = alpha;
    rep.condition = sym_condition(a.D_hat);
    if (!(rep.condition <= singular_d_condition)) {
        const std::string hint = estimated_delta ? "more than 11d+1 positive values" : "more than 3(d+1) positive values";
        throw SingularD("covariance matrix D is singular or not positive definite; the innovation law should take " +
                        hint);
    }
    const auto ldlt = a.D_hat.ldlt();
    const double dn = static_cast<double>(n);
    rep.stat_r = std::max(0.0, dn * r_hat.dot(ldlt.solve(r_hat)));
    rep.stat_rho = std::max(0.0, dn * rho_hat.dot(a.D_rho_hat.ldlt().solve(rho_hat)));
    rep.pvalue_r = chi2_sf(rep.stat_r, m);
    rep.pvalue_rho = chi2_sf(rep.stat_rho, m);
    const double u = normal_quantile(1.0 - alpha);
    rep.bands = u * a.D_rho_hat.diagonal().cwiseSqrt() / std::sqrt(dn);
    return rep;
}

/// Everything the diagnostic produces for lags 1..m_max.
struct DiagnosticsReport {
    DiagnosticSeries series;
    Autocov autocov;         ///< up to m_max
    CovarianceAssembly full; ///< for m_max
    std::vector<TestReport> tests; ///< m = 1..m_max
    std::vector<std::string> failures; ///< messages for lags whose D was singular
    std::vector<int> singular_lags;
};

/// Residual diagnostics and the tests for every m up to m_max.
[[nodiscard]] inline DiagnosticsReport diagnose(const FitResult& fit, const SeriesMatrix& series, int m_max, double alpha,
                                                DMethod method = DMethod::General) {
    const ModelOrder& order = fit.order;
    DiagnosticsReport rep;
    rep.series = residual_diagnostics(fit, order.d);
    rep.autocov = autocov_sum_sq(rep.series, m_max);
    const auto path = volatility_filter(order, fit.params_hat, series, fit.init, true);
    const auto ds = volatility_derivatives(order, fit.params_hat, series, path);
    const auto in = diagnostic_inputs(order, path, ds, rep.series);
    rep.full = assemble_D(fit, rep.series, in, m_max, method);
    for (int m = 1; m <= m_max; ++m) {
        const auto blk = leading_block(rep.full, m);
        try {
            rep.tests.push_back(portmanteau_test(blk, rep.autocov.r_hat.head(m), rep.autocov.rho_hat.head(m),
                                                 series.rows(), alpha, order.estimated_delta()));
        } catch (const SingularD& e) {
            rep.failures.push_back("m=" + std::to_string(m) + ": " + e.what());
            rep.singular_lags.push_back(m);
        }
    }
    return rep;
}

} // namespace apgarch
