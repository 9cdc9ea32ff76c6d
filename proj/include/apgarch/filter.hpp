#pragma once

#include <cmath>
#include <vector>

#include "apgarch/errors.hpp"
#include "apgarch/linalg_stats.hpp"
#include "apgarch/model.hpp"

namespace apgarch {

/// n x d matrix, row t is the return vector at time t.
using SeriesMatrix = Matrix;

/// Values assumed before the first observation.
struct InitPolicy {
    enum class Kind { OmegaStart, Custom };
    Kind kind = Kind::OmegaStart;
    Vector h_pow; ///< Custom only: pre-sample h^{delta/2}, used for every lag
    Vector eps;   ///< Custom only: pre-sample returns, used for every lag (empty means zero)

    [[nodiscard]] static InitPolicy omega_start() { return {}; }
    [[nodiscard]] static InitPolicy custom(Vector h_pow, Vector eps = {}) {
        return {Kind::Custom, std::move(h_pow), std::move(eps)};
    }
    [[nodiscard]] const char* name() const noexcept { return kind == Kind::OmegaStart ? "omega_start" : "custom"; }
};

inline constexpr double overflow_bound = 1e300;

/// Conditional volatility quantities along a series.
struct VolatilityPath {
    Matrix h_pow; ///< n x d, h^{delta/2}
    Matrix h;     ///< n x d
    Matrix corr;  ///< R
    Matrix corr_inv;
    double corr_logdet = 0.0;
    std::vector<Matrix> H;
    std::vector<Matrix> H_inv;
    std::vector<Matrix> H_inv_sqrt; ///< empty unless roots were requested
    Vector logdet;                  ///< log det H_t
    InitPolicy init;

    [[nodiscard]] Eigen::Index n() const noexcept { return h.rows(); }
    [[nodiscard]] bool has_roots() const noexcept { return !H_inv_sqrt.empty(); }
};

namespace detail {

/// Powered positive and negative parts of one return vector.
inline void powered_parts(const Eigen::Ref<const Vector>& eps, const Vector& delta, Eigen::Ref<Vector> plus,
                          Eigen::Ref<Vector> minus) {
    for (Eigen::Index i = 0; i < eps.size(); ++i) {
        const double e = eps(i);
        plus(i) = e > 0.0 ? std::pow(e, delta(i)) : 0.0;
        minus(i) = e < 0.0 ? std::pow(-e, delta(i)) : 0.0;
    }
}

/// Returns with q pre-sample rows prepended, then their powered parts.
struct PaddedReturns {
    Matrix plus;  ///< (q + n) x d
    Matrix minus; ///< (q + n) x d
    Matrix raw;   ///< (q + n) x d
};

inline PaddedReturns pad_returns(const ModelOrder& order, const Params& params, const SeriesMatrix& series,
                                 const InitPolicy& init) {
    const int d = order.d, q = order.q;
    const Eigen::Index n = series.rows();
    PaddedReturns pr;
    pr.raw.resize(q + n, d);
    Vector pre = Vector::Zero(d);
    if (init.kind == InitPolicy::Kind::Custom && init.eps.size() > 0) {
        if (init.eps.size() != d) throw DomainError("custom init eps has the wrong length");
        pre = init.eps;
    }
    for (int s = 0; s < q; ++s) pr.raw.row(s) = pre.transpose();
    pr.raw.bottomRows(n) = series;
    pr.plus.resize(q + n, d);
    pr.minus.resize(q + n, d);
    Vector pl(d), mi(d);
    for (Eigen::Index s = 0; s < q + n; ++s) {
        powered_parts(pr.raw.row(s).transpose(), params.delta, pl, mi);
        pr.plus.row(s) = pl.transpose();
        pr.minus.row(s) = mi.transpose();
    }
    return pr;
}

inline Vector presample_h_pow(const ModelOrder& order, const Params& params, const InitPolicy& init) {
    if (init.kind == InitPolicy::Kind::OmegaStart) return params.omega;
    if (init.h_pow.size() != order.d) throw DomainError("custom init h_pow has the wrong length");
    if (!(init.h_pow.array() > 0.0).all()) throw DomainError("custom init h_pow must be positive");
    return init.h_pow;
}

} // namespace detail

/**
 * @brief Runs the power recursion for h^{delta/2} and builds H_t = D_t R D_t.
 *
 * Every observation follows the recursion; lags that reach before the sample use the
 * InitPolicy values (OmegaStart: h^{delta/2} = omega and zero returns).
 * With with_roots the symmetric H_t^{-1/2} is also stored.
 */
[[nodiscard]] inline VolatilityPath volatility_filter(const ModelOrder& order, const Params& params,
                                                      const SeriesMatrix& series,
                                                      const InitPolicy& init = InitPolicy::omega_start(),
                                                      bool with_roots = true) {
    check_shapes(order, params);
    const int d = order.d, p = order.p, q = order.q;
    const Eigen::Index n = series.rows();
    if (n < 1) throw EmptySeries("volatility_filter: empty series");
    if (series.cols() != d) throw DomainError("series has the wrong number of columns");

    VolatilityPath path;
    path.init = init;
    path.corr = correlation_matrix(params.rho, d);
    {
        const SymOps r = sym_sqrt_inv(path.corr);
        path.corr_inv = r.inv;
        path.corr_logdet = r.logdet;
    }
    const auto pr = detail::pad_returns(order, params, series, init);
    const Vector h0 = detail::presample_h_pow(order, params, init);

    path.h_pow.resize(n, d);
    path.h.resize(n, d);
    path.H.resize(n);
    path.H_inv.resize(n);
    path.logdet.resize(n);
    if (with_roots) path.H_inv_sqrt.resize(n);

    Vector hp(d), sd(d);
    for (Eigen::Index t = 0; t < n; ++t) {
        hp = params.omega;
        for (int i = 1; i <= q; ++i) {
            const Eigen::Index s = q + t - i;
            hp.noalias() += params.a_plus[i - 1] * pr.plus.row(s).transpose();
            hp.noalias() += params.a_minus[i - 1] * pr.minus.row(s).transpose();
        }
        for (int j = 1; j <= p; ++j) {
            if (t - j >= 0)
                hp.noalias() += params.b[j - 1] * path.h_pow.row(t - j).transpose();
            else
                hp.noalias() += params.b[j - 1] * h0;
        }
        if (!hp.allFinite() || hp.maxCoeff() > overflow_bound) throw NumericOverflow(static_cast<std::size_t>(t));
        path.h_pow.row(t) = hp.transpose();
        double ld = path.corr_logdet;
        for (int i = 0; i < d; ++i) {
            const double h = std::pow(hp(i), 2.0 / params.delta(i));
            if (!std::isfinite(h) || h > overflow_bound || !(h > 0.0)) throw NumericOverflow(static_cast<std::size_t>(t));
            path.h(t, i) = h;
            sd(i) = std::sqrt(h);
            ld += std::log(h);
        }
        path.H[t] = sd.asDiagonal() * path.corr * sd.asDiagonal();
        path.H_inv[t] = sd.cwiseInverse().asDiagonal() * path.corr_inv * sd.cwiseInverse().asDiagonal();
        path.logdet(t) = ld;
        if (with_roots) path.H_inv_sqrt[t] = sym_sqrt_inv(path.H[t]).inv_sqrt;
    }
    return path;
}

/// Derivatives of the volatility path with respect to the flat parameter vector.
struct DerivStack {
    int s0 = 0;
    int d = 0;
    std::vector<Matrix> dh_pow; ///< per t, s0 x d: d h_i^{delta_i/2} / d theta_k
    std::vector<Matrix> dh;     ///< per t, s0 x d: d h_i / d theta_k
    std::vector<Matrix> dH;     ///< per t, d x (d*s0): block k is dH_t / d theta_k

    [[nodiscard]] Eigen::Index n() const noexcept { return static_cast<Eigen::Index>(dh_pow.size()); }
    [[nodiscard]] auto dH_block(Eigen::Index t, int k) const { return dH[t].middleCols(k * d, d); }
};

/**
 * @brief Analytic derivative recursion for h^{delta/2}, h and H.
 *
 * with_delta adds the power coordinates; it must agree with the model's power mode.
 * Pre-sample values are differentiated too: under OmegaStart the starting h^{delta/2}
 * is omega itself.
 */
[[nodiscard]] inline DerivStack volatility_derivatives(const ModelOrder& order, const Params& params,
                                                       const SeriesMatrix& series, const VolatilityPath& path,
                                                       bool with_delta) {
    if (with_delta && !order.estimated_delta())
        throw ModeMismatch("delta coordinates requested for a known-delta model");
    if (!with_delta && order.estimated_delta())
        throw ModeMismatch("known-delta derivatives requested for an estimated-delta model");
    check_shapes(order, params);
    const int d = order.d, p = order.p, q = order.q, s0 = order.n_params();
    const Eigen::Index n = series.rows();
    if (path.n() != n) throw DomainError("volatility path does not match the series");

    const auto pr = detail::pad_returns(order, params, series, path.init);
    const Vector h0 = detail::presample_h_pow(order, params, path.init);
    // log(x) * x^delta for the powered parts, zero where the part vanishes
    Matrix lplus, lminus;
    if (with_delta) {
        lplus = Matrix::Zero(pr.raw.rows(), d);
        lminus = Matrix::Zero(pr.raw.rows(), d);
        for (Eigen::Index s = 0; s < pr.raw.rows(); ++s)
            for (int c = 0; c < d; ++c) {
                const double e = pr.raw(s, c);
                if (e > 0.0) lplus(s, c) = std::log(e) * pr.plus(s, c);
                if (e < 0.0) lminus(s, c) = std::log(-e) * pr.minus(s, c);
            }
    }
    Matrix g0 = Matrix::Zero(s0, d); // derivative of the pre-sample h^{delta/2}
    if (path.init.kind == InitPolicy::Kind::OmegaStart)
        for (int i = 0; i < d; ++i) g0(order.off_omega() + i, i) = 1.0;

    DerivStack ds;
    ds.s0 = s0;
    ds.d = d;
    ds.dh_pow.resize(n);
    ds.dh.resize(n);
    ds.dH.resize(n);

    Matrix g(s0, d);
    for (Eigen::Index t = 0; t < n; ++t) {
        g.setZero();
        for (int i = 0; i < d; ++i) g(order.off_omega() + i, i) = 1.0;
        for (int l = 1; l <= q; ++l) {
            const Eigen::Index s = q + t - l;
            const int op = order.off_a_plus(l - 1), om = order.off_a_minus(l - 1);
            for (int c = 0; c < d; ++c)
                for (int r = 0; r < d; ++r) {
                    g(op + r + c * d, r) = pr.plus(s, c);
                    g(om + r + c * d, r) = pr.minus(s, c);
                }
            if (with_delta) {
                for (int c = 0; c < d; ++c)
                    for (int r = 0; r < d; ++r)
                        g(order.off_delta() + c, r) +=
                            params.a_plus[l - 1](r, c) * lplus(s, c) + params.a_minus[l - 1](r, c) * lminus(s, c);
            }
        }
        for (int j = 1; j <= p; ++j) {
            const int ob = order.off_b(j - 1);
            const bool inside = t - j >= 0;
            for (int c = 0; c < d; ++c) {
                const double lag = inside ? path.h_pow(t - j, c) : h0(c);
                for (int r = 0; r < d; ++r) g(ob + r + c * d, r) += lag;
            }
            g.noalias() += (inside ? ds.dh_pow[t - j] : g0) * params.b[j - 1].transpose();
        }
        ds.dh_pow[t] = g;

        Matrix& dh = ds.dh[t];
        dh.resize(s0, d);
        Vector sd(d), dd(d);
        for (int i = 0; i < d; ++i) {
            const double f = 2.0 / params.delta(i) * path.h(t, i) / path.h_pow(t, i);
            dh.col(i) = f * g.col(i);
            if (with_delta)
                dh(order.off_delta() + i, i) -=
                    2.0 / (params.delta(i) * params.delta(i)) * path.h(t, i) * std::log(path.h_pow(t, i));
            sd(i) = std::sqrt(path.h(t, i));
        }
        Matrix& dH = ds.dH[t];
        dH.resize(d, d * s0);
        const int orho = order.off_rho();
        for (int k = 0; k < s0; ++k) {
            auto blk = dH.middleCols(k * d, d);
            if (k >= orho && k < orho + order.n_rho()) {
                blk.setZero();
                continue;
            }
            for (int a = 0; a < d; ++a) dd(a) = dh(k, a) / (2.0 * sd(a));
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) blk(a, b) = path.corr(a, b) * (dd(a) * sd(b) + sd(a) * dd(b));
        }
        for (int i = 1; i < d; ++i)
            for (int j = 0; j < i; ++j) {
                auto blk = dH.middleCols((orho + rho_index(i, j)) * d, d);
                blk(i, j) = blk(j, i) = sd(i) * sd(j);
            }
    }
    return ds;
}

[[nodiscard]] inline DerivStack volatility_derivatives(const ModelOrder& order, const Params& params,
                                                       const SeriesMatrix& series, const VolatilityPath& path) {
    return volatility_derivatives(order, params, series, path, order.estimated_delta());
}

/**
 * @brief Draws a path of length n after discarding burn_in values.
 *
 * Innovations are iid N(0, I_d) and returns are eps_t = D_t R^{1/2} eta_t, with the
 * recursion started at h^{delta/2} = omega and zero returns.
 */
[[nodiscard]] inline SeriesMatrix simulate(const ModelOrder& order, const Params& params, Eigen::Index n,
                                           Eigen::Index burn_in, RngStream& rng) {
    validate_params(order, params);
    if (n < 1 || burn_in < 0) throw DomainError("simulate: need n >= 1 and burn_in >= 0");
    const int d = order.d, p = order.p, q = order.q;
    const Eigen::Index total = n + burn_in;
    const Matrix r_root = sym_sqrt_inv(correlation_matrix(params.rho, d)).sqrt;

    Matrix eps = Matrix::Zero(total, d);
    Matrix plus = Matrix::Zero(total, d), minus = Matrix::Zero(total, d);
    Matrix hpow(total, d);
    Vector hp(d), eta(d), sd(d), pl(d), mi(d);
    for (Eigen::Index t = 0; t < total; ++t) {
        hp = params.omega;
        for (int i = 1; i <= q && t - i >= 0; ++i) {
            hp.noalias() += params.a_plus[i - 1] * plus.row(t - i).transpose();
            hp.noalias() += params.a_minus[i - 1] * minus.row(t - i).transpose();
        }
        for (int j = 1; j <= p; ++j)
            hp.noalias() += params.b[j - 1] * (t - j >= 0 ? Vector(hpow.row(t - j).transpose()) : params.omega);
        if (!hp.allFinite() || hp.maxCoeff() > overflow_bound) throw NumericOverflow(static_cast<std::size_t>(t));
        hpow.row(t) = hp.transpose();
        for (int i = 0; i < d; ++i) sd(i) = std::pow(hp(i), 1.0 / params.delta(i));
        for (int i = 0; i < d; ++i) eta(i) = rng.std_normal();
        const Vector e = sd.asDiagonal() * (r_root * eta);
        if (!e.allFinite()) throw NumericOverflow(static_cast<std::size_t>(t));
        eps.row(t) = e.transpose();
        detail::powered_parts(e, params.delta, pl, mi);
        plus.row(t) = pl.transpose();
        minus.row(t) = mi.transpose();
    }
    return eps.bottomRows(n);
}

} // namespace apgarch
