#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "apgarch/errors.hpp"
#include "apgarch/linalg_stats.hpp"
#include "apgarch/model.hpp"

namespace apgarch {

struct LyapunovEstimate {
    double gamma_hat = 0.0;
    long n_products = 0;
    double std_err = 0.0;
};

/// Companion matrix of the stacked powered-return / h^{delta/2} state for one draw of eta-bar.
[[nodiscard]] inline Matrix companion_matrix(const ModelOrder& order, const Params& params, const Vector& eta_bar) {
    const int d = order.d, p = order.p, q = order.q;
    const int k = (2 * q + p) * d;
    Matrix top(d, k);
    for (int i = 0; i < q; ++i) {
        top.middleCols(i * d, d) = params.a_plus[i];
        top.middleCols((q + i) * d, d) = params.a_minus[i];
    }
    for (int j = 0; j < p; ++j) top.middleCols((2 * q + j) * d, d) = params.b[j];

    Vector ups_plus(d), ups_minus(d);
    for (int i = 0; i < d; ++i) {
        const double e = eta_bar(i);
        ups_plus(i) = e > 0.0 ? std::pow(e, params.delta(i)) : 0.0;
        ups_minus(i) = e < 0.0 ? std::pow(-e, params.delta(i)) : 0.0;
    }
    Matrix c = Matrix::Zero(k, k);
    auto section = [&](int start, int lags, const Matrix& first) {
        if (lags == 0) return;
        c.middleRows(start, d) = first;
        for (int l = 1; l < lags; ++l) c.block(start + l * d, start + (l - 1) * d, d, d).setIdentity();
    };
    section(0, q, ups_plus.asDiagonal() * top);
    section(q * d, q, ups_minus.asDiagonal() * top);
    section(2 * q * d, p, top);
    return c;
}

/**
 * @brief Top Lyapunov exponent of the companion-matrix sequence.
 *
 * Products are renormalized by their Frobenius norm every renorm_period steps. The
 * standard error comes from 20 batch means.
 */
[[nodiscard]] inline LyapunovEstimate lyapunov_exponent(const ModelOrder& order, const Params& params, RngStream& rng,
                                                        long n_products = 10000, int renorm_period = 10) {
    validate_params(order, params);
    if (order.p + order.q == 0) throw DegenerateOrder("Lyapunov exponent needs p + q >= 1");
    if (n_products < 10000) throw DomainError("Lyapunov exponent needs at least 10000 products");
    if (renorm_period < 1) throw DomainError("renormalization period must be positive");
    const int d = order.d;
    const Matrix r_root = sym_sqrt_inv(correlation_matrix(params.rho, d)).sqrt;
    const int k = (2 * order.q + order.p) * d;

    constexpr int batches = 20;
    long batch_len = n_products / batches;
    batch_len -= batch_len % renorm_period;
    if (batch_len < renorm_period) batch_len = renorm_period;

    Matrix prod = Matrix::Identity(k, k);
    Vector eta(d);
    double total_log = 0.0, batch_log = 0.0;
    long batch_count = 0;
    std::vector<double> rates;
    bool vanished = false;
    auto renormalize = [&]() {
        const double nrm = prod.norm();
        if (!(nrm > 0.0)) {
            vanished = true;
            return;
        }
        const double l = std::log(nrm);
        total_log += l;
        batch_log += l;
        prod /= nrm;
    };
    for (long t = 1; t <= n_products; ++t) {
        for (int i = 0; i < d; ++i) eta(i) = rng.std_normal();
        prod = companion_matrix(order, params, r_root * eta) * prod;
        ++batch_count;
        if (t % renorm_period == 0 || t == n_products) renormalize();
        if (vanished) break;
        if (batch_count == batch_len && static_cast<int>(rates.size()) < batches) {
            if (t % renorm_period != 0) renormalize();
            rates.push_back(batch_log / static_cast<double>(batch_len));
            batch_log = 0.0;
            batch_count = 0;
        }
    }
    LyapunovEstimate est;
    est.n_products = n_products;
    if (vanished) {
        est.gamma_hat = -std::numeric_limits<double>::infinity();
        return est;
    }
    est.gamma_hat = total_log / static_cast<double>(n_products);
    if (rates.size() > 1) {
        double mean = 0.0;
        for (double r : rates) mean += r;
        mean /= static_cast<double>(rates.size());
        double var = 0.0;
        for (double r : rates) var += (r - mean) * (r - mean);
        var /= static_cast<double>(rates.size() - 1);
        est.std_err = std::sqrt(var / static_cast<double>(rates.size()));
    }
    return est;
}

} // namespace apgarch
