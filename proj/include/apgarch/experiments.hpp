#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "apgarch/errors.hpp"
#include "apgarch/filter.hpp"
#include "apgarch/linalg_stats.hpp"
#include "apgarch/model.hpp"
#include "apgarch/portmanteau.hpp"
#include "apgarch/qmle.hpp"

namespace apgarch {

struct McConfig {
    ModelOrder dgp_order;
    Params dgp_params;
    ModelOrder fitted_order;
    Eigen::Index n = 500;
    int N = 100;
    int m_max = 12;
    std::vector<double> alphas{0.01, 0.05, 0.10};
    std::uint64_t base_seed = 0;
    Eigen::Index burn_in = 500;
    Vector fit_delta;   ///< known power used by the fit (or its start); empty means the DGP power
    DMethod method = DMethod::General;
    int threads = 0;    ///< 0: hardware concurrency
    int max_iters = 1000;
    double grad_tol = 1e-5;
};

struct ReplicationRecord {
    int index = 0;
    bool ok = false;
    std::string error;
    Vector stat_r;   ///< m = 1..m_max
    Vector pvalue_r;
    Vector pvalue_rho;
    Vector theta_hat;
    double objective = 0.0;
    int iterations = 0;
};

struct McResult {
    std::vector<double> alphas;
    int m_max = 0;
    Matrix rejection_freq; ///< alphas x m_max, percent
    int n_failed_fits = 0;
    int n_ok = 0;
    std::vector<std::pair<double, double>> ci_bounds; ///< 95% binomial band around each nominal level, percent
    double elapsed = 0.0;
    std::vector<ReplicationRecord> replications;
    std::vector<std::string> warnings;
};

class McAborted : public Error {
public:
    McAborted(int failed, int total)
        : Error("Monte Carlo run aborted: " + std::to_string(failed) + " of " + std::to_string(total) +
                " fits failed"),
          failed_(failed), total_(total) {}
    [[nodiscard]] int failed() const noexcept { return failed_; }
    [[nodiscard]] int total() const noexcept { return total_; }

private:
    int failed_;
    int total_;
};

/// Normal-approximation 95% interval for a rejection rate alpha observed over N replications, in percent.
[[nodiscard]] inline std::pair<double, double> nominal_interval(double alpha, int N) {
    const double half = 1.959963984540054 * std::sqrt(alpha * (1.0 - alpha) / std::max(N, 1));
    return {100.0 * std::max(0.0, alpha - half), 100.0 * std::min(1.0, alpha + half)};
}

/// One simulate / fit / test cycle; never throws for model failures.
[[nodiscard]] inline ReplicationRecord run_replication(const McConfig& cfg, int r) {
    ReplicationRecord rec;
    rec.index = r;
    try {
        RngStream rng(cfg.base_seed, static_cast<std::uint64_t>(r));
        const SeriesMatrix y = simulate(cfg.dgp_order, cfg.dgp_params, cfg.n, cfg.burn_in, rng);
        FitConfig fc;
        fc.delta = cfg.fit_delta.size() == cfg.fitted_order.d ? cfg.fit_delta : cfg.dgp_params.delta;
        fc.max_iters = cfg.max_iters;
        fc.grad_tol = cfg.grad_tol;
        const FitResult fr = fit(cfg.fitted_order, y, fc);
        const DiagnosticsReport dr = diagnose(fr, y, cfg.m_max, 0.05, cfg.method);
        if (!dr.failures.empty()) throw SingularD(dr.failures.front());
        rec.stat_r.resize(cfg.m_max);
        rec.pvalue_r.resize(cfg.m_max);
        rec.pvalue_rho.resize(cfg.m_max);
        for (int m = 0; m < cfg.m_max; ++m) {
            rec.stat_r(m) = dr.tests[m].stat_r;
            rec.pvalue_r(m) = dr.tests[m].pvalue_r;
            rec.pvalue_rho(m) = dr.tests[m].pvalue_rho;
        }
        rec.theta_hat = fr.theta_hat;
        rec.objective = fr.objective;
        rec.iterations = fr.iterations;
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

namespace detail {

inline void check_mc_config(const McConfig& cfg) {
    if (cfg.N < 1) throw DomainError("Monte Carlo: N must be positive");
    if (cfg.m_max < 1 || cfg.m_max >= cfg.n) throw DomainError("Monte Carlo: need 1 <= m_max < n");
    if (cfg.alphas.empty()) throw DomainError("Monte Carlo: no test levels given");
    for (double a : cfg.alphas)
        if (!(a > 0.0 && a < 1.0)) throw DomainError("Monte Carlo: levels must lie in (0,1)");
    if (cfg.dgp_order.d != cfg.fitted_order.d) throw DomainError("Monte Carlo: DGP and fitted dimensions differ");
    validate_params(cfg.dgp_order, cfg.dgp_params);
}

inline McResult run_experiment(const McConfig& cfg) {
    check_mc_config(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    McResult res;
    res.alphas = cfg.alphas;
    res.m_max = cfg.m_max;
    res.replications.resize(cfg.N);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int n_threads = std::clamp(cfg.threads > 0 ? cfg.threads : static_cast<int>(hw), 1, cfg.N);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int r = next.fetch_add(1); r < cfg.N; r = next.fetch_add(1)) res.replications[r] = run_replication(cfg, r);
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // ordered reduction
    const int na = static_cast<int>(cfg.alphas.size());
    Matrix counts = Matrix::Zero(na, cfg.m_max);
    for (const auto& rec : res.replications) {
        if (!rec.ok) {
            ++res.n_failed_fits;
            continue;
        }
        ++res.n_ok;
        for (int a = 0; a < na; ++a)
            for (int m = 0; m < cfg.m_max; ++m)
                if (rec.pvalue_r(m) < cfg.alphas[a]) counts(a, m) += 1.0;
    }
    res.rejection_freq = res.n_ok > 0 ? Matrix(100.0 * counts / res.n_ok) : Matrix::Zero(na, cfg.m_max);
    for (double a : cfg.alphas) res.ci_bounds.push_back(nominal_interval(a, res.n_ok));
    res.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (res.n_failed_fits > 0)
        res.warnings.push_back(std::to_string(res.n_failed_fits) + " replication(s) failed and were excluded");
    if (5 * res.n_failed_fits > cfg.N) throw McAborted(res.n_failed_fits, cfg.N);
    return res;
}

} // namespace detail

/// Rejection frequencies when the fitted model is the data-generating one.
[[nodiscard]] inline McResult run_size_experiment(const McConfig& cfg) {
    const auto& a = cfg.dgp_order;
    const auto& b = cfg.fitted_order;
    if (a.d != b.d || a.p != b.p || a.q != b.q)
        throw DomainError("size experiment: the fitted order must equal the DGP order");
    return detail::run_experiment(cfg);
}

/// Rejection frequencies when the data come from an alternative to the fitted model.
[[nodiscard]] inline McResult run_power_experiment(const McConfig& cfg) {
    const auto& a = cfg.dgp_order;
    const auto& b = cfg.fitted_order;
    bool null_dgp = a.d == b.d && a.p == b.p && a.q == b.q;
    if (!null_dgp && a.q <= b.q) {
        // an alternative whose extra lags are all zero is the null in disguise
        bool extra_zero = true;
        for (int j = b.p; j < a.p; ++j) extra_zero = extra_zero && cfg.dgp_params.b[j].isZero(0.0);
        null_dgp = extra_zero;
    }
    McResult res = detail::run_experiment(cfg);
    if (null_dgp)
        res.warnings.push_back("the DGP coincides with the fitted null model; frequencies estimate size, not power");
    return res;
}

} // namespace apgarch
