#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace apgarch;
using namespace apgarch::testing;

namespace {

Vector mean_score_at(const ModelOrder& o, const Params& p, const SeriesMatrix& y) {
    const auto path = volatility_filter(o, p, y, InitPolicy::omega_start(), false);
    const auto ds = volatility_derivatives(o, p, y, path);
    return score(o, y, path, ds).colwise().mean().transpose();
}

FitConfig known(const Vector& delta) {
    FitConfig c;
    c.delta = delta;
    return c;
}

} // namespace

TEST(QuasiLoglik, ZeroDataIdentityCovariance) {
    const ModelOrder o{2, 0, 0};
    Params p = zero_params(o);
    SeriesMatrix y = SeriesMatrix::Zero(1, 2);
    const auto ql = quasi_loglik(o, p, y);
    EXPECT_DOUBLE_EQ(ql.per_t(0), 0.0);
    EXPECT_DOUBLE_EQ(ql.total, 0.0);
}

TEST(QuasiLoglik, ScalarReduction) {
    const ModelOrder o{1, 0, 0};
    Params p = zero_params(o);
    SeriesMatrix y(1, 1);
    y << 2.0;
    EXPECT_NEAR(quasi_loglik(o, p, y).per_t(0), 4.0, 1e-15);
}

TEST(QuasiLoglik, MatchesBruteForceOracle) {
    RngStream rng(404, 0);
    for (const ModelOrder o : {arch_order(), garch_order(PowerMode::EstimatedDelta), ModelOrder{3, 2, 1}}) {
        const Params p = o.d == 2 && o.p == 0 ? dgp_params(false, 1.0, 1.0) : random_params(o, rng);
        for (Eigen::Index n : {5, 50}) {
            RngStream sim(n, 1);
            const SeriesMatrix y = simulate(o, p, n, 10, sim);
            const auto ql = quasi_loglik(o, p, y);
            const auto oracle = brute_loglik(o, p, y);
            double total = 0.0;
            for (Eigen::Index t = 0; t < n; ++t) {
                EXPECT_NEAR(ql.per_t(t), oracle[t], 1e-10);
                total += oracle[t];
            }
            EXPECT_NEAR(ql.total, total / n, 1e-10);
        }
    }
}

TEST(Score, FiniteDifferencesPerObservation) {
    RngStream rng(8, 0);
    for (auto mode : {PowerMode::KnownDelta, PowerMode::EstimatedDelta}) {
        const ModelOrder o = garch_order(mode);
        for (int point = 0; point < 5; ++point) {
            const Params p = random_params(o, rng);
            RngStream sim(point, 2);
            const SeriesMatrix y = simulate(o, p, 60, 50, sim);
            const auto path = volatility_filter(o, p, y);
            const Matrix sc = score(o, y, path, volatility_derivatives(o, p, y, path));
            const Vector x0 = pack(o, p);
            for (int k = 0; k < o.n_params(); ++k) {
                const double h = 1e-6 * std::max(1.0, std::abs(x0(k)));
                Vector a = x0, b = x0;
                a(k) += h;
                b(k) -= h;
                const Vector fa = quasi_loglik(o, unpack(o, a, p.delta), y).per_t;
                const Vector fb = quasi_loglik(o, unpack(o, b, p.delta), y).per_t;
                for (Eigen::Index t = 0; t < y.rows(); ++t) {
                    const double fd = (fa(t) - fb(t)) / (2 * h);
                    EXPECT_LE(std::abs(fd - sc(t, k)), 1e-5 * std::abs(sc(t, k)) + 1e-7)
                        << "mode " << static_cast<int>(mode) << " k=" << k << " t=" << t;
                }
            }
        }
    }
}

TEST(Score, TraceFormEqualsVecForm) {
    RngStream rng(12, 0);
    const ModelOrder o = garch_order(PowerMode::EstimatedDelta);
    for (int point = 0; point < 10; ++point) {
        const Params p = random_params(o, rng);
        RngStream sim(point, 3);
        const SeriesMatrix y = simulate(o, p, 30, 20, sim);
        const auto path = volatility_filter(o, p, y);
        const auto ds = volatility_derivatives(o, p, y, path);
        const Matrix sc = score(o, y, path, ds);
        for (Eigen::Index t = 0; t < y.rows(); ++t) {
            const Vector eta = path.H_inv_sqrt[t] * y.row(t).transpose();
            const Matrix s = eta * eta.transpose() - Matrix::Identity(2, 2);
            for (int k = 0; k < o.n_params(); ++k) {
                const Matrix hk = path.H_inv_sqrt[t] * ds.dH_block(t, k) * path.H_inv_sqrt[t];
                EXPECT_NEAR(sc(t, k), -hk.reshaped().dot(s.reshaped()), 1e-10 * std::max(1.0, std::abs(sc(t, k))));
            }
        }
    }
}

TEST(Score, MartingaleAtTruth) {
    const ModelOrder o = garch_order(PowerMode::EstimatedDelta);
    const Params p = alternative_params(1.0, 1.0);
    const SeriesMatrix y = simulate_dgp(o, p, 20000, 606);
    const auto path = volatility_filter(o, p, y);
    const Matrix sc = score(o, y, path, volatility_derivatives(o, p, y, path));
    const double n = static_cast<double>(y.rows());
    for (int k = 0; k < o.n_params(); ++k) {
        const double mean = sc.col(k).mean();
        const double se = std::sqrt((sc.col(k).array() - mean).square().sum() / (n - 1) / n);
        EXPECT_LT(std::abs(mean), 3.0 * se) << "coordinate " << k;
    }
}

TEST(Score, ModeMismatch) {
    const Params p = dgp_params(true, 1.0, 1.0);
    const SeriesMatrix y = simulate_dgp(arch_order(), p, 20, 1);
    const auto path = volatility_filter(arch_order(), p, y);
    const auto ds = volatility_derivatives(arch_order(), p, y, path);
    EXPECT_THROW((void)score(arch_order(PowerMode::EstimatedDelta), y, path, ds), ModeMismatch);
}

TEST(Reparam, RoundTrip) {
    const ModelOrder o{3, 1, 2, PowerMode::EstimatedDelta};
    const Reparam rp(o, 0.1, 10.0);
    RngStream rng(1, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const Vector x = pack(o, random_params(o, rng));
        const Vector back = rp.to_model(rp.to_free(x));
        for (Eigen::Index k = 0; k < x.size(); ++k) EXPECT_NEAR(back(k), x(k), 1e-12 * std::max(1.0, std::abs(x(k))));
        Vector u(x.size());
        for (Eigen::Index k = 0; k < u.size(); ++k) u(k) = 2.0 * rng.std_normal();
        const Vector uu = rp.to_free(rp.to_model(u));
        for (Eigen::Index k = 0; k < u.size(); ++k) EXPECT_NEAR(uu(k), u(k), 1e-9 * std::max(1.0, std::abs(u(k))));
        // jacobian against differences
        const Vector jac = rp.jacobian(u);
        for (Eigen::Index k = 0; k < u.size(); ++k) {
            Vector a = u, b = u;
            a(k) += 1e-6;
            b(k) -= 1e-6;
            EXPECT_NEAR((rp.to_model(a)(k) - rp.to_model(b)(k)) / 2e-6, jac(k), 1e-6 * std::max(1.0, std::abs(jac(k))));
        }
    }
    EXPECT_THROW(Reparam(o, 2.0, 1.0), DomainError);
}

TEST(InformationMatrices, SymmetryAndSandwich) {
    const ModelOrder o = garch_order(PowerMode::EstimatedDelta);
    const Params p = moderate_garch_params(1.2, 1.6);
    const SeriesMatrix y = simulate_dgp(o, p, 2000, 71);
    const FitResult fr = evaluate_at(o, p, y);
    EXPECT_LE((fr.I_hat - fr.I_hat.transpose()).cwiseAbs().maxCoeff(), 1e-10 * fr.I_hat.cwiseAbs().maxCoeff());
    EXPECT_LE((fr.J_hat - fr.J_hat.transpose()).cwiseAbs().maxCoeff(), 1e-10 * fr.J_hat.cwiseAbs().maxCoeff());
    EXPECT_LE((fr.vcov - fr.vcov.transpose()).cwiseAbs().maxCoeff(), 1e-8 * fr.vcov.cwiseAbs().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (fr.vcov + fr.vcov.transpose()));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * es.eigenvalues().maxCoeff());
    EXPECT_GT(fr.vcov.diagonal().minCoeff(), 0.0);
    const Matrix expected = fr.J_inv * fr.I_hat * fr.J_inv / static_cast<double>(y.rows());
    EXPECT_TRUE(fr.vcov.isApprox(expected, 1e-10));
    // I_hat is the mean outer product of the score
    const auto path = volatility_filter(o, p, y);
    const Matrix sc = score(o, y, path, volatility_derivatives(o, p, y, path));
    EXPECT_TRUE(fr.I_hat.isApprox(sc.transpose() * sc / static_cast<double>(y.rows()), 1e-10));
}

TEST(InformationMatrices, SingularWhenCoefficientUnidentified) {
    // only positive returns: A- never enters the likelihood
    const ModelOrder o{1, 0, 1};
    Params p = zero_params(o);
    p.omega << 0.5;
    p.a_plus[0] << 0.2;
    p.a_minus[0] << 0.2;
    RngStream rng(3, 0);
    SeriesMatrix y(500, 1);
    for (Eigen::Index t = 0; t < 500; ++t) y(t, 0) = 0.1 + std::abs(rng.std_normal());
    EXPECT_THROW((void)evaluate_at(o, p, y), SingularJ);
}

TEST(InformationMatrices, BartlettIdentityAtOptimum) {
    // J_hat approximates the Hessian of the criterion; the gap is sampling noise of order n^(-1/2)
    const ModelOrder o = arch_order();
    const Params p = dgp_params(true, 1.0, 1.0);
    auto gap = [&](Eigen::Index n) {
        const SeriesMatrix y = simulate_dgp(o, p, n, 300);
        const FitResult fr = fit(o, y, known(p.delta));
        const int s0 = o.n_params();
        Matrix hess(s0, s0);
        for (int k = 0; k < s0; ++k) {
            const double h = 1e-5 * std::max(1.0, std::abs(fr.theta_hat(k)));
            Vector a = fr.theta_hat, b = fr.theta_hat;
            a(k) += h;
            b(k) -= h;
            hess.col(k) = (mean_score_at(o, unpack(o, a, p.delta), y) - mean_score_at(o, unpack(o, b, p.delta), y)) / (2 * h);
        }
        hess = 0.5 * (hess + hess.transpose());
        return (hess - fr.J_hat).norm() / fr.J_hat.norm();
    };
    const double g5k = gap(5000);
    const double g80k = gap(80000);
    EXPECT_LT(g80k, 5e-3);
    EXPECT_LT(g80k, g5k);
}

TEST(Fit, ConsistencyOnSimulatedData) {
    // tolerances: 4x the spread of 20 seeds (omega sd 0.0022/0.0065, rho sd 0.0078) fit inside 0.1 / 0.05
    const ModelOrder o = arch_order();
    const Params p = dgp_params(true, 1.0, 1.0);
    for (std::uint64_t seed : {1000u, 1007u, 1013u}) {
        const FitResult fr = fit(o, simulate_dgp(o, p, 5000, seed), known(p.delta));
        EXPECT_TRUE(fr.converged);
        EXPECT_NEAR(fr.params_hat.omega(0), 0.2, 0.1);
        EXPECT_NEAR(fr.params_hat.omega(1), 0.3, 0.1);
        EXPECT_NEAR(fr.params_hat.rho(0), 0.7, 0.05);
        EXPECT_EQ(fr.n_used, 5000);
        EXPECT_EQ(fr.start, "auto");
        EXPECT_NEAR(fr.loglik_mean, -0.5 * fr.objective, 1e-15);
    }
}

TEST(Fit, EstimatedDeltaRecoversPower) {
    const ModelOrder o = arch_order(PowerMode::EstimatedDelta);
    const Params p = dgp_params(false, 1.0, 1.0);
    const FitResult fr = fit(o, simulate_dgp(o, p, 5000, 55), {});
    EXPECT_TRUE(fr.converged);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(fr.params_hat.delta(i), 1.0, 4.0 * std::sqrt(fr.vcov(o.off_delta() + i, o.off_delta() + i)));
}

TEST(Fit, ResidualsUseSymmetricRoot) {
    const ModelOrder o = arch_order();
    const Params p = dgp_params(true, 1.0, 1.0);
    const SeriesMatrix y = simulate_dgp(o, p, 300, 2);
    const FitResult fr = fit(o, y, known(p.delta));
    const auto path = volatility_filter(o, fr.params_hat, y);
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
        const Matrix root = sym_sqrt_inv(path.H[t]).inv_sqrt;
        EXPECT_TRUE(fr.residuals.row(t).transpose().isApprox(root * y.row(t).transpose(), 1e-12));
        EXPECT_NEAR(fr.quad_form(t), fr.residuals.row(t).squaredNorm(), 1e-10 * std::max(1.0, fr.quad_form(t)));
    }
}

TEST(Fit, PerturbedRestartIsNotBetter) {
    const ModelOrder o = garch_order();
    const Params p = alternative_params();
    const SeriesMatrix y = simulate_dgp(o, p, 2000, 91);
    FitConfig c = known(p.delta);
    const FitResult first = fit(o, y, c);
    Params start = first.params_hat;
    start.omega *= 1.01;
    c.init_params = start;
    const FitResult second = fit(o, y, c);
    EXPECT_EQ(second.start, "user");
    EXPECT_GE(second.objective, first.objective - c.grad_tol);
}

TEST(Fit, Deterministic) {
    const ModelOrder o = garch_order(PowerMode::EstimatedDelta);
    const Params p = moderate_garch_params(1.5, 1.2);
    const SeriesMatrix y = simulate_dgp(o, p, 800, 13);
    const FitResult a = fit(o, y, {});
    const FitResult b = fit(o, y, {});
    EXPECT_EQ(a.theta_hat, b.theta_hat);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Fit, InitPolicyEffectVanishes) {
    // n * |difference of mean criteria| converges, so it is bounded in n
    const ModelOrder o = garch_order();
    const Params p = alternative_params();
    const SeriesMatrix y = simulate_dgp(o, p, 2000, 17);
    Vector h0(2), e0(2);
    h0 << 2.0, 0.4;
    e0 << 1.0, -1.0;
    std::vector<double> scaled;
    for (Eigen::Index n : {500, 1000, 2000}) {
        const SeriesMatrix yn = y.topRows(n);
        const double a = quasi_loglik(o, p, yn).total;
        const double b = quasi_loglik(o, p, yn, InitPolicy::custom(h0, e0)).total;
        scaled.push_back(static_cast<double>(n) * std::abs(a - b));
    }
    EXPECT_GT(scaled[0], 0.0);
    EXPECT_NEAR(scaled[1], scaled[0], 1e-8 * std::max(1.0, scaled[0]));
    EXPECT_NEAR(scaled[2], scaled[0], 1e-8 * std::max(1.0, scaled[0]));
}

TEST(Fit, ErrorsAndWarnings) {
    const ModelOrder o = garch_order();
    const Params p = alternative_params();
    const SeriesMatrix y = simulate_dgp(o, p, 60, 4);
    FitConfig c = known(p.delta);
    c.max_iters = 1;
    EXPECT_THROW((void)fit(o, y, c), NotConverged);
    c.throw_on_failure = false;
    const FitResult fr = fit(o, y, c);
    EXPECT_FALSE(fr.converged);
    EXPECT_FALSE(fr.warnings.empty()); // n < 10 s0
    EXPECT_THROW((void)fit(o, y.topRows(2), known(p.delta)), EmptySeries);
    c.grad_tol = 0.0;
    EXPECT_THROW((void)fit(o, y, c), DomainError);
}
