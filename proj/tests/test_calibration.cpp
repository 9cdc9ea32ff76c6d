#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace apgarch;
using namespace apgarch::testing;

// Long-running: 100 fits at n = 5000.
TEST(Calibration, SandwichStandardErrorsMatchSpread) {
    const ModelOrder o = arch_order();
    const Params p = dgp_params(true, 1.0, 1.0);
    const Vector theta0 = pack(o, p);
    const int reps = 100;
    Matrix z(reps, theta0.size());
    for (int r = 0; r < reps; ++r) {
        const SeriesMatrix y = simulate_dgp(o, p, 5000, 4242, r);
        FitConfig c;
        c.delta = p.delta;
        const FitResult fr = fit(o, y, c);
        z.row(r) = ((fr.theta_hat - theta0).array() / fr.vcov.diagonal().array().sqrt()).transpose();
    }
    const auto names = param_names(o);
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
        const double mean = z.col(k).mean();
        const double sd = std::sqrt((z.col(k).array() - mean).square().sum() / (reps - 1));
        EXPECT_GE(sd, 0.8) << names[k];
        EXPECT_LE(sd, 1.25) << names[k];
        EXPECT_LT(std::abs(mean), 0.45) << names[k];
    }
}
