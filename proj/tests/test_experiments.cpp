#include <gtest/gtest.h>

#include "test_support.hpp"
#include "apgarch/io.hpp"

using namespace apgarch;
using namespace apgarch::testing;

namespace {

McConfig size_config(Eigen::Index n, int N, std::uint64_t seed) {
    McConfig c;
    c.dgp_order = arch_order();
    c.dgp_params = dgp_params(true, 1.0, 1.0);
    c.fitted_order = arch_order();
    c.n = n;
    c.N = N;
    c.m_max = 6;
    c.base_seed = seed;
    c.threads = 1;
    return c;
}

McConfig power_config(Eigen::Index n, int N, std::uint64_t seed) {
    McConfig c = size_config(n, N, seed);
    c.dgp_order = garch_order();
    c.dgp_params = alternative_params(1.0, 1.0);
    c.m_max = 4;
    return c;
}

} // namespace

TEST(NominalInterval, Values) {
    const auto [lo, hi] = nominal_interval(0.05, 100);
    EXPECT_NEAR(lo, 100.0 * (0.05 - 1.959963984540054 * std::sqrt(0.05 * 0.95 / 100)), 1e-12);
    EXPECT_NEAR(hi, 100.0 * (0.05 + 1.959963984540054 * std::sqrt(0.05 * 0.95 / 100)), 1e-12);
    EXPECT_EQ(nominal_interval(0.01, 10).first, 0.0);
}

TEST(SizeExperiment, SingleReplicationIsAllOrNothing) {
    const auto res = run_size_experiment(size_config(300, 1, 5));
    ASSERT_EQ(res.n_ok, 1);
    for (Eigen::Index a = 0; a < res.rejection_freq.rows(); ++a)
        for (Eigen::Index m = 0; m < res.rejection_freq.cols(); ++m) {
            const double f = res.rejection_freq(a, m);
            EXPECT_TRUE(f == 0.0 || f == 100.0) << f;
        }
}

TEST(SizeExperiment, BitIdenticalReruns) {
    McConfig c = size_config(300, 6, 77);
    const auto a = run_size_experiment(c);
    c.threads = 3;
    const auto b = run_size_experiment(c);
    ASSERT_EQ(a.replications.size(), b.replications.size());
    for (std::size_t r = 0; r < a.replications.size(); ++r) {
        EXPECT_EQ(a.replications[r].theta_hat, b.replications[r].theta_hat);
        EXPECT_EQ(a.replications[r].stat_r, b.replications[r].stat_r);
    }
    EXPECT_EQ(a.rejection_freq, b.rejection_freq);
    EXPECT_EQ(io::mc_table_csv(c, a), io::mc_table_csv(c, b));
}

TEST(SizeExperiment, FrequenciesMonotoneInLevel) {
    const auto res = run_size_experiment(size_config(300, 20, 9));
    for (Eigen::Index m = 0; m < res.rejection_freq.cols(); ++m) {
        EXPECT_LE(res.rejection_freq(0, m), res.rejection_freq(1, m));
        EXPECT_LE(res.rejection_freq(1, m), res.rejection_freq(2, m));
    }
    EXPECT_EQ(res.ci_bounds.size(), 3u);
}

TEST(SizeExperiment, RejectsMismatchedOrder) {
    McConfig c = size_config(300, 2, 1);
    c.fitted_order = garch_order();
    EXPECT_THROW((void)run_size_experiment(c), DomainError);
    c = size_config(300, 2, 1);
    c.m_max = 300;
    EXPECT_THROW((void)run_size_experiment(c), DomainError);
}

TEST(PowerExperiment, WarnsWhenDgpIsTheNull) {
    const auto res = run_power_experiment(size_config(300, 2, 3));
    ASSERT_FALSE(res.warnings.empty());
    EXPECT_NE(res.warnings.back().find("size"), std::string::npos);
    McConfig c = power_config(300, 2, 3);
    c.dgp_params.b[0].setZero();
    EXPECT_FALSE(run_power_experiment(c).warnings.empty());
}

// The moderate design has finite fourth moments. On the heavy-tailed alternative,
// power does not grow with n.
TEST(PowerExperiment, GrowsWithSampleSize) {
    McConfig c = power_config(250, 40, 31);
    c.dgp_params = moderate_garch_params();
    const auto small = run_power_experiment(c);
    c.n = 2000;
    const auto large = run_power_experiment(c);
    EXPECT_TRUE(small.warnings.empty() || small.n_failed_fits > 0);
    EXPECT_GE(large.rejection_freq(1, 3), small.rejection_freq(1, 3));
}

TEST(McTable, Layout) {
    const McConfig c = size_config(300, 3, 2);
    const auto res = run_size_experiment(c);
    const std::string csv = io::mc_table_csv(c, res);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "delta,n,alpha,1,2,3,4,5,6,n_ok,n_failed,ci_lo,ci_hi");
    EXPECT_NE(csv.find("\"(1,1)\",300,5.0,"), std::string::npos);
    const auto raw = io::mc_raw_json(c, res);
    EXPECT_EQ(raw.at("per_replication").size(), 3u);
}
