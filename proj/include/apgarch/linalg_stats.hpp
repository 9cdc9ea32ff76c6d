#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "apgarch/errors.hpp"

namespace apgarch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Spectral functions of a symmetric positive definite matrix.
struct SymOps {
    Matrix sqrt;
    Matrix inv_sqrt;
    Matrix inv;
    double logdet = 0.0;
};

/// Relative threshold below which an eigenvalue counts as non-positive.
inline constexpr double eps_pd_relative = 1e-10;

/**
 * @brief Symmetric square root, inverse square root, inverse and log-determinant.
 *
 * The square root is the unique symmetric PSD root. Throws NotPositiveDefinite when
 * an eigenvalue falls below 1e-10 times the largest diagonal entry.
 */
[[nodiscard]] inline SymOps sym_sqrt_inv(const Matrix& m) {
    const Eigen::Index n = m.rows();
    if (n == 0 || m.cols() != n) throw DomainError("sym_sqrt_inv: matrix must be square and non-empty");
    const double scale = m.diagonal().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) throw NotPositiveDefinite(std::nan(""));
    const Vector& ev = es.eigenvalues();
    const double min_ev = ev.minCoeff();
    if (!(scale > 0.0) || !(min_ev >= eps_pd_relative * scale)) throw NotPositiveDefinite(min_ev);
    const Matrix& v = es.eigenvectors();
    const Vector root = ev.cwiseSqrt();
    SymOps out;
    out.sqrt = v * root.asDiagonal() * v.transpose();
    out.inv_sqrt = v * root.cwiseInverse().asDiagonal() * v.transpose();
    out.inv = v * ev.cwiseInverse().asDiagonal() * v.transpose();
    out.logdet = ev.array().log().sum();
    return out;
}

/// P(chi2_m > x).
[[nodiscard]] inline double chi2_sf(double x, int m) {
    if (!(x >= 0.0)) throw DomainError("chi2_sf: x must be nonnegative");
    if (m < 1) throw DomainError("chi2_sf: degrees of freedom must be positive");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::gamma_q(0.5 * m, 0.5 * x);
}

/// P(chi2_m <= x), computed so that chi2_cdf + chi2_sf == 1 to rounding.
[[nodiscard]] inline double chi2_cdf(double x, int m) { return 1.0 - chi2_sf(x, m); }

/// Standard normal CDF.
[[nodiscard]] inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Inverse of the standard normal CDF.
[[nodiscard]] inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
    if (p == 0.5) return 0.0;
    // evaluate on the lower tail and reflect, so q(p) == -q(1-p) exactly
    const double lo = p < 0.5 ? p : 1.0 - p;
    const double z = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * lo);
    return p < 0.5 ? z : -z;
}

/**
 * @brief Reproducible Gaussian source keyed by (seed, stream_id).
 *
 * Backed by std::mt19937_64 seeded through std::seed_seq; both are fully specified by
 * the standard, and the Box-Muller transform is done here, so draws are identical
 * across platforms.
 */
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                          0x61706761u};
        engine_.seed(seq);
    }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Uniform on the open interval (0,1).
    double uniform() {
        double u;
        do {
            u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        } while (u == 0.0);
        return u;
    }

    double std_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        constexpr double two_pi = 6.283185307179586476925;
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double a = two_pi * uniform();
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

[[nodiscard]] inline std::vector<double> draw_std_normal(RngStream& rng, std::size_t count) {
    if (count == 0) throw DomainError("draw_std_normal: count must be positive");
    std::vector<double> out(count);
    for (auto& x : out) x = rng.std_normal();
    return out;
}

} // namespace apgarch
