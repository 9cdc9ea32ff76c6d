#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "apgarch/errors.hpp"
#include "apgarch/linalg_stats.hpp"

namespace apgarch {

enum class PowerMode { KnownDelta, EstimatedDelta };

/// Dimensions of a CCC-APGARCH(p,q) model.
struct ModelOrder {
    int d = 1;
    int p = 0;
    int q = 0;
    PowerMode power_mode = PowerMode::KnownDelta;

    [[nodiscard]] bool estimated_delta() const noexcept { return power_mode == PowerMode::EstimatedDelta; }
    [[nodiscard]] int n_rho() const noexcept { return d * (d - 1) / 2; }
    /// Number of coefficients excluding the power vector.
    [[nodiscard]] int n_theta() const noexcept { return d + d * d * (p + 2 * q) + n_rho(); }
    [[nodiscard]] int n_params() const noexcept { return n_theta() + (estimated_delta() ? d : 0); }
    [[nodiscard]] int max_lag() const noexcept { return std::max(p, q); }

    // offsets into the flat parameter vector
    [[nodiscard]] int off_omega() const noexcept { return 0; }
    [[nodiscard]] int off_a_plus(int i) const noexcept { return d + i * d * d; }
    [[nodiscard]] int off_a_minus(int i) const noexcept { return d + (q + i) * d * d; }
    [[nodiscard]] int off_b(int j) const noexcept { return d + (2 * q + j) * d * d; }
    [[nodiscard]] int off_rho() const noexcept { return d + d * d * (p + 2 * q); }
    [[nodiscard]] int off_delta() const noexcept { return off_rho() + n_rho(); }

    void check() const {
        if (d < 1 || p < 0 || q < 0) throw DomainError("model order: need d >= 1, p >= 0, q >= 0");
    }

    friend bool operator==(const ModelOrder&, const ModelOrder&) = default;
};

/**
 * @brief Model coefficients.
 *
 * a_plus/a_minus hold q matrices, b holds p matrices (lag 1 first). rho is the strict
 * lower triangle of R read row by row: (R21, R31, R32, R41, ...). delta is always
 * present; in KnownDelta mode it is the fixed power.
 */
struct Params {
    Vector omega;
    std::vector<Matrix> a_plus;
    std::vector<Matrix> a_minus;
    std::vector<Matrix> b;
    Vector rho;
    Vector delta;
};

/// Position of R(i,j), i > j, inside the rho vector.
[[nodiscard]] inline int rho_index(int i, int j) noexcept { return i * (i - 1) / 2 + j; }

[[nodiscard]] inline Matrix correlation_matrix(const Vector& rho, int d) {
    Matrix r = Matrix::Identity(d, d);
    for (int i = 1; i < d; ++i)
        for (int j = 0; j < i; ++j) r(i, j) = r(j, i) = rho(rho_index(i, j));
    return r;
}

/// Zero-coefficient parameter set of the right shape (omega = 1, delta = 2, R = I).
[[nodiscard]] inline Params zero_params(const ModelOrder& order) {
    order.check();
    const int d = order.d;
    Params p;
    p.omega = Vector::Ones(d);
    p.a_plus.assign(order.q, Matrix::Zero(d, d));
    p.a_minus.assign(order.q, Matrix::Zero(d, d));
    p.b.assign(order.p, Matrix::Zero(d, d));
    p.rho = Vector::Zero(order.n_rho());
    p.delta = Vector::Constant(d, 2.0);
    return p;
}

inline void check_shapes(const ModelOrder& order, const Params& params) {
    order.check();
    const int d = order.d;
    auto square = [d](const Matrix& m) { return m.rows() == d && m.cols() == d; };
    bool ok = params.omega.size() == d && params.delta.size() == d && params.rho.size() == order.n_rho() &&
              static_cast<int>(params.a_plus.size()) == order.q &&
              static_cast<int>(params.a_minus.size()) == order.q && static_cast<int>(params.b.size()) == order.p;
    if (ok) {
        ok = std::all_of(params.a_plus.begin(), params.a_plus.end(), square) &&
             std::all_of(params.a_minus.begin(), params.a_minus.end(), square) &&
             std::all_of(params.b.begin(), params.b.end(), square);
    }
    if (!ok) throw DomainError("parameter dimensions do not match the model order");
}

/// Throws the matching InvalidParams subclass, otherwise returns the input unchanged.
inline const Params& validate_params(const ModelOrder& order, const Params& params) {
    check_shapes(order, params);
    for (int i = 0; i < order.d; ++i) {
        if (!(params.omega(i) > 0.0) || !std::isfinite(params.omega(i)))
            throw InvalidOmega("omega[" + std::to_string(i) + "] must be positive");
        if (!(params.delta(i) > 0.0) || !std::isfinite(params.delta(i)))
            throw InvalidDelta("delta[" + std::to_string(i) + "] must be positive");
    }
    auto nonneg = [](const std::vector<Matrix>& ms, const char* name) {
        for (const auto& m : ms)
            if (!(m.array() >= 0.0).all() || !m.allFinite())
                throw NegativeCoefficient(std::string(name) + " has a negative or non-finite entry");
    };
    nonneg(params.a_plus, "a_plus");
    nonneg(params.a_minus, "a_minus");
    nonneg(params.b, "b");
    for (Eigen::Index k = 0; k < params.rho.size(); ++k)
        if (!(std::abs(params.rho(k)) < 1.0)) throw InvalidCorrelation("correlation coefficient outside (-1,1)");
    if (order.d > 1) {
        try {
            (void)sym_sqrt_inv(correlation_matrix(params.rho, order.d));
        } catch (const NotPositiveDefinite&) {
            throw InvalidCorrelation("correlation matrix is not positive definite");
        }
    }
    return params;
}

/// Flat vector (omega, vec A+_1..q, vec A-_1..q, vec B_1..p, rho[, delta]); vec is column-major.
[[nodiscard]] inline Vector pack(const ModelOrder& order, const Params& params) {
    check_shapes(order, params);
    const int d = order.d, dd = d * d;
    Vector v(order.n_params());
    v.segment(order.off_omega(), d) = params.omega;
    for (int i = 0; i < order.q; ++i) {
        v.segment(order.off_a_plus(i), dd) = params.a_plus[i].reshaped();
        v.segment(order.off_a_minus(i), dd) = params.a_minus[i].reshaped();
    }
    for (int j = 0; j < order.p; ++j) v.segment(order.off_b(j), dd) = params.b[j].reshaped();
    v.segment(order.off_rho(), order.n_rho()) = params.rho;
    if (order.estimated_delta()) v.segment(order.off_delta(), d) = params.delta;
    return v;
}

/// Inverse of pack. In KnownDelta mode the power is taken from known_delta.
[[nodiscard]] inline Params unpack(const ModelOrder& order, const Vector& v, const Vector& known_delta) {
    order.check();
    if (v.size() != order.n_params()) throw DomainError("parameter vector has the wrong length");
    const int d = order.d, dd = d * d;
    Params p;
    p.omega = v.segment(order.off_omega(), d);
    auto mat = [&](int off) { return Matrix(v.segment(off, dd).reshaped(d, d)); };
    for (int i = 0; i < order.q; ++i) {
        p.a_plus.push_back(mat(order.off_a_plus(i)));
        p.a_minus.push_back(mat(order.off_a_minus(i)));
    }
    for (int j = 0; j < order.p; ++j) p.b.push_back(mat(order.off_b(j)));
    p.rho = v.segment(order.off_rho(), order.n_rho());
    if (order.estimated_delta()) {
        p.delta = v.segment(order.off_delta(), d);
    } else {
        if (known_delta.size() != d) throw DomainError("known delta has the wrong length");
        p.delta = known_delta;
    }
    return p;
}

/// Human-readable coordinate names, 1-based, matching pack().
[[nodiscard]] inline std::vector<std::string> param_names(const ModelOrder& order) {
    std::vector<std::string> names;
    const int d = order.d;
    auto idx = [](int k) { return std::to_string(k + 1); };
    for (int i = 0; i < d; ++i) names.push_back("omega[" + idx(i) + "]");
    auto block = [&](const std::string& base) {
        for (int c = 0; c < d; ++c)
            for (int r = 0; r < d; ++r) names.push_back(base + "[" + idx(r) + "," + idx(c) + "]");
    };
    for (int i = 0; i < order.q; ++i) block("a_plus" + idx(i));
    for (int i = 0; i < order.q; ++i) block("a_minus" + idx(i));
    for (int j = 0; j < order.p; ++j) block("b" + idx(j));
    for (int i = 1; i < d; ++i)
        for (int j = 0; j < i; ++j) names.push_back("rho[" + idx(i) + "," + idx(j) + "]");
    if (order.estimated_delta())
        for (int i = 0; i < d; ++i) names.push_back("delta[" + idx(i) + "]");
    return names;
}

} // namespace apgarch
