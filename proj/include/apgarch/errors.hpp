#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace apgarch {

/// Base class of everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    explicit NotPositiveDefinite(double min_eigenvalue)
        : Error("matrix is not positive definite (min eigenvalue " + std::to_string(min_eigenvalue) + ")"),
          min_eigenvalue_(min_eigenvalue) {}
    [[nodiscard]] double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

class InvalidParams : public Error {
public:
    using Error::Error;
};
class InvalidOmega : public InvalidParams {
public:
    using InvalidParams::InvalidParams;
};
class NegativeCoefficient : public InvalidParams {
public:
    using InvalidParams::InvalidParams;
};
class InvalidCorrelation : public InvalidParams {
public:
    using InvalidParams::InvalidParams;
};
class InvalidDelta : public InvalidParams {
public:
    using InvalidParams::InvalidParams;
};

class NumericOverflow : public Error {
public:
    explicit NumericOverflow(std::size_t t)
        : Error("volatility recursion overflowed at t=" + std::to_string(t)), t_(t) {}
    [[nodiscard]] std::size_t t() const noexcept { return t_; }

private:
    std::size_t t_;
};

class DegenerateOrder : public Error {
public:
    using Error::Error;
};

class ModeMismatch : public Error {
public:
    using Error::Error;
};

class NotConverged : public Error {
public:
    NotConverged(std::string what, Eigen::VectorXd last_iterate)
        : Error(std::move(what)), last_iterate_(std::move(last_iterate)) {}
    /// Last parameter vector in model coordinates.
    [[nodiscard]] const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }

private:
    Eigen::VectorXd last_iterate_;
};

class SingularJ : public Error {
public:
    using Error::Error;
};

class SingularD : public Error {
public:
    using Error::Error;
};

class LagTooLarge : public Error {
public:
    using Error::Error;
};

class MissingColumn : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, std::string column, const std::string& detail)
        : Error("parse error at row " + std::to_string(row) + ", column '" + column + "': " + detail),
          row_(row), column_(std::move(column)) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

class EmptySeries : public Error {
public:
    using Error::Error;
};

} // namespace apgarch
