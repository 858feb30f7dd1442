#ifndef MVMD_ERRORS_HPP
#define MVMD_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mvmd {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A model or product failed validation (bad weights, non-PSD correlation, ...).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operation outside the supported scope (e.g. closed-form tau beyond 2x2).
class UnsupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Numerical failure: factorization breakdown, non-convergence.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integrated covariance of a component tuple is not invertible.
class SingularCovarianceError : public NumericalError {
public:
    explicit SingularCovarianceError(std::vector<std::size_t> tuple)
        : NumericalError(describe(tuple)), tuple_(std::move(tuple)) {}

    const std::vector<std::size_t>& tuple() const noexcept { return tuple_; }

private:
    static std::string describe(const std::vector<std::size_t>& tuple) {
        std::string s = "integrated covariance is singular for component tuple (";
        for (std::size_t i = 0; i < tuple.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(tuple[i]);
        }
        return s + ")";
    }

    std::vector<std::size_t> tuple_;
};

}  // namespace mvmd

#endif  // MVMD_ERRORS_HPP
