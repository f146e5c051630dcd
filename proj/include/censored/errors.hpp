#pragma once

#include <stdexcept>
#include <string>

namespace censored {

/// Argument outside the mathematical domain of an operation (r <= 0, x not in D, ...).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Inconsistent or unsupported configuration (invalid profile, divergent
/// integral, empty sampling region, ...).
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an estimator or check was violated.
class PreconditionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical procedure failed to reach its tolerance.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
}
}  // namespace detail

}  // namespace censored
