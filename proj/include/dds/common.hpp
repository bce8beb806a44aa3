#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dds {

using Complex = std::complex<double>;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s, SI exact
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Error taxonomy. The CLI maps these onto process exit codes.

/// Configuration is inconsistent or a field is out of range.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Array or grid dimensions do not match.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File missing, unreadable or corrupt.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: non-finite data, singular systems, no detectable signal.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }
inline double power_to_db(double p) { return 10.0 * std::log10(p); }

}  // namespace dds
