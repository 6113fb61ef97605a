#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace nelson {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Error hierarchy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or malformed input (exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at a point where the form factor is singular (k = 0).
class SingularInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Basis size above the configured cap.
class DimensionOverflowError : public ValidationError {
 public:
  DimensionOverflowError(const std::string& what, std::size_t requested)
      : ValidationError(what), requested_(requested) {}
  std::size_t requested() const { return requested_; }

 private:
  std::size_t requested_;
};

/// An iterative method stopped before reaching its tolerance (exit code 3).
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double partial_value, double residual)
      : Error(what), partial_value_(partial_value), residual_(residual) {}
  double partial_value() const { return partial_value_; }
  double residual() const { return residual_; }

 private:
  double partial_value_;
  double residual_;
};

/// A non-vacuum excited state with (numerically) vanishing D_f.
class DegenerateGridError : public Error {
 public:
  using Error::Error;
};

/// Value with an optional one-sigma error and a divergence flag.
struct Estimate {
  double value = 0.0;
  std::optional<double> error;
  bool divergent = false;

  static Estimate diverges() { return {std::numeric_limits<double>::quiet_NaN(), std::nullopt, true}; }
};

}  // namespace nelson
