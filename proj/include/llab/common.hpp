#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace llab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

using ScalarFn = std::function<double(const Vec2&)>;
using VectorFn = std::function<Vec2(const Vec2&)>;
using MatrixFn = std::function<Mat2(const Vec2&)>;
using ComplexFn = std::function<cplx(const Vec2&)>;

// Error categories surfaced to callers and to the CLI exit-code mapping.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hoelder conjugate, with the endpoint conventions 1 <-> inf.
inline double conjugate_exponent(double s) {
  if (s == kInf) return 1.0;
  if (s <= 1.0) return kInf;
  return s / (s - 1.0);
}

}  // namespace llab
