#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rha {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cd kJ{0.0, 1.0};

// Thrown for inputs outside an operation's mathematical domain (angles,
// dimensions, unsupported orders).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Internal consistency guard (e.g. a block that should be Hermitian is not).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline double to_db(double linear) {
  if (!(linear > 0.0)) return -100.0;
  double v = 10.0 * std::log10(linear);
  return v < -100.0 ? -100.0 : v;
}

inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace rha
