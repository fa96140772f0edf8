#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace flatpmp {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

/// Second derivatives of the two flat-output components, one symmetric 3x3 each.
using OutputHessian = std::array<Mat3, 2>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {g1, g2, [g1,g2]} does not span R^3 at the evaluation point.
class SpanDeficient : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
};

/// A11 <= 0 or A11*A22 - A12*A21 <= 0 at the current state.
class LegendreClebschViolated : public Error {
 public:
  using Error::Error;
};

/// The singular u2 law divides by u1; raised when |u1| is below the guard.
class U1NearZero : public Error {
 public:
  using Error::Error;
};

class GridTooCoarse : public Error {
 public:
  using Error::Error;
};

/// Error raised while integrating, tagged with the grid time that failed.
class SimulationError : public Error {
 public:
  SimulationError(double t, const std::string& what)
      : Error("t=" + std::to_string(t) + ": " + what), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace flatpmp
