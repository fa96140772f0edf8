#include "flatpmp/reference.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flatpmp {

ReferenceSignal::ReferenceSignal(double horizon, EvalFn eval, std::string name)
    : horizon_(horizon), eval_(std::move(eval)), name_(std::move(name)) {
  if (!(horizon_ > 0.0)) {
    throw std::invalid_argument("reference horizon must be positive");
  }
}

ReferenceSignal lissajous(double T) {
  if (!(T > 0.0)) throw std::invalid_argument("lissajous period must be positive");
  const double w1 = 2.0 * std::numbers::pi / T;
  const double w2 = std::numbers::pi / T;
  return ReferenceSignal(
      T,
      [w1, w2](double t) {
        const double c1 = std::cos(w1 * t), s1 = std::sin(w1 * t);
        const double c2 = std::cos(w2 * t), s2 = std::sin(w2 * t);
        ReferenceSample r;
        r.y = {2.0 * c1, s2};
        r.dy = {-2.0 * w1 * s1, w2 * c2};
        r.ddy = {-2.0 * w1 * w1 * c1, -w2 * w2 * s2};
        return r;
      },
      "lissajous");
}

namespace {

// value, first and second derivative by Horner's scheme
std::array<double, 3> horner(const std::vector<double>& c, double t) {
  double p = 0.0, dp = 0.0, ddp = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    ddp = ddp * t + 2.0 * dp;
    dp = dp * t + p;
    p = p * t + *it;
  }
  return {p, dp, ddp};
}

}  // namespace

ReferenceSignal polynomial(const std::vector<double>& coeffs1,
                           const std::vector<double>& coeffs2, double T) {
  return ReferenceSignal(
      T,
      [coeffs1, coeffs2](double t) {
        const auto a = horner(coeffs1, t);
        const auto b = horner(coeffs2, t);
        ReferenceSample r;
        r.y = {a[0], b[0]};
        r.dy = {a[1], b[1]};
        r.ddy = {a[2], b[2]};
        return r;
      },
      "polynomial");
}

}  // namespace flatpmp
