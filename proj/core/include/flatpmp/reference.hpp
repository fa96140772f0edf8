#pragma once

#include <functional>
#include <string>
#include <vector>

#include "flatpmp/types.hpp"

namespace flatpmp {

struct ReferenceSample {
  Vec2 y = Vec2::Zero();
  Vec2 dy = Vec2::Zero();
  Vec2 ddy = Vec2::Zero();
};

/// Desired flat-output trajectory with exact first and second derivatives.
class ReferenceSignal {
 public:
  using EvalFn = std::function<ReferenceSample(double)>;

  ReferenceSignal(double horizon, EvalFn eval, std::string name);

  double horizon() const { return horizon_; }
  const std::string& name() const { return name_; }
  ReferenceSample operator()(double t) const { return eval_(t); }
  ReferenceSample eval(double t) const { return eval_(t); }

 private:
  double horizon_;
  EvalFn eval_;
  std::string name_;
};

/// y_d(t) = (2 cos(2 pi t / T), sin(pi t / T)).
ReferenceSignal lissajous(double T);

/// Per-output polynomial sum_k c_k t^k (coefficients in ascending order).
ReferenceSignal polynomial(const std::vector<double>& coeffs1,
                           const std::vector<double>& coeffs2, double T);

}  // namespace flatpmp
