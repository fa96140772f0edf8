#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flatpmp/geometry.hpp"

namespace flatpmp {

/// Driftless system xdot = g1(x) u1 + g2(x) u2 on R^3 with flat output phi.
/// The input basis is expected to be normalized so that L_{g2} phi = 0.
struct FlatSystemDescriptor {
  std::string name;
  SmoothVectorField g1;
  SmoothVectorField g2;
  FlatOutputMap phi;
  /// Admissible states. Empty means all of R^3.
  std::function<bool(const Vec3&)> domain;

  bool admissible(const Vec3& x) const {
    return x.allFinite() && (!domain || domain(x));
  }
};

struct InputBounds {
  double u1_max = 10.0;
  double u2_max = 10.0;

  /// Throws std::invalid_argument unless both bounds are strictly positive.
  void validate() const;
};

/// Kinematic steerable axle: g1 = (sin x3, cos x3, 0), g2 = (0, 0, 1),
/// phi = (x1, x2).
FlatSystemDescriptor steerable_axle();

/// Chained form: g1 = d/dz1 + z3 d/dz2, g2 = d/dz3, phi = (z1, z2).
FlatSystemDescriptor chained_form();

/// The axle with every derivative replaced by central differences.
FlatSystemDescriptor steerable_axle_fd();

/// g1 u1 + g2 u2. Throws OutOfDomain.
Vec3 vector_field_rhs(const FlatSystemDescriptor& system, const Vec3& x,
                      const Vec2& u);

/// Looks up a built-in system by name; throws std::out_of_range.
FlatSystemDescriptor make_system(const std::string& name);
std::vector<std::string> system_names();

FlatnessReport flatness_check(const FlatSystemDescriptor& system,
                              std::span<const Vec3> samples);

}  // namespace flatpmp
