#include "flatpmp/systems.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace flatpmp {

void InputBounds::validate() const {
  if (!(u1_max > 0.0) || !(u2_max > 0.0)) {
    throw std::invalid_argument("input bounds must be strictly positive");
  }
}

namespace {

FlatOutputMap first_two_coordinates() {
  return FlatOutputMap::analytic(
      [](const Vec3& x) -> Vec2 { return x.head<2>(); },
      [](const Vec3&) -> Mat23 {
        Mat23 J = Mat23::Zero();
        J(0, 0) = 1.0;
        J(1, 1) = 1.0;
        return J;
      },
      [](const Vec3&) -> OutputHessian { return {Mat3::Zero(), Mat3::Zero()}; });
}

Vec3 axle_g1(const Vec3& x) { return {std::sin(x[2]), std::cos(x[2]), 0.0}; }
Vec3 unit_z(const Vec3&) { return {0.0, 0.0, 1.0}; }

}  // namespace

FlatSystemDescriptor steerable_axle() {
  FlatSystemDescriptor s;
  s.name = "steerable_axle";
  s.g1 = SmoothVectorField::analytic(axle_g1, [](const Vec3& x) -> Mat3 {
    Mat3 J = Mat3::Zero();
    J(0, 2) = std::cos(x[2]);
    J(1, 2) = -std::sin(x[2]);
    return J;
  });
  s.g2 = SmoothVectorField::analytic(unit_z,
                                     [](const Vec3&) -> Mat3 { return Mat3::Zero(); });
  s.phi = first_two_coordinates();
  return s;
}

FlatSystemDescriptor steerable_axle_fd() {
  FlatSystemDescriptor s;
  s.name = "steerable_axle_fd";
  s.g1 = SmoothVectorField::finite_difference(axle_g1);
  s.g2 = SmoothVectorField::finite_difference(unit_z);
  s.phi = FlatOutputMap::finite_difference([](const Vec3& x) -> Vec2 { return x.head<2>(); });
  return s;
}

FlatSystemDescriptor chained_form() {
  FlatSystemDescriptor s;
  s.name = "chained_form";
  s.g1 = SmoothVectorField::analytic(
      [](const Vec3& z) -> Vec3 { return {1.0, z[2], 0.0}; },
      [](const Vec3&) -> Mat3 {
        Mat3 J = Mat3::Zero();
        J(1, 2) = 1.0;
        return J;
      });
  s.g2 = SmoothVectorField::analytic(unit_z,
                                     [](const Vec3&) -> Mat3 { return Mat3::Zero(); });
  s.phi = first_two_coordinates();
  return s;
}

Vec3 vector_field_rhs(const FlatSystemDescriptor& system, const Vec3& x,
                      const Vec2& u) {
  if (!system.admissible(x)) {
    throw OutOfDomain("state outside the admissible domain of " + system.name);
  }
  return system.g1.eval(x) * u[0] + system.g2.eval(x) * u[1];
}

namespace {

const std::map<std::string, FlatSystemDescriptor (*)()>& registry() {
  static const std::map<std::string, FlatSystemDescriptor (*)()> r{
      {"steerable_axle", &steerable_axle},
      {"chained_form", &chained_form},
  };
  return r;
}

}  // namespace

FlatSystemDescriptor make_system(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) {
    throw std::out_of_range("unknown system '" + name + "'");
  }
  return it->second();
}

std::vector<std::string> system_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : registry()) names.push_back(name);
  return names;
}

FlatnessReport flatness_check(const FlatSystemDescriptor& system,
                              std::span<const Vec3> samples) {
  return flatness_check(system.g1, system.g2, system.phi, samples);
}

}  // namespace flatpmp
