#pragma once

#include <limits>
#include <map>
#include <string>

#include "vpdirac/vec3.hpp"

namespace vpdirac {

enum class ProfileKind {
  /// c * min(r/l, 1)^alpha * exp(-r/l) * exp(-|v|^2 / (2 sigma^2)), r = |x - xi0|.
  RadialGaussian,
  /// Uniform in a spatial ball, Maxwellian in velocity.
  UniformBall,
  /// Uniform on a phase-space box [c - a, c + a]^3 x [-b, b]^3.
  UniformBox,
};

std::string to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(const std::string& name);

/// Named profile plus its parameters, as read from a config file.
struct ProfileSpec {
  ProfileKind kind = ProfileKind::RadialGaussian;
  double mass = 0.9;
  double alpha = 0.6;    // radial_gaussian: near-charge exponent
  double r_scale = 1.0;  // radial_gaussian: spatial scale l
  double v_scale = 1.0;  // radial_gaussian / uniform_ball: thermal speed sigma
  double radius = 1.0;   // uniform_ball
  double half_x = 1.0;   // uniform_box: spatial half width a
  double half_v = 1.0;   // uniform_box: velocity half width b
  Vec3 center{};         // uniform_ball / uniform_box spatial center

  friend bool operator==(const ProfileSpec&, const ProfileSpec&) = default;
};

/// Energy split into the four non-negative contributions of the repulsive system.
struct EnergyComponents {
  double plasma_kinetic = 0.0;
  double charge_kinetic = 0.0;
  double plasma_plasma = 0.0;
  double plasma_charge = 0.0;

  double total() const { return plasma_kinetic + charge_kinetic + plasma_plasma + plasma_charge; }
};

/// Analytic initial phase-space density f0 together with the initial state of
/// the point charge. Construction validates the existence hypotheses: total
/// mass below one, finite energy and finite energy moments of every order
/// below m0 (which forces alpha >= m0/2 - 3 near the charge).
class InitialDensity {
 public:
  static constexpr double kDefaultM0 = 6.5;

  /// Validating builder. Throws InvalidArgument with a diagnostic message.
  static InitialDensity create(const ProfileSpec& spec, const Vec3& xi0, const Vec3& eta0,
                               double m0 = kDefaultM0);

  /// The built-in default datum: radial_gaussian, alpha 0.6, mass 0.9,
  /// charge at the origin moving with eta0 = (0.5, 0, 0).
  static InitialDensity default_profile();

  double operator()(const Vec3& x, const Vec3& v) const;

  const ProfileSpec& spec() const { return spec_; }
  ProfileKind kind() const { return spec_.kind; }
  const Vec3& charge_center() const { return xi0_; }
  const Vec3& charge_velocity() const { return eta0_; }
  double total_mass() const { return spec_.mass; }
  double m0() const { return m0_; }
  /// Normalization constant c of the profile.
  double normalization() const { return norm_; }
  /// Exponent a with f0 ~ |x - xi0|^a near the charge; +inf when f0 vanishes
  /// in a neighbourhood of xi0.
  double near_charge_exponent() const;
  /// sup f0 over phase space.
  double sup_norm() const;

  /// Maps a point of the unit cube to phase space. Returns the point and the
  /// inverse proposal density 1/g(x, v), so that f0 * jacobian / N is the
  /// quadrature weight of one of N samples.
  struct Mapped {
    Vec3 x;
    Vec3 v;
    double jacobian;
  };
  Mapped map_unit_cube(const std::array<double, 6>& u) const;

  // Deterministic quadrature references (radial_gaussian only; other
  // profiles throw InvalidArgument except for reference_mass).
  double reference_mass() const;
  EnergyComponents reference_energy() const;
  double reference_moment(double m) const;
  /// Mass of f0 restricted to {1/n < |x - xi0| < n, |v - eta0| < n}.
  double reference_retained_mass(int n) const;
  /// Enclosed charge within radius r of xi0.
  double reference_enclosed_mass(double r) const;
  /// Spatial density rho(r) at distance r from xi0.
  double reference_rho(double r) const;

 private:
  InitialDensity(const ProfileSpec& spec, const Vec3& xi0, const Vec3& eta0, double m0);
  double radial_shape(double s) const;  // radial_gaussian spatial shape at s = r/l
  double x_part(const Vec3& x) const;
  double v_part(const Vec3& v) const;

  ProfileSpec spec_;
  Vec3 xi0_;
  Vec3 eta0_;
  double m0_;
  double norm_ = 0.0;
};

}  // namespace vpdirac
