#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "vpdirac/ensemble.hpp"
#include "vpdirac/vec3.hpp"

namespace vpdirac::fields {

inline constexpr std::size_t kNoSelf = static_cast<std::size_t>(-1);

/// Structure-of-arrays copy of the positive-weight sources of an ensemble
/// with a deterministic summation order. Each target sum is split over a
/// fixed number of interleaved lanes which are then combined by a fixed
/// pairwise tree, so results do not depend on the thread count.
class CoulombSources {
 public:
  CoulombSources() = default;
  /// Keeps sources with w > 0; `index` records their position in the input.
  CoulombSources(std::span<const Vec3> positions, std::span<const double> weights);
  CoulombSources(std::span<const double> x, std::span<const double> y, std::span<const double> z,
                 std::span<const double> weights);

  std::size_t size() const { return w_.size(); }
  std::span<const std::size_t> index() const { return index_; }

  /// sum_j w_j (t - y_j) / (|t - y_j|^2 + eps^2)^{3/2}, skipping the source
  /// whose input index equals `self`. With eps = 0 a coincident source other
  /// than `self` raises NearSingularity carrying its input index.
  Vec3 field_at(const Vec3& target, double eps, std::size_t self = kNoSelf) const;

  /// Potential sum_j w_j / sqrt(|t - y_j|^2 + eps^2), skipping `self`.
  double potential_at(const Vec3& target, double eps, std::size_t self = kNoSelf) const;

 private:
  /// Position of input index `self` among the kept sources, or kNoSelf.
  std::size_t slot_of(std::size_t self) const;
  void check_coincident(const Vec3& target, std::size_t self) const;

  std::vector<double> x_, y_, z_, w_;
  std::vector<std::size_t> index_;
};

/// Plasma field E at arbitrary targets from the ensemble's particles.
std::vector<Vec3> plasma_field(const ParticleEnsemble& ensemble, std::span<const Vec3> targets, double eps);

/// Plasma field at each particle, excluding the particle's own contribution.
std::vector<Vec3> plasma_field_at_particles(const ParticleEnsemble& ensemble, double eps);

/// Exact point-charge field F(x) = (x - xi)/|x - xi|^3. Targets within
/// `exclusion_radius` of xi (or equal to it) raise NearSingularity.
Vec3 point_charge_field(const Vec3& xi, const Vec3& target, double exclusion_radius = 0.0);
std::vector<Vec3> point_charge_field(const Vec3& xi, std::span<const Vec3> targets, double exclusion_radius = 0.0);

/// Gradient kernel K_ij(y) = (delta_ij |y|^2 - 3 y_i y_j) / |y|^5 of the
/// Coulomb field: d_j E_i for a unit atom at the origin.
Mat3 gradient_kernel(const Vec3& y);

/// Spherically symmetric source described by its enclosed charge M(r);
/// the field follows from the shell theorem, E = M(r) (x - c) / r^3.
struct RadialSource {
  Vec3 center;
  std::function<double(double)> enclosed_mass;

  Vec3 field_at(const Vec3& x) const;

  /// Uniform ball of given radius and total mass, closed-form M(r).
  static RadialSource uniform_ball(const Vec3& center, double radius, double mass);
  /// Enclosed mass obtained by adaptive quadrature of 4 pi s^2 rho(s).
  static RadialSource from_density(const Vec3& center, std::function<double(double)> rho, double support_radius);
};

struct FieldEvaluation {
  std::vector<Vec3> targets;
  std::vector<Vec3> plasma;  // E
  std::vector<Vec3> charge;  // F
  double softening = 0.0;
};

FieldEvaluation evaluate_fields(const ParticleEnsemble& ensemble, const Vec3& xi, std::span<const Vec3> targets,
                                double eps, double exclusion_radius = 0.0);

/// CSV dump with columns x1,x2,x3,E1,E2,E3,F1,F2,F3.
void write_field_csv(const FieldEvaluation& fe, const std::filesystem::path& path);

}  // namespace vpdirac::fields
