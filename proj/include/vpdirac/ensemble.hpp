#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "vpdirac/density.hpp"
#include "vpdirac/vec3.hpp"

namespace vpdirac {

/// Weighted phase-space sample {(x_i, v_i, w_i)} discretizing the plasma
/// density. Immutable after construction; every evolution step produces a new
/// ensemble with the same ids and weights.
class ParticleEnsemble {
 public:
  ParticleEnsemble() = default;

  /// Validates: equal lengths, finite coordinates, finite non-negative
  /// weights, unique ids, and sum of weights <= M0 of `f0` when given.
  ParticleEnsemble(std::vector<Vec3> positions, std::vector<Vec3> velocities, std::vector<double> weights,
                   std::vector<std::uint64_t> ids, std::shared_ptr<const InitialDensity> f0 = nullptr);

  std::size_t size() const { return positions_.size(); }
  bool empty() const { return positions_.empty(); }

  std::span<const Vec3> positions() const { return positions_; }
  std::span<const Vec3> velocities() const { return velocities_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const std::uint64_t> ids() const { return ids_; }
  const std::shared_ptr<const InitialDensity>& f0_ref() const { return f0_; }

  /// Same ids, weights and reference density with new coordinates.
  ParticleEnsemble with_coordinates(std::vector<Vec3> positions, std::vector<Vec3> velocities) const;
  /// Same coordinates and ids with new weights.
  ParticleEnsemble with_weights(std::vector<double> weights) const;

  friend bool operator==(const ParticleEnsemble& a, const ParticleEnsemble& b) {
    return a.positions_ == b.positions_ && a.velocities_ == b.velocities_ && a.weights_ == b.weights_ &&
           a.ids_ == b.ids_;
  }

 private:
  std::vector<Vec3> positions_;
  std::vector<Vec3> velocities_;
  std::vector<double> weights_;
  std::vector<std::uint64_t> ids_;
  std::shared_ptr<const InitialDensity> f0_;
};

/// Randomly shifted Sobol quadrature of f0: N points of the unit cube are
/// mapped through the profile's proposal transform and weighted by
/// f0 * jacobian / N. Pure function of (density, N, seed).
ParticleEnsemble sample_initial_ensemble(const InitialDensity& density, std::size_t count, std::uint64_t seed);

/// Zeroes the weight of every particle outside
/// {1/n < |x - xi0| < n, |v - eta0| < n}; coordinates and ids are untouched.
ParticleEnsemble apply_cutoff(const ParticleEnsemble& ensemble, int n);

/// Whether (x, v) lies in the cutoff region of index n around (xi0, eta0).
bool inside_cutoff_region(const Vec3& x, const Vec3& v, const Vec3& xi0, const Vec3& eta0, int n);

// Serialization. CSV columns: id,x1,x2,x3,v1,v2,v3,w. The binary form is the
// 8-byte magic "VPENS001", a little-endian uint64 count, then the columns
// id (uint64), x1, x2, x3, v1, v2, v3, w (float64), each stored contiguously
// in little-endian byte order.
void write_ensemble_csv(const ParticleEnsemble& e, const std::filesystem::path& path);
ParticleEnsemble read_ensemble_csv(const std::filesystem::path& path);
void write_ensemble_binary(const ParticleEnsemble& e, const std::filesystem::path& path);
ParticleEnsemble read_ensemble_binary(const std::filesystem::path& path);

}  // namespace vpdirac
