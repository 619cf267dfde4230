#pragma once

#include <cstdint>
#include <limits>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vpdirac/density.hpp"
#include "vpdirac/ensemble.hpp"
#include "vpdirac/vec3.hpp"

namespace vpdirac {

struct PointChargeState {
  Vec3 xi;
  Vec3 eta;

  friend bool operator==(const PointChargeState&, const PointChargeState&) = default;
};

/// Run parameters. The interaction sign is fixed to the repulsive case and is
/// deliberately not configurable.
struct SimulationConfig {
  double horizon = 1.0;
  int n = 8;
  std::size_t particles = 4096;
  double atol = 1e-8;
  double rtol = 1e-8;
  /// Plasma-plasma softening; defaults to 1/(2n).
  std::optional<double> softening;
  double cadence = 0.05;
  std::uint64_t seed = 12345;
  /// Closest allowed approach to the charge; defaults to 1e-4 / n.
  std::optional<double> closest_approach_floor;
  double dt_initial = 1e-3;
  double dt_floor = 1e-12;
  /// Step cap dt <= approach_cap * d_min^{3/2}, d_min = closest particle-charge distance.
  double approach_cap = 0.5;
  std::size_t max_steps = 5'000'000;

  double effective_softening() const { return softening.value_or(0.5 / n); }
  double effective_floor() const { return closest_approach_floor.value_or(1e-4 / n); }
  void validate() const;

  friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

struct IntegratorStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
  double min_charge_distance = std::numeric_limits<double>::infinity();
  double min_dt = std::numeric_limits<double>::infinity();
};

/// Trajectory samples Z(s, z) = (X, V)(s, x, v) of every seed at the stored
/// times, plus the charge track. `reference_weights` are the uncut f0
/// quadrature weights (the measure mu used by all flow metrics);
/// `weights` are the weights that drove the dynamics.
struct FlowRecord {
  int n = 0;
  std::vector<std::uint64_t> ids;
  std::vector<double> reference_weights;
  std::vector<double> weights;
  std::vector<double> times;
  std::vector<std::vector<Vec3>> X;  // [time][seed]
  std::vector<std::vector<Vec3>> V;  // [time][seed]
  std::vector<Vec3> xi;
  std::vector<Vec3> eta;
  /// Seeds that reached the closest-approach floor; frozen from then on.
  std::vector<std::uint8_t> floor_hit;
  double softening = 0.0;
  IntegratorStats stats;

  std::size_t seeds() const { return ids.size(); }
  std::size_t samples() const { return times.size(); }
  /// mu-weight of the seeds flagged at the closest-approach floor.
  double excluded_weight() const;
  /// Snapshot at stored index k as an ensemble with the driving weights.
  ParticleEnsemble ensemble_at(std::size_t k) const;
  PointChargeState charge_at(std::size_t k) const { return {xi[k], eta[k]}; }
  std::size_t index_of_time(double s) const;
};

/// Raised when the integrator cannot continue; carries the state at failure.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, double time, double min_distance, std::size_t particle,
              ParticleEnsemble snapshot, PointChargeState charge)
      : std::runtime_error(what),
        time_(time),
        min_distance_(min_distance),
        particle_(particle),
        snapshot_(std::move(snapshot)),
        charge_(charge) {}

  double time() const { return time_; }
  double min_distance() const { return min_distance_; }
  std::size_t particle() const { return particle_; }
  const ParticleEnsemble& snapshot() const { return snapshot_; }
  const PointChargeState& charge() const { return charge_; }

 private:
  double time_;
  double min_distance_;
  std::size_t particle_;
  ParticleEnsemble snapshot_;
  PointChargeState charge_;
};

struct StepControl {
  double atol = 1e-8;
  double rtol = 1e-8;
  double dt_floor = 1e-12;
  double approach_cap = 0.5;
  double closest_approach_floor = 0.0;
};

struct StepResult {
  ParticleEnsemble particles;
  PointChargeState charge;
  double dt_taken = 0.0;
  double dt_next = 0.0;
  std::size_t rejected = 0;
};

/// Advances plasma and charge by one accepted Dormand-Prince 5(4) step,
/// starting from trial step `dt` and shrinking it on rejection. Weights and
/// ids are unchanged. The charge feels only the plasma field.
StepResult step(const ParticleEnsemble& particles, const PointChargeState& charge, double dt, double eps,
                const StepControl& control = {});

/// Integrates from the given state over [0, horizon] storing samples every
/// `config.cadence`. `reference_weights` (defaults to the ensemble's own
/// weights) are recorded as the measure of each seed.
FlowRecord integrate(const ParticleEnsemble& particles, const PointChargeState& charge, const SimulationConfig& config,
                     std::vector<double> reference_weights = {});

/// Applies the cutoff of index `n` to an uncut ensemble and integrates it with
/// the charge starting at (xi0, eta0) of the ensemble's reference density.
FlowRecord run_cutoff(const SimulationConfig& config, const ParticleEnsemble& uncut, int n);

/// Samples f0, applies the cutoff config.n and integrates.
FlowRecord run(const SimulationConfig& config, const InitialDensity& density);

/// Two flows over the identical sampled seed set with cutoffs n_a and n_b.
std::pair<FlowRecord, FlowRecord> run_pair(const SimulationConfig& config, const InitialDensity& density, int n_a,
                                           int n_b);

// FlowRecord serialization. Binary: magic "VPFLOW01", then little-endian
// uint64 n, N (seeds), K (samples), float64 softening; uint64 ids[N];
// float64 reference_weights[N], weights[N]; uint8 floor_hit[N]; float64
// times[K]; per sample k: X1[N], X2[N], X3[N], V1[N], V2[N], V3[N];
// per sample: xi(3), eta(3); uint64 steps, rejected, evaluations; float64
// min_charge_distance, min_dt.
void write_flow_binary(const FlowRecord& flow, const std::filesystem::path& path);
FlowRecord read_flow_binary(const std::filesystem::path& path);
/// CSV with columns s,id,X1,X2,X3,V1,V2,V3.
void write_flow_csv(const FlowRecord& flow, const std::filesystem::path& path);
/// CSV with columns s,xi1,xi2,xi3,eta1,eta2,eta3.
void write_charge_track_csv(const FlowRecord& flow, const std::filesystem::path& path);

}  // namespace vpdirac
