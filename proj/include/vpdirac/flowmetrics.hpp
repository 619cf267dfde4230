#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "vpdirac/dynamics.hpp"

namespace vpdirac::flowmetrics {

/// Parameters of the flow comparison: ball radius r, sublevel threshold
/// lambda, closeness threshold gamma, anisotropy scales delta1 <= delta2.
struct MetricParams {
  double r = 5.0;
  double lambda = 20.0;
  double gamma = 0.1;
  double delta1 = 0.1;
  double delta2 = 0.1;

  void validate() const;
  friend bool operator==(const MetricParams&, const MetricParams&) = default;
};

/// Seeds whose initial point (x, v) lies in the closed ball of radius r
/// about (xi0, eta0) = the charge's initial state.
std::vector<std::uint8_t> ball_flags(const FlowRecord& flow, double r);

/// True iff max over stored s of |(X, V)(s)| <= lambda. Seeds flagged at the
/// closest-approach floor are never in the sublevel.
std::vector<std::uint8_t> sublevel_flags(const FlowRecord& flow, double lambda);

struct SublevelReport {
  std::vector<std::uint8_t> flags;
  double superlevel = 0.0;  // f0(B_r \ G_lambda)
  double retained = 0.0;    // f0(B_r cap G_lambda)
  double excluded = 0.0;    // weight of floor-flagged seeds in B_r
};

SublevelReport sublevel_report(const FlowRecord& flow, double r, double lambda);
double superlevel_measure(const FlowRecord& flow, double r, double lambda);

/// beta(z) = log(1 + log(1 + |z|^2 / 2)).
double beta(const Vec3& z);
/// Gradient of beta: z / ((1 + |z|^2/2)(1 + log(1 + |z|^2/2))).
Vec3 beta_prime(const Vec3& z);
/// Smallest C with |beta'(z)| <= C |z| / ((1 + |z|^2)(1 + log(1 + |z|^2)))
/// over `count` log-spaced |z| in [z_min, z_max].
double beta_envelope_constant(double z_min = 1e-6, double z_max = 1e12, std::size_t count = 1000);

/// sum_{i in B_r} w_i max_k beta(V(s_k)).
double loglog_moment(const FlowRecord& flow, double r);

/// Throws SeedMismatch unless both records hold the same seeds and times.
void require_same_seeds(const FlowRecord& a, const FlowRecord& b);

/// Phi(s) = sum over seeds in B_r cap G_lambda cap G'_lambda of
/// w log(1 + |((X - X')/delta1, (V - V')/delta2)|), at stored index k.
double phi_functional(const FlowRecord& a, const FlowRecord& b, const MetricParams& params, std::size_t k);

/// mu(B_r cap {|Z_a(s) - Z_b(s)| > gamma}) at stored index k (6D norm).
double convergence_in_measure(const FlowRecord& a, const FlowRecord& b, double gamma, double r, std::size_t k);

struct ChebyshevPair {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds(double rel = 1e-12) const { return lhs <= rhs * (1.0 + rel); }
};

/// lhs = mu(B_r cap {|Z - Z'| > gamma});
/// rhs = Phi / log(1 + gamma/delta2) + mu(B_r \ G_lambda) + mu(B_r \ G'_lambda).
ChebyshevPair chebyshev_consistency(const FlowRecord& a, const FlowRecord& b, const MetricParams& params,
                                    std::size_t k);

/// Axis-aligned box in phase space.
struct PhaseBox {
  Vec3 x_lo, x_hi, v_lo, v_hi;
  bool contains(const Vec3& x, const Vec3& v) const;
};

/// Compressibility estimate max over boxes of nu(Z(s)^{-1} B) / nu(B) and its
/// minimum, with nu given per seed by `measure` (defaults to the reference
/// f0 weights). Boxes of zero initial measure are skipped.
std::pair<double, double> compressibility_range(const FlowRecord& flow, std::span<const PhaseBox> boxes,
                                                std::size_t k, std::span<const double> measure = {});

}  // namespace vpdirac::flowmetrics
