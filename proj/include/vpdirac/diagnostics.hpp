#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpdirac/density.hpp"
#include "vpdirac/dynamics.hpp"
#include "vpdirac/ensemble.hpp"
#include "vpdirac/grid.hpp"

namespace vpdirac::diagnostics {

double total_mass(const ParticleEnsemble& ensemble);

/// H = sum w|v|^2/2 + |eta|^2/2 + 1/2 sum_{i!=j} w_i w_j / sqrt(|x_i-x_j|^2 + eps^2)
///     + sum w / |x - xi|.
/// The plasma-plasma term uses the same softening as the dynamics; the
/// plasma-charge term is exact. Zero-weight particles do not contribute.
EnergyComponents total_energy(const ParticleEnsemble& ensemble, const PointChargeState& charge, double eps);

/// sum w (|v|^2 + 1/|x - xi|)^{m/2}.
double energy_moment(const ParticleEnsemble& ensemble, const Vec3& xi, double m);

/// sum w / |x - xi|^2.
double virial_rate(const ParticleEnsemble& ensemble, const Vec3& xi);

/// Running trapezoid integral of `rates` over `times`, starting at 0.
std::vector<double> virial_accumulate(std::span<const double> times, std::span<const double> rates);

struct DensityEstimator {
  /// Gaussian smoothing of the cloud-in-cell histogram.
  bool kde = false;
  /// Standard deviation of the smoothing kernel in cells.
  double bandwidth_cells = 2.0;
};

/// Cloud-in-cell deposit of the weights onto the nodes, divided by the cell
/// volume. Mass outside the grid is dropped.
ScalarGrid deposit_density(const ParticleEnsemble& ensemble, const GridSpec& grid, const DensityEstimator& est = {});

/// ||rho||_{L^p} of the grid estimate; p = inf gives the largest node value.
double density_norm(const ParticleEnsemble& ensemble, double p, const GridSpec& grid,
                    const DensityEstimator& est = {});

/// Quadrature L^p norm of a grid function (p = inf allowed).
double grid_lp_norm(const ScalarGrid& values, double p);
/// L^q norm of |E| on the grid.
double field_norm(const VectorGrid& field, double q);

/// max |E(x) - E(y)| / |x - y|^alpha over node pairs: every pair on grids of
/// at most `exhaustive_limit` nodes, otherwise all nearest-neighbour pairs plus
/// `random_pairs` pairs drawn with the given seed.
double holder_seminorm(const VectorGrid& field, double alpha, std::size_t random_pairs = 20000,
                       std::uint64_t seed = 7, std::size_t exhaustive_limit = 2048);

/// Explicit constant of ||rho||_{(m+3)/3} <= C(m) ||f||_inf^{m/(m+3)} (int |v|^m f)^{3/(m+3)}
/// from minimizing (4 pi / 3) R^3 ||f||_inf + R^{-m} int |v|^m f dv over R:
/// C(m) = (1 + 3/m) (m/3)^{3/(m+3)} (4 pi / 3)^{m/(m+3)}.
double interpolation_constant(double m);

struct InterpolationCheck {
  double lhs = 0.0;  // ||rho||_{L^{(m+3)/3}}
  double rhs = 0.0;  // C(m) ||f||_inf^{m/(m+3)} (sum w |v|^m)^{3/(m+3)}
  double ratio = 0.0;
};

/// LHS / RHS of the velocity-moment interpolation bound. ||f||_inf is taken
/// from `f_sup` or, if absent, from the ensemble's reference density.
InterpolationCheck interpolation_check(const ParticleEnsemble& ensemble, double m, const GridSpec& grid,
                                       std::optional<double> f_sup = std::nullopt,
                                       const DensityEstimator& est = {});

/// Weak pseudo-norm sup_lambda lambda |{|F| > lambda}|^{2/3} of the exact
/// point-charge field, from the radius where |F| = lambda.
double point_charge_weak_norm(const Vec3& xi, double p = 1.5);

struct GrowthFit {
  double C = 0.0;  // max_t value(t) / (1 + t)^c
  double c = 0.0;  // least-squares slope of log(value/value(0)) on log(1 + t), floored at 0
};

GrowthFit fit_power_growth(std::span<const double> times, std::span<const double> values);
/// max_t accum(t) / (1 + t).
double linear_growth_bound(std::span<const double> times, std::span<const double> accum);

struct DiagnosticOptions {
  std::vector<double> moment_orders{2.0, 4.0, 6.0};
  std::vector<double> density_p{1.0, 5.0 / 3.0};
  std::vector<double> field_q{15.0 / 4.0};
  double holder_alpha = 0.4;
  /// Fixed grid for density and field norms; skipped when empty.
  std::optional<GridSpec> grid;
  DensityEstimator estimator{};
};

/// Time series of every functional along a flow. The ensemble at each stored
/// time uses the driving weights of the flow.
struct DiagnosticSeries {
  std::vector<double> times;
  std::vector<double> mass;
  std::vector<EnergyComponents> energy;
  std::vector<double> moment_orders;
  std::vector<std::vector<double>> moments;  // [order][time]
  std::vector<double> virial_rate;
  std::vector<double> virial;
  std::vector<double> density_p;
  std::vector<std::vector<double>> density_norms;  // [p][time]
  std::vector<double> field_q;
  std::vector<std::vector<double>> field_norms;  // [q][time]
  double holder_alpha = 0.0;
  std::vector<double> holder;
  std::vector<double> charge_weak_norm;
  std::vector<double> eta_norm;
  std::vector<double> xi_norm;
  double softening = 0.0;
  double excluded_weight = 0.0;

  double energy_drift() const;  // max_t |H(t) - H(0)| / H(0)
  bool mass_constant() const;   // bitwise
  double min_energy_component() const;
};

DiagnosticSeries compute_series(const FlowRecord& flow, const DiagnosticOptions& options = {});

struct DiagnosticSummary {
  double H0 = 0.0;
  double energy_drift = 0.0;
  bool mass_constant = false;
  double min_energy_component = 0.0;
  std::vector<double> moment_orders;
  std::vector<GrowthFit> moment_fits;
  double virial_bound = 0.0;
  double max_eta = 0.0;
  double eta_bound = 0.0;  // sqrt(2 H0)
  double max_xi = 0.0;
  double xi_bound = 0.0;   // |xi0| + T sqrt(2 H0)
  double excluded_weight = 0.0;
  bool charge_bounds_hold = false;
};

DiagnosticSummary summarize(const DiagnosticSeries& series);

/// One row per stored time, one column per functional.
void write_series_csv(const DiagnosticSeries& series, const std::filesystem::path& path,
                      const std::string& header_comment = {});

}  // namespace vpdirac::diagnostics
