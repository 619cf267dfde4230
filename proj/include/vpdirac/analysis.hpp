#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "vpdirac/ensemble.hpp"
#include "vpdirac/grid.hpp"

namespace vpdirac::analysis {

/// sup_lambda lambda |{|F| > lambda}|^{1/p} with the measure counted in
/// cells. The supremum is taken exactly over the jump points of the
/// distribution function of the sampled magnitudes.
double weak_pseudo_norm(const ScalarGrid& magnitudes, double p);
double weak_pseudo_norm(const VectorGrid& field, double p);

/// Same functional from a superlevel measure function, as a maximum over
/// `count` log-spaced lambda in [lambda_min, lambda_max].
double weak_pseudo_norm(const std::function<double(double)>& superlevel_measure, double p, double lambda_min,
                        double lambda_max, std::size_t count = 161);

/// Superlevel measure of a radially decreasing magnitude g(r): the volume of
/// the ball where g > lambda, found by root bracketing on [0, r_max].
std::function<double(double)> radial_superlevel_measure(std::function<double(double)> magnitude_at_radius,
                                                        double r_max);

/// sum_j w_j K(x - y_j) (+ q K(x - xi)) at every node, K the gradient kernel.
/// Atoms within `exclusion` of a node are dropped for that node; with
/// exclusion = 0 a node sitting on an atom raises NearSingularity.
MatrixGrid singular_convolution(const ParticleEnsemble& atoms, const GridSpec& grid,
                                std::optional<Vec3> charge = std::nullopt, double charge_weight = 1.0,
                                double exclusion = 0.0);

/// Radial bump (105 / 32 pi) (1 - |x|^2)^2 on the unit ball, unit mass.
double bump(double r);

/// Dyadic scales 2h, 4h, ... up to a quarter of the smallest grid extent.
std::vector<double> dyadic_scales(const GridSpec& grid);

/// U(x) = max over scales s of the average of |f| against the bump rescaled to
/// radius s, discretely normalized and zero-padded outside the grid. Needs at
/// least three scales, none larger than a quarter of the grid extent.
ScalarGrid smooth_maximal(const ScalarGrid& magnitudes, std::span<const double> scales);

struct DifferenceQuotientReport {
  std::size_t pairs = 0;
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  double max_quotient = 0.0;
};

/// ratio = |b2(x) - b2(y)| / |x - y| / (U(x) + U(y)) over the given node pairs.
DifferenceQuotientReport difference_quotient_check(const VectorGrid& b2, const ScalarGrid& U,
                                                   std::span<const std::pair<std::size_t, std::size_t>> pairs);

/// Distinct node pairs drawn uniformly with the given seed.
std::vector<std::pair<std::size_t, std::size_t>> random_node_pairs(const GridSpec& grid, std::size_t count,
                                                                   std::uint64_t seed);

struct InterpolationM1Lp {
  double L1 = 0.0;
  double M1 = 0.0;  // sup_lambda lambda |{|psi| > lambda}|
  double Lp = 0.0;
  double rhs = 0.0;  // M1 (1 + log(|Omega|^{1-1/p} Lp / M1))
  double ratio = 0.0;
};

/// ||psi||_1 against M1 [1 + log(|Omega|^{1-1/p} ||psi||_p / M1)] for cell
/// values of volume `cell_volume`. |Omega| defaults to the sampled volume.
/// The log argument is at least one by Hoelder, and the ratio never exceeds
/// p / (p - 1). An identically zero sample gives ratio 0.
InterpolationM1Lp interpolation_M1_Lp(std::span<const double> values, double cell_volume, double p,
                                      std::optional<double> domain_volume = std::nullopt);

}  // namespace vpdirac::analysis
