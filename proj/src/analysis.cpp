#include "vpdirac/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <fftw3.h>

#include <boost/math/tools/roots.hpp>

#include "vpdirac/error.hpp"
#include "vpdirac/fields.hpp"

namespace vpdirac::analysis {

namespace {

double weak_from_sorted(std::vector<double> a, double cell_volume, double p) {
  std::sort(a.begin(), a.end(), std::greater<>());
  double best = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!(a[k] > 0.0)) break;
    best = std::max(best, a[k] * std::pow(static_cast<double>(k + 1) * cell_volume, 1.0 / p));
  }
  return best;
}

void require_p(double p) {
  if (!(p >= 1.0)) throw InvalidArgument("weak pseudo-norm needs p >= 1");
}

}  // namespace

double weak_pseudo_norm(const ScalarGrid& magnitudes, double p) {
  require_p(p);
  if (magnitudes.size() == 0) throw InvalidArgument("weak pseudo-norm of an empty grid");
  std::vector<double> a(magnitudes.values.size());
  std::transform(magnitudes.values.begin(), magnitudes.values.end(), a.begin(), [](double v) { return std::abs(v); });
  return weak_from_sorted(std::move(a), magnitudes.spec.cell_volume(), p);
}

double weak_pseudo_norm(const VectorGrid& field, double p) { return weak_pseudo_norm(magnitude(field), p); }

double weak_pseudo_norm(const std::function<double(double)>& superlevel_measure, double p, double lambda_min,
                        double lambda_max, std::size_t count) {
  require_p(p);
  if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min) || count < 1)
    throw InvalidArgument("weak pseudo-norm needs 0 < lambda_min <= lambda_max");
  double best = 0.0;
  const double lo = std::log(lambda_min);
  const double hi = std::log(lambda_max);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    const double lambda = std::exp(lo + t * (hi - lo));
    best = std::max(best, lambda * std::pow(superlevel_measure(lambda), 1.0 / p));
  }
  return best;
}

std::function<double(double)> radial_superlevel_measure(std::function<double(double)> g, double r_max) {
  if (!(r_max > 0.0)) throw InvalidArgument("radial superlevel measure needs r_max > 0");
  return [g = std::move(g), r_max](double lambda) {
    constexpr double kBall = 4.0 * std::numbers::pi / 3.0;
    if (g(r_max) > lambda) return kBall * r_max * r_max * r_max;
    double lo = r_max;
    while (g(lo) <= lambda) {
      lo *= 0.5;
      if (lo < 1e-300) return 0.0;
    }
    const double hi = std::min(2.0 * lo, r_max);
    boost::math::tools::eps_tolerance<double> tol(52);
    std::uintmax_t iters = 200;
    const auto [a, b] =
        boost::math::tools::toms748_solve([&](double r) { return g(r) - lambda; }, lo, hi, tol, iters);
    const double r = 0.5 * (a + b);
    return kBall * r * r * r;
  };
}

MatrixGrid singular_convolution(const ParticleEnsemble& atoms, const GridSpec& grid, std::optional<Vec3> charge,
                                double charge_weight, double exclusion) {
  grid.validate();
  const auto pos = atoms.positions();
  const auto w = atoms.weights();
  MatrixGrid out(grid);
  const auto count = static_cast<std::ptrdiff_t>(grid.size());
  const double ex2 = exclusion * exclusion;
  std::ptrdiff_t collision = -1;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const Vec3 x = grid.node(static_cast<std::size_t>(ii));
    Mat3 acc{};
    auto add = [&](const Vec3& y, double weight) {
      const double r2 = norm2(y);
      if (r2 == 0.0 || (exclusion > 0.0 && r2 <= ex2)) {
        if (exclusion == 0.0) {
#pragma omp critical
          collision = ii;
        }
        return;
      }
      const Mat3 k = fields::gradient_kernel(y);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) acc[a][b] += weight * k[a][b];
    };
    for (std::size_t j = 0; j < pos.size(); ++j)
      if (w[j] > 0.0) add(x - pos[j], w[j]);
    if (charge) add(x - *charge, charge_weight);
    out.values[static_cast<std::size_t>(ii)] = acc;
  }
  if (collision >= 0)
    throw NearSingularity("grid node " + std::to_string(collision) + " coincides with an atom",
                          static_cast<std::size_t>(collision), 0.0);
  return out;
}

double bump(double r) {
  if (r >= 1.0) return 0.0;
  const double s = 1.0 - r * r;
  return 105.0 / (32.0 * std::numbers::pi) * s * s;
}

std::vector<double> dyadic_scales(const GridSpec& grid) {
  grid.validate();
  const auto min_dim = std::min({grid.dims[0], grid.dims[1], grid.dims[2]});
  const double extent = static_cast<double>(min_dim - 1) * grid.h;
  std::vector<double> scales;
  for (double s = 2.0 * grid.h; s <= 0.25 * extent * (1.0 + 1e-12); s *= 2.0) scales.push_back(s);
  return scales;
}

ScalarGrid smooth_maximal(const ScalarGrid& magnitudes, std::span<const double> scales) {
  const GridSpec& g = magnitudes.spec;
  g.validate();
  if (scales.size() < 3) throw InvalidArgument("smooth_maximal needs at least 3 scales");
  const auto min_dim = std::min({g.dims[0], g.dims[1], g.dims[2]});
  const double extent = static_cast<double>(min_dim - 1) * g.h;
  for (double s : scales)
    if (!(s >= g.h) || s > 0.25 * extent * (1.0 + 1e-12))
      throw InvalidArgument("smooth_maximal: scale " + std::to_string(s) + " outside [h, extent/4]");

  const double s_max = *std::max_element(scales.begin(), scales.end());
  const auto R = static_cast<std::size_t>(std::floor(s_max / g.h));
  const std::array<std::size_t, 3> P{g.dims[0] + 2 * R, g.dims[1] + 2 * R, g.dims[2] + 2 * R};
  const std::size_t nreal = P[0] * P[1] * P[2];
  const std::size_t nz = P[2] / 2 + 1;
  const std::size_t ncomplex = P[0] * P[1] * nz;

  double* data = fftw_alloc_real(nreal);
  double* kern = fftw_alloc_real(nreal);
  fftw_complex* fdata = fftw_alloc_complex(ncomplex);
  fftw_complex* fkern = fftw_alloc_complex(ncomplex);
  const int n[3] = {static_cast<int>(P[0]), static_cast<int>(P[1]), static_cast<int>(P[2])};
  fftw_plan fwd_data = fftw_plan_dft_r2c(3, n, data, fdata, FFTW_ESTIMATE);
  fftw_plan fwd_kern = fftw_plan_dft_r2c(3, n, kern, fkern, FFTW_ESTIMATE);
  fftw_plan inv = fftw_plan_dft_c2r(3, n, fkern, kern, FFTW_ESTIMATE);

  auto pidx = [&](std::size_t i, std::size_t j, std::size_t k) { return (i * P[1] + j) * P[2] + k; };
  std::fill(data, data + nreal, 0.0);
  for (std::size_t i = 0; i < g.dims[0]; ++i)
    for (std::size_t j = 0; j < g.dims[1]; ++j)
      for (std::size_t k = 0; k < g.dims[2]; ++k) data[pidx(i, j, k)] = std::abs(magnitudes[g.index(i, j, k)]);
  fftw_execute(fwd_data);

  ScalarGrid U(g, 0.0);
  for (double s : scales) {
    std::fill(kern, kern + nreal, 0.0);
    const auto r = static_cast<long>(std::floor(s / g.h));
    double total = 0.0;
    for (long a = -r; a <= r; ++a)
      for (long b = -r; b <= r; ++b)
        for (long c = -r; c <= r; ++c) {
          const double d = g.h * std::sqrt(static_cast<double>(a * a + b * b + c * c)) / s;
          const double v = bump(d);
          if (v == 0.0) continue;
          auto wrap = [](long x, std::size_t m) { return static_cast<std::size_t>((x + static_cast<long>(m)) % static_cast<long>(m)); };
          kern[pidx(wrap(a, P[0]), wrap(b, P[1]), wrap(c, P[2]))] = v;
          total += v;
        }
    for (std::size_t i = 0; i < nreal; ++i) kern[i] /= total * static_cast<double>(nreal);
    fftw_execute(fwd_kern);
    for (std::size_t i = 0; i < ncomplex; ++i) {
      const std::complex<double> x(fdata[i][0], fdata[i][1]);
      const std::complex<double> y(fkern[i][0], fkern[i][1]);
      const auto z = x * y;
      fkern[i][0] = z.real();
      fkern[i][1] = z.imag();
    }
    fftw_execute(inv);
    for (std::size_t i = 0; i < g.dims[0]; ++i)
      for (std::size_t j = 0; j < g.dims[1]; ++j)
        for (std::size_t k = 0; k < g.dims[2]; ++k) {
          auto& u = U[g.index(i, j, k)];
          u = std::max(u, kern[pidx(i, j, k)]);
        }
  }

  fftw_destroy_plan(fwd_data);
  fftw_destroy_plan(fwd_kern);
  fftw_destroy_plan(inv);
  fftw_free(data);
  fftw_free(kern);
  fftw_free(fdata);
  fftw_free(fkern);
  return U;
}

DifferenceQuotientReport difference_quotient_check(const VectorGrid& b2, const ScalarGrid& U,
                                                   std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  if (!(b2.spec == U.spec)) throw InvalidArgument("difference_quotient_check: grids differ");
  DifferenceQuotientReport rep;
  double sum = 0.0;
  for (const auto& [a, b] : pairs) {
    if (a >= b2.size() || b >= b2.size()) throw InvalidArgument("difference_quotient_check: node out of range");
    const double dist = norm(b2.spec.node(a) - b2.spec.node(b));
    if (dist == 0.0) throw InvalidArgument("difference_quotient_check: zero-distance pair");
    const double q = norm(b2[a] - b2[b]) / dist;
    const double u = U[a] + U[b];
    const double ratio = q == 0.0 ? 0.0 : (u > 0.0 ? q / u : std::numeric_limits<double>::infinity());
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    rep.max_quotient = std::max(rep.max_quotient, q);
    sum += ratio;
    ++rep.pairs;
  }
  rep.mean_ratio = rep.pairs ? sum / static_cast<double>(rep.pairs) : 0.0;
  return rep;
}

std::vector<std::pair<std::size_t, std::size_t>> random_node_pairs(const GridSpec& grid, std::size_t count,
                                                                   std::uint64_t seed) {
  if (grid.size() < 2) throw InvalidArgument("random_node_pairs needs at least two nodes");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(count);
  while (out.size() < count) {
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    if (a != b) out.emplace_back(a, b);
  }
  return out;
}

InterpolationM1Lp interpolation_M1_Lp(std::span<const double> values, double cell_volume, double p,
                                      std::optional<double> domain_volume) {
  if (!(p > 1.0)) throw InvalidArgument("interpolation_M1_Lp needs p > 1");
  if (!(cell_volume > 0.0)) throw InvalidArgument("interpolation_M1_Lp needs a positive cell volume");
  InterpolationM1Lp out;
  std::vector<double> a(values.size());
  std::transform(values.begin(), values.end(), a.begin(), [](double v) { return std::abs(v); });
  double lp = 0.0;
  for (double v : a) {
    out.L1 += v * cell_volume;
    lp += std::pow(v, p) * cell_volume;
  }
  if (out.L1 == 0.0) return out;
  out.Lp = std::pow(lp, 1.0 / p);
  out.M1 = weak_from_sorted(std::move(a), cell_volume, 1.0);
  const double omega = domain_volume.value_or(static_cast<double>(values.size()) * cell_volume);
  if (!(omega > 0.0)) throw InvalidArgument("interpolation_M1_Lp needs a positive domain volume");
  out.rhs = out.M1 * (1.0 + std::log(std::pow(omega, 1.0 - 1.0 / p) * out.Lp / out.M1));
  out.ratio = out.L1 / out.rhs;
  return out;
}

}  // namespace vpdirac::analysis
