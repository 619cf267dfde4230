#include "vpdirac/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>

#include "vpdirac/analysis.hpp"
#include "parallel.hpp"
#include "vpdirac/error.hpp"
#include "vpdirac/fields.hpp"

namespace vpdirac::diagnostics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double charge_distance(const Vec3& x, const Vec3& xi, std::size_t i) {
  const double r = norm(x - xi);
  if (r == 0.0) throw NearSingularity("particle " + std::to_string(i) + " sits on the point charge", i, 0.0);
  return r;
}

// Separable Gaussian smoothing along one axis, kernel truncated at 4 sigma and
// renormalized to unit sum.
void smooth_axis(ScalarGrid& g, int axis, double sigma_cells) {
  const auto r = static_cast<long>(std::ceil(4.0 * sigma_cells));
  std::vector<double> k(2 * r + 1);
  double total = 0.0;
  for (long a = -r; a <= r; ++a) {
    k[a + r] = std::exp(-0.5 * static_cast<double>(a * a) / (sigma_cells * sigma_cells));
    total += k[a + r];
  }
  for (double& v : k) v /= total;
  const auto& d = g.spec.dims;
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t i = 0; i < d[0]; ++i)
    for (std::size_t j = 0; j < d[1]; ++j)
      for (std::size_t l = 0; l < d[2]; ++l) {
        std::array<std::size_t, 3> idx{i, j, l};
        const double v = g[g.spec.index(i, j, l)];
        if (v == 0.0) continue;
        for (long a = -r; a <= r; ++a) {
          const long t = static_cast<long>(idx[axis]) + a;
          if (t < 0 || t >= static_cast<long>(d[axis])) continue;
          auto tgt = idx;
          tgt[axis] = static_cast<std::size_t>(t);
          out[g.spec.index(tgt[0], tgt[1], tgt[2])] += k[a + r] * v;
        }
      }
  g.values = std::move(out);
}

}  // namespace

double total_mass(const ParticleEnsemble& ensemble) {
  double s = 0.0;
  for (double w : ensemble.weights()) s += w;
  return s;
}

EnergyComponents total_energy(const ParticleEnsemble& ensemble, const PointChargeState& charge, double eps) {
  if (!(eps >= 0.0)) throw InvalidArgument("softening must be >= 0");
  EnergyComponents e;
  e.charge_kinetic = 0.5 * norm2(charge.eta);
  const auto pos = ensemble.positions();
  const auto vel = ensemble.velocities();
  const auto w = ensemble.weights();
  const fields::CoulombSources src(pos, w);
  std::vector<double> pp(pos.size(), 0.0);
  const auto count = static_cast<std::ptrdiff_t>(pos.size());
  detail::parallel_for(count, [&](std::ptrdiff_t ii) {
    const auto i = static_cast<std::size_t>(ii);
    if (w[i] > 0.0) pp[i] = w[i] * src.potential_at(pos[i], eps, i);
  });
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    e.plasma_kinetic += 0.5 * w[i] * norm2(vel[i]);
    e.plasma_plasma += 0.5 * pp[i];
    e.plasma_charge += w[i] / charge_distance(pos[i], charge.xi, i);
  }
  return e;
}

double energy_moment(const ParticleEnsemble& ensemble, const Vec3& xi, double m) {
  if (!(m >= 0.0)) throw InvalidArgument("energy moment order must be >= 0");
  const auto pos = ensemble.positions();
  const auto vel = ensemble.velocities();
  const auto w = ensemble.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    if (m == 0.0) {
      s += w[i];
      continue;
    }
    const double e = norm2(vel[i]) + 1.0 / charge_distance(pos[i], xi, i);
    s += w[i] * std::pow(e, 0.5 * m);
  }
  return s;
}

double virial_rate(const ParticleEnsemble& ensemble, const Vec3& xi) {
  const auto pos = ensemble.positions();
  const auto w = ensemble.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    const double r = charge_distance(pos[i], xi, i);
    s += w[i] / (r * r);
  }
  return s;
}

std::vector<double> virial_accumulate(std::span<const double> times, std::span<const double> rates) {
  if (times.size() != rates.size()) throw InvalidArgument("virial_accumulate: size mismatch");
  std::vector<double> acc(times.size(), 0.0);
  for (std::size_t k = 1; k < times.size(); ++k)
    acc[k] = acc[k - 1] + 0.5 * (times[k] - times[k - 1]) * (rates[k] + rates[k - 1]);
  return acc;
}

ScalarGrid deposit_density(const ParticleEnsemble& ensemble, const GridSpec& grid, const DensityEstimator& est) {
  grid.validate();
  ScalarGrid rho(grid, 0.0);
  const auto pos = ensemble.positions();
  const auto w = ensemble.weights();
  const double inv_vol = 1.0 / grid.cell_volume();
  for (std::size_t p = 0; p < pos.size(); ++p) {
    if (!(w[p] > 0.0)) continue;
    std::array<long, 3> base{};
    std::array<double, 3> frac{};
    for (int c = 0; c < 3; ++c) {
      const double u = (pos[p][c] - grid.origin[c]) / grid.h;
      const double f = std::floor(u);
      base[c] = static_cast<long>(f);
      frac[c] = u - f;
    }
    for (int corner = 0; corner < 8; ++corner) {
      double share = w[p];
      std::array<long, 3> idx{};
      bool inside = true;
      for (int c = 0; c < 3; ++c) {
        const int bit = (corner >> c) & 1;
        idx[c] = base[c] + bit;
        share *= bit ? frac[c] : 1.0 - frac[c];
        inside = inside && idx[c] >= 0 && idx[c] < static_cast<long>(grid.dims[c]);
      }
      if (!inside || share == 0.0) continue;
      rho[grid.index(idx[0], idx[1], idx[2])] += share * inv_vol;
    }
  }
  if (est.kde) {
    if (!(est.bandwidth_cells > 0.0)) throw InvalidArgument("KDE bandwidth must be positive");
    for (int axis = 0; axis < 3; ++axis) smooth_axis(rho, axis, est.bandwidth_cells);
  }
  return rho;
}

double grid_lp_norm(const ScalarGrid& values, double p) {
  if (values.size() == 0) throw InvalidArgument("norm of an empty grid");
  if (!(p >= 1.0)) throw InvalidArgument("L^p norm needs p >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : values.values) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  for (double v : values.values) s += std::pow(std::abs(v), p);
  return std::pow(s * values.spec.cell_volume(), 1.0 / p);
}

double density_norm(const ParticleEnsemble& ensemble, double p, const GridSpec& grid, const DensityEstimator& est) {
  return grid_lp_norm(deposit_density(ensemble, grid, est), p);
}

double field_norm(const VectorGrid& field, double q) { return grid_lp_norm(magnitude(field), q); }

double holder_seminorm(const VectorGrid& field, double alpha, std::size_t random_pairs, std::uint64_t seed,
                       std::size_t exhaustive_limit) {
  if (field.size() == 0) throw InvalidArgument("Hoelder seminorm of an empty grid");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("Hoelder exponent must lie in (0, 1]");
  const GridSpec& g = field.spec;
  double best = 0.0;
  auto visit = [&](std::size_t a, std::size_t b) {
    const double d = norm(g.node(a) - g.node(b));
    if (d == 0.0) return;
    best = std::max(best, norm(field[a] - field[b]) / std::pow(d, alpha));
  };
  const std::size_t n = g.size();
  if (n <= exhaustive_limit) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) visit(a, b);
    return best;
  }
  for (std::size_t i = 0; i < g.dims[0]; ++i)
    for (std::size_t j = 0; j < g.dims[1]; ++j)
      for (std::size_t k = 0; k < g.dims[2]; ++k) {
        const std::size_t a = g.index(i, j, k);
        if (i + 1 < g.dims[0]) visit(a, g.index(i + 1, j, k));
        if (j + 1 < g.dims[1]) visit(a, g.index(i, j + 1, k));
        if (k + 1 < g.dims[2]) visit(a, g.index(i, j, k + 1));
      }
  for (const auto& [a, b] : analysis::random_node_pairs(g, random_pairs, seed)) visit(a, b);
  return best;
}

double interpolation_constant(double m) {
  if (!(m > 0.0)) throw InvalidArgument("interpolation constant needs m > 0");
  const double e = m + 3.0;
  return (1.0 + 3.0 / m) * std::pow(m / 3.0, 3.0 / e) * std::pow(4.0 * std::numbers::pi / 3.0, m / e);
}

InterpolationCheck interpolation_check(const ParticleEnsemble& ensemble, double m, const GridSpec& grid,
                                       std::optional<double> f_sup, const DensityEstimator& est) {
  if (!(m > 0.0)) throw InvalidArgument("interpolation check needs m > 0");
  InterpolationCheck out;
  if (total_mass(ensemble) == 0.0) return out;
  double sup = 0.0;
  if (f_sup) {
    sup = *f_sup;
  } else {
    if (!ensemble.f0_ref()) throw InvalidArgument("interpolation check needs ||f||_inf or a reference density");
    sup = ensemble.f0_ref()->sup_norm();
  }
  const auto vel = ensemble.velocities();
  const auto w = ensemble.weights();
  double vm = 0.0;
  for (std::size_t i = 0; i < vel.size(); ++i) vm += w[i] * std::pow(norm(vel[i]), m);
  out.lhs = density_norm(ensemble, (m + 3.0) / 3.0, grid, est);
  out.rhs = interpolation_constant(m) * std::pow(sup, m / (m + 3.0)) * std::pow(vm, 3.0 / (m + 3.0));
  out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : kInf;
  return out;
}

double point_charge_weak_norm(const Vec3& xi, double p) {
  const auto g = [xi](double r) { return norm(fields::point_charge_field(xi, xi + Vec3{r, 0.0, 0.0})); };
  return analysis::weak_pseudo_norm(analysis::radial_superlevel_measure(g, 1e6), p, 1e-4, 1e4, 81);
}

GrowthFit fit_power_growth(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size() || times.empty()) throw InvalidArgument("fit_power_growth: bad series");
  GrowthFit fit;
  const double v0 = values[0];
  if (times.size() > 1 && v0 > 0.0) {
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double x = std::log1p(times[k]);
      const double y = std::log(values[k] / v0);
      sxx += x * x;
      sxy += x * y;
    }
    fit.c = sxx > 0.0 ? std::max(0.0, sxy / sxx) : 0.0;
  }
  for (std::size_t k = 0; k < times.size(); ++k)
    fit.C = std::max(fit.C, values[k] / std::pow(1.0 + times[k], fit.c));
  return fit;
}

double linear_growth_bound(std::span<const double> times, std::span<const double> accum) {
  if (times.size() != accum.size()) throw InvalidArgument("linear_growth_bound: size mismatch");
  double b = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) b = std::max(b, accum[k] / (1.0 + times[k]));
  return b;
}

double DiagnosticSeries::energy_drift() const {
  if (energy.empty()) return 0.0;
  const double h0 = energy.front().total();
  double d = 0.0;
  for (const auto& e : energy) d = std::max(d, std::abs(e.total() - h0) / h0);
  return d;
}

bool DiagnosticSeries::mass_constant() const {
  return std::all_of(mass.begin(), mass.end(), [&](double m) { return m == mass.front(); });
}

double DiagnosticSeries::min_energy_component() const {
  double m = kInf;
  for (const auto& e : energy)
    m = std::min({m, e.plasma_kinetic, e.charge_kinetic, e.plasma_plasma, e.plasma_charge});
  return m;
}

DiagnosticSeries compute_series(const FlowRecord& flow, const DiagnosticOptions& options) {
  DiagnosticSeries s;
  s.times = flow.times;
  s.moment_orders = options.moment_orders;
  s.moments.assign(options.moment_orders.size(), {});
  s.softening = flow.softening;
  s.excluded_weight = flow.excluded_weight();
  if (options.grid) {
    s.density_p = options.density_p;
    s.density_norms.assign(options.density_p.size(), {});
    s.field_q = options.field_q;
    s.field_norms.assign(options.field_q.size(), {});
    s.holder_alpha = options.holder_alpha;
  }
  for (std::size_t k = 0; k < flow.samples(); ++k) {
    const auto ens = flow.ensemble_at(k);
    const auto q = flow.charge_at(k);
    s.mass.push_back(total_mass(ens));
    s.energy.push_back(total_energy(ens, q, flow.softening));
    for (std::size_t j = 0; j < options.moment_orders.size(); ++j)
      s.moments[j].push_back(energy_moment(ens, q.xi, options.moment_orders[j]));
    s.virial_rate.push_back(virial_rate(ens, q.xi));
    s.eta_norm.push_back(norm(q.eta));
    s.xi_norm.push_back(norm(q.xi));
    s.charge_weak_norm.push_back(point_charge_weak_norm(q.xi));
    if (options.grid) {
      const auto rho = deposit_density(ens, *options.grid, options.estimator);
      for (std::size_t j = 0; j < options.density_p.size(); ++j)
        s.density_norms[j].push_back(grid_lp_norm(rho, options.density_p[j]));
      const auto nodes = options.grid->nodes();
      const VectorGrid e(*options.grid, fields::plasma_field(ens, nodes, flow.softening));
      for (std::size_t j = 0; j < options.field_q.size(); ++j)
        s.field_norms[j].push_back(field_norm(e, options.field_q[j]));
      s.holder.push_back(holder_seminorm(e, options.holder_alpha));
    }
  }
  s.virial = virial_accumulate(s.times, s.virial_rate);
  return s;
}

DiagnosticSummary summarize(const DiagnosticSeries& s) {
  DiagnosticSummary out;
  if (s.times.empty()) return out;
  out.H0 = s.energy.front().total();
  out.energy_drift = s.energy_drift();
  out.mass_constant = s.mass_constant();
  out.min_energy_component = s.min_energy_component();
  out.moment_orders = s.moment_orders;
  for (const auto& m : s.moments) out.moment_fits.push_back(fit_power_growth(s.times, m));
  out.virial_bound = linear_growth_bound(s.times, s.virial);
  out.max_eta = *std::max_element(s.eta_norm.begin(), s.eta_norm.end());
  out.max_xi = *std::max_element(s.xi_norm.begin(), s.xi_norm.end());
  const double v = std::sqrt(2.0 * out.H0);
  out.eta_bound = v;
  out.xi_bound = s.xi_norm.front() + s.times.back() * v;
  out.excluded_weight = s.excluded_weight;
  constexpr double kSlack = 1e-6;
  out.charge_bounds_hold = out.max_eta <= out.eta_bound * (1.0 + kSlack) &&
                           out.max_xi <= s.xi_norm.front() + s.times.back() * v * (1.0 + kSlack);
  return out;
}

void write_series_csv(const DiagnosticSeries& s, const std::filesystem::path& path, const std::string& header_comment) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  os << "t,mass,H,plasma_kinetic,charge_kinetic,plasma_plasma,plasma_charge";
  for (double m : s.moment_orders) os << ",H_m" << m;
  os << ",virial_rate,virial,eta_norm,xi_norm,charge_weak_norm";
  for (double p : s.density_p) os << ",rho_L" << p;
  for (double q : s.field_q) os << ",E_L" << q;
  if (!s.holder.empty()) os << ",E_holder" << s.holder_alpha;
  os << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    const auto& e = s.energy[k];
    os << s.times[k] << ',' << s.mass[k] << ',' << e.total() << ',' << e.plasma_kinetic << ',' << e.charge_kinetic
       << ',' << e.plasma_plasma << ',' << e.plasma_charge;
    for (const auto& m : s.moments) os << ',' << m[k];
    os << ',' << s.virial_rate[k] << ',' << s.virial[k] << ',' << s.eta_norm[k] << ',' << s.xi_norm[k] << ','
       << s.charge_weak_norm[k];
    for (const auto& d : s.density_norms) os << ',' << d[k];
    for (const auto& f : s.field_norms) os << ',' << f[k];
    if (!s.holder.empty()) os << ',' << s.holder[k];
    os << '\n';
  }
}

}  // namespace vpdirac::diagnostics
