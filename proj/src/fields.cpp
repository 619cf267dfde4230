#include "vpdirac/fields.hpp"

#include <algorithm>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "parallel.hpp"
#include "vpdirac/error.hpp"

namespace vpdirac::fields {

namespace {

constexpr std::size_t kLanes = 8;

// Fixed pairwise combination of the lane partial sums.
inline double combine(const double (&a)[kLanes]) {
  return ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7]));
}

}  // namespace

CoulombSources::CoulombSources(std::span<const Vec3> positions, std::span<const double> weights) {
  if (positions.size() != weights.size()) throw InvalidArgument("CoulombSources: size mismatch");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    x_.push_back(positions[i].x);
    y_.push_back(positions[i].y);
    z_.push_back(positions[i].z);
    w_.push_back(weights[i]);
    index_.push_back(i);
  }
}

CoulombSources::CoulombSources(std::span<const double> x, std::span<const double> y, std::span<const double> z,
                               std::span<const double> weights) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    x_.push_back(x[i]);
    y_.push_back(y[i]);
    z_.push_back(z[i]);
    w_.push_back(weights[i]);
    index_.push_back(i);
  }
}

std::size_t CoulombSources::slot_of(std::size_t self) const {
  if (self == kNoSelf) return kNoSelf;
  const auto it = std::lower_bound(index_.begin(), index_.end(), self);
  return it != index_.end() && *it == self ? static_cast<std::size_t>(it - index_.begin()) : kNoSelf;
}

void CoulombSources::check_coincident(const Vec3& t, std::size_t self) const {
  for (std::size_t j = 0; j < w_.size(); ++j) {
    if (index_[j] == self) continue;
    if (x_[j] == t.x && y_[j] == t.y && z_[j] == t.z)
      throw NearSingularity("target coincides with source " + std::to_string(index_[j]) + " at zero softening",
                            index_[j], 0.0);
  }
}

Vec3 CoulombSources::field_at(const Vec3& t, double eps, std::size_t self) const {
  const double eps2 = eps * eps;
  const std::size_t n = w_.size();
  const std::size_t sp = slot_of(self);
  const double* __restrict xs = x_.data();
  const double* __restrict ys = y_.data();
  const double* __restrict zs = z_.data();
  const double* __restrict ws = w_.data();

  double ax[kLanes] = {}, ay[kLanes] = {}, az[kLanes] = {};
  double zeros[kLanes] = {};
  const std::size_t nb = n - n % kLanes;
  for (std::size_t j = 0; j < nb; j += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const double dx = t.x - xs[j + l];
      const double dy = t.y - ys[j + l];
      const double dz = t.z - zs[j + l];
      const double r2 = dx * dx + dy * dy + dz * dz + eps2;
      const double hit = static_cast<double>((r2 == 0.0) | (j + l == sp));
      const double r2s = r2 + hit;
      const double s = (1.0 - hit) * ws[j + l] / (r2s * std::sqrt(r2s));
      zeros[l] += hit;
      ax[l] += s * dx;
      ay[l] += s * dy;
      az[l] += s * dz;
    }
  }
  for (std::size_t j = nb; j < n; ++j) {
    const std::size_t l = j - nb;
    const double dx = t.x - xs[j];
    const double dy = t.y - ys[j];
    const double dz = t.z - zs[j];
    const double r2 = dx * dx + dy * dy + dz * dz + eps2;
    if (r2 == 0.0 || j == sp) {
      zeros[l] += 1.0;
      continue;
    }
    const double s = ws[j] / (r2 * std::sqrt(r2));
    ax[l] += s * dx;
    ay[l] += s * dy;
    az[l] += s * dz;
  }
  if (eps2 == 0.0) {
    const double allowed = sp == kNoSelf ? 0.0 : 1.0;
    if (combine(zeros) > allowed) check_coincident(t, self);
  }
  return {combine(ax), combine(ay), combine(az)};
}

double CoulombSources::potential_at(const Vec3& t, double eps, std::size_t self) const {
  const double eps2 = eps * eps;
  const std::size_t n = w_.size();
  const std::size_t sp = slot_of(self);
  double acc[kLanes] = {};
  double zeros[kLanes] = {};
  const std::size_t nb = n - n % kLanes;
  for (std::size_t j = 0; j < nb; j += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const double dx = t.x - x_[j + l];
      const double dy = t.y - y_[j + l];
      const double dz = t.z - z_[j + l];
      const double r2 = dx * dx + dy * dy + dz * dz + eps2;
      const double hit = static_cast<double>((r2 == 0.0) | (j + l == sp));
      acc[l] += (1.0 - hit) * w_[j + l] / std::sqrt(r2 + hit);
      zeros[l] += hit;
    }
  }
  for (std::size_t j = nb; j < n; ++j) {
    const double dx = t.x - x_[j];
    const double dy = t.y - y_[j];
    const double dz = t.z - z_[j];
    const double r2 = dx * dx + dy * dy + dz * dz + eps2;
    if (r2 == 0.0 || j == sp) {
      zeros[j - nb] += 1.0;
      continue;
    }
    acc[j - nb] += w_[j] / std::sqrt(r2);
  }
  if (eps2 == 0.0) {
    const double allowed = sp == kNoSelf ? 0.0 : 1.0;
    if (combine(zeros) > allowed) check_coincident(t, self);
  }
  return combine(acc);
}

std::vector<Vec3> plasma_field(const ParticleEnsemble& ensemble, std::span<const Vec3> targets, double eps) {
  if (!(eps >= 0.0)) throw InvalidArgument("softening must be >= 0");
  const CoulombSources src(ensemble.positions(), ensemble.weights());
  std::vector<Vec3> out(targets.size());
  const auto count = static_cast<std::ptrdiff_t>(targets.size());
  detail::parallel_for(count, [&](std::ptrdiff_t i) { out[i] = src.field_at(targets[i], eps); });
  return out;
}

std::vector<Vec3> plasma_field_at_particles(const ParticleEnsemble& ensemble, double eps) {
  if (!(eps >= 0.0)) throw InvalidArgument("softening must be >= 0");
  const CoulombSources src(ensemble.positions(), ensemble.weights());
  const auto pos = ensemble.positions();
  std::vector<Vec3> out(pos.size());
  const auto count = static_cast<std::ptrdiff_t>(pos.size());
  detail::parallel_for(count,
                       [&](std::ptrdiff_t i) { out[i] = src.field_at(pos[i], eps, static_cast<std::size_t>(i)); });
  return out;
}

Vec3 point_charge_field(const Vec3& xi, const Vec3& target, double exclusion_radius) {
  const Vec3 d = target - xi;
  const double r2 = norm2(d);
  const double r = std::sqrt(r2);
  if (r2 == 0.0 || r <= exclusion_radius)
    throw NearSingularity("target within " + std::to_string(exclusion_radius) + " of the point charge (distance " +
                              std::to_string(r) + ")",
                          NearSingularity::npos, r);
  return d / (r2 * r);
}

std::vector<Vec3> point_charge_field(const Vec3& xi, std::span<const Vec3> targets, double exclusion_radius) {
  std::vector<Vec3> out;
  out.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    try {
      out.push_back(point_charge_field(xi, targets[i], exclusion_radius));
    } catch (const NearSingularity& e) {
      throw NearSingularity(e.what(), i, e.distance());
    }
  }
  return out;
}

Mat3 gradient_kernel(const Vec3& y) {
  const double r2 = norm2(y);
  if (r2 == 0.0) throw NearSingularity("gradient kernel evaluated at y = 0", NearSingularity::npos, 0.0);
  const double r5 = r2 * r2 * std::sqrt(r2);
  Mat3 k{};
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) k[i][j] = k[j][i] = ((i == j ? r2 : 0.0) - 3.0 * y[i] * y[j]) / r5;
  return k;
}

Vec3 RadialSource::field_at(const Vec3& x) const {
  const Vec3 d = x - center;
  const double r = norm(d);
  if (r == 0.0) return {};
  return d * (enclosed_mass(r) / (r * r * r));
}

RadialSource RadialSource::uniform_ball(const Vec3& center, double radius, double mass) {
  return {center, [radius, mass](double r) {
            const double s = std::min(r / radius, 1.0);
            return mass * s * s * s;
          }};
}

RadialSource RadialSource::from_density(const Vec3& center, std::function<double(double)> rho, double support_radius) {
  return {center, [rho = std::move(rho), support_radius](double r) {
            const double upper = std::min(r, support_radius);
            if (upper <= 0.0) return 0.0;
            auto f = [&](double s) { return 4.0 * std::numbers::pi * s * s * rho(s); };
            return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, upper, 15, 1e-14);
          }};
}

FieldEvaluation evaluate_fields(const ParticleEnsemble& ensemble, const Vec3& xi, std::span<const Vec3> targets,
                                double eps, double exclusion_radius) {
  FieldEvaluation fe;
  fe.targets.assign(targets.begin(), targets.end());
  fe.plasma = plasma_field(ensemble, targets, eps);
  fe.charge = point_charge_field(xi, targets, exclusion_radius);
  fe.softening = eps;
  return fe;
}

void write_field_csv(const FieldEvaluation& fe, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << "x1,x2,x3,E1,E2,E3,F1,F2,F3\n" << std::setprecision(17);
  for (std::size_t i = 0; i < fe.targets.size(); ++i) {
    const auto& t = fe.targets[i];
    const auto& e = fe.plasma[i];
    const auto& f = fe.charge[i];
    os << t.x << ',' << t.y << ',' << t.z << ',' << e.x << ',' << e.y << ',' << e.z << ',' << f.x << ',' << f.y
       << ',' << f.z << '\n';
  }
}

}  // namespace vpdirac::fields
