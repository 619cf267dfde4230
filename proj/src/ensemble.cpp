#include "vpdirac/ensemble.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <unordered_set>

#include <boost/random/sobol.hpp>

#include "binary_io.hpp"
#include "vpdirac/error.hpp"

namespace vpdirac {

namespace {

// Sampled weights realize M0 only up to the quadrature error, so the mass
// invariant is checked with this relative slack.
constexpr double kMassSlack = 0.05;

bool finite(const Vec3& a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

}  // namespace

ParticleEnsemble::ParticleEnsemble(std::vector<Vec3> positions, std::vector<Vec3> velocities,
                                   std::vector<double> weights, std::vector<std::uint64_t> ids,
                                   std::shared_ptr<const InitialDensity> f0)
    : positions_(std::move(positions)),
      velocities_(std::move(velocities)),
      weights_(std::move(weights)),
      ids_(std::move(ids)),
      f0_(std::move(f0)) {
  const std::size_t n = positions_.size();
  if (velocities_.size() != n || weights_.size() != n || ids_.size() != n)
    throw InvalidArgument("ensemble columns have different lengths");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!finite(positions_[i]) || !finite(velocities_[i]))
      throw InvalidArgument("non-finite coordinate at particle " + std::to_string(i));
    if (!std::isfinite(weights_[i]) || weights_[i] < 0.0)
      throw InvalidArgument("weight of particle " + std::to_string(i) + " is negative or non-finite");
    total += weights_[i];
  }
  std::unordered_set<std::uint64_t> seen(ids_.begin(), ids_.end());
  if (seen.size() != n) throw InvalidArgument("ensemble ids are not unique");
  if (f0_ && total > f0_->total_mass() * (1.0 + kMassSlack))
    throw InvalidArgument("ensemble mass " + std::to_string(total) + " exceeds M0 = " +
                          std::to_string(f0_->total_mass()));
}

ParticleEnsemble ParticleEnsemble::with_coordinates(std::vector<Vec3> positions, std::vector<Vec3> velocities) const {
  if (positions.size() != size() || velocities.size() != size())
    throw InvalidArgument("with_coordinates: size mismatch");
  ParticleEnsemble out(*this);
  out.positions_ = std::move(positions);
  out.velocities_ = std::move(velocities);
  return out;
}

ParticleEnsemble ParticleEnsemble::with_weights(std::vector<double> weights) const {
  return ParticleEnsemble(positions_, velocities_, std::move(weights), ids_, f0_);
}

ParticleEnsemble sample_initial_ensemble(const InitialDensity& density, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("sample_initial_ensemble: N must be >= 1");

  // Cranley-Patterson rotation of a Sobol sequence keeps the net structure
  // and makes the sample a deterministic function of the seed.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::array<double, 6> shift{};
  for (double& s : shift) s = unif(rng);

  boost::random::sobol qrng(6);
  constexpr double kScale = 0x1p-64;

  std::vector<Vec3> xs(count);
  std::vector<Vec3> vs(count);
  std::vector<double> ws(count);
  std::vector<std::uint64_t> ids(count);
  const double inv_n = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::array<double, 6> u{};
    for (int d = 0; d < 6; ++d) {
      double v = static_cast<double>(qrng()) * kScale + shift[d];
      u[d] = v - std::floor(v);
    }
    const auto mapped = density.map_unit_cube(u);
    xs[i] = mapped.x;
    vs[i] = mapped.v;
    ws[i] = density(mapped.x, mapped.v) * mapped.jacobian * inv_n;
    ids[i] = i;
    if (!std::isfinite(ws[i])) throw InvalidArgument("profile produced a non-finite quadrature weight");
  }
  return ParticleEnsemble(std::move(xs), std::move(vs), std::move(ws), std::move(ids),
                          std::make_shared<const InitialDensity>(density));
}

bool inside_cutoff_region(const Vec3& x, const Vec3& v, const Vec3& xi0, const Vec3& eta0, int n) {
  const double r = norm(x - xi0);
  const double nn = static_cast<double>(n);
  return r > 1.0 / nn && r < nn && norm(v - eta0) < nn;
}

ParticleEnsemble apply_cutoff(const ParticleEnsemble& ensemble, int n) {
  if (n < 1) throw InvalidArgument("apply_cutoff: n must be >= 1");
  if (!ensemble.f0_ref()) throw InvalidArgument("apply_cutoff: ensemble has no reference density");
  const Vec3 xi0 = ensemble.f0_ref()->charge_center();
  const Vec3 eta0 = ensemble.f0_ref()->charge_velocity();
  std::vector<double> w(ensemble.weights().begin(), ensemble.weights().end());
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!inside_cutoff_region(ensemble.positions()[i], ensemble.velocities()[i], xi0, eta0, n)) w[i] = 0.0;
  return ensemble.with_weights(std::move(w));
}

void write_ensemble_csv(const ParticleEnsemble& e, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << "id,x1,x2,x3,v1,v2,v3,w\n" << std::setprecision(17);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const Vec3& x = e.positions()[i];
    const Vec3& v = e.velocities()[i];
    os << e.ids()[i] << ',' << x.x << ',' << x.y << ',' << x.z << ',' << v.x << ',' << v.y << ',' << v.z << ','
       << e.weights()[i] << '\n';
  }
}

ParticleEnsemble read_ensemble_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  if (line.rfind("id,", 0) != 0) throw std::runtime_error(path.string() + ": missing ensemble CSV header");
  std::vector<Vec3> xs, vs;
  std::vector<double> ws;
  std::vector<std::uint64_t> ids;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::array<double, 7> vals{};
    std::uint64_t id = 0;
    std::getline(ss, cell, ',');
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), id);
    if (ec != std::errc()) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad id");
    for (double& v : vals) {
      if (!std::getline(ss, cell, ','))
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 8 columns");
      v = std::stod(cell);
    }
    ids.push_back(id);
    xs.push_back({vals[0], vals[1], vals[2]});
    vs.push_back({vals[3], vals[4], vals[5]});
    ws.push_back(vals[6]);
  }
  return ParticleEnsemble(std::move(xs), std::move(vs), std::move(ws), std::move(ids));
}

void write_ensemble_binary(const ParticleEnsemble& e, const std::filesystem::path& path) {
  using namespace detail;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  put_magic(os, "VPENS001");
  put_u64(os, e.size());
  for (auto id : e.ids()) put_u64(os, id);
  for (int c = 0; c < 3; ++c)
    for (const auto& x : e.positions()) put_f64(os, x[c]);
  for (int c = 0; c < 3; ++c)
    for (const auto& v : e.velocities()) put_f64(os, v[c]);
  for (double w : e.weights()) put_f64(os, w);
}

ParticleEnsemble read_ensemble_binary(const std::filesystem::path& path) {
  using namespace detail;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  expect_magic(is, "VPENS001");
  const std::size_t n = get_u64(is);
  std::vector<std::uint64_t> ids(n);
  std::vector<Vec3> xs(n), vs(n);
  std::vector<double> ws(n);
  for (auto& id : ids) id = get_u64(is);
  for (int c = 0; c < 3; ++c)
    for (auto& x : xs) x[c] = get_f64(is);
  for (int c = 0; c < 3; ++c)
    for (auto& v : vs) v[c] = get_f64(is);
  for (double& w : ws) w = get_f64(is);
  return ParticleEnsemble(std::move(xs), std::move(vs), std::move(ws), std::move(ids));
}

}  // namespace vpdirac
