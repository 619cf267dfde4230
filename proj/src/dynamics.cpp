#include "vpdirac/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parallel.hpp"
#include "vpdirac/error.hpp"
#include "vpdirac/fields.hpp"

namespace vpdirac {

namespace {

// Dormand-Prince 5(4) tableau (FSAL).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMaxGrowth = 5.0;
constexpr double kMinShrink = 0.2;

// Flat state: x[N], y[N], z[N], vx[N], vy[N], vz[N], xi[3], eta[3].
struct Layout {
  std::size_t n;
  std::size_t x(int c) const { return c * n; }
  std::size_t v(int c) const { return (3 + c) * n; }
  std::size_t xi(int c) const { return 6 * n + c; }
  std::size_t eta(int c) const { return 6 * n + 3 + c; }
  std::size_t size() const { return 6 * n + 6; }
};

std::vector<double> pack(const ParticleEnsemble& p, const PointChargeState& q) {
  Layout L{p.size()};
  std::vector<double> y(L.size());
  for (std::size_t i = 0; i < L.n; ++i) {
    for (int c = 0; c < 3; ++c) {
      y[L.x(c) + i] = p.positions()[i][c];
      y[L.v(c) + i] = p.velocities()[i][c];
    }
  }
  for (int c = 0; c < 3; ++c) {
    y[L.xi(c)] = q.xi[c];
    y[L.eta(c)] = q.eta[c];
  }
  return y;
}

void unpack(const std::vector<double>& y, std::size_t n, std::vector<Vec3>& xs, std::vector<Vec3>& vs,
            PointChargeState& q) {
  Layout L{n};
  xs.resize(n);
  vs.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) {
      xs[i][c] = y[L.x(c) + i];
      vs[i][c] = y[L.v(c) + i];
    }
  for (int c = 0; c < 3; ++c) {
    q.xi[c] = y[L.xi(c)];
    q.eta[c] = y[L.eta(c)];
  }
}

class CoupledSystem {
 public:
  CoupledSystem(std::span<const double> weights, double eps) : weights_(weights), eps_(eps), frozen_(weights.size(), 0) {}

  std::size_t size() const { return weights_.size(); }
  std::vector<std::uint8_t>& frozen() { return frozen_; }

  // b = (v, E + F) for the plasma and (eta, E(xi)) for the charge.
  void rhs(const std::vector<double>& y, std::vector<double>& dy) {
    const Layout L{size()};
    const std::span<const double> all(y);
    const fields::CoulombSources src(all.subspan(L.x(0), L.n), all.subspan(L.x(1), L.n), all.subspan(L.x(2), L.n),
                                     weights_);
    const Vec3 xi{y[L.xi(0)], y[L.xi(1)], y[L.xi(2)]};
    const auto count = static_cast<std::ptrdiff_t>(L.n);
    detail::parallel_for(count, [&](std::ptrdiff_t ii) {
      const auto i = static_cast<std::size_t>(ii);
      if (frozen_[i]) {
        for (int c = 0; c < 3; ++c) dy[L.x(c) + i] = dy[L.v(c) + i] = 0.0;
        return;
      }
      const Vec3 x{y[L.x(0) + i], y[L.x(1) + i], y[L.x(2) + i]};
      const Vec3 d = x - xi;
      const double r2 = norm2(d);
      const Vec3 accel = src.field_at(x, eps_, i) + d / (r2 * std::sqrt(r2));
      for (int c = 0; c < 3; ++c) {
        dy[L.x(c) + i] = y[L.v(c) + i];
        dy[L.v(c) + i] = accel[c];
      }
    });
    const Vec3 e_charge = src.field_at(xi, 0.0);
    for (int c = 0; c < 3; ++c) {
      dy[L.xi(c)] = y[L.eta(c)];
      dy[L.eta(c)] = e_charge[c];
    }
  }

  // Closest active particle to the charge.
  std::pair<double, std::size_t> closest(const std::vector<double>& y) const {
    const Layout L{size()};
    const Vec3 xi{y[L.xi(0)], y[L.xi(1)], y[L.xi(2)]};
    double best = std::numeric_limits<double>::infinity();
    std::size_t idx = NearSingularity::npos;
    for (std::size_t i = 0; i < L.n; ++i) {
      if (frozen_[i]) continue;
      const Vec3 x{y[L.x(0) + i], y[L.x(1) + i], y[L.x(2) + i]};
      const double d = norm(x - xi);
      if (d < best) {
        best = d;
        idx = i;
      }
    }
    return {best, idx};
  }

 private:
  std::span<const double> weights_;
  double eps_;
  std::vector<std::uint8_t> frozen_;
};

class DormandPrince {
 public:
  DormandPrince(CoupledSystem& sys, double atol, double rtol) : sys_(sys), atol_(atol), rtol_(rtol) {
    const std::size_t m = Layout{sys.size()}.size();
    for (auto& k : k_) k.resize(m);
    tmp_.resize(m);
  }

  std::size_t evaluations() const { return evals_; }

  void init(const std::vector<double>& y) {
    sys_.rhs(y, k_[0]);
    ++evals_;
  }

  // One trial step of size h from y (k1 = f(y) cached). Writes the proposed
  // state into ynew and returns the scaled error norm.
  double attempt(const std::vector<double>& y, double h, std::vector<double>& ynew) {
    const std::size_t m = y.size();
    auto& k1 = k_[0];
    auto& k2 = k_[1];
    auto& k3 = k_[2];
    auto& k4 = k_[3];
    auto& k5 = k_[4];
    auto& k6 = k_[5];
    auto& k7 = k_[6];
    for (std::size_t i = 0; i < m; ++i) tmp_[i] = y[i] + h * a21 * k1[i];
    eval(tmp_, k2);
    for (std::size_t i = 0; i < m; ++i) tmp_[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    eval(tmp_, k3);
    for (std::size_t i = 0; i < m; ++i) tmp_[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    eval(tmp_, k4);
    for (std::size_t i = 0; i < m; ++i)
      tmp_[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    eval(tmp_, k5);
    for (std::size_t i = 0; i < m; ++i)
      tmp_[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    eval(tmp_, k6);
    ynew.resize(m);
    for (std::size_t i = 0; i < m; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    eval(ynew, k7);
    double err = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double scale = atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err = std::max(err, std::abs(e) / scale);
    }
    return std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
  }

  // FSAL: the last stage of an accepted step is the first of the next.
  void accept() { std::swap(k_[0], k_[6]); }

  static double growth(double err) {
    if (err == 0.0) return kMaxGrowth;
    return std::clamp(kSafety * std::pow(err, -0.2), kMinShrink, kMaxGrowth);
  }

 private:
  void eval(const std::vector<double>& y, std::vector<double>& dy) {
    sys_.rhs(y, dy);
    ++evals_;
  }

  CoupledSystem& sys_;
  double atol_;
  double rtol_;
  std::array<std::vector<double>, 7> k_;
  std::vector<double> tmp_;
  std::size_t evals_ = 0;
};

ParticleEnsemble snapshot_of(const ParticleEnsemble& like, const std::vector<double>& y, PointChargeState& q) {
  std::vector<Vec3> xs, vs;
  unpack(y, like.size(), xs, vs, q);
  return like.with_coordinates(std::move(xs), std::move(vs));
}

std::vector<double> output_times(double horizon, double cadence) {
  std::vector<double> ts{0.0};
  if (horizon <= 0.0) return ts;
  const auto k = static_cast<std::size_t>(std::floor(horizon / cadence + 1e-9));
  for (std::size_t i = 1; i <= k; ++i) ts.push_back(std::min(horizon, static_cast<double>(i) * cadence));
  if (horizon - ts.back() > 1e-12 * std::max(1.0, horizon)) ts.push_back(horizon);
  ts.back() = horizon;
  return ts;
}

}  // namespace

void SimulationConfig::validate() const {
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw InvalidArgument("horizon must be >= 0");
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (particles < 1) throw InvalidArgument("particles must be >= 1");
  if (!(atol > 0.0) || !(rtol >= 0.0)) throw InvalidArgument("tolerances must be positive");
  if (softening && !(*softening >= 0.0)) throw InvalidArgument("softening must be >= 0");
  if (!(cadence > 0.0)) throw InvalidArgument("cadence must be positive");
  if (closest_approach_floor && !(*closest_approach_floor >= 0.0))
    throw InvalidArgument("closest_approach_floor must be >= 0");
  if (!(dt_initial > 0.0) || !(dt_floor > 0.0)) throw InvalidArgument("time steps must be positive");
  if (!(approach_cap > 0.0)) throw InvalidArgument("approach_cap must be positive");
}

double FlowRecord::excluded_weight() const {
  double s = 0.0;
  for (std::size_t i = 0; i < seeds(); ++i)
    if (floor_hit[i]) s += reference_weights[i];
  return s;
}

ParticleEnsemble FlowRecord::ensemble_at(std::size_t k) const {
  return ParticleEnsemble(X.at(k), V.at(k), weights, ids);
}

std::size_t FlowRecord::index_of_time(double s) const {
  if (times.empty()) throw InvalidArgument("flow has no samples");
  std::size_t best = 0;
  for (std::size_t k = 1; k < times.size(); ++k)
    if (std::abs(times[k] - s) < std::abs(times[best] - s)) best = k;
  return best;
}

StepResult step(const ParticleEnsemble& particles, const PointChargeState& charge, double dt, double eps,
                const StepControl& control) {
  if (!(dt > 0.0)) throw InvalidArgument("step: dt must be positive");
  CoupledSystem sys(particles.weights(), eps);
  DormandPrince rk(sys, control.atol, control.rtol);
  std::vector<double> y = pack(particles, charge);
  std::vector<double> ynew;
  auto [dmin, idx] = sys.closest(y);
  if (dmin <= control.closest_approach_floor)
    throw StepFailure("particle inside the closest-approach floor", 0.0, dmin, idx, particles, charge);
  rk.init(y);
  StepResult res;
  double h = std::min(dt, control.approach_cap * std::pow(dmin, 1.5));
  for (;;) {
    const double err = rk.attempt(y, h, ynew);
    if (err <= 1.0) {
      res.dt_taken = h;
      res.dt_next = h * DormandPrince::growth(err);
      break;
    }
    ++res.rejected;
    h *= DormandPrince::growth(err);
    if (h < control.dt_floor)
      throw StepFailure("step size underflow (dt < " + std::to_string(control.dt_floor) + ")", 0.0, dmin, idx,
                        particles, charge);
  }
  res.particles = snapshot_of(particles, ynew, res.charge);
  return res;
}

FlowRecord integrate(const ParticleEnsemble& particles, const PointChargeState& charge, const SimulationConfig& config,
                     std::vector<double> reference_weights) {
  config.validate();
  const std::size_t n = particles.size();
  if (reference_weights.empty()) reference_weights.assign(particles.weights().begin(), particles.weights().end());
  if (reference_weights.size() != n) throw InvalidArgument("reference weights do not match the ensemble");

  FlowRecord rec;
  rec.n = config.n;
  rec.ids.assign(particles.ids().begin(), particles.ids().end());
  rec.reference_weights = std::move(reference_weights);
  rec.weights.assign(particles.weights().begin(), particles.weights().end());
  rec.floor_hit.assign(n, 0);
  rec.softening = config.effective_softening();
  rec.times = output_times(config.horizon, config.cadence);
  rec.X.reserve(rec.times.size());
  rec.V.reserve(rec.times.size());

  CoupledSystem sys(rec.weights, rec.softening);
  DormandPrince rk(sys, config.atol, config.rtol);
  std::vector<double> y = pack(particles, charge);
  std::vector<double> ynew;
  const double floor = config.effective_floor();

  auto store = [&](const std::vector<double>& state) {
    PointChargeState q;
    std::vector<Vec3> xs, vs;
    unpack(state, n, xs, vs, q);
    rec.X.push_back(std::move(xs));
    rec.V.push_back(std::move(vs));
    rec.xi.push_back(q.xi);
    rec.eta.push_back(q.eta);
  };
  auto fail = [&](const std::string& what, double t, double dmin, std::size_t idx) -> StepFailure {
    PointChargeState q;
    auto snap = snapshot_of(particles, y, q);
    return StepFailure(what, t, dmin, idx, std::move(snap), q);
  };

  // Seeds that reach the floor: positive-weight particles abort the run,
  // passive tracers are frozen and flagged.
  auto enforce_floor = [&](double t) {
    const Layout L{n};
    const Vec3 xi{y[L.xi(0)], y[L.xi(1)], y[L.xi(2)]};
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (sys.frozen()[i]) continue;
      const Vec3 x{y[L.x(0) + i], y[L.x(1) + i], y[L.x(2) + i]};
      const double d = norm(x - xi);
      if (d > floor) continue;
      if (rec.weights[i] > 0.0)
        throw fail("particle " + std::to_string(i) + " entered the closest-approach floor " + std::to_string(floor),
                   t, d, i);
      sys.frozen()[i] = 1;
      rec.floor_hit[i] = 1;
      changed = true;
    }
    return changed;
  };

  enforce_floor(0.0);
  store(y);
  if (rec.times.size() == 1) return rec;

  rk.init(y);
  double t = 0.0;
  double dt = config.dt_initial;
  for (std::size_t k = 1; k < rec.times.size(); ++k) {
    const double target = rec.times[k];
    while (t < target) {
      if (rec.stats.steps + rec.stats.rejected >= config.max_steps)
        throw fail("maximum number of steps exceeded", t, rec.stats.min_charge_distance, NearSingularity::npos);
      auto [dmin, idx] = sys.closest(y);
      rec.stats.min_charge_distance = std::min(rec.stats.min_charge_distance, dmin);
      double h = std::min(dt, config.approach_cap * std::pow(dmin, 1.5));
      const bool clipped = h >= target - t;
      if (clipped) h = target - t;
      double err = 0.0;
      try {
        err = rk.attempt(y, h, ynew);
      } catch (const NearSingularity& e) {
        throw fail(std::string("field singularity: ") + e.what(), t, dmin, idx);
      }
      if (err <= 1.0) {
        t = clipped ? target : t + h;
        std::swap(y, ynew);
        rk.accept();
        ++rec.stats.steps;
        rec.stats.min_dt = std::min(rec.stats.min_dt, h);
        const double proposal = h * DormandPrince::growth(err);
        dt = clipped ? std::max(dt, proposal) : proposal;
        if (enforce_floor(t)) rk.init(y);
      } else {
        ++rec.stats.rejected;
        dt = h * DormandPrince::growth(err);
        if (dt < config.dt_floor)
          throw fail("step size underflow (dt < " + std::to_string(config.dt_floor) + ")", t, dmin, idx);
      }
    }
    store(y);
  }
  rec.stats.evaluations = rk.evaluations();
  auto [dmin, idx] = sys.closest(y);
  (void)idx;
  rec.stats.min_charge_distance = std::min(rec.stats.min_charge_distance, dmin);
  return rec;
}

FlowRecord run_cutoff(const SimulationConfig& config, const ParticleEnsemble& uncut, int n) {
  if (!uncut.f0_ref()) throw InvalidArgument("run_cutoff: ensemble has no reference density");
  SimulationConfig cfg = config;
  cfg.n = n;
  const auto driven = apply_cutoff(uncut, n);
  const PointChargeState q{uncut.f0_ref()->charge_center(), uncut.f0_ref()->charge_velocity()};
  return integrate(driven, q, cfg, std::vector<double>(uncut.weights().begin(), uncut.weights().end()));
}

FlowRecord run(const SimulationConfig& config, const InitialDensity& density) {
  config.validate();
  const auto uncut = sample_initial_ensemble(density, config.particles, config.seed);
  return run_cutoff(config, uncut, config.n);
}

std::pair<FlowRecord, FlowRecord> run_pair(const SimulationConfig& config, const InitialDensity& density, int n_a,
                                           int n_b) {
  if (n_a == n_b) throw InvalidArgument("run_pair: n_a and n_b must differ");
  config.validate();
  const auto uncut = sample_initial_ensemble(density, config.particles, config.seed);
  return {run_cutoff(config, uncut, n_a), run_cutoff(config, uncut, n_b)};
}

}  // namespace vpdirac
