#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "vpdirac/density.hpp"
#include "vpdirac/diagnostics.hpp"
#include "vpdirac/dynamics.hpp"
#include "vpdirac/error.hpp"

using namespace vpdirac;

namespace {

ParticleEnsemble make(std::vector<Vec3> x, std::vector<Vec3> v, std::vector<double> w,
                      std::shared_ptr<const InitialDensity> f0 = nullptr) {
  std::vector<std::uint64_t> ids(x.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = 100 + i;
  return ParticleEnsemble(std::move(x), std::move(v), std::move(w), std::move(ids), std::move(f0));
}

SimulationConfig small_config(double horizon) {
  SimulationConfig c;
  c.horizon = horizon;
  c.cadence = horizon > 0.0 ? horizon / 4.0 : 0.05;
  c.particles = 256;
  return c;
}

double two_body_energy(const Vec3& x, const Vec3& v, const PointChargeState& q) {
  return 0.5 * norm2(v) + 0.5 * norm2(q.eta) + 1.0 / norm(x - q.xi);
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("zero-weight plasma leaves the charge in free flight") {
    const auto e = make({{1, 1, 1}, {-2, 0, 1}}, {{0, 0, 0}, {0.1, 0, 0}}, {0.0, 0.0});
    const auto flow = integrate(e, {{0, 0, 0}, {1, 0, 0}}, small_config(2.0));
    CHECK(flow.xi.back().x == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(flow.xi.back().y == 0.0);
    CHECK(flow.eta.back() == Vec3{1, 0, 0});
  }

  TEST_CASE("free transport with no field") {
    const Vec3 x0{0.3, -0.2, 0.5};
    const Vec3 v0{0.7, 0.1, -0.4};
    // A weightless particle and a charge far enough away that F is below rounding.
    const auto e = make({x0}, {v0}, {0.0});
    const auto flow = integrate(e, {{1e9, 0, 0}, {0, 0, 0}}, small_config(1.5));
    for (std::size_t k = 0; k < flow.samples(); ++k) {
      const Vec3 expect = x0 + v0 * flow.times[k];
      CHECK(norm(flow.X[k][0] - expect) <= 1e-12);
      CHECK(norm(flow.V[k][0] - v0) <= 1e-15);
    }
  }

  TEST_CASE("single step keeps ids and weights") {
    const auto e = make({{1, 0, 0}, {0, 2, 0}}, {{0, 0.1, 0}, {0.2, 0, 0}}, {0.1, 0.2});
    const auto r = step(e, {{0, 0, 0}, {0, 0, 0.3}}, 1e-2, 0.05);
    CHECK(std::equal(r.particles.ids().begin(), r.particles.ids().end(), e.ids().begin()));
    CHECK(std::equal(r.particles.weights().begin(), r.particles.weights().end(), e.weights().begin()));
    CHECK(r.dt_taken > 0.0);
    CHECK(r.dt_taken <= 1e-2);
    CHECK(r.charge.xi.z > 0.0);
    CHECK_THROWS_AS(step(e, {}, 0.0, 0.05), InvalidArgument);
  }

  TEST_CASE("head-on repulsive encounter conserves the two-body energy") {
    // The particle is launched at the charge and turns around at
    // distance ~ 1 / (relative kinetic energy), about 0.39 here.
    const Vec3 x0{3, 0.05, 0};
    const Vec3 v0{-3.0, 0, 0};
    const PointChargeState q0{{0, 0, 0}, {0, 0, 0}};
    const auto e = make({x0}, {v0}, {1.0});
    auto cfg = small_config(4.0);
    cfg.cadence = 0.05;
    const auto flow = integrate(e, q0, cfg);
    auto tight = cfg;
    tight.atol = tight.rtol = 1e-10;
    const auto ref = integrate(e, q0, tight);

    const double H0 = two_body_energy(x0, v0, q0);
    double drift = 0.0, dev = 0.0, closest = 1e300;
    for (std::size_t k = 0; k < flow.samples(); ++k) {
      drift = std::max(drift, std::abs(two_body_energy(flow.X[k][0], flow.V[k][0], flow.charge_at(k)) - H0) / H0);
      dev = std::max(dev, norm(flow.X[k][0] - ref.X[k][0]));
      closest = std::min(closest, norm(flow.X[k][0] - flow.xi[k]));
    }
    CHECK(closest < 0.5);
    CHECK(drift <= 1e-6);
    CHECK(dev <= 1e-5);
    // Momentum of the pair (both unit masses) is conserved.
    const Vec3 p = flow.V.back()[0] + flow.eta.back();
    CHECK(norm(p - v0) <= 1e-7);
  }

  TEST_CASE("zero horizon stores only the initial state") {
    const auto d = InitialDensity::default_profile();
    auto cfg = small_config(0.0);
    const auto flow = run(cfg, d);
    REQUIRE(flow.samples() == 1);
    CHECK(flow.times[0] == 0.0);
    CHECK(flow.stats.steps == 0);
    CHECK(flow.xi[0] == d.charge_center());
  }

  TEST_CASE("initial sample equals the seeds and runs are deterministic") {
    const auto d = InitialDensity::default_profile();
    auto cfg = small_config(0.2);
    const auto a = run(cfg, d);
    const auto b = run(cfg, d);
    const auto seeds = sample_initial_ensemble(d, cfg.particles, cfg.seed);
    for (std::size_t i = 0; i < a.seeds(); ++i) {
      REQUIRE(a.X[0][i] == seeds.positions()[i]);
      REQUIRE(a.V[0][i] == seeds.velocities()[i]);
    }
    CHECK(a.X == b.X);
    CHECK(a.V == b.V);
    CHECK(a.xi == b.xi);
    CHECK(a.eta == b.eta);
    const auto cut = apply_cutoff(seeds, cfg.n);
    CHECK(a.weights == std::vector<double>(cut.weights().begin(), cut.weights().end()));
    CHECK(a.reference_weights == std::vector<double>(seeds.weights().begin(), seeds.weights().end()));
  }

  TEST_CASE("weights are never mutated and the mass is bitwise constant") {
    const auto d = InitialDensity::default_profile();
    const auto flow = run(small_config(0.3), d);
    const double m0 = diagnostics::total_mass(flow.ensemble_at(0));
    for (std::size_t k = 1; k < flow.samples(); ++k) CHECK(diagnostics::total_mass(flow.ensemble_at(k)) == m0);
  }

  TEST_CASE("energy drift of a short default run") {
    const auto d = InitialDensity::default_profile();
    auto cfg = small_config(0.3);
    cfg.particles = 512;
    const auto flow = run(cfg, d);
    const double eps = flow.softening;
    const double H0 = diagnostics::total_energy(flow.ensemble_at(0), flow.charge_at(0), eps).total();
    for (std::size_t k = 1; k < flow.samples(); ++k) {
      const double H = diagnostics::total_energy(flow.ensemble_at(k), flow.charge_at(k), eps).total();
      CHECK(std::abs(H - H0) / H0 <= 1e-6);
    }
  }

  TEST_CASE("run_pair shares the seed set") {
    const auto d = InitialDensity::default_profile();
    auto cfg = small_config(0.1);
    CHECK_THROWS_AS(run_pair(cfg, d, 8, 8), InvalidArgument);
    const auto [a, b] = run_pair(cfg, d, 4, 16);
    CHECK(a.ids == b.ids);
    CHECK(a.reference_weights == b.reference_weights);
    CHECK(a.X[0] == b.X[0]);
    CHECK(a.n == 4);
    CHECK(b.n == 16);
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.seeds(); ++i) {
      CHECK(a.weights[i] <= b.weights[i]);
      ma += a.weights[i];
      mb += b.weights[i];
    }
    CHECK(ma < mb);
  }

  TEST_CASE("without plasma weight the cutoff index is irrelevant") {
    auto f0 = std::make_shared<const InitialDensity>(InitialDensity::default_profile());
    const auto seeds = sample_initial_ensemble(*f0, 64, 1);
    const auto weightless = seeds.with_weights(std::vector<double>(seeds.size(), 0.0));
    const auto a = run_cutoff(small_config(0.2), weightless, 4);
    const auto b = run_cutoff(small_config(0.2), weightless, 16);
    CHECK(a.X == b.X);
    CHECK(a.V == b.V);
    CHECK(a.xi == b.xi);
  }

  TEST_CASE("charge bounds hold along a run") {
    const auto d = InitialDensity::default_profile();
    auto cfg = small_config(0.5);
    cfg.particles = 512;
    const auto flow = run(cfg, d);
    const double H0 = diagnostics::total_energy(flow.ensemble_at(0), flow.charge_at(0), flow.softening).total();
    const double vmax = std::sqrt(2.0 * H0);
    for (std::size_t k = 0; k < flow.samples(); ++k) {
      CHECK(norm(flow.eta[k]) <= vmax * (1.0 + 1e-6));
      CHECK(norm(flow.xi[k]) <= norm(flow.xi[0]) + flow.times[k] * vmax * (1.0 + 1e-6));
    }
  }

  TEST_CASE("time reversal recovers the initial state") {
    const auto d = InitialDensity::default_profile();
    const auto seeds = apply_cutoff(sample_initial_ensemble(d, 128, 3), 8);
    const PointChargeState q0{d.charge_center(), d.charge_velocity()};
    auto cfg = small_config(0.4);
    cfg.atol = cfg.rtol = 1e-10;
    const auto fwd = integrate(seeds, q0, cfg);
    std::vector<Vec3> back_v = fwd.V.back();
    for (auto& v : back_v) v = -v;
    const auto turned = fwd.ensemble_at(fwd.samples() - 1).with_coordinates(fwd.X.back(), back_v);
    const auto bwd = integrate(turned, {fwd.xi.back(), -fwd.eta.back()}, cfg);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      err = std::max(err, norm(bwd.X.back()[i] - seeds.positions()[i]));
      scale = std::max(scale, norm(seeds.positions()[i]));
    }
    CHECK(err / scale <= 1e-5);
    CHECK(norm(bwd.xi.back() - q0.xi) <= 1e-6);
  }

  TEST_CASE("closest-approach floor") {
    const Vec3 x0{1e-3, 0, 0};
    auto cfg = small_config(0.1);
    cfg.closest_approach_floor = 1e-2;
    // A charged particle inside the floor aborts with a snapshot.
    try {
      integrate(make({x0}, {{0, 0, 0}}, {0.1}), {{0, 0, 0}, {0, 0, 0}}, cfg);
      FAIL("expected StepFailure");
    } catch (const StepFailure& f) {
      CHECK(f.particle() == 0);
      CHECK(f.min_distance() == doctest::Approx(1e-3));
      CHECK(f.snapshot().size() == 1);
    }
    // A passive tracer is frozen and flagged; the others evolve.
    const auto flow = integrate(make({x0, {2, 0, 0}}, {{0, 0, 0}, {0, 0, 0}}, {0.0, 0.0}), {{0, 0, 0}, {0, 0, 0}}, cfg);
    CHECK(flow.floor_hit[0] == 1);
    CHECK(flow.floor_hit[1] == 0);
    CHECK(flow.X.back()[0] == x0);
    CHECK(flow.X.back()[1].x > 2.0);
    CHECK(flow.excluded_weight() == 0.0);
  }

  TEST_CASE("config validation") {
    SimulationConfig c;
    c.n = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.softening = -1.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.cadence = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    CHECK(c.effective_softening() == 0.0625);
    CHECK(c.effective_floor() == doctest::Approx(1.25e-5));
  }

  TEST_CASE("stored times follow the cadence and end at the horizon") {
    auto cfg = small_config(0.33);
    cfg.cadence = 0.1;
    const auto flow = integrate(make({{1, 0, 0}}, {{0, 0, 0}}, {0.0}), {{0, 0, 0}, {0, 0, 0}}, cfg);
    REQUIRE(flow.samples() == 5);
    CHECK(flow.times[1] == doctest::Approx(0.1));
    CHECK(flow.times.back() == 0.33);
    CHECK(flow.index_of_time(0.2) == 2);
  }

  TEST_CASE("flow record serialization round trip") {
    const auto flow = run(small_config(0.1), InitialDensity::default_profile());
    const auto dir = std::filesystem::temp_directory_path() / "vpdirac_flow_io";
    std::filesystem::create_directories(dir);
    write_flow_binary(flow, dir / "f.bin");
    const auto back = read_flow_binary(dir / "f.bin");
    CHECK(back.ids == flow.ids);
    CHECK(back.X == flow.X);
    CHECK(back.V == flow.V);
    CHECK(back.xi == flow.xi);
    CHECK(back.times == flow.times);
    CHECK(back.reference_weights == flow.reference_weights);
    CHECK(back.floor_hit == flow.floor_hit);
    CHECK(back.stats.steps == flow.stats.steps);
    write_flow_csv(flow, dir / "f.csv");
    write_charge_track_csv(flow, dir / "c.csv");
    CHECK(std::filesystem::file_size(dir / "f.csv") > 0);
    std::filesystem::remove_all(dir);
  }
}
