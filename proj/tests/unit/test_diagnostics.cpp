#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "vpdirac/density.hpp"
#include "vpdirac/diagnostics.hpp"
#include "vpdirac/dynamics.hpp"
#include "vpdirac/error.hpp"
#include "vpdirac/fields.hpp"

using namespace vpdirac;
using namespace vpdirac::diagnostics;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMoment4 = 16.370642536902886789;  // tests/oracles/reference_values.py

ParticleEnsemble make(std::vector<Vec3> x, std::vector<Vec3> v, std::vector<double> w) {
  std::vector<std::uint64_t> ids(x.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return ParticleEnsemble(std::move(x), std::move(v), std::move(w), std::move(ids));
}

// Equal-weight cubic lattice filling the unit ball with total mass 1.
ParticleEnsemble lattice_ball(double spacing) {
  std::vector<Vec3> x;
  const int k = static_cast<int>(std::ceil(1.0 / spacing));
  for (int i = -k; i <= k; ++i)
    for (int j = -k; j <= k; ++j)
      for (int l = -k; l <= k; ++l) {
        const Vec3 p{(i + 0.5) * spacing, (j + 0.5) * spacing, (l + 0.5) * spacing};
        if (norm2(p) < 1.0) x.push_back(p);
      }
  std::vector<double> w(x.size(), 1.0 / static_cast<double>(x.size()));
  return make(x, std::vector<Vec3>(x.size()), w);
}

ParticleEnsemble scaled(const ParticleEnsemble& e, double c) {
  std::vector<double> w(e.weights().begin(), e.weights().end());
  for (double& x : w) x *= c;
  return ParticleEnsemble(std::vector<Vec3>(e.positions().begin(), e.positions().end()),
                          std::vector<Vec3>(e.velocities().begin(), e.velocities().end()), std::move(w),
                          std::vector<std::uint64_t>(e.ids().begin(), e.ids().end()));
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("total mass") {
    CHECK(total_mass(ParticleEnsemble{}) == 0.0);
    const auto e = make({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, std::vector<Vec3>(3), {0.1, 0.2, 0.3});
    CHECK(total_mass(e) == doctest::Approx(0.6).epsilon(1e-15));
    const auto s = sample_initial_ensemble(InitialDensity::default_profile(), 100000, 12345);
    CHECK(std::abs(total_mass(s) - 0.9) / 0.9 <= 1e-3);
  }

  TEST_CASE("total energy hand values") {
    const auto none = total_energy(ParticleEnsemble{}, {{0, 0, 0}, {2, 0, 0}}, 0.0);
    CHECK(none.total() == 2.0);

    // Two particles at rest with the charge far away: only the pair term
    // (1/2) * 2 * (0.5 * 0.5 / 2) survives up to the 1/L charge coupling.
    const double L = 1e12;
    const auto pair = total_energy(make({{0, 0, 0}, {2, 0, 0}}, std::vector<Vec3>(2), {0.5, 0.5}), {{L, 0, 0}, {}}, 0.0);
    CHECK(pair.plasma_plasma == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(pair.total() == doctest::Approx(0.125).epsilon(1e-11));

    const auto one = total_energy(make({{1, 0, 0}}, std::vector<Vec3>(1), {1.0}), {{0, 0, 0}, {0, 0, 0}}, 0.0);
    CHECK(one.total() == 1.0);
    CHECK(one.plasma_charge == 1.0);
  }

  TEST_CASE("softened pair energy and zero weights") {
    const auto e = make({{0, 0, 0}, {2, 0, 0}, {5, 0, 0}}, std::vector<Vec3>(3), {0.5, 0.5, 0.0});
    const auto h = total_energy(e, {{1e12, 0, 0}, {}}, 1.5);
    CHECK(h.plasma_plasma == doctest::Approx(0.25 / 2.5).epsilon(1e-14));
    CHECK_THROWS_AS(total_energy(e, {}, -1.0), InvalidArgument);
  }

  TEST_CASE("default initial energy matches quadrature") {
    const auto d = InitialDensity::default_profile();
    const auto s = sample_initial_ensemble(d, 65536, 12345);
    const auto ref = d.reference_energy();
    const auto h = total_energy(s, {d.charge_center(), d.charge_velocity()}, 0.0);
    CHECK(h.plasma_kinetic == doctest::Approx(ref.plasma_kinetic).epsilon(5e-3));
    CHECK(h.plasma_charge == doctest::Approx(ref.plasma_charge).epsilon(5e-3));
    CHECK(h.plasma_plasma == doctest::Approx(ref.plasma_plasma).epsilon(1e-2));
    CHECK(h.charge_kinetic == 0.125);
  }

  TEST_CASE("energy moments") {
    const auto one = make({{1, 0, 0}}, {{0, 1, 0}}, {1.0});
    CHECK(energy_moment(one, {}, 2.0) == doctest::Approx(2.0).epsilon(1e-15));
    const auto d = InitialDensity::default_profile();
    const auto s = sample_initial_ensemble(d, 100000, 12345);
    CHECK(energy_moment(s, d.charge_center(), 0.0) == total_mass(s));
    CHECK(std::abs(energy_moment(s, d.charge_center(), 4.0) - kMoment4) / kMoment4 <= 1e-2);
    CHECK_THROWS_AS(energy_moment(one, {}, -1.0), InvalidArgument);
    CHECK_THROWS_AS(energy_moment(one, {1, 0, 0}, 2.0), NearSingularity);
  }

  TEST_CASE("virial rate and accumulator") {
    const auto one = make({{1, 0, 0}}, std::vector<Vec3>(1), {1.0});
    CHECK(virial_rate(one, {}) == 1.0);
    const std::vector<double> t{0.0, 0.5, 1.0, 2.5};
    const std::vector<double> r(4, 1.0);
    const auto acc = virial_accumulate(t, r);
    for (std::size_t k = 0; k < t.size(); ++k) CHECK(acc[k] == doctest::Approx(t[k]).epsilon(1e-15));
    CHECK(linear_growth_bound(t, acc) == doctest::Approx(2.5 / 3.5));

    const auto s = sample_initial_ensemble(InitialDensity::default_profile(), 1000, 4);
    const Vec3 shift{3.25, -1.5, 0.75};
    std::vector<Vec3> moved(s.positions().begin(), s.positions().end());
    for (auto& x : moved) x += shift;
    const auto m = s.with_coordinates(moved, {s.velocities().begin(), s.velocities().end()});
    CHECK(virial_rate(m, shift) == doctest::Approx(virial_rate(s, {})).epsilon(1e-12));
  }

  TEST_CASE("density norms") {
    const auto s = sample_initial_ensemble(InitialDensity::default_profile(), 20000, 4);
    const auto g = GridSpec::cube({}, 30.0, 60);
    CHECK(density_norm(s, 1.0, g) == doctest::Approx(total_mass(s)).epsilon(1e-12));
    for (double p : {1.0, 5.0 / 3.0, 3.0, std::numeric_limits<double>::infinity()})
      CHECK(density_norm(scaled(s, 2.0), p, g) == doctest::Approx(2.0 * density_norm(s, p, g)).epsilon(1e-13));
    CHECK_THROWS_AS(density_norm(s, 0.5, g), InvalidArgument);
    DensityEstimator kde{true, 2.0};
    CHECK(density_norm(s, 1.0, g, kde) == doctest::Approx(total_mass(s)).epsilon(1e-3));
  }

  TEST_CASE("uniform ball sup density converges under refinement") {
    const auto e = lattice_ball(0.0125);
    const double exact = 3.0 / (4.0 * kPi);
    double prev = INFINITY;
    for (std::size_t cells : {10u, 20u, 40u}) {
      const auto g = GridSpec::cube({0.013, -0.007, 0.004}, 1.25, cells);
      // Interior nodes only: the sup over interior cells of the CIC estimate.
      const auto rho = deposit_density(e, g);
      double sup = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (norm(g.node(i)) < 0.75) sup = std::max(sup, rho[i]);
      const double err = std::abs(sup - exact) / exact;
      CHECK(err <= 2e-2);
      CHECK(err <= prev * 1.05);
      prev = err;
    }
  }

  TEST_CASE("field norms and Hoelder seminorm") {
    const auto g = GridSpec::cube({}, 1.0, 8);
    const auto constant = sample_grid(g, [](const Vec3&) { return Vec3{1, 2, 3}; });
    CHECK(holder_seminorm(constant, 0.5) == 0.0);
    const auto linear = sample_grid(g, [](const Vec3& x) { return x; });
    CHECK(holder_seminorm(linear, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    const auto big = GridSpec::cube({}, 1.0, 20);
    CHECK(holder_seminorm(sample_grid(big, [](const Vec3& x) { return x; }), 1.0) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(field_norm(constant, 2.0) == doctest::Approx(std::sqrt(14.0 * g.volume())));
    CHECK_THROWS_AS(holder_seminorm(linear, 0.0), InvalidArgument);
  }

  TEST_CASE("uniform ball field-to-density norm ratio is stable under refinement") {
    const auto ball = fields::RadialSource::uniform_ball({}, 1.0, 1.0);
    const double rho0 = 3.0 / (4.0 * kPi);
    std::vector<double> ratios;
    for (std::size_t cells : {16u, 32u, 64u}) {
      const auto g = GridSpec::cube({}, 3.0, cells);
      const auto E = sample_grid(g, [&](const Vec3& x) { return ball.field_at(x); });
      const auto rho = sample_grid(g, [&](const Vec3& x) { return norm2(x) < 1.0 ? rho0 : 0.0; });
      ratios.push_back(field_norm(E, 15.0 / 4.0) / grid_lp_norm(rho, 5.0 / 3.0));
    }
    for (double r : ratios) CHECK(std::isfinite(r));
    CHECK(std::abs(ratios[2] / ratios[1] - 1.0) <= 0.05);
    CHECK(std::abs(ratios[1] / ratios[0] - 1.0) <= 0.1);
  }

  TEST_CASE("interpolation constant and check") {
    // C(m) from minimizing A R^3 + B R^{-m}, checked against a brute-force
    // minimization with A = 4 pi / 3, B = 1.
    for (double m : {1.0, 2.0, 4.0, 6.0}) {
      double best = INFINITY;
      for (int i = 1; i < 200000; ++i) {
        const double R = 1e-3 * i;
        best = std::min(best, 4.0 * kPi / 3.0 * R * R * R + std::pow(R, -m));
      }
      // rho <= best, so ||rho||_{(m+3)/3} scales as best^{...}: at unit
      // ||f||_inf and unit moment the pointwise bound is exactly C(m).
      CHECK(interpolation_constant(m) == doctest::Approx(best).epsilon(1e-6));
    }
    CHECK(interpolation_constant(2.0) == doctest::Approx(3.4762).epsilon(1e-4));

    const auto g = GridSpec::cube({}, 4.0, 32);
    CHECK(interpolation_check(ParticleEnsemble{}, 2.0, g, 1.0).ratio == 0.0);
    const auto d = InitialDensity::default_profile();
    const auto s = sample_initial_ensemble(d, 20000, 8);
    const auto base = interpolation_check(s, 2.0, g);
    CHECK(base.ratio > 0.0);
    CHECK(base.ratio <= 1.05);
    // Translating ensemble and grid together leaves both sides unchanged.
    const Vec3 shift{0.5, -0.25, 1.0};
    std::vector<Vec3> moved(s.positions().begin(), s.positions().end());
    for (auto& x : moved) x += shift;
    const auto m = s.with_coordinates(moved, {s.velocities().begin(), s.velocities().end()});
    auto gs = g;
    gs.origin += shift;
    CHECK(interpolation_check(m, 2.0, gs).ratio == doctest::Approx(base.ratio).epsilon(1e-9));
  }

  TEST_CASE("point charge weak norm") {
    const double exact = std::pow(4.0 * kPi / 3.0, 2.0 / 3.0);
    CHECK(exact == doctest::Approx(2.5985).epsilon(1e-4));
    CHECK(point_charge_weak_norm({}) == doctest::Approx(exact).epsilon(1e-2));
    CHECK(point_charge_weak_norm({3, -1, 2}) == doctest::Approx(point_charge_weak_norm({})).epsilon(1e-12));
  }

  TEST_CASE("growth fits") {
    std::vector<double> t, v;
    for (int k = 0; k <= 10; ++k) {
      t.push_back(0.1 * k);
      v.push_back(3.0 * std::pow(1.0 + 0.1 * k, 0.7));
    }
    const auto fit = fit_power_growth(t, v);
    CHECK(fit.c == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(fit.C == doctest::Approx(3.0).epsilon(1e-12));
    std::vector<double> decay{2.0, 1.5, 1.0};
    const auto flat = fit_power_growth(std::vector<double>{0, 1, 2}, decay);
    CHECK(flat.c == 0.0);
    CHECK(flat.C == 2.0);
  }

  TEST_CASE("series along a short run") {
    const auto d = InitialDensity::default_profile();
    SimulationConfig cfg;
    cfg.horizon = 0.2;
    cfg.cadence = 0.05;
    cfg.particles = 512;
    const auto flow = run(cfg, d);
    DiagnosticOptions opt;
    opt.grid = GridSpec::cube({}, 4.0, 16);
    const auto s = compute_series(flow, opt);
    REQUIRE(s.times.size() == flow.samples());
    CHECK(s.mass_constant());
    CHECK(s.energy_drift() <= 1e-6);
    CHECK(s.min_energy_component() >= 0.0);
    CHECK(s.virial.front() == 0.0);
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      CHECK(std::isfinite(s.field_norms[0][k]));
      // The grid [-4, 4]^3 misses the exponential tail of the profile.
      CHECK(s.density_norms[0][k] <= s.mass[k]);
      CHECK(s.density_norms[0][k] >= 0.85 * s.mass[k]);
      CHECK(s.charge_weak_norm[k] == doctest::Approx(2.5985).epsilon(1e-2));
    }
    const auto sum = summarize(s);
    CHECK(sum.charge_bounds_hold);
    CHECK(sum.moment_fits.size() == 3);
    CHECK(sum.eta_bound == doctest::Approx(std::sqrt(2.0 * sum.H0)));

    const auto dir = std::filesystem::temp_directory_path() / "vpdirac_series";
    std::filesystem::create_directories(dir);
    write_series_csv(s, dir / "s.csv", "hash 0");
    std::ifstream in(dir / "s.csv");
    std::string first, header;
    std::getline(in, first);
    std::getline(in, header);
    CHECK(first.rfind("#", 0) == 0);
    CHECK(header.find("mass") != std::string::npos);
    std::filesystem::remove_all(dir);
  }
}
