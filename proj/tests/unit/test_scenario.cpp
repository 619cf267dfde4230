#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vpdirac/error.hpp"
#include "vpdirac/scenario.hpp"

using namespace vpdirac;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("vpdirac_scenario_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("defaults") {
    const auto s = parse_config_string("kind: simulate\n");
    CHECK(s == Scenario{});
    CHECK(s.simulation.n == 8);
    CHECK(s.profile.alpha == 0.6);
    CHECK(s.m0 == 6.5);
  }

  TEST_CASE("invalid values name the field and line") {
    try {
      parse_config_string("kind: simulate\nsimulation:\n  horizon: 1.0\n  n: 0\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("simulation.n") != std::string::npos);
      CHECK(e.line() == 3);
    }
    try {
      parse_config_string("kind: simulate\nsimulation:\n  horizon: 1.0\n  stepsize: 2\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("stepsize") != std::string::npos);
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_config_string("kind: explode\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("simulation:\n  n: 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("kind: simulate\nsimulation:\n  n: four\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("kind: [simulate\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("kind: stability\nstability:\n  n_a: 8\n  n_b: 8\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("kind: simulate\ndensity:\n  alpha: 0.1\n"), ConfigError);
  }

  TEST_CASE("canonical form round trips and hashes stably") {
    const auto s = parse_config_string(
        "kind: converge\nsimulation:\n  horizon: 0.5\n  particles: 300\n  softening: 0.01\n"
        "converge:\n  ladder: [4, 8]\n  reference: 8\n");
    const auto text = emit_canonical(s);
    const auto back = parse_config_string(text);
    CHECK(back == s);
    CHECK(emit_canonical(back) == text);
    CHECK(config_hash(back) == config_hash(s));
    CHECK(config_hash(s).size() == 16);
    CHECK(config_hash(s) != config_hash(Scenario{}));
  }

  TEST_CASE("overrides") {
    const auto s = parse_config_string("kind: simulate\n", {"simulation.n=16", "density.alpha=1.5", "write_flows=true"});
    CHECK(s.simulation.n == 16);
    CHECK(s.profile.alpha == 1.5);
    CHECK(s.write_flows);
    CHECK_THROWS_AS(parse_config_string("kind: simulate\n", {"simulation.n=0"}), ConfigError);
    CHECK_THROWS_AS(parse_config_string("kind: simulate\n", {"noequals"}), ConfigError);
    CHECK_THROWS_AS(parse_config_string("kind: simulate\n", {"a.b.c=1"}), ConfigError);
  }

  TEST_CASE("config file on disk") {
    const auto dir = scratch("file");
    fs::create_directories(dir);
    {
      std::ofstream os(dir / "s.yaml");
      os << "kind: simulate\nsimulation:\n  particles: 77\n";
    }
    CHECK(parse_config(dir / "s.yaml").simulation.particles == 77);
    CHECK_THROWS_AS(parse_config(dir / "missing.yaml"), ConfigError);
  }

  TEST_CASE("simulate at zero horizon") {
    const auto dir = scratch("simulate");
    auto s = parse_config_string("kind: simulate\nsimulation:\n  horizon: 0\n  particles: 256\n");
    s.output_dir = dir.string();
    std::ostringstream log;
    const auto res = run_scenario(s, log);
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(dir / "config.yaml"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(res.summary.contains("verdicts"));
    CHECK(parse_config(dir / "config.yaml") == s);
  }

  TEST_CASE("converge with the reference on the ladder") {
    const auto dir = scratch("converge");
    auto s = parse_config_string(
        "kind: converge\nsimulation:\n  horizon: 0.1\n  particles: 128\n  cadence: 0.05\n"
        "converge:\n  ladder: [4, 8]\n  reference: 8\n");
    s.output_dir = dir.string();
    std::ostringstream log;
    const auto res = run_scenario(s, log);
    CHECK(res.exit_code == 0);
    const auto& rows = res.summary["rows"];
    REQUIRE(rows.size() == 2);
    CHECK(rows[1]["n"] == 8);
    CHECK(rows[1]["measure"].get<double>() == 0.0);
    CHECK(rows[0]["measure"].get<double>() >= 0.0);
    CHECK(fs::exists(dir / "converge.csv"));
  }
}
