#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpdirac/density.hpp"
#include "vpdirac/dynamics.hpp"

namespace vpdirac {

enum class ScenarioKind { Simulate, Converge, Stability, Diagnose, Norms };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

struct ConvergeSettings {
  std::vector<int> ladder{4, 8, 16, 32};
  int reference = 64;
  double gamma = 0.1;
  double r = 5.0;
  /// Comparison time; negative means the horizon.
  double time = -1.0;
  friend bool operator==(const ConvergeSettings&, const ConvergeSettings&) = default;
};

struct StabilitySettings {
  int n_a = 8;
  int n_b = 16;
  friend bool operator==(const StabilitySettings&, const StabilitySettings&) = default;
};

struct MetricGrid {
  std::vector<double> r{5.0};
  std::vector<double> lambda{5.0, 10.0, 20.0, 40.0};
  std::vector<double> gamma{0.1};
  std::vector<double> delta1{0.1};
  std::vector<double> delta2{0.1};
  friend bool operator==(const MetricGrid&, const MetricGrid&) = default;
};

struct DiagnoseSettings {
  std::string flow;  // stored FlowRecord (binary)
  std::vector<double> moments{2.0, 4.0, 6.0};
  double grid_half_width = 4.0;
  std::size_t grid_cells = 16;  // 0 disables grid norms
  friend bool operator==(const DiagnoseSettings&, const DiagnoseSettings&) = default;
};

struct NormsSettings {
  std::vector<std::size_t> cells{32, 64, 128};
  double half_width = 2.0;
  std::size_t pairs = 1000;
  std::uint64_t seed = 2024;
  friend bool operator==(const NormsSettings&, const NormsSettings&) = default;
};

/// A fully validated run description; every field has a documented default.
struct Scenario {
  ScenarioKind kind = ScenarioKind::Simulate;
  std::string output_dir = "out";
  bool write_flows = false;
  SimulationConfig simulation{};
  ProfileSpec profile{};
  Vec3 xi0{};
  Vec3 eta0{0.5, 0.0, 0.0};
  double m0 = InitialDensity::kDefaultM0;
  ConvergeSettings converge{};
  StabilitySettings stability{};
  MetricGrid metrics{};
  DiagnoseSettings diagnose{};
  NormsSettings norms{};

  InitialDensity density() const;
  void validate() const;
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses a YAML scenario. `overrides` are "dotted.key=value" pairs applied
/// before validation. Unknown keys and invalid values raise ConfigError with
/// the offending line.
Scenario parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
Scenario parse_config_string(const std::string& text, const std::vector<std::string>& overrides = {});

/// Canonical YAML with every field spelled out; parses back to an equal Scenario.
std::string emit_canonical(const Scenario& s);

/// FNV-1a 64-bit hash of the canonical form, as 16 hex digits.
std::string config_hash(const Scenario& s);

std::string code_version();

struct ScenarioResult {
  int exit_code = 0;  // 0 pass, 1 verdict failure
  nlohmann::json summary;
};

/// One grid level of the analysis-module refinement study.
struct NormsLevel {
  std::size_t cells = 0;
  double h = 0.0;
  std::size_t scales = 0;
  double dq_max_ratio = 0.0;
  double dq_mean_ratio = 0.0;
  double maximal_weak_norm = 0.0;  // |||U|||_{M^1}
  double maximal_constant = 0.0;   // |||U|||_{M^1} / (plasma mass + charge)
};

/// Refinement study of the smooth maximal function and the difference
/// quotient bound for b2 = E + F, with E the field of a smooth radial bump
/// density of mass 0.9 and F the field of a unit charge placed off the
/// lattice. Also checks the point-charge weak norm and kernel identities.
struct NormsStudy {
  std::vector<NormsLevel> levels;
  double charge_weak_norm = 0.0;
  double kernel_trace_max = 0.0;  // max |tr K(y)| |y|^3
  double kernel_asym_max = 0.0;   // max |K - K^T| |y|^3
  double dq_drift = 0.0;          // max / min over levels
  double maximal_drift = 0.0;
  double interpolation_max_ratio = 0.0;  // over truncated |x|^{-a} families, p = 2
};

NormsStudy norms_study(const NormsSettings& settings);

/// Runs the scenario, writing artifacts below s.output_dir and progress to `log`.
/// Module errors propagate; verdict failures are reported through exit_code.
ScenarioResult run_scenario(const Scenario& s, std::ostream& log);

}  // namespace vpdirac
