// Command line front end: one subcommand per scenario kind.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vpdirac/dynamics.hpp"
#include "vpdirac/error.hpp"
#include "vpdirac/scenario.hpp"

namespace {

enum Exit { kPass = 0, kVerdict = 1, kConfig = 2, kRuntime = 3 };

void set_threads(int requested) {
#ifdef _OPENMP
  if (requested <= 0) {
    if (const char* env = std::getenv("VPDIRAC_THREADS")) requested = std::atoi(env);
  }
  if (requested > 0) omp_set_num_threads(requested);
#else
  (void)requested;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle solver for the repulsive Vlasov-Poisson system with a moving point charge"};
  app.set_version_flag("--version", vpdirac::code_version());
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> overrides;
  std::string output;
  int threads = 0;
  bool echo = false;

  const std::vector<std::pair<std::string, std::string>> kinds = {
      {"simulate", "Run one regularized flow and its diagnostics"},
      {"converge", "Convergence in measure of a cutoff ladder against a reference level"},
      {"stability", "Phi functional and Chebyshev sweeps for a pair of cutoff levels"},
      {"diagnose", "Diagnostics of a stored flow record"},
      {"norms", "Analysis-module refinement study"},
  };
  for (const auto& [name, help] : kinds) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "YAML scenario file (defaults apply when omitted)")->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "Override a config key, e.g. --set simulation.horizon=0.5")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sub->add_option("-o,--output", output, "Output directory (overrides output_dir)");
    sub->add_option("-j,--threads", threads, "Thread count (default: VPDIRAC_THREADS or the OpenMP default)");
    sub->add_flag("--echo", echo, "Print the canonical configuration and exit");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfig;
  }

  const std::string kind = app.get_subcommands().front()->get_name();
  std::vector<std::string> all = {"kind=" + kind};
  all.insert(all.end(), overrides.begin(), overrides.end());
  if (!output.empty()) all.push_back("output_dir=\"" + output + "\"");

  vpdirac::Scenario scenario;
  try {
    scenario = config.empty() ? vpdirac::parse_config_string("{}", all) : vpdirac::parse_config(config, all);
  } catch (const vpdirac::ConfigError& e) {
    std::cerr << "config error: " << (config.empty() ? "" : config + ": ") << e.what() << '\n';
    return kConfig;
  }
  if (echo) {
    std::cout << vpdirac::emit_canonical(scenario);
    return kPass;
  }
  set_threads(threads);

  try {
    const auto res = vpdirac::run_scenario(scenario, std::cerr);
    std::cout << res.summary.dump(2) << '\n';
    return res.exit_code == 0 ? kPass : kVerdict;
  } catch (const vpdirac::StepFailure& e) {
    std::cerr << "runtime error (" << kind << ", t=" << e.time() << ", closest approach " << e.min_distance()
              << "): " << e.what() << "\npartial artifacts flagged in " << scenario.output_dir << "/failure.json\n";
    return kRuntime;
  } catch (const vpdirac::InvalidArgument& e) {
    std::cerr << "config error (" << kind << "): " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error (" << kind << "): " << e.what() << '\n';
    return kRuntime;
  }
}
