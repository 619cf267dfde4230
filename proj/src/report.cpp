#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>

#include "vpdirac/analysis.hpp"
#include "vpdirac/diagnostics.hpp"
#include "vpdirac/error.hpp"
#include "vpdirac/fields.hpp"
#include "vpdirac/flowmetrics.hpp"
#include "vpdirac/scenario.hpp"

namespace vpdirac {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kEnergyBudget = 1e-3;

struct Context {
  const Scenario& s;
  std::ostream& log;
  fs::path dir;
  std::string hash;
  std::string stamp;  // "config_hash=... version=..."
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << std::setprecision(17);
  return os;
}

json base_summary(const Context& c) {
  return json{{"kind", to_string(c.s.kind)}, {"config_hash", c.hash}, {"version", code_version()}};
}

int finish(const Context& c, json& summary, const json& verdicts) {
  bool pass = true;
  for (const auto& [name, v] : verdicts.items()) pass = pass && v.get<bool>();
  summary["verdicts"] = verdicts;
  summary["pass"] = pass;
  auto os = open_out(c.dir / "summary.json");
  os << summary.dump(2) << '\n';
  return pass ? 0 : 1;
}

json growth_json(const diagnostics::GrowthFit& f) { return json{{"C", f.C}, {"c", f.c}}; }

json series_summary(const diagnostics::DiagnosticSummary& d) {
  json moments = json::array();
  for (std::size_t j = 0; j < d.moment_orders.size(); ++j)
    moments.push_back({{"m", d.moment_orders[j]}, {"fit", growth_json(d.moment_fits[j])}});
  return json{{"H0", d.H0},
              {"energy_drift", d.energy_drift},
              {"mass_constant", d.mass_constant},
              {"min_energy_component", d.min_energy_component},
              {"moments", moments},
              {"virial_bound", d.virial_bound},
              {"max_eta", d.max_eta},
              {"eta_bound", d.eta_bound},
              {"max_xi", d.max_xi},
              {"xi_bound", d.xi_bound},
              {"excluded_weight", d.excluded_weight}};
}

json series_verdicts(const diagnostics::DiagnosticSeries& series, const diagnostics::DiagnosticSummary& d) {
  bool finite = true;
  for (const auto& e : series.energy) finite = finite && std::isfinite(e.total());
  for (const auto& m : series.moments)
    for (double v : m) finite = finite && std::isfinite(v);
  return json{{"mass_constant", d.mass_constant},
              {"energy_drift_within_budget", d.energy_drift <= kEnergyBudget},
              {"energy_components_nonnegative", d.min_energy_component >= 0.0},
              {"charge_bounds", d.charge_bounds_hold},
              {"all_finite", finite}};
}

diagnostics::DiagnosticOptions diag_options(const Scenario& s, const Vec3& center) {
  diagnostics::DiagnosticOptions o;
  o.moment_orders = s.diagnose.moments;
  if (s.diagnose.grid_cells > 0) o.grid = GridSpec::cube(center, s.diagnose.grid_half_width, s.diagnose.grid_cells);
  return o;
}

void write_failure(const Context& c, const StepFailure& e) {
  json j = base_summary(c);
  j["failure"] = {{"what", e.what()},
                  {"time", e.time()},
                  {"min_distance", e.min_distance()},
                  {"particle", e.particle() == NearSingularity::npos ? json(nullptr) : json(e.particle())},
                  {"xi", {e.charge().xi.x, e.charge().xi.y, e.charge().xi.z}},
                  {"eta", {e.charge().eta.x, e.charge().eta.y, e.charge().eta.z}}};
  j["partial"] = true;
  auto os = open_out(c.dir / "failure.json");
  os << j.dump(2) << '\n';
  write_ensemble_csv(e.snapshot(), c.dir / "failure_snapshot.csv");
}

void write_diagnostics(const Context& c, const FlowRecord& flow, const std::string& prefix, json& summary,
                       json& verdicts) {
  const auto series = diagnostics::compute_series(flow, diag_options(c.s, flow.xi.front()));
  const auto d = diagnostics::summarize(series);
  diagnostics::write_series_csv(series, c.dir / (prefix + "diagnostics.csv"), c.stamp);
  write_charge_track_csv(flow, c.dir / (prefix + "charge_track.csv"));
  summary["diagnostics"] = series_summary(d);
  summary["integrator"] = {{"steps", flow.stats.steps},
                           {"rejected", flow.stats.rejected},
                           {"evaluations", flow.stats.evaluations},
                           {"min_charge_distance", flow.stats.min_charge_distance},
                           {"min_dt", flow.stats.min_dt}};
  verdicts = series_verdicts(series, d);
}

int run_simulate(const Context& c) {
  c.log << "simulate: N=" << c.s.simulation.particles << " n=" << c.s.simulation.n
        << " T=" << c.s.simulation.horizon << '\n';
  const auto flow = run(c.s.simulation, c.s.density());
  if (c.s.write_flows) {
    write_flow_binary(flow, c.dir / "flow.bin");
    write_flow_csv(flow, c.dir / "flow.csv");
  }
  json summary = base_summary(c);
  json verdicts;
  write_diagnostics(c, flow, "", summary, verdicts);
  return finish(c, summary, verdicts);
}

int run_diagnose(const Context& c) {
  c.log << "diagnose: " << c.s.diagnose.flow << '\n';
  const auto flow = read_flow_binary(c.s.diagnose.flow);
  json summary = base_summary(c);
  summary["flow"] = c.s.diagnose.flow;
  json verdicts;
  write_diagnostics(c, flow, "", summary, verdicts);
  return finish(c, summary, verdicts);
}

// Nonincreasing with at most `allowed` strict increases.
bool nonincreasing(const std::vector<double>& v, int allowed) {
  int inversions = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1]) ++inversions;
  return inversions <= allowed;
}

int run_converge(const Context& c) {
  const auto& cv = c.s.converge;
  const auto density = c.s.density();
  const auto uncut = sample_initial_ensemble(density, c.s.simulation.particles, c.s.simulation.seed);
  std::vector<int> ladder = cv.ladder;
  std::sort(ladder.begin(), ladder.end());
  ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
  c.log << "converge: reference n=" << cv.reference << '\n';
  const auto reference = run_cutoff(c.s.simulation, uncut, cv.reference);
  const std::size_t k = reference.index_of_time(cv.time < 0.0 ? c.s.simulation.horizon : cv.time);
  auto os = open_out(c.dir / "converge.csv");
  os << "# " << c.stamp << '\n' << "n,reference,s,r,gamma,measure,loglog_moment\n";
  std::vector<double> measures;
  json rows = json::array();
  for (int n : ladder) {
    c.log << "converge: n=" << n << '\n';
    const FlowRecord flow = n == cv.reference ? reference : run_cutoff(c.s.simulation, uncut, n);
    const double m = flowmetrics::convergence_in_measure(flow, reference, cv.gamma, cv.r, k);
    const double ll = flowmetrics::loglog_moment(flow, cv.r);
    measures.push_back(m);
    os << n << ',' << cv.reference << ',' << reference.times[k] << ',' << cv.r << ',' << cv.gamma << ',' << m << ','
       << ll << '\n';
    rows.push_back({{"n", n}, {"measure", m}, {"loglog_moment", ll}});
  }
  json summary = base_summary(c);
  summary["rows"] = rows;
  summary["s"] = reference.times[k];
  return finish(c, summary, json{{"measure_nonincreasing_one_inversion", nonincreasing(measures, 1)}});
}

int run_stability(const Context& c) {
  const auto& st = c.s.stability;
  const auto& mg = c.s.metrics;
  c.log << "stability: n_a=" << st.n_a << " n_b=" << st.n_b << '\n';
  const auto [a, b] = run_pair(c.s.simulation, c.s.density(), st.n_a, st.n_b);
  if (c.s.write_flows) {
    write_flow_binary(a, c.dir / "flow_a.bin");
    write_flow_binary(b, c.dir / "flow_b.bin");
  }
  auto os = open_out(c.dir / "stability.csv");
  os << "# " << c.stamp << '\n' << "n_a,n_b,s,r,lambda,gamma,delta1,delta2,phi,measure,cheb_lhs,cheb_rhs\n";
  bool cheb = true;
  bool phi_start_zero = true;
  double worst = 0.0;
  for (std::size_t k = 0; k < a.samples(); ++k)
    for (double r : mg.r)
      for (double lambda : mg.lambda)
        for (double gamma : mg.gamma)
          for (double d1 : mg.delta1)
            for (double d2 : mg.delta2) {
              if (d1 > d2) continue;
              const flowmetrics::MetricParams p{r, lambda, gamma, d1, d2};
              const double phi = flowmetrics::phi_functional(a, b, p, k);
              const auto ch = flowmetrics::chebyshev_consistency(a, b, p, k);
              cheb = cheb && ch.holds();
              if (k == 0) phi_start_zero = phi_start_zero && phi == 0.0;
              if (ch.rhs > 0.0) worst = std::max(worst, ch.lhs / ch.rhs);
              os << st.n_a << ',' << st.n_b << ',' << a.times[k] << ',' << r << ',' << lambda << ',' << gamma << ','
                 << d1 << ',' << d2 << ',' << phi << ',' << ch.lhs << ',' << ch.lhs << ',' << ch.rhs << '\n';
            }
  auto sl = open_out(c.dir / "superlevel.csv");
  sl << "# " << c.stamp << '\n' << "n,r,lambda,superlevel,retained,excluded\n";
  bool monotone = true;
  for (const FlowRecord* f : {&a, &b})
    for (double r : mg.r) {
      auto lambdas = mg.lambda;
      std::sort(lambdas.begin(), lambdas.end());
      double prev = std::numeric_limits<double>::infinity();
      for (double lambda : lambdas) {
        const auto rep = flowmetrics::sublevel_report(*f, r, lambda);
        monotone = monotone && rep.superlevel <= prev;
        prev = rep.superlevel;
        sl << f->n << ',' << r << ',' << lambda << ',' << rep.superlevel << ',' << rep.retained << ','
           << rep.excluded << '\n';
      }
    }
  json summary = base_summary(c);
  summary["max_chebyshev_ratio"] = worst;
  summary["excluded_weight"] = {a.excluded_weight(), b.excluded_weight()};
  return finish(c, summary,
                json{{"chebyshev_consistency", cheb},
                     {"phi_zero_at_start", phi_start_zero},
                     {"superlevel_nonincreasing", monotone}});
}

int run_norms(const Context& c) {
  c.log << "norms: cells";
  for (auto n : c.s.norms.cells) c.log << ' ' << n;
  c.log << '\n';
  const auto study = norms_study(c.s.norms);
  auto os = open_out(c.dir / "norms.csv");
  os << "# " << c.stamp << '\n' << "cells,h,scales,dq_max_ratio,dq_mean_ratio,maximal_weak_norm,maximal_constant\n";
  json levels = json::array();
  for (const auto& l : study.levels) {
    os << l.cells << ',' << l.h << ',' << l.scales << ',' << l.dq_max_ratio << ',' << l.dq_mean_ratio << ','
       << l.maximal_weak_norm << ',' << l.maximal_constant << '\n';
    levels.push_back({{"cells", l.cells},
                      {"h", l.h},
                      {"dq_max_ratio", l.dq_max_ratio},
                      {"maximal_constant", l.maximal_constant}});
  }
  json summary = base_summary(c);
  summary["levels"] = levels;
  summary["charge_weak_norm"] = study.charge_weak_norm;
  summary["kernel_trace_max"] = study.kernel_trace_max;
  summary["kernel_asym_max"] = study.kernel_asym_max;
  summary["dq_drift"] = study.dq_drift;
  summary["maximal_drift"] = study.maximal_drift;
  summary["interpolation_max_ratio"] = study.interpolation_max_ratio;
  const double exact = std::pow(4.0 * std::numbers::pi / 3.0, 2.0 / 3.0);
  const bool multi = study.levels.size() > 1;
  return finish(c, summary,
                json{{"charge_weak_norm_within_1pct", std::abs(study.charge_weak_norm - exact) <= 0.01 * exact},
                     {"kernel_identities", study.kernel_trace_max <= 1e-12 && study.kernel_asym_max <= 1e-12},
                     {"dq_drift_within_2x", !multi || study.dq_drift <= 2.0},
                     {"maximal_drift_within_2x", !multi || study.maximal_drift <= 2.0},
                     {"interpolation_M1_Lp_bounded", study.interpolation_max_ratio <= 2.0}});
}

// Enclosed mass fraction of the unit-mass bump (105 / 32 pi)(1 - s^2)^2.
double bump_enclosed(double s) {
  if (s >= 1.0) return 1.0;
  const double s3 = s * s * s;
  return 105.0 / 8.0 * (s3 / 3.0 - 2.0 * s3 * s * s / 5.0 + s3 * s3 * s / 7.0);
}

}  // namespace

NormsStudy norms_study(const NormsSettings& settings) {
  constexpr double kMass = 0.9;
  const Vec3 charge{0.0137, 0.0219, 0.0071};
  NormsStudy out;

  // Exact radial field of the bump and its gradient
  // d_j E_i = M(r) K_ij(x) + 4 pi r^2 rho(r) x_i x_j / r^4.
  const auto smooth_field = [&](const Vec3& x) {
    const double r = norm(x);
    return r == 0.0 ? Vec3{} : x * (kMass * bump_enclosed(r) / (r * r * r));
  };
  const auto smooth_gradient = [&](const Vec3& x) {
    const double r = norm(x);
    Mat3 g{};
    if (r == 0.0) {
      const double c = kMass * 105.0 / (8.0 * 3.0);  // M(r) / r^3 -> 35 M / 8
      for (int i = 0; i < 3; ++i) g[i][i] = c;
      return g;
    }
    const Mat3 k = fields::gradient_kernel(x);
    const double dm = 4.0 * std::numbers::pi * r * r * kMass * analysis::bump(r);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g[i][j] = kMass * bump_enclosed(r) * k[i][j] + dm * x[i] * x[j] / (r * r * r * r);
    return g;
  };

  const ParticleEnsemble no_atoms;
  for (std::size_t cells : settings.cells) {
    const auto grid = GridSpec::cube({}, settings.half_width, cells);
    const auto scales = analysis::dyadic_scales(grid);
    // Nodes closer than one cell to the charge drop its singular contribution.
    auto grad = analysis::singular_convolution(no_atoms, grid, charge, 1.0, grid.h);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Mat3 g = smooth_gradient(grid.node(i));
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) grad[i][a][b] += g[a][b];
    }
    const auto U = analysis::smooth_maximal(magnitude(grad), scales);
    const auto b2 = sample_grid(grid, [&](const Vec3& x) {
      return smooth_field(x) + fields::point_charge_field(charge, x);
    });
    const auto pairs = analysis::random_node_pairs(grid, settings.pairs, settings.seed);
    const auto dq = analysis::difference_quotient_check(b2, U, pairs);
    NormsLevel level;
    level.cells = cells;
    level.h = grid.h;
    level.scales = scales.size();
    level.dq_max_ratio = dq.max_ratio;
    level.dq_mean_ratio = dq.mean_ratio;
    level.maximal_weak_norm = analysis::weak_pseudo_norm(U, 1.0);
    level.maximal_constant = level.maximal_weak_norm / (kMass + 1.0);
    out.levels.push_back(level);
  }
  auto drift = [&](auto member) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& l : out.levels) {
      lo = std::min(lo, l.*member);
      hi = std::max(hi, l.*member);
    }
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  };
  out.dq_drift = drift(&NormsLevel::dq_max_ratio);
  out.maximal_drift = drift(&NormsLevel::maximal_constant);

  out.charge_weak_norm = diagnostics::point_charge_weak_norm(charge);

  std::mt19937_64 rng(settings.seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> logscale(-3.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    Vec3 y{gauss(rng), gauss(rng), gauss(rng)};
    y = y * (std::pow(10.0, logscale(rng)) / norm(y));
    const Mat3 k = fields::gradient_kernel(y);
    const double scale = std::pow(norm(y), 3.0);
    out.kernel_trace_max = std::max(out.kernel_trace_max, std::abs(trace(k)) * scale);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out.kernel_asym_max = std::max(out.kernel_asym_max, std::abs(k[i][j] - k[j][i]) * scale);
  }

  // Truncated radial powers |x|^{-a} on cell centres of [-1, 1]^3.
  constexpr std::size_t kCells = 48;
  const double h = 2.0 / kCells;
  for (double a : {0.5, 1.0, 1.5, 2.0, 2.5, 2.9}) {
    std::vector<double> values;
    values.reserve(kCells * kCells * kCells);
    for (std::size_t i = 0; i < kCells; ++i)
      for (std::size_t j = 0; j < kCells; ++j)
        for (std::size_t k = 0; k < kCells; ++k) {
          const Vec3 x{-1.0 + (i + 0.5) * h, -1.0 + (j + 0.5) * h, -1.0 + (k + 0.5) * h};
          values.push_back(std::pow(norm(x), -a));
        }
    const auto r = analysis::interpolation_M1_Lp(values, h * h * h, 2.0);
    out.interpolation_max_ratio = std::max(out.interpolation_max_ratio, r.ratio);
  }
  return out;
}

ScenarioResult run_scenario(const Scenario& s, std::ostream& log) {
  s.validate();
  Context c{s, log, fs::path(s.output_dir), config_hash(s), {}};
  c.stamp = "config_hash=" + c.hash + " version=" + code_version();
  fs::create_directories(c.dir);
  {
    auto os = open_out(c.dir / "config.yaml");
    os << "# " << c.stamp << '\n' << emit_canonical(s);
  }
  ScenarioResult res;
  try {
    switch (s.kind) {
      case ScenarioKind::Simulate: res.exit_code = run_simulate(c); break;
      case ScenarioKind::Converge: res.exit_code = run_converge(c); break;
      case ScenarioKind::Stability: res.exit_code = run_stability(c); break;
      case ScenarioKind::Diagnose: res.exit_code = run_diagnose(c); break;
      case ScenarioKind::Norms: res.exit_code = run_norms(c); break;
    }
  } catch (const StepFailure& e) {
    write_failure(c, e);
    throw;
  }
  std::ifstream is(c.dir / "summary.json");
  res.summary = json::parse(is);
  return res;
}

}  // namespace vpdirac
