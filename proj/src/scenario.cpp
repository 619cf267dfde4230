#include "vpdirac/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "vpdirac/error.hpp"

namespace vpdirac {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line; }

template <class T>
T scalar(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw ConfigError("'" + key + "' must be a scalar", line_of(n));
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + key + "' has an invalid value '" + n.Scalar() + "'", line_of(n));
  }
}

template <class T>
std::vector<T> list(const YAML::Node& n, const std::string& key) {
  if (n.IsScalar()) return {scalar<T>(n, key)};
  if (!n.IsSequence()) throw ConfigError("'" + key + "' must be a list", line_of(n));
  std::vector<T> out;
  for (const auto& item : n) out.push_back(scalar<T>(item, key));
  return out;
}

Vec3 vec3(const YAML::Node& n, const std::string& key) {
  const auto v = list<double>(n, key);
  if (v.size() != 3) throw ConfigError("'" + key + "' must have three components", line_of(n));
  return {v[0], v[1], v[2]};
}

// Optional value: the string "auto" keeps the default.
std::optional<double> auto_or(const YAML::Node& n, const std::string& key) {
  if (n.IsScalar() && n.Scalar() == "auto") return std::nullopt;
  return scalar<double>(n, key);
}

void check_map(const YAML::Node& n, const std::string& section, const std::set<std::string>& allowed) {
  if (!n.IsMap()) throw ConfigError("'" + section + "' must be a mapping", line_of(n));
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      std::string known;
      for (const auto& a : allowed) known += (known.empty() ? "" : ", ") + a;
      throw ConfigError("unknown key '" + (section.empty() ? key : section + "." + key) + "' (expected one of: " +
                            known + ")",
                        line_of(kv.first));
    }
  }
}

void apply_override(YAML::Node& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  YAML::Node value = YAML::Load(assignment.substr(eq + 1));
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  if (parts.size() > 2) throw ConfigError("override key '" + path + "' is nested too deeply");
  if (parts.size() == 1) {
    root[parts[0]] = value;
  } else {
    YAML::Node section = root[parts[0]];
    if (!section || section.IsNull()) {
      root[parts[0]] = YAML::Node(YAML::NodeType::Map);
      section = root[parts[0]];
    }
    section[parts[1]] = value;
  }
}

void parse_simulation(const YAML::Node& n, SimulationConfig& c) {
  check_map(n, "simulation",
            {"horizon", "n", "particles", "atol", "rtol", "softening", "cadence", "seed", "closest_approach_floor",
             "dt_initial", "dt_floor", "approach_cap", "max_steps"});
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    const auto& v = kv.second;
    if (key == "horizon") c.horizon = scalar<double>(v, key);
    else if (key == "n") c.n = scalar<int>(v, key);
    else if (key == "particles") c.particles = scalar<std::size_t>(v, key);
    else if (key == "atol") c.atol = scalar<double>(v, key);
    else if (key == "rtol") c.rtol = scalar<double>(v, key);
    else if (key == "softening") c.softening = auto_or(v, key);
    else if (key == "cadence") c.cadence = scalar<double>(v, key);
    else if (key == "seed") c.seed = scalar<std::uint64_t>(v, key);
    else if (key == "closest_approach_floor") c.closest_approach_floor = auto_or(v, key);
    else if (key == "dt_initial") c.dt_initial = scalar<double>(v, key);
    else if (key == "dt_floor") c.dt_floor = scalar<double>(v, key);
    else if (key == "approach_cap") c.approach_cap = scalar<double>(v, key);
    else if (key == "max_steps") c.max_steps = scalar<std::size_t>(v, key);
  }
}

void parse_density(const YAML::Node& n, Scenario& s) {
  check_map(n, "density",
            {"profile", "mass", "alpha", "r_scale", "v_scale", "radius", "half_x", "half_v", "center", "xi0", "eta0",
             "m0"});
  auto& p = s.profile;
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    const auto& v = kv.second;
    if (key == "profile") {
      try {
        p.kind = profile_kind_from_string(scalar<std::string>(v, key));
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what(), line_of(v));
      }
    } else if (key == "mass") p.mass = scalar<double>(v, key);
    else if (key == "alpha") p.alpha = scalar<double>(v, key);
    else if (key == "r_scale") p.r_scale = scalar<double>(v, key);
    else if (key == "v_scale") p.v_scale = scalar<double>(v, key);
    else if (key == "radius") p.radius = scalar<double>(v, key);
    else if (key == "half_x") p.half_x = scalar<double>(v, key);
    else if (key == "half_v") p.half_v = scalar<double>(v, key);
    else if (key == "center") p.center = vec3(v, key);
    else if (key == "xi0") s.xi0 = vec3(v, key);
    else if (key == "eta0") s.eta0 = vec3(v, key);
    else if (key == "m0") s.m0 = scalar<double>(v, key);
  }
}

Scenario from_node(YAML::Node root) {
  Scenario s;
  if (!root || root.IsNull()) throw ConfigError("empty configuration");
  check_map(root, "",
            {"kind", "output_dir", "write_flows", "simulation", "density", "converge", "stability", "metrics",
             "diagnose", "norms"});
  if (!root["kind"]) throw ConfigError("missing required key 'kind'", line_of(root));
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    const auto& v = kv.second;
    if (key == "kind") {
      try {
        s.kind = scenario_kind_from_string(scalar<std::string>(v, key));
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what(), line_of(v));
      }
    } else if (key == "output_dir") {
      s.output_dir = scalar<std::string>(v, key);
    } else if (key == "write_flows") {
      s.write_flows = scalar<bool>(v, key);
    } else if (key == "simulation") {
      parse_simulation(v, s.simulation);
    } else if (key == "density") {
      parse_density(v, s);
    } else if (key == "converge") {
      check_map(v, key, {"ladder", "reference", "gamma", "r", "time"});
      for (const auto& e : v) {
        const auto k = e.first.as<std::string>();
        if (k == "ladder") s.converge.ladder = list<int>(e.second, k);
        else if (k == "reference") s.converge.reference = scalar<int>(e.second, k);
        else if (k == "gamma") s.converge.gamma = scalar<double>(e.second, k);
        else if (k == "r") s.converge.r = scalar<double>(e.second, k);
        else if (k == "time") s.converge.time = scalar<double>(e.second, k);
      }
    } else if (key == "stability") {
      check_map(v, key, {"n_a", "n_b"});
      for (const auto& e : v) {
        const auto k = e.first.as<std::string>();
        if (k == "n_a") s.stability.n_a = scalar<int>(e.second, k);
        else if (k == "n_b") s.stability.n_b = scalar<int>(e.second, k);
      }
    } else if (key == "metrics") {
      check_map(v, key, {"r", "lambda", "gamma", "delta1", "delta2"});
      for (const auto& e : v) {
        const auto k = e.first.as<std::string>();
        if (k == "r") s.metrics.r = list<double>(e.second, k);
        else if (k == "lambda") s.metrics.lambda = list<double>(e.second, k);
        else if (k == "gamma") s.metrics.gamma = list<double>(e.second, k);
        else if (k == "delta1") s.metrics.delta1 = list<double>(e.second, k);
        else if (k == "delta2") s.metrics.delta2 = list<double>(e.second, k);
      }
    } else if (key == "diagnose") {
      check_map(v, key, {"flow", "moments", "grid_half_width", "grid_cells"});
      for (const auto& e : v) {
        const auto k = e.first.as<std::string>();
        if (k == "flow") s.diagnose.flow = scalar<std::string>(e.second, k);
        else if (k == "moments") s.diagnose.moments = list<double>(e.second, k);
        else if (k == "grid_half_width") s.diagnose.grid_half_width = scalar<double>(e.second, k);
        else if (k == "grid_cells") s.diagnose.grid_cells = scalar<std::size_t>(e.second, k);
      }
    } else if (key == "norms") {
      check_map(v, key, {"cells", "half_width", "pairs", "seed"});
      for (const auto& e : v) {
        const auto k = e.first.as<std::string>();
        if (k == "cells") s.norms.cells = list<std::size_t>(e.second, k);
        else if (k == "half_width") s.norms.half_width = scalar<double>(e.second, k);
        else if (k == "pairs") s.norms.pairs = scalar<std::size_t>(e.second, k);
        else if (k == "seed") s.norms.seed = scalar<std::uint64_t>(e.second, k);
      }
    }
  }
  // Validation errors point at the section that holds the field.
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    int line = -1;
    const std::string msg = e.what();
    for (const char* sec : {"simulation", "density", "converge", "stability", "metrics", "diagnose", "norms"})
      if (msg.rfind(std::string(sec) + ".", 0) == 0 && root[sec]) {
        line = line_of(root[sec]);
        const auto field = msg.substr(std::string(sec).size() + 1, msg.find(' ') - std::string(sec).size() - 1);
        if (root[sec].IsMap() && root[sec][field]) line = line_of(root[sec][field]);
      }
    throw ConfigError(msg, line);
  }
  return s;
}

Scenario parse_node(YAML::Node root, const std::vector<std::string>& overrides) {
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& o : overrides) apply_override(root, o);
  // Overridden nodes carry no source mark; reparse the merged document.
  if (!overrides.empty()) root = YAML::Load(YAML::Dump(root));
  return from_node(root);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

template <class T>
bool all_positive(const std::vector<T>& v) {
  return !v.empty() && std::all_of(v.begin(), v.end(), [](T x) { return x > T{}; });
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Simulate: return "simulate";
    case ScenarioKind::Converge: return "converge";
    case ScenarioKind::Stability: return "stability";
    case ScenarioKind::Diagnose: return "diagnose";
    case ScenarioKind::Norms: return "norms";
  }
  return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  for (auto k : {ScenarioKind::Simulate, ScenarioKind::Converge, ScenarioKind::Stability, ScenarioKind::Diagnose,
                 ScenarioKind::Norms})
    if (to_string(k) == name) return k;
  throw InvalidArgument("unknown scenario kind '" + name +
                        "' (expected simulate, converge, stability, diagnose or norms)");
}

InitialDensity Scenario::density() const { return InitialDensity::create(profile, xi0, eta0, m0); }

void Scenario::validate() const {
  const auto& c = simulation;
  require(c.horizon >= 0.0, "simulation.horizon must be >= 0");
  require(c.n >= 1, "simulation.n must be >= 1");
  require(c.particles >= 1, "simulation.particles must be >= 1");
  require(c.atol > 0.0, "simulation.atol must be > 0");
  require(c.rtol >= 0.0, "simulation.rtol must be >= 0");
  require(!c.softening || *c.softening >= 0.0, "simulation.softening must be >= 0");
  require(c.cadence > 0.0, "simulation.cadence must be > 0");
  require(!c.closest_approach_floor || *c.closest_approach_floor >= 0.0,
          "simulation.closest_approach_floor must be >= 0");
  require(c.dt_initial > 0.0, "simulation.dt_initial must be > 0");
  require(c.dt_floor > 0.0, "simulation.dt_floor must be > 0");
  require(c.approach_cap > 0.0, "simulation.approach_cap must be > 0");
  require(c.max_steps >= 1, "simulation.max_steps must be >= 1");
  try {
    (void)density();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string("density.profile is not admissible: ") + e.what());
  }
  switch (kind) {
    case ScenarioKind::Converge:
      require(!converge.ladder.empty() && all_positive(converge.ladder), "converge.ladder must list n >= 1");
      require(converge.reference >= 1, "converge.reference must be >= 1");
      require(converge.gamma > 0.0, "converge.gamma must be > 0");
      require(converge.r > 0.0, "converge.r must be > 0");
      require(converge.time <= c.horizon, "converge.time must not exceed the horizon");
      break;
    case ScenarioKind::Stability:
      require(stability.n_a >= 1, "stability.n_a must be >= 1");
      require(stability.n_b >= 1, "stability.n_b must be >= 1");
      require(stability.n_a != stability.n_b, "stability.n_a must differ from n_b");
      require(all_positive(metrics.r) && all_positive(metrics.lambda) && all_positive(metrics.gamma) &&
                  all_positive(metrics.delta1) && all_positive(metrics.delta2),
              "metrics.r and the other metric lists must be non-empty and positive");
      break;
    case ScenarioKind::Diagnose:
      require(!diagnose.flow.empty(), "diagnose.flow must name a stored flow record");
      require(diagnose.grid_half_width > 0.0, "diagnose.grid_half_width must be > 0");
      break;
    case ScenarioKind::Norms:
      require(!norms.cells.empty() && all_positive(norms.cells), "norms.cells must list positive cell counts");
      require(norms.half_width > 0.0, "norms.half_width must be > 0");
      require(norms.pairs >= 1, "norms.pairs must be >= 1");
      break;
    case ScenarioKind::Simulate: break;
  }
}

Scenario parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_string(ss.str(), overrides);
}

Scenario parse_config_string(const std::string& text, const std::vector<std::string>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
    return parse_node(root, overrides);
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.msg, e.mark.line);
  }
}

std::string emit_canonical(const Scenario& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out.SetFloatPrecision(17);
  auto seq = [&](const auto& v) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& x : v) out << x;
    out << YAML::EndSeq;
  };
  auto v3 = [&](const Vec3& v) { seq(std::vector<double>{v.x, v.y, v.z}); };
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
    else out << "auto";
  };
  const auto& c = s.simulation;
  out << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << to_string(s.kind);
  out << YAML::Key << "output_dir" << YAML::Value << YAML::DoubleQuoted << s.output_dir;
  out << YAML::Key << "write_flows" << YAML::Value << s.write_flows;
  out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "horizon" << YAML::Value << c.horizon;
  out << YAML::Key << "n" << YAML::Value << c.n;
  out << YAML::Key << "particles" << YAML::Value << c.particles;
  out << YAML::Key << "atol" << YAML::Value << c.atol;
  out << YAML::Key << "rtol" << YAML::Value << c.rtol;
  out << YAML::Key << "softening" << YAML::Value;
  opt(c.softening);
  out << YAML::Key << "cadence" << YAML::Value << c.cadence;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "closest_approach_floor" << YAML::Value;
  opt(c.closest_approach_floor);
  out << YAML::Key << "dt_initial" << YAML::Value << c.dt_initial;
  out << YAML::Key << "dt_floor" << YAML::Value << c.dt_floor;
  out << YAML::Key << "approach_cap" << YAML::Value << c.approach_cap;
  out << YAML::Key << "max_steps" << YAML::Value << c.max_steps;
  out << YAML::EndMap;
  const auto& p = s.profile;
  out << YAML::Key << "density" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "profile" << YAML::Value << to_string(p.kind);
  out << YAML::Key << "mass" << YAML::Value << p.mass;
  out << YAML::Key << "alpha" << YAML::Value << p.alpha;
  out << YAML::Key << "r_scale" << YAML::Value << p.r_scale;
  out << YAML::Key << "v_scale" << YAML::Value << p.v_scale;
  out << YAML::Key << "radius" << YAML::Value << p.radius;
  out << YAML::Key << "half_x" << YAML::Value << p.half_x;
  out << YAML::Key << "half_v" << YAML::Value << p.half_v;
  out << YAML::Key << "center" << YAML::Value;
  v3(p.center);
  out << YAML::Key << "xi0" << YAML::Value;
  v3(s.xi0);
  out << YAML::Key << "eta0" << YAML::Value;
  v3(s.eta0);
  out << YAML::Key << "m0" << YAML::Value << s.m0;
  out << YAML::EndMap;
  out << YAML::Key << "converge" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "ladder" << YAML::Value;
  seq(s.converge.ladder);
  out << YAML::Key << "reference" << YAML::Value << s.converge.reference;
  out << YAML::Key << "gamma" << YAML::Value << s.converge.gamma;
  out << YAML::Key << "r" << YAML::Value << s.converge.r;
  out << YAML::Key << "time" << YAML::Value << s.converge.time;
  out << YAML::EndMap;
  out << YAML::Key << "stability" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_a" << YAML::Value << s.stability.n_a;
  out << YAML::Key << "n_b" << YAML::Value << s.stability.n_b;
  out << YAML::EndMap;
  out << YAML::Key << "metrics" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "r" << YAML::Value;
  seq(s.metrics.r);
  out << YAML::Key << "lambda" << YAML::Value;
  seq(s.metrics.lambda);
  out << YAML::Key << "gamma" << YAML::Value;
  seq(s.metrics.gamma);
  out << YAML::Key << "delta1" << YAML::Value;
  seq(s.metrics.delta1);
  out << YAML::Key << "delta2" << YAML::Value;
  seq(s.metrics.delta2);
  out << YAML::EndMap;
  out << YAML::Key << "diagnose" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "flow" << YAML::Value << YAML::DoubleQuoted << s.diagnose.flow;
  out << YAML::Key << "moments" << YAML::Value;
  seq(s.diagnose.moments);
  out << YAML::Key << "grid_half_width" << YAML::Value << s.diagnose.grid_half_width;
  out << YAML::Key << "grid_cells" << YAML::Value << s.diagnose.grid_cells;
  out << YAML::EndMap;
  out << YAML::Key << "norms" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "cells" << YAML::Value;
  seq(s.norms.cells);
  out << YAML::Key << "half_width" << YAML::Value << s.norms.half_width;
  out << YAML::Key << "pairs" << YAML::Value << s.norms.pairs;
  out << YAML::Key << "seed" << YAML::Value << s.norms.seed;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string config_hash(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : emit_canonical(s)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string code_version() { return VPDIRAC_VERSION; }

}  // namespace vpdirac
