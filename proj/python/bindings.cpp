#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vpdirac/analysis.hpp"
#include "vpdirac/diagnostics.hpp"
#include "vpdirac/dynamics.hpp"
#include "vpdirac/error.hpp"
#include "vpdirac/fields.hpp"
#include "vpdirac/flowmetrics.hpp"
#include "vpdirac/scenario.hpp"

namespace py = pybind11;
using namespace vpdirac;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(std::span<const Vec3> v) {
  Array a({static_cast<py::ssize_t>(v.size()), py::ssize_t{3}});
  auto m = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < v.size(); ++i)
    for (int c = 0; c < 3; ++c) m(i, c) = v[i][c];
  return a;
}

std::vector<Vec3> from_array(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw InvalidArgument("expected an (N, 3) array");
  auto r = a.unchecked<2>();
  std::vector<Vec3> v(a.shape(0));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) v[i] = {r(i, 0), r(i, 1), r(i, 2)};
  return v;
}

Vec3 vec(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
std::array<double, 3> arr(const Vec3& v) { return {v.x, v.y, v.z}; }

}  // namespace

PYBIND11_MODULE(_vpdirac, m) {
  m.doc() = "Particle solver for the repulsive Vlasov-Poisson system with a moving point charge";
  m.attr("__version__") = code_version();

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<SeedMismatch>(m, "SeedMismatch", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NearSingularity>(m, "NearSingularity", PyExc_ArithmeticError);
  py::register_exception<StepFailure>(m, "StepFailure", PyExc_RuntimeError);

  py::enum_<ProfileKind>(m, "ProfileKind")
      .value("radial_gaussian", ProfileKind::RadialGaussian)
      .value("uniform_ball", ProfileKind::UniformBall)
      .value("uniform_box", ProfileKind::UniformBox);

  py::class_<ProfileSpec>(m, "ProfileSpec")
      .def(py::init<>())
      .def_readwrite("kind", &ProfileSpec::kind)
      .def_readwrite("mass", &ProfileSpec::mass)
      .def_readwrite("alpha", &ProfileSpec::alpha)
      .def_readwrite("r_scale", &ProfileSpec::r_scale)
      .def_readwrite("v_scale", &ProfileSpec::v_scale)
      .def_readwrite("radius", &ProfileSpec::radius)
      .def_readwrite("half_x", &ProfileSpec::half_x)
      .def_readwrite("half_v", &ProfileSpec::half_v)
      .def_property(
          "center", [](const ProfileSpec& s) { return arr(s.center); },
          [](ProfileSpec& s, const std::array<double, 3>& c) { s.center = vec(c); });

  py::class_<EnergyComponents>(m, "EnergyComponents")
      .def_readonly("plasma_kinetic", &EnergyComponents::plasma_kinetic)
      .def_readonly("charge_kinetic", &EnergyComponents::charge_kinetic)
      .def_readonly("plasma_plasma", &EnergyComponents::plasma_plasma)
      .def_readonly("plasma_charge", &EnergyComponents::plasma_charge)
      .def("total", &EnergyComponents::total);

  py::class_<InitialDensity>(m, "InitialDensity")
      .def_static(
          "create",
          [](const ProfileSpec& s, const std::array<double, 3>& xi0, const std::array<double, 3>& eta0, double m0) {
            return InitialDensity::create(s, vec(xi0), vec(eta0), m0);
          },
          py::arg("spec"), py::arg("xi0") = std::array<double, 3>{0, 0, 0},
          py::arg("eta0") = std::array<double, 3>{0.5, 0, 0}, py::arg("m0") = InitialDensity::kDefaultM0)
      .def_static("default_profile", &InitialDensity::default_profile)
      .def("__call__", [](const InitialDensity& d, const std::array<double, 3>& x,
                          const std::array<double, 3>& v) { return d(vec(x), vec(v)); })
      .def_property_readonly("total_mass", &InitialDensity::total_mass)
      .def_property_readonly("normalization", &InitialDensity::normalization)
      .def_property_readonly("charge_center", [](const InitialDensity& d) { return arr(d.charge_center()); })
      .def_property_readonly("charge_velocity", [](const InitialDensity& d) { return arr(d.charge_velocity()); })
      .def("sup_norm", &InitialDensity::sup_norm)
      .def("reference_energy", &InitialDensity::reference_energy)
      .def("reference_moment", &InitialDensity::reference_moment)
      .def("reference_retained_mass", &InitialDensity::reference_retained_mass);

  py::class_<ParticleEnsemble>(m, "ParticleEnsemble")
      .def(py::init([](const Array& x, const Array& v, const std::vector<double>& w,
                       std::optional<std::vector<std::uint64_t>> ids) {
             auto xs = from_array(x);
             std::vector<std::uint64_t> id;
             if (ids) {
               id = *ids;
             } else {
               id.resize(xs.size());
               for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;
             }
             return ParticleEnsemble(std::move(xs), from_array(v), w, std::move(id));
           }),
           py::arg("positions"), py::arg("velocities"), py::arg("weights"), py::arg("ids") = py::none())
      .def("__len__", &ParticleEnsemble::size)
      .def_property_readonly("positions", [](const ParticleEnsemble& e) { return to_array(e.positions()); })
      .def_property_readonly("velocities", [](const ParticleEnsemble& e) { return to_array(e.velocities()); })
      .def_property_readonly("weights",
                             [](const ParticleEnsemble& e) {
                               return std::vector<double>(e.weights().begin(), e.weights().end());
                             })
      .def_property_readonly("ids", [](const ParticleEnsemble& e) {
        return std::vector<std::uint64_t>(e.ids().begin(), e.ids().end());
      });

  m.def("sample_initial_ensemble", &sample_initial_ensemble, py::arg("density"), py::arg("count"),
        py::arg("seed") = 12345);
  m.def("apply_cutoff", &apply_cutoff, py::arg("ensemble"), py::arg("n"));

  m.def(
      "plasma_field",
      [](const ParticleEnsemble& e, const Array& targets, double eps) {
        return to_array(fields::plasma_field(e, from_array(targets), eps));
      },
      py::arg("ensemble"), py::arg("targets"), py::arg("eps") = 0.0);
  m.def(
      "point_charge_field",
      [](const std::array<double, 3>& xi, const Array& targets, double exclusion) {
        return to_array(fields::point_charge_field(vec(xi), from_array(targets), exclusion));
      },
      py::arg("xi"), py::arg("targets"), py::arg("exclusion_radius") = 0.0);
  m.def("gradient_kernel", [](const std::array<double, 3>& y) { return fields::gradient_kernel(vec(y)); });

  py::class_<PointChargeState>(m, "PointChargeState")
      .def(py::init([](const std::array<double, 3>& xi, const std::array<double, 3>& eta) {
             return PointChargeState{vec(xi), vec(eta)};
           }),
           py::arg("xi"), py::arg("eta"))
      .def_property_readonly("xi", [](const PointChargeState& q) { return arr(q.xi); })
      .def_property_readonly("eta", [](const PointChargeState& q) { return arr(q.eta); });

  py::class_<SimulationConfig>(m, "SimulationConfig")
      .def(py::init<>())
      .def_readwrite("horizon", &SimulationConfig::horizon)
      .def_readwrite("n", &SimulationConfig::n)
      .def_readwrite("particles", &SimulationConfig::particles)
      .def_readwrite("atol", &SimulationConfig::atol)
      .def_readwrite("rtol", &SimulationConfig::rtol)
      .def_readwrite("softening", &SimulationConfig::softening)
      .def_readwrite("cadence", &SimulationConfig::cadence)
      .def_readwrite("seed", &SimulationConfig::seed)
      .def_readwrite("closest_approach_floor", &SimulationConfig::closest_approach_floor)
      .def_readwrite("approach_cap", &SimulationConfig::approach_cap)
      .def_readwrite("max_steps", &SimulationConfig::max_steps);

  py::class_<FlowRecord>(m, "FlowRecord")
      .def_readonly("n", &FlowRecord::n)
      .def_readonly("ids", &FlowRecord::ids)
      .def_readonly("times", &FlowRecord::times)
      .def_readonly("reference_weights", &FlowRecord::reference_weights)
      .def_readonly("weights", &FlowRecord::weights)
      .def_readonly("softening", &FlowRecord::softening)
      .def("X", [](const FlowRecord& f, std::size_t k) { return to_array(f.X.at(k)); })
      .def("V", [](const FlowRecord& f, std::size_t k) { return to_array(f.V.at(k)); })
      .def("charge_at", &FlowRecord::charge_at)
      .def("ensemble_at", &FlowRecord::ensemble_at)
      .def("excluded_weight", &FlowRecord::excluded_weight)
      .def_property_readonly("steps", [](const FlowRecord& f) { return f.stats.steps; })
      .def_property_readonly("min_charge_distance", [](const FlowRecord& f) { return f.stats.min_charge_distance; });

  m.def("integrate", &integrate, py::arg("particles"), py::arg("charge"), py::arg("config"),
        py::arg("reference_weights") = std::vector<double>{});
  m.def("run", &run, py::arg("config"), py::arg("density"));
  m.def("run_pair", &run_pair, py::arg("config"), py::arg("density"), py::arg("n_a"), py::arg("n_b"));
  m.def("write_flow_binary", &write_flow_binary);
  m.def("read_flow_binary", &read_flow_binary);

  m.def(
      "canonical_config",
      [](const std::string& text, const std::vector<std::string>& overrides) {
        return emit_canonical(parse_config_string(text, overrides));
      },
      py::arg("text"), py::arg("overrides") = std::vector<std::string>{});
  m.def(
      "config_hash",
      [](const std::string& text, const std::vector<std::string>& overrides) {
        return config_hash(parse_config_string(text, overrides));
      },
      py::arg("text"), py::arg("overrides") = std::vector<std::string>{});

  auto d = m.def_submodule("diagnostics");
  d.def("total_mass", &diagnostics::total_mass);
  d.def("total_energy", &diagnostics::total_energy, py::arg("ensemble"), py::arg("charge"), py::arg("eps") = 0.0);
  d.def(
      "energy_moment",
      [](const ParticleEnsemble& e, const std::array<double, 3>& xi, double m) {
        return diagnostics::energy_moment(e, vec(xi), m);
      },
      py::arg("ensemble"), py::arg("xi"), py::arg("m"));
  d.def("virial_rate", [](const ParticleEnsemble& e, const std::array<double, 3>& xi) {
    return diagnostics::virial_rate(e, vec(xi));
  });
  d.def("interpolation_constant", &diagnostics::interpolation_constant);

  auto f = m.def_submodule("flowmetrics");
  py::class_<flowmetrics::MetricParams>(f, "MetricParams")
      .def(py::init<>())
      .def_readwrite("r", &flowmetrics::MetricParams::r)
      .def_readwrite("lambda_", &flowmetrics::MetricParams::lambda)
      .def_readwrite("gamma", &flowmetrics::MetricParams::gamma)
      .def_readwrite("delta1", &flowmetrics::MetricParams::delta1)
      .def_readwrite("delta2", &flowmetrics::MetricParams::delta2);
  f.def("beta", [](const std::array<double, 3>& z) { return flowmetrics::beta(vec(z)); });
  f.def("beta_prime", [](const std::array<double, 3>& z) { return arr(flowmetrics::beta_prime(vec(z))); });
  f.def("superlevel_measure", &flowmetrics::superlevel_measure);
  f.def("loglog_moment", &flowmetrics::loglog_moment);
  f.def("phi_functional", &flowmetrics::phi_functional);
  f.def("convergence_in_measure", &flowmetrics::convergence_in_measure);
  f.def("chebyshev_consistency", [](const FlowRecord& a, const FlowRecord& b, const flowmetrics::MetricParams& p,
                                    std::size_t k) {
    const auto c = flowmetrics::chebyshev_consistency(a, b, p, k);
    return std::make_pair(c.lhs, c.rhs);
  });

  auto a = m.def_submodule("analysis");
  a.def("point_charge_weak_norm", [](const std::array<double, 3>& xi, double p) {
    return diagnostics::point_charge_weak_norm(vec(xi), p);
  }, py::arg("xi"), py::arg("p") = 1.5);
  a.def(
      "interpolation_M1_Lp",
      [](const std::vector<double>& values, double cell_volume, double p) {
        const auto r = analysis::interpolation_M1_Lp(values, cell_volume, p);
        return py::dict(py::arg("L1") = r.L1, py::arg("M1") = r.M1, py::arg("Lp") = r.Lp, py::arg("rhs") = r.rhs,
                        py::arg("ratio") = r.ratio);
      },
      py::arg("values"), py::arg("cell_volume"), py::arg("p"));
}
