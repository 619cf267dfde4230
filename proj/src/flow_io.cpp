#include <fstream>
#include <iomanip>

#include "binary_io.hpp"
#include "vpdirac/dynamics.hpp"

namespace vpdirac {

using namespace detail;

void write_flow_binary(const FlowRecord& flow, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  const std::size_t n = flow.seeds();
  const std::size_t k = flow.samples();
  put_magic(os, "VPFLOW01");
  put_u64(os, static_cast<std::uint64_t>(flow.n));
  put_u64(os, n);
  put_u64(os, k);
  put_f64(os, flow.softening);
  for (auto id : flow.ids) put_u64(os, id);
  for (double w : flow.reference_weights) put_f64(os, w);
  for (double w : flow.weights) put_f64(os, w);
  for (auto f : flow.floor_hit) os.put(static_cast<char>(f));
  for (double t : flow.times) put_f64(os, t);
  for (std::size_t s = 0; s < k; ++s) {
    for (int c = 0; c < 3; ++c)
      for (const auto& x : flow.X[s]) put_f64(os, x[c]);
    for (int c = 0; c < 3; ++c)
      for (const auto& v : flow.V[s]) put_f64(os, v[c]);
  }
  for (std::size_t s = 0; s < k; ++s) {
    for (int c = 0; c < 3; ++c) put_f64(os, flow.xi[s][c]);
    for (int c = 0; c < 3; ++c) put_f64(os, flow.eta[s][c]);
  }
  put_u64(os, flow.stats.steps);
  put_u64(os, flow.stats.rejected);
  put_u64(os, flow.stats.evaluations);
  put_f64(os, flow.stats.min_charge_distance);
  put_f64(os, flow.stats.min_dt);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

FlowRecord read_flow_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  expect_magic(is, "VPFLOW01");
  FlowRecord f;
  f.n = static_cast<int>(get_u64(is));
  const std::size_t n = get_u64(is);
  const std::size_t k = get_u64(is);
  f.softening = get_f64(is);
  f.ids.resize(n);
  for (auto& id : f.ids) id = get_u64(is);
  f.reference_weights.resize(n);
  for (double& w : f.reference_weights) w = get_f64(is);
  f.weights.resize(n);
  for (double& w : f.weights) w = get_f64(is);
  f.floor_hit.resize(n);
  for (auto& h : f.floor_hit) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("truncated binary file");
    h = static_cast<std::uint8_t>(c);
  }
  f.times.resize(k);
  for (double& t : f.times) t = get_f64(is);
  f.X.assign(k, std::vector<Vec3>(n));
  f.V.assign(k, std::vector<Vec3>(n));
  for (std::size_t s = 0; s < k; ++s) {
    for (int c = 0; c < 3; ++c)
      for (auto& x : f.X[s]) x[c] = get_f64(is);
    for (int c = 0; c < 3; ++c)
      for (auto& v : f.V[s]) v[c] = get_f64(is);
  }
  f.xi.resize(k);
  f.eta.resize(k);
  for (std::size_t s = 0; s < k; ++s) {
    for (int c = 0; c < 3; ++c) f.xi[s][c] = get_f64(is);
    for (int c = 0; c < 3; ++c) f.eta[s][c] = get_f64(is);
  }
  f.stats.steps = get_u64(is);
  f.stats.rejected = get_u64(is);
  f.stats.evaluations = get_u64(is);
  f.stats.min_charge_distance = get_f64(is);
  f.stats.min_dt = get_f64(is);
  return f;
}

void write_flow_csv(const FlowRecord& flow, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << "s,id,X1,X2,X3,V1,V2,V3\n" << std::setprecision(17);
  for (std::size_t k = 0; k < flow.samples(); ++k)
    for (std::size_t i = 0; i < flow.seeds(); ++i) {
      const auto& x = flow.X[k][i];
      const auto& v = flow.V[k][i];
      os << flow.times[k] << ',' << flow.ids[i] << ',' << x.x << ',' << x.y << ',' << x.z << ',' << v.x << ','
         << v.y << ',' << v.z << '\n';
    }
}

void write_charge_track_csv(const FlowRecord& flow, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << "s,xi1,xi2,xi3,eta1,eta2,eta3\n" << std::setprecision(17);
  for (std::size_t k = 0; k < flow.samples(); ++k) {
    const auto& a = flow.xi[k];
    const auto& b = flow.eta[k];
    os << flow.times[k] << ',' << a.x << ',' << a.y << ',' << a.z << ',' << b.x << ',' << b.y << ',' << b.z << '\n';
  }
}

}  // namespace vpdirac
