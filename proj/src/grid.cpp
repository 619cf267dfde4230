#include "vpdirac/grid.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "vpdirac/error.hpp"

namespace vpdirac {

GridSpec GridSpec::cube(const Vec3& center, double half_width, std::size_t cells) {
  if (!(half_width > 0.0) || cells == 0) throw InvalidArgument("GridSpec::cube: need half_width > 0 and cells >= 1");
  GridSpec g;
  g.h = 2.0 * half_width / static_cast<double>(cells);
  g.origin = center - Vec3{half_width, half_width, half_width};
  g.dims = {cells + 1, cells + 1, cells + 1};
  return g;
}

std::array<std::size_t, 3> GridSpec::unravel(std::size_t idx) const {
  const std::size_t k = idx % dims[2];
  const std::size_t j = (idx / dims[2]) % dims[1];
  const std::size_t i = idx / (dims[1] * dims[2]);
  return {i, j, k};
}

Vec3 GridSpec::node(std::size_t i, std::size_t j, std::size_t k) const {
  return origin + Vec3{h * static_cast<double>(i), h * static_cast<double>(j), h * static_cast<double>(k)};
}

Vec3 GridSpec::node(std::size_t idx) const {
  const auto [i, j, k] = unravel(idx);
  return node(i, j, k);
}

std::vector<Vec3> GridSpec::nodes() const {
  std::vector<Vec3> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = node(i);
  return out;
}

void GridSpec::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("grid spacing must be positive");
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0) throw InvalidArgument("grid has an empty dimension");
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y) || !std::isfinite(origin.z))
    throw InvalidArgument("grid origin must be finite");
}

template <class T>
GridField<T>::GridField(const GridSpec& s, std::vector<T> v) : spec(s), values(std::move(v)) {
  if (values.size() != spec.size()) throw InvalidArgument("grid values do not match the grid size");
}

template struct GridField<double>;
template struct GridField<Vec3>;
template struct GridField<Mat3>;

ScalarGrid magnitude(const VectorGrid& g) {
  ScalarGrid out(g.spec);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = norm(g[i]);
  return out;
}

ScalarGrid magnitude(const MatrixGrid& g) {
  ScalarGrid out(g.spec);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = frobenius(g[i]);
  return out;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << header << '\n' << std::setprecision(17);
  return os;
}

void put_node(std::ostream& os, const Vec3& x) { os << x.x << ',' << x.y << ',' << x.z; }

}  // namespace

void write_grid_csv(const ScalarGrid& g, const std::filesystem::path& path) {
  auto os = open_csv(path, "x1,x2,x3,value");
  for (std::size_t i = 0; i < g.size(); ++i) {
    put_node(os, g.spec.node(i));
    os << ',' << g[i] << '\n';
  }
}

void write_grid_csv(const VectorGrid& g, const std::filesystem::path& path) {
  auto os = open_csv(path, "x1,x2,x3,c1,c2,c3");
  for (std::size_t i = 0; i < g.size(); ++i) {
    put_node(os, g.spec.node(i));
    os << ',' << g[i].x << ',' << g[i].y << ',' << g[i].z << '\n';
  }
}

void write_grid_csv(const MatrixGrid& g, const std::filesystem::path& path) {
  auto os = open_csv(path, "x1,x2,x3,k11,k12,k13,k21,k22,k23,k31,k32,k33");
  for (std::size_t i = 0; i < g.size(); ++i) {
    put_node(os, g.spec.node(i));
    for (const auto& row : g[i])
      for (double v : row) os << ',' << v;
    os << '\n';
  }
}

}  // namespace vpdirac
