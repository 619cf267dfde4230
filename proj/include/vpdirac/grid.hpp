#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "vpdirac/vec3.hpp"

namespace vpdirac {

/// Uniform 3D node lattice: node (i, j, k) sits at origin + h * (i, j, k).
struct GridSpec {
  Vec3 origin{};
  double h = 1.0;
  std::array<std::size_t, 3> dims{1, 1, 1};

  /// Cube of `cells` cells per side covering [center - half_width, center + half_width]^3.
  static GridSpec cube(const Vec3& center, double half_width, std::size_t cells);

  std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
  double cell_volume() const { return h * h * h; }
  /// Volume of the box spanned by the nodes, counting one cell per node.
  double volume() const { return static_cast<double>(size()) * cell_volume(); }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * dims[1] + j) * dims[2] + k; }
  std::array<std::size_t, 3> unravel(std::size_t idx) const;
  Vec3 node(std::size_t i, std::size_t j, std::size_t k) const;
  Vec3 node(std::size_t idx) const;
  std::vector<Vec3> nodes() const;
  /// Throws InvalidArgument for non-positive spacing or empty dimensions.
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

template <class T>
struct GridField {
  GridSpec spec;
  std::vector<T> values;

  GridField() = default;
  explicit GridField(const GridSpec& s, T fill = T{}) : spec(s), values(s.size(), fill) {}
  GridField(const GridSpec& s, std::vector<T> v);

  std::size_t size() const { return values.size(); }
  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }
};

using ScalarGrid = GridField<double>;
using VectorGrid = GridField<Vec3>;
using MatrixGrid = GridField<Mat3>;

/// Pointwise magnitudes: |v| for vectors, the Frobenius norm for matrices.
ScalarGrid magnitude(const VectorGrid& g);
ScalarGrid magnitude(const MatrixGrid& g);

/// Samples a callable on every node.
template <class F>
auto sample_grid(const GridSpec& spec, F&& f) {
  using T = std::decay_t<decltype(f(Vec3{}))>;
  GridField<T> out(spec);
  for (std::size_t i = 0; i < spec.size(); ++i) out.values[i] = f(spec.node(i));
  return out;
}

/// CSV dumps: x1,x2,x3,value / x1,x2,x3,c1,c2,c3 / x1,x2,x3,k11..k33.
void write_grid_csv(const ScalarGrid& g, const std::filesystem::path& path);
void write_grid_csv(const VectorGrid& g, const std::filesystem::path& path);
void write_grid_csv(const MatrixGrid& g, const std::filesystem::path& path);

}  // namespace vpdirac
