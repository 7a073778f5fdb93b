#pragma once

// Uniform periodic grid on the torus [-pi, pi)^d and real-valued grid functions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace dkfd {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Multi-index into a grid of dimension <= 3; unused trailing axes are 0.
using NodeIndex = std::array<int, 3>;

class Grid {
public:
  Grid(int dim, int nodes_per_axis) : dim_(dim), nodes_(nodes_per_axis) {
    if (dim < 1 || dim > 3) {
      throw std::invalid_argument("Grid: dimension must be 1, 2 or 3, got " + std::to_string(dim));
    }
    if (nodes_per_axis < 4 || nodes_per_axis % 2 != 0) {
      throw std::invalid_argument("Grid: nodes per axis must be even and >= 4, got " +
                                  std::to_string(nodes_per_axis));
    }
    spacing_ = kTwoPi / nodes_per_axis;
    size_ = 1;
    for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(nodes_per_axis);
  }

  /// One-dimensional grid with L nodes, the configuration used by every experiment.
  static Grid line(int nodes) { return Grid(1, nodes); }

  int dim() const { return dim_; }
  int nodes_per_axis() const { return nodes_; }
  double spacing() const { return spacing_; }
  std::size_t size() const { return size_; }

  /// h^d, the weight of one node in the discrete inner product.
  double cell_volume() const { return std::pow(spacing_, dim_); }

  double coordinate(int i) const { return -kPi + i * spacing_; }

  int wrap(int i) const {
    const int r = i % nodes_;
    return r < 0 ? r + nodes_ : r;
  }

  /// Row-major flattening with axis 0 fastest.
  std::size_t flat(const NodeIndex& idx) const {
    std::size_t f = 0;
    for (int a = dim_ - 1; a >= 0; --a) f = f * nodes_ + static_cast<std::size_t>(wrap(idx[a]));
    return f;
  }

  NodeIndex unflat(std::size_t f) const {
    NodeIndex idx{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      idx[a] = static_cast<int>(f % nodes_);
      f /= nodes_;
    }
    return idx;
  }

  /// Flat index of the neighbour of node `f` displaced by `offset` along `axis` (periodic).
  std::size_t shifted(std::size_t f, int axis, int offset) const {
    NodeIndex idx = unflat(f);
    idx[axis] += offset;
    return flat(idx);
  }

  bool operator==(const Grid& o) const { return dim_ == o.dim_ && nodes_ == o.nodes_; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

private:
  int dim_;
  int nodes_;
  double spacing_;
  std::size_t size_;
};

/// Values of a real function at every node of a grid.
class GridFunction {
public:
  explicit GridFunction(Grid grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}

  GridFunction(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw std::invalid_argument("GridFunction: expected " + std::to_string(grid_.size()) +
                                  " values, got " + std::to_string(values_.size()));
    }
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double min() const {
    double m = values_.front();
    for (double v : values_) m = v < m ? v : m;
    return m;
  }
  double max() const {
    double m = values_.front();
    for (double v : values_) m = v > m ? v : m;
    return m;
  }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  GridFunction& operator+=(const GridFunction& o) {
    require_same_grid(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    require_same_grid(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  GridFunction& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }

  /// Pointwise product.
  friend GridFunction hadamard(const GridFunction& a, const GridFunction& b) {
    a.require_same_grid(b);
    GridFunction out(a.grid_);
    for (std::size_t i = 0; i < a.size(); ++i) out.values_[i] = a.values_[i] * b.values_[i];
    return out;
  }

  void require_same_grid(const GridFunction& o) const {
    if (grid_ != o.grid_) throw std::invalid_argument("GridFunction: grid mismatch");
  }

private:
  Grid grid_;
  std::vector<double> values_;
};

/// Discrete L2 pairing (u, v)_h = sum_x h^d u(x) v(x).
inline double inner_product(const GridFunction& u, const GridFunction& v) {
  u.require_same_grid(v);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s * u.grid().cell_volume();
}

inline double norm(const GridFunction& u) { return std::sqrt(inner_product(u, u)); }

inline double max_abs(const GridFunction& u) {
  double m = 0.0;
  for (double v : u.values()) m = std::abs(v) > m ? std::abs(v) : m;
  return m;
}

/// (u, 1)_h.
inline double mass(const GridFunction& u) {
  double s = 0.0;
  for (double v : u.values()) s += v;
  return s * u.grid().cell_volume();
}

/// ||u^-||_h with u^- = -min(u, 0).
inline double negative_part_norm(const GridFunction& u) {
  double s = 0.0;
  for (double v : u.values()) {
    if (v < 0.0) s += v * v;
  }
  return std::sqrt(s * u.grid().cell_volume());
}

/// Interpolation I_h: samples a callable f(x) (d = 1) or f(std::array<double,3>) at every node.
template <class F>
GridFunction interpolate(const F& f, const Grid& grid) {
  GridFunction out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const NodeIndex idx = grid.unflat(i);
    if constexpr (std::is_invocable_r_v<double, const F&, double>) {
      out[i] = f(grid.coordinate(idx[0]));
    } else {
      std::array<double, 3> x{0.0, 0.0, 0.0};
      for (int a = 0; a < grid.dim(); ++a) x[a] = grid.coordinate(idx[a]);
      out[i] = f(x);
    }
  }
  return out;
}

/// CSV dump with columns `index,x,value`; `x` is the axis-0 coordinate.
inline void write_csv(std::ostream& os, const GridFunction& u) {
  os << "index,x,value\n";
  char buf[96];
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = u.grid().coordinate(u.grid().unflat(i)[0]);
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, x, u[i]);
    os << buf;
  }
}

/// Reads a table written by write_csv back onto `grid`.
inline GridFunction read_csv(std::istream& is, const Grid& grid) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("index,x,value", 0) != 0) {
    throw std::invalid_argument("read_csv: expected header index,x,value");
  }
  GridFunction out(grid);
  std::vector<bool> seen(grid.size(), false);
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::size_t index = 0;
    double x = 0.0, value = 0.0;
    if (std::sscanf(line.c_str(), "%zu,%lf,%lf", &index, &x, &value) != 3 || index >= grid.size()) {
      throw std::invalid_argument("read_csv: malformed row '" + line + "'");
    }
    out[index] = value;
    seen[index] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw std::invalid_argument("read_csv: missing rows");
  return out;
}

}  // namespace dkfd
