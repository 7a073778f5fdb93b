#pragma once

// Finite-difference stencils and their periodic application along grid axes.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dkfd/grid.hpp"

namespace dkfd {

enum class StencilKind { first_derivative, second_derivative };

/// Periodic finite-difference stencil. Coefficients are dimensionless; the 1/h
/// (first derivative) or 1/h^2 (second derivative) factor is applied at use.
class Stencil {
public:
  Stencil(StencilKind kind, std::vector<int> offsets, std::vector<double> coefficients, int order)
      : kind_(kind), offsets_(std::move(offsets)), coefficients_(std::move(coefficients)), order_(order) {
    if (offsets_.size() != coefficients_.size() || offsets_.empty()) {
      throw std::invalid_argument("Stencil: offsets and coefficients must be non-empty and of equal length");
    }
    double sum = 0.0, first = 0.0;
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      sum += coefficients_[i];
      first += coefficients_[i] * offsets_[i];
    }
    if (std::abs(sum) > 1e-12) throw std::invalid_argument("Stencil: coefficients must sum to zero");
    if (kind_ == StencilKind::first_derivative) {
      if (std::abs(first - 1.0) > 1e-12) throw std::invalid_argument("Stencil: first-derivative stencil is inconsistent");
    } else {
      for (std::size_t i = 0; i < offsets_.size(); ++i) {
        if (std::abs(coefficient_at(-offsets_[i]) - coefficients_[i]) > 1e-14) {
          throw std::invalid_argument("Stencil: second-derivative stencil must be symmetric");
        }
      }
    }
  }

  /// (f(x+h) - f(x-h)) / (2h), order 2.
  static Stencil centered_first() { return {StencilKind::first_derivative, {-1, 1}, {-0.5, 0.5}, 2}; }

  /// (f(x+h) - f(x)) / h, order 1; the factor D_h of the 3-point second difference.
  static Stencil forward_first() { return {StencilKind::first_derivative, {0, 1}, {-1.0, 1.0}, 1}; }

  /// (f(x+h) - 2f(x) + f(x-h)) / h^2, order 2.
  static Stencil three_point_second() {
    return {StencilKind::second_derivative, {-1, 0, 1}, {1.0, -2.0, 1.0}, 2};
  }

  StencilKind kind() const { return kind_; }
  const std::vector<int>& offsets() const { return offsets_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  int order() const { return order_; }

  double coefficient_at(int offset) const {
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      if (offsets_[i] == offset) return coefficients_[i];
    }
    return 0.0;
  }

private:
  StencilKind kind_;
  std::vector<int> offsets_;
  std::vector<double> coefficients_;
  int order_;
};

/// Applies `stencil` along `axis` with periodic wrap, scaled by h^-1 or h^-2.
inline GridFunction apply_along_axis(const Stencil& stencil, const GridFunction& u, int axis) {
  const Grid& g = u.grid();
  if (axis < 0 || axis >= g.dim()) throw std::invalid_argument("apply_along_axis: axis out of range");
  const double h = g.spacing();
  const double scale = stencil.kind() == StencilKind::first_derivative ? 1.0 / h : 1.0 / (h * h);
  GridFunction out(g);
  const auto& off = stencil.offsets();
  const auto& cof = stencil.coefficients();
  for (std::size_t i = 0; i < g.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < off.size(); ++k) acc += cof[k] * u[g.shifted(i, axis, off[k])];
    out[i] = acc * scale;
  }
  return out;
}

/// Discrete gradient: one component per axis.
inline std::vector<GridFunction> apply_gradient(const Stencil& stencil, const GridFunction& u) {
  if (stencil.kind() != StencilKind::first_derivative) {
    throw std::invalid_argument("apply_gradient: stencil must be a first-derivative stencil");
  }
  std::vector<GridFunction> out;
  out.reserve(u.grid().dim());
  for (int a = 0; a < u.grid().dim(); ++a) out.push_back(apply_along_axis(stencil, u, a));
  return out;
}

/// Centered gradient, the operator used in the noise term.
inline std::vector<GridFunction> apply_gradient(const GridFunction& u) {
  return apply_gradient(Stencil::centered_first(), u);
}

/// 3-point Laplacian: (-2d u(x) + sum of the 2d nearest neighbours) / h^2.
inline GridFunction apply_laplacian(const GridFunction& u) {
  const Grid& g = u.grid();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  GridFunction out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double acc = -2.0 * g.dim() * u[i];
    for (int a = 0; a < g.dim(); ++a) acc += u[g.shifted(i, a, 1)] + u[g.shifted(i, a, -1)];
    out[i] = acc * inv_h2;
  }
  return out;
}

/// Pointwise dot product of two discrete vector fields.
inline GridFunction dot(const std::vector<GridFunction>& a, const std::vector<GridFunction>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("dot: component count mismatch");
  GridFunction out(a.front().grid());
  for (std::size_t c = 0; c < a.size(); ++c) out += hadamard(a[c], b[c]);
  return out;
}

}  // namespace dkfd
