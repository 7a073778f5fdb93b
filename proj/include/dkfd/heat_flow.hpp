#pragma once

// Continuous and discrete heat semigroups. All discrete flows are evaluated exactly
// in Fourier space through the symbol of the 3-point Laplacian; no time stepping.

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dkfd/fourier.hpp"
#include "dkfd/grid.hpp"
#include "dkfd/operators.hpp"
#include "dkfd/test_function.hpp"

namespace dkfd {

namespace detail {
inline void require_nonnegative_span(double z, const char* who) {
  if (!(z >= 0.0)) throw std::invalid_argument(std::string(who) + ": time span must be >= 0");
}
}  // namespace detail

/// P(h, xi): the nonnegative Fourier symbol of -1/2 Delta_h, i.e. the 3-point Laplacian
/// has eigenvalue -2 P(h, xi) on exp(i x.xi).
class SpectralSymbol {
public:
  explicit SpectralSymbol(Grid grid) : grid_(grid) {}

  const Grid& grid() const { return grid_; }

  double operator()(const std::array<int, 3>& xi) const {
    const double h = grid_.spacing();
    double p = 0.0;
    for (int a = 0; a < grid_.dim(); ++a) p += (1.0 - std::cos(h * xi[a])) / (h * h);
    return p;
  }
  double operator()(int xi) const { return (*this)({xi, 0, 0}); }

  /// Eigenvalue of -Delta_h (lambda = 2P).
  double laplacian_eigenvalue(const std::array<int, 3>& xi) const { return 2.0 * (*this)(xi); }

  /// `xi,P` rows for xi in [-L/2, L/2) (one-dimensional grids).
  void write_csv(std::ostream& os) const {
    os << "xi,P\n";
    char buf[64];
    const int L = grid_.nodes_per_axis();
    for (int xi = -L / 2; xi < L / 2; ++xi) {
      std::snprintf(buf, sizeof buf, "%d,%.17g\n", xi, (*this)(xi));
      os << buf;
    }
  }

private:
  Grid grid_;
};

inline SpectralSymbol laplacian_symbol(const Grid& grid) { return SpectralSymbol(grid); }

/// P^z(phi): coefficients damped by exp(-|xi|^2 z / 2).
inline TestFunction continuous_backward_flow(const TestFunction& phi, double z) {
  detail::require_nonnegative_span(z, "continuous_backward_flow");
  return phi.with_multiplier([z](int xi) { return std::exp(-0.5 * xi * xi * z); });
}

/// Exact discrete heat propagator exp(-P(h, .) z) applied through a reusable transform.
class DiscreteHeatPropagator {
public:
  explicit DiscreteHeatPropagator(Grid grid) : transform_(grid), symbol_(grid) {}

  void apply(GridFunction& u, double z) {
    detail::require_nonnegative_span(z, "discrete heat flow");
    if (z == 0.0) return;
    const auto m = transform_.tabulate([&](const std::array<int, 3>& xi) { return std::exp(-symbol_(xi) * z); });
    transform_.apply(u, m);
  }

private:
  FourierMultiplier transform_;
  SpectralSymbol symbol_;
};

/// P_h^z(phi_h): solves d/dt phi = -1/2 Delta_h phi backwards over a span z.
inline GridFunction discrete_backward_flow(const GridFunction& phi_h, double z) {
  detail::require_nonnegative_span(z, "discrete_backward_flow");
  GridFunction out = phi_h;
  DiscreteHeatPropagator(phi_h.grid()).apply(out, z);
  return out;
}

/// Solves d/dt rho = 1/2 Delta_h rho forwards over a span z (the mean-field density).
inline GridFunction discrete_forward_flow(const GridFunction& rho_h, double z) {
  detail::require_nonnegative_span(z, "discrete_forward_flow");
  GridFunction out = rho_h;
  DiscreteHeatPropagator(rho_h.grid()).apply(out, z);
  return out;
}

/// ||I_h P^z phi - P_h^z I_h phi||_h.
inline double backward_flow_error(const TestFunction& phi, const Grid& grid, double z) {
  const GridFunction exact = interpolate(continuous_backward_flow(phi, z), grid);
  const GridFunction discrete = discrete_backward_flow(interpolate(phi, grid), z);
  return norm(exact - discrete);
}

/// ||I_h (d/dx P^z phi) - grad_h P_h^z I_h phi||_h  (one-dimensional grids).
inline double backward_gradient_error(const TestFunction& phi, const Grid& grid, double z) {
  const GridFunction exact = interpolate(continuous_backward_flow(phi, z).derivative(), grid);
  const GridFunction discrete = apply_gradient(discrete_backward_flow(interpolate(phi, grid), z)).front();
  return norm(exact - discrete);
}

/// ||grad_h P_h^z I_h phi1 . grad_h P_h^z I_h phi2 - I_h(grad P^z phi1 . grad P^z phi2)||_h.
inline double gradient_product_error(const TestFunction& phi1, const TestFunction& phi2, const Grid& grid,
                                     double z) {
  if (grid.dim() != 1) throw std::invalid_argument("gradient_product_error: one-dimensional grids only");
  const auto g1 = apply_gradient(discrete_backward_flow(interpolate(phi1, grid), z));
  const auto g2 = apply_gradient(discrete_backward_flow(interpolate(phi2, grid), z));
  const GridFunction d1 = interpolate(continuous_backward_flow(phi1, z).derivative(), grid);
  const GridFunction d2 = interpolate(continuous_backward_flow(phi2, z).derivative(), grid);
  return norm(dot(g1, g2) - hadamard(d1, d2));
}

/// |d/dx P^span phi|^2 re-projected to the bandwidth of phi.
inline TestFunction gradient_squared_after_flow(const TestFunction& phi, double span) {
  const TestFunction grad = continuous_backward_flow(phi, span).derivative();
  const TestFunction projected = TestFunction::from_closure(
      [grad](double x) {
        const double g = grad(x);
        return g * g;
      },
      phi.bandwidth(), phi.tail_tolerance());
  return TestFunction::from_coefficients(projected.coefficients(), phi.tail_tolerance());
}

}  // namespace dkfd
