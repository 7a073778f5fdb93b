#pragma once

// N independent Brownian motions on the circle, sampled exactly from their transition
// law, together with closed-form expectations obtained from the heat semigroup.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dkfd/grid.hpp"
#include "dkfd/heat_flow.hpp"
#include "dkfd/random.hpp"
#include "dkfd/test_function.hpp"

namespace dkfd {

/// Wraps a real coordinate into [-pi, pi).
inline double wrap_to_torus(double x) {
  double y = x - kTwoPi * std::floor((x + kPi) / kTwoPi);
  if (y >= kPi) y -= kTwoPi;
  if (y < -kPi) y = -kPi;
  return y;
}

/// Deterministic initial configuration: particles sit on grid nodes, and the matched
/// density reproduces <mu_0^N, eta> = (rho_0h, I_h eta)_h for every eta.
struct InitialPlacement {
  Grid grid;
  long particles;
  std::vector<long> counts;
  GridFunction matched_density;

  /// Sum over particles of f(w_k(0)) / N, grouped by node.
  template <class F>
  double average_over_particles(const F& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] != 0) s += static_cast<double>(counts[i]) * f(grid.coordinate(static_cast<int>(i)));
    }
    return s / static_cast<double>(particles);
  }
};

/// Largest-remainder apportionment of N particles proportional to rho0 at the nodes
/// (ties go to the lower node index). Nodes with rho0 > 0 always receive at least one
/// particle; the deficit is taken from the node with the largest surplus over its quota.
inline InitialPlacement place_particles(const std::function<double(double)>& rho0, const Grid& grid, long N) {
  if (grid.dim() != 1) throw std::invalid_argument("place_particles: one-dimensional grids only");
  const std::size_t L = grid.size();
  std::vector<double> weight(L);
  std::size_t positive = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    weight[i] = rho0(grid.coordinate(static_cast<int>(i)));
    if (!std::isfinite(weight[i]) || weight[i] < 0.0) {
      throw std::invalid_argument("place_particles: initial density must be finite and nonnegative");
    }
    if (weight[i] > 0.0) ++positive;
    total += weight[i];
  }
  if (positive == 0) throw std::invalid_argument("place_particles: initial density vanishes on the grid");
  if (N < static_cast<long>(positive)) {
    throw std::invalid_argument("place_particles: N = " + std::to_string(N) + " is smaller than the " +
                                std::to_string(positive) + " nodes with positive density");
  }

  std::vector<double> quota(L);
  std::vector<long> counts(L);
  long assigned = 0;
  for (std::size_t i = 0; i < L; ++i) {
    quota[i] = static_cast<double>(N) * weight[i] / total;
    counts[i] = static_cast<long>(std::floor(quota[i]));
    assigned += counts[i];
  }
  std::vector<std::size_t> order(L);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return (quota[a] - std::floor(quota[a])) > (quota[b] - std::floor(quota[b]));
  });
  for (std::size_t k = 0; assigned < N; k = (k + 1) % L) {
    ++counts[order[k]];
    ++assigned;
  }
  for (std::size_t i = 0; i < L; ++i) {
    if (weight[i] > 0.0 && counts[i] == 0) {
      std::size_t donor = 0;
      double best = -1e300;
      for (std::size_t j = 0; j < L; ++j) {
        const double surplus = static_cast<double>(counts[j]) - quota[j];
        if (counts[j] > 1 && surplus > best) {
          best = surplus;
          donor = j;
        }
      }
      --counts[donor];
      counts[i] = 1;
    }
  }

  GridFunction density(grid);
  const double scale = 1.0 / (static_cast<double>(N) * grid.cell_volume());
  for (std::size_t i = 0; i < L; ++i) density[i] = static_cast<double>(counts[i]) * scale;
  return InitialPlacement{grid, N, std::move(counts), std::move(density)};
}

inline InitialPlacement place_particles(const TestFunction& rho0, const Grid& grid, long N) {
  return place_particles(rho0.closure(), grid, N);
}

/// Positions of N Brownian particles at the current clock, with their own random stream.
class ParticleEnsemble {
public:
  ParticleEnsemble(const InitialPlacement& placement, std::uint64_t seed, std::uint64_t realization)
      : stream_(seed, realization, Subsystem::particles) {
    positions_.reserve(static_cast<std::size_t>(placement.particles));
    for (std::size_t i = 0; i < placement.counts.size(); ++i) {
      const double x = placement.grid.coordinate(static_cast<int>(i));
      positions_.insert(positions_.end(), static_cast<std::size_t>(placement.counts[i]), x);
    }
  }

  ParticleEnsemble(std::vector<double> positions, std::uint64_t seed, std::uint64_t realization)
      : positions_(std::move(positions)), stream_(seed, realization, Subsystem::particles) {
    if (positions_.empty()) throw std::invalid_argument("ParticleEnsemble: need at least one particle");
    for (double& x : positions_) x = wrap_to_torus(x);
  }

  std::size_t size() const { return positions_.size(); }
  double clock() const { return clock_; }
  const std::vector<double>& positions() const { return positions_; }

  /// Exact transition over dt: Gaussian increments of variance dt, wrapped to the torus.
  /// dt = 0 leaves the ensemble unchanged.
  void advance(double dt) {
    if (!(dt >= 0.0)) throw std::invalid_argument("ParticleEnsemble::advance: dt must be positive");
    if (dt == 0.0) return;
    const double sd = std::sqrt(dt);
    for (double& x : positions_) x = wrap_to_torus(x + sd * stream_.normal());
    clock_ += dt;
  }

  /// Moves the ensemble to absolute time t >= clock().
  void advance_to(double t) { advance(t - clock_); }

private:
  std::vector<double> positions_;
  RandomStream stream_;
  double clock_ = 0.0;
};

/// Periodic cubic Hermite table of a test function built from its values and series
/// derivative; the interpolation error is below h^4 max|phi^(4)| / 384, h = 2 pi / nodes.
class PeriodicTable {
public:
  explicit PeriodicTable(const TestFunction& phi, int nodes = 1 << 14)
      : nodes_(nodes), h_(kTwoPi / nodes), value_(static_cast<std::size_t>(nodes) + 1),
        slope_(static_cast<std::size_t>(nodes) + 1) {
    if (nodes < 4) throw std::invalid_argument("PeriodicTable: need at least four nodes");
    const TestFunction d = phi.derivative();
    for (int i = 0; i < nodes; ++i) {
      const double x = -kPi + i * h_;
      value_[static_cast<std::size_t>(i)] = phi(x);
      slope_[static_cast<std::size_t>(i)] = d(x) * h_;
    }
    value_[static_cast<std::size_t>(nodes)] = value_[0];
    slope_[static_cast<std::size_t>(nodes)] = slope_[0];
  }

  /// x must lie in [-pi, pi).
  double operator()(double x) const {
    const double u = (x + kPi) / h_;
    int i = static_cast<int>(u);
    if (i >= nodes_) i = nodes_ - 1;
    const double t = u - i;
    const auto k = static_cast<std::size_t>(i);
    const double y0 = value_[k], y1 = value_[k + 1], m0 = slope_[k], m1 = slope_[k + 1];
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
  }

private:
  int nodes_;
  double h_;
  std::vector<double> value_;
  std::vector<double> slope_;
};

/// <mu^N, phi> = N^-1 sum_k phi(w_k).
template <class F>
double pair_with(const ParticleEnsemble& ensemble, const F& phi) {
  double s = 0.0;
  for (double x : ensemble.positions()) s += phi(x);
  return s / static_cast<double>(ensemble.size());
}

/// E<mu_t^N, phi> = <mu_0^N, P^t phi>.
inline double expected_pairing(const InitialPlacement& placement, const TestFunction& phi, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("expected_pairing: t must be >= 0");
  if (t == 0.0) return placement.average_over_particles(phi.closure());
  const TestFunction flowed = continuous_backward_flow(phi, t);
  return placement.average_over_particles([&](double x) { return flowed(x); });
}

/// Var<mu_t^N, phi> = N^-2 sum_k [P^t(phi^2)(w_k(0)) - (P^t phi(w_k(0)))^2].
inline double particle_variance_oracle(const InitialPlacement& placement, const TestFunction& phi, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("particle_variance_oracle: t must be >= 0");
  if (t == 0.0) return 0.0;
  const TestFunction mean_flow = continuous_backward_flow(phi, t);
  const TestFunction square_flow = continuous_backward_flow(phi.squared(), t);
  const double per_particle = placement.average_over_particles([&](double x) {
    const double m = mean_flow(x);
    return square_flow(x) - m * m;
  });
  return per_particle / static_cast<double>(placement.particles);
}

/// Snapshot rows `realization,time,particle,x`; pass `header = true` for the first block.
inline void write_snapshot_csv(std::ostream& os, const ParticleEnsemble& ensemble, std::uint64_t realization,
                               bool header) {
  if (header) os << "realization,time,particle,x\n";
  char buf[128];
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%zu,%.17g\n", static_cast<unsigned long long>(realization),
                  ensemble.clock(), k, ensemble.positions()[k]);
    os << buf;
  }
}

}  // namespace dkfd
