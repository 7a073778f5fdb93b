#pragma once

// Finite-difference Dean-Kawasaki dynamics on the periodic grid:
//
//   d rho_h = 1/2 Delta_h rho_h dt + N^-1/2 h^-d/2 sum_l D_l( sqrt(rho_h^+) dbeta_l )
//
// with D_l the centered difference and beta one standard Brownian motion per (node, axis).
// Time integration: Crank-Nicolson first step with explicit noise, then BDF2 with the
// two-level noise combination noise^{m,m+1} - 1/3 noise^{m-1,m}. Implicit solves are
// diagonal in Fourier space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dkfd/fourier.hpp"
#include "dkfd/grid.hpp"
#include "dkfd/heat_flow.hpp"
#include "dkfd/operators.hpp"
#include "dkfd/particles.hpp"
#include "dkfd/random.hpp"

namespace dkfd {

/// Raised when a trajectory produces NaN or Inf.
class NumericalFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class DkModel { nonlinear, linearised, deterministic };

inline const char* to_string(DkModel m) {
  switch (m) {
    case DkModel::nonlinear: return "dk";
    case DkModel::linearised: return "dk-linearised";
    case DkModel::deterministic: return "dk-deterministic";
  }
  return "?";
}

struct SchemeConfig {
  double dt = 1e-3;
  DkModel model = DkModel::nonlinear;
  std::uint64_t noise_seed = 0;
  /// Implicit BDF2 term (2/3) dt Delta_h instead of (1/3) dt Delta_h.
  bool paper_literal_bdf2 = false;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SchemeConfig: dt must be positive");
  }
};

struct DkState {
  GridFunction rho;
  GridFunction rho_prev;
  GridFunction noise_prev;
  double clock = 0.0;
  long step_index = 0;
  long particles = 1;

  static DkState initial(const GridFunction& rho0, long N) {
    if (N < 1) throw std::invalid_argument("DkState: N must be >= 1");
    return DkState{rho0, rho0, GridFunction(rho0.grid()), 0.0, 0, N};
  }
};

/// Divergence-form noise increment for per-(axis, node) Brownian increments dW[axis]:
///   out(x) = N^-1/2 h^-d/2 sum_l [F(x + h e_l) dW_l(x + h e_l) - F(x - h e_l) dW_l(x - h e_l)] / (2h),
/// with F = sqrt(rho^+).
inline GridFunction assemble_noise(const GridFunction& rho_for_amplitude, long N,
                                   std::span<const GridFunction> dW) {
  const Grid& g = rho_for_amplitude.grid();
  if (static_cast<int>(dW.size()) != g.dim()) throw std::invalid_argument("assemble_noise: need one increment field per axis");
  const double h = g.spacing();
  const double c = 1.0 / (std::sqrt(static_cast<double>(N) * g.cell_volume()) * 2.0 * h);
  GridFunction out(g);
  GridFunction flux(g);
  for (int a = 0; a < g.dim(); ++a) {
    dW[a].require_same_grid(rho_for_amplitude);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = rho_for_amplitude[i];
      flux[i] = (r > 0.0 ? std::sqrt(r) : 0.0) * dW[a][i];
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      out[i] += c * (flux[g.shifted(i, a, 1)] - flux[g.shifted(i, a, -1)]);
    }
  }
  return out;
}

inline GridFunction assemble_noise(const GridFunction& rho_for_amplitude, long N, const GridFunction& dW) {
  return assemble_noise(rho_for_amplitude, N, std::span<const GridFunction>(&dW, 1));
}

/// sqrt of the mean-field density at every step, shared read-only by linearised runs.
class MeanFieldAmplitude {
public:
  MeanFieldAmplitude(const GridFunction& rho0, double dt, long steps) {
    amplitude_.reserve(static_cast<std::size_t>(steps + 1));
    DiscreteHeatPropagator prop(rho0.grid());
    for (long m = 0; m <= steps; ++m) {
      GridFunction r = rho0;
      prop.apply(r, static_cast<double>(m) * dt);
      for (double& v : r.values()) v = v > 0.0 ? std::sqrt(v) : 0.0;
      amplitude_.push_back(std::move(r));
    }
  }
  long steps() const { return static_cast<long>(amplitude_.size()) - 1; }
  const GridFunction& at(long step) const {
    if (step < 0 || step > steps()) throw std::out_of_range("MeanFieldAmplitude: step outside the precomputed range");
    return amplitude_[static_cast<std::size_t>(step)];
  }

private:
  std::vector<GridFunction> amplitude_;
};

/// Running diagnostics of one trajectory.
struct TrajectoryMonitor {
  double sup_negative_norm = 0.0;
  double min_density = 0.0;
  double mass_drift = 0.0;
  double initial_mass = 0.0;
  bool started = false;

  void observe(const GridFunction& rho) {
    const double m = mass(rho);
    if (!started) {
      initial_mass = m;
      min_density = rho.min();
      started = true;
    }
    sup_negative_norm = std::max(sup_negative_norm, negative_part_norm(rho));
    min_density = std::min(min_density, rho.min());
    const double scale = std::abs(initial_mass) > 0.0 ? std::abs(initial_mass) : 1.0;
    mass_drift = std::max(mass_drift, std::abs(m - initial_mass) / scale);
  }

  bool any_negative() const { return min_density < 0.0; }
};

/// Time integrator for one grid, particle number and configuration. Holds FFT plans and
/// work buffers, so each worker thread owns its own instance.
class DkScheme {
public:
  DkScheme(Grid grid, long N, SchemeConfig cfg, std::shared_ptr<const MeanFieldAmplitude> mean_field = nullptr)
      : grid_(grid),
        N_(N),
        cfg_(cfg),
        mean_field_(std::move(mean_field)),
        transform_(grid),
        flux_(grid),
        increment_(grid.size()) {
    cfg_.validate();
    if (N < 1) throw std::invalid_argument("DkScheme: N must be >= 1");
    if (cfg_.model == DkModel::linearised && !mean_field_) {
      throw std::invalid_argument("DkScheme: the linearised model needs the mean-field trajectory");
    }
    const SpectralSymbol symbol(grid);
    const double dt = cfg_.dt;
    const double bdf2_weight = cfg_.paper_literal_bdf2 ? 2.0 / 3.0 : 1.0 / 3.0;
    first_solve_ = transform_.tabulate(
        [&](const std::array<int, 3>& xi) { return 1.0 / (1.0 + 0.25 * dt * symbol.laplacian_eigenvalue(xi)); });
    bdf2_solve_ = transform_.tabulate(
        [&](const std::array<int, 3>& xi) { return 1.0 / (1.0 + bdf2_weight * dt * symbol.laplacian_eigenvalue(xi)); });
  }

  const Grid& grid() const { return grid_; }
  const SchemeConfig& config() const { return cfg_; }

  /// rho^1 = rho^0 + (1/4 Delta_h rho^1 + 1/4 Delta_h rho^0) dt + noise(rho^0).
  void first_step(DkState& s, RandomStream& noise) {
    if (s.step_index != 0) throw std::logic_error("first_step: state has already been advanced");
    GridFunction& next = work_;
    next = apply_laplacian(s.rho);
    next *= 0.25 * cfg_.dt;
    next += s.rho;
    noise_increment(s, 0, noise, incr_);
    next += incr_;
    transform_.apply(next, first_solve_);
    s.rho_prev = s.rho;
    std::swap(s.rho, next);
    std::swap(s.noise_prev, incr_);
    finish_step(s);
  }

  /// rho^{m+1} = 4/3 rho^m - 1/3 rho^{m-1} + 2/3 dt (1/2 Delta_h) rho^{m+1}
  ///             - 1/3 noise(rho^{m-1}; [m-1, m]) + noise(rho^m; [m, m+1]).
  void bdf2_step(DkState& s, RandomStream& noise) {
    if (s.step_index < 1) throw std::logic_error("bdf2_step: needs one completed step");
    noise_increment(s, s.step_index, noise, incr_);
    GridFunction& next = work_;
    if (next.grid() != grid_) next = GridFunction(grid_);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      next[i] = (4.0 / 3.0) * s.rho[i] - (1.0 / 3.0) * s.rho_prev[i] - (1.0 / 3.0) * s.noise_prev[i] + incr_[i];
    }
    transform_.apply(next, bdf2_solve_);
    std::swap(s.rho_prev, s.rho);
    std::swap(s.rho, next);
    std::swap(s.noise_prev, incr_);
    finish_step(s);
  }

  void step(DkState& s, RandomStream& noise) {
    if (s.step_index == 0) {
      first_step(s, noise);
    } else {
      bdf2_step(s, noise);
    }
  }

  /// Runs from rho0 through `steps` steps; `observe(step, rho)` is called at step 0 and
  /// after every step. Returns the trajectory monitor.
  template <class Observer>
  TrajectoryMonitor simulate(const GridFunction& rho0, std::uint64_t realization, long steps, Observer&& observe) {
    RandomStream noise(cfg_.noise_seed, realization, Subsystem::dk_noise);
    DkState s = DkState::initial(rho0, N_);
    TrajectoryMonitor monitor;
    monitor.observe(s.rho);
    observe(0L, static_cast<const GridFunction&>(s.rho));
    for (long m = 0; m < steps; ++m) {
      step(s, noise);
      monitor.observe(s.rho);
      observe(s.step_index, static_cast<const GridFunction&>(s.rho));
    }
    return monitor;
  }

private:
  void noise_increment(const DkState& s, long step, RandomStream& noise, GridFunction& out) {
    if (out.grid() != grid_) out = GridFunction(grid_);
    std::fill(out.values().begin(), out.values().end(), 0.0);
    if (cfg_.model == DkModel::deterministic) {
      // The stream is still advanced so that all models consume it identically.
      for (int a = 0; a < grid_.dim(); ++a) noise.fill_normal(increment_);
      return;
    }
    const double h = grid_.spacing();
    const double c = 1.0 / (std::sqrt(static_cast<double>(N_) * grid_.cell_volume()) * 2.0 * h);
    const double sd = std::sqrt(cfg_.dt);
    const GridFunction* amplitude = cfg_.model == DkModel::linearised ? &mean_field_->at(step) : nullptr;
    for (int a = 0; a < grid_.dim(); ++a) {
      noise.fill_normal(increment_, sd);
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        double f;
        if (amplitude != nullptr) {
          f = (*amplitude)[i];
        } else {
          const double r = s.rho[i];
          f = r > 0.0 ? std::sqrt(r) : 0.0;
        }
        flux_[i] = f * increment_[i];
      }
      if (grid_.dim() == 1) {
        const std::size_t L = grid_.size();
        out[0] += c * (flux_[1] - flux_[L - 1]);
        for (std::size_t i = 1; i + 1 < L; ++i) out[i] += c * (flux_[i + 1] - flux_[i - 1]);
        out[L - 1] += c * (flux_[0] - flux_[L - 2]);
      } else {
        for (std::size_t i = 0; i < grid_.size(); ++i) {
          out[i] += c * (flux_[grid_.shifted(i, a, 1)] - flux_[grid_.shifted(i, a, -1)]);
        }
      }
    }
  }

  void finish_step(DkState& s) {
    ++s.step_index;
    s.clock = static_cast<double>(s.step_index) * cfg_.dt;
    if (!s.rho.all_finite()) {
      throw NumericalFailure("Dean-Kawasaki trajectory produced a non-finite density at step " +
                             std::to_string(s.step_index));
    }
  }

  Grid grid_;
  long N_;
  SchemeConfig cfg_;
  std::shared_ptr<const MeanFieldAmplitude> mean_field_;
  FourierMultiplier transform_;
  std::vector<double> first_solve_;
  std::vector<double> bdf2_solve_;
  GridFunction flux_;
  GridFunction work_{Grid::line(4)};
  GridFunction incr_{Grid::line(4)};
  std::vector<double> increment_;
};

/// Converts record times to step indices; each time must be a multiple of dt to 1e-12.
inline std::vector<long> steps_for_times(const std::vector<double>& times, double dt) {
  std::vector<long> steps;
  steps.reserve(times.size());
  double last = -1.0;
  for (double t : times) {
    if (!(t >= 0.0) || t < last) throw std::invalid_argument("record times must be nonnegative and sorted");
    last = t;
    const double ratio = t / dt;
    const double n = std::round(ratio);
    if (std::abs(t - n * dt) > 1e-12 * std::max(1.0, t)) {
      throw std::invalid_argument("record time " + std::to_string(t) + " is not a multiple of dt = " +
                                  std::to_string(dt));
    }
    steps.push_back(static_cast<long>(n));
  }
  return steps;
}

struct Trajectory {
  std::vector<std::pair<double, GridFunction>> snapshots;
  TrajectoryMonitor monitor;
};

/// One Dean-Kawasaki trajectory from the matched initial density of `placement`.
inline Trajectory run_trajectory(const InitialPlacement& placement, const SchemeConfig& cfg,
                                 const std::vector<double>& record_times, std::uint64_t realization = 0) {
  cfg.validate();
  const std::vector<long> steps = steps_for_times(record_times, cfg.dt);
  const long last = steps.empty() ? 0 : steps.back();
  std::shared_ptr<const MeanFieldAmplitude> mean_field;
  if (cfg.model == DkModel::linearised) {
    mean_field = std::make_shared<MeanFieldAmplitude>(placement.matched_density, cfg.dt, last);
  }
  DkScheme scheme(placement.grid, placement.particles, cfg, mean_field);
  Trajectory out;
  std::size_t next = 0;
  out.monitor = scheme.simulate(placement.matched_density, realization, last, [&](long step, const GridFunction& rho) {
    while (next < steps.size() && steps[next] == step) {
      out.snapshots.emplace_back(record_times[next], rho);
      ++next;
    }
  });
  return out;
}

/// E[rho_h(t)]: the discrete heat flow of the matched initial density.
inline GridFunction expected_dk(const InitialPlacement& placement, double t) {
  return discrete_forward_flow(placement.matched_density, t);
}

struct NegativePartReport {
  double mean_sup_negative_norm = 0.0;
  double max_sup_negative_norm = 0.0;
  double fraction_negative = 0.0;
  /// exp(-rho_min sqrt(N h^d) / sqrt(rho_max)), the shape of the decay bound without constants.
  double envelope = 0.0;
  /// h >= N^(-1/d).
  bool scaling_regime = false;
  std::size_t realizations = 0;
};

inline NegativePartReport negative_part_report(std::span<const TrajectoryMonitor> monitors, long N, const Grid& grid,
                                               double rho_min, double rho_max) {
  if (monitors.empty()) throw std::invalid_argument("negative_part_report: need at least one realization");
  NegativePartReport r;
  r.realizations = monitors.size();
  std::size_t negative = 0;
  for (const auto& m : monitors) {
    r.mean_sup_negative_norm += m.sup_negative_norm;
    r.max_sup_negative_norm = std::max(r.max_sup_negative_norm, m.sup_negative_norm);
    if (m.any_negative()) ++negative;
  }
  r.mean_sup_negative_norm /= static_cast<double>(monitors.size());
  r.fraction_negative = static_cast<double>(negative) / static_cast<double>(monitors.size());
  const double nh = static_cast<double>(N) * grid.cell_volume();
  r.envelope = std::exp(-rho_min * std::sqrt(nh) / std::sqrt(rho_max));
  r.scaling_regime = grid.spacing() >= std::pow(static_cast<double>(N), -1.0 / grid.dim());
  return r;
}

/// Monitor rows `realization,sup_neg_norm,min_density,mass_drift`.
inline void write_monitor_csv(std::ostream& os, std::span<const TrajectoryMonitor> monitors) {
  os << "realization,sup_neg_norm,min_density,mass_drift\n";
  char buf[160];
  for (std::size_t r = 0; r < monitors.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", r, monitors[r].sup_negative_norm,
                  monitors[r].min_density, monitors[r].mass_drift);
    os << buf;
  }
}

}  // namespace dkfd
