#pragma once

// Monte Carlo estimation of centered product moments
//
//   E[ prod_m (A_m - E A_m)^{j_m} ],
//
// where A_m = (rho_h(T_m), I_h phi_m)_h for the Dean-Kawasaki models and <mu^N_{T_m}, phi_m>
// for the particle system. Centering always uses the exact expectation, never the
// sample mean. Realization r draws from streams keyed by (seed, r), and per-realization
// statistics are reduced in index order, so results do not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dkfd/dk_dynamics.hpp"
#include "dkfd/heat_flow.hpp"
#include "dkfd/operators.hpp"
#include "dkfd/particles.hpp"
#include "dkfd/stats.hpp"
#include "dkfd/test_function.hpp"

namespace dkfd {

enum class Model { particles, dk, dk_linearised, dk_deterministic };

inline const char* to_string(Model m) {
  switch (m) {
    case Model::particles: return "particles";
    case Model::dk: return "dk";
    case Model::dk_linearised: return "dk-linearised";
    case Model::dk_deterministic: return "dk-deterministic";
  }
  return "?";
}

inline Model parse_model(const std::string& s) {
  if (s == "particles" || s == "brownian") return Model::particles;
  if (s == "dk") return Model::dk;
  if (s == "dk-linearised" || s == "dk-linearized" || s == "linearised") return Model::dk_linearised;
  if (s == "dk-deterministic" || s == "deterministic") return Model::dk_deterministic;
  throw std::invalid_argument("unknown model '" + s + "'");
}

inline DkModel dk_model_of(Model m) {
  switch (m) {
    case Model::dk: return DkModel::nonlinear;
    case Model::dk_linearised: return DkModel::linearised;
    case Model::dk_deterministic: return DkModel::deterministic;
    default: throw std::invalid_argument("dk_model_of: not a Dean-Kawasaki model");
  }
}

/// An observation: test function phi paired with the density at `time`.
struct Observable {
  double time;
  TestFunction phi;
};

/// A centered product moment: exponents[m] applies to observables[m].
struct MomentSpec {
  std::vector<Observable> observables;
  std::vector<int> exponents;

  int total_order() const {
    int j = 0;
    for (int e : exponents) j += e;
    return j;
  }

  void validate() const {
    if (observables.empty() || observables.size() != exponents.size()) {
      throw std::invalid_argument("MomentSpec: need one exponent per observable");
    }
    for (std::size_t m = 1; m < observables.size(); ++m) {
      if (observables[m].time < observables[m - 1].time) {
        throw std::invalid_argument("MomentSpec: observation times must be nondecreasing");
      }
    }
    for (int e : exponents) {
      if (e < 0) throw std::invalid_argument("MomentSpec: exponents must be nonnegative");
    }
    if (total_order() < 1) throw std::invalid_argument("MomentSpec: total order must be >= 1");
  }

  /// Identity used to check that two estimates refer to the same moment.
  std::string key() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t m = 0; m < observables.size(); ++m) {
      os << exponents[m] << '@' << observables[m].time << ':' << observables[m].phi.coefficient(0).real() << ':'
         << observables[m].phi.coefficient(1).real() << ';';
    }
    return os.str();
  }
};

struct MomentEstimate {
  double mean = 0.0;
  double stderr = 0.0;
  std::size_t realizations = 0;
  Model model = Model::particles;
  std::vector<int> exponents;
  std::string spec_key;
};

struct MomentDifference {
  double diff = 0.0;
  double combined_stderr = 0.0;
  bool significant = false;
};

/// |mean_a - mean_b| with combined standard error; significant when above 3 sigma.
inline MomentDifference moment_difference(const MomentEstimate& a, const MomentEstimate& b) {
  if (a.spec_key != b.spec_key || a.exponents != b.exponents) {
    throw std::invalid_argument("moment_difference: estimates refer to different moments");
  }
  MomentDifference d;
  d.diff = std::abs(a.mean - b.mean);
  d.combined_stderr = std::sqrt(a.stderr * a.stderr + b.stderr * b.stderr);
  d.significant = d.diff > 3.0 * d.combined_stderr;
  return d;
}

/// Composite Simpson rule on n uniform panels (n >= 1; an odd n ends with a 3/8 panel).
template <class F>
double composite_simpson(const F& f, double a, double b, long n) {
  if (n < 1) throw std::invalid_argument("composite_simpson: need at least one panel");
  const double h = (b - a) / static_cast<double>(n);
  if (n == 1) return 0.5 * h * (f(a) + f(b));
  long even = n % 2 == 0 ? n : n - 3;
  double s = 0.0;
  if (even > 0) {
    double acc = f(a) + f(a + even * h);
    for (long k = 1; k < even; ++k) acc += (k % 2 == 1 ? 4.0 : 2.0) * f(a + k * h);
    s += acc * h / 3.0;
  }
  if (n % 2 == 1) {
    const double x0 = a + even * h;
    s += 3.0 * h / 8.0 * (f(x0) + 3.0 * f(x0 + h) + 3.0 * f(x0 + 2 * h) + f(x0 + 3 * h));
  }
  return s;
}

/// N^-1 int_0^T (rhobar_h(t), |grad_h P_h^{T-t} I_h phi|^2)_h dt, Simpson on the dt lattice.
inline double dk_second_moment_oracle(const InitialPlacement& placement, const TestFunction& phi, double T,
                                      double dt) {
  if (!(T >= 0.0)) throw std::invalid_argument("dk_second_moment_oracle: T must be >= 0");
  if (T == 0.0) return 0.0;
  const long n = std::max(1L, static_cast<long>(std::llround(T / dt)));
  const GridFunction phi_h = interpolate(phi, placement.grid);
  DiscreteHeatPropagator prop(placement.grid);
  auto integrand = [&](double t) {
    GridFunction rho = placement.matched_density;
    prop.apply(rho, t);
    GridFunction flowed = phi_h;
    prop.apply(flowed, std::max(0.0, T - t));
    const auto g = apply_gradient(flowed);
    return inner_product(rho, dot(g, g));
  };
  return composite_simpson(integrand, 0.0, T, n) / static_cast<double>(placement.particles);
}

/// Shared configuration of a batch of Monte Carlo runs.
struct LabSetup {
  InitialPlacement placement;
  double dt = 1e-3;
  int workers = 1;
  bool paper_literal_bdf2 = false;
};

namespace detail {

template <class Job>
void parallel_for_realizations(std::size_t count, int workers, Job&& make_worker) {
  const int w = std::max(1, workers);
  if (w == 1 || count < 2) {
    auto worker = make_worker();
    for (std::size_t r = 0; r < count; ++r) worker(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
  constexpr std::size_t kChunk = 64;
  for (int t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      try {
        auto worker = make_worker();
        for (;;) {
          const std::size_t begin = next.fetch_add(kChunk);
          if (begin >= count) break;
          const std::size_t end = std::min(count, begin + kChunk);
          for (std::size_t r = begin; r < end; ++r) worker(r);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
        next.store(count);
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Raw centered observables, realization-major: value(r, m) = A_m(r) - E A_m.
struct ObservableSample {
  std::size_t realizations = 0;
  std::size_t observables = 0;
  std::vector<double> values;
  std::vector<double> expectations;
  std::vector<TrajectoryMonitor> monitors;

  double at(std::size_t r, std::size_t m) const { return values[r * observables + m]; }
};

/// Exact expectations E A_m under `model`.
inline std::vector<double> exact_expectations(const LabSetup& setup, const std::vector<Observable>& obs, Model model) {
  std::vector<double> e;
  e.reserve(obs.size());
  for (const auto& o : obs) {
    if (model == Model::particles) {
      e.push_back(expected_pairing(setup.placement, o.phi, o.time));
    } else {
      e.push_back(inner_product(expected_dk(setup.placement, o.time), interpolate(o.phi, setup.placement.grid)));
    }
  }
  return e;
}

/// Simulates M realizations of `model` and records every centered observable.
inline ObservableSample sample_observables(const LabSetup& setup, const std::vector<Observable>& obs, Model model,
                                           std::size_t M, std::uint64_t seed) {
  if (obs.empty()) throw std::invalid_argument("sample_observables: no observables");
  for (std::size_t m = 1; m < obs.size(); ++m) {
    if (obs[m].time < obs[m - 1].time) throw std::invalid_argument("sample_observables: times must be sorted");
  }
  ObservableSample out;
  out.realizations = M;
  out.observables = obs.size();
  out.values.assign(M * obs.size(), 0.0);
  out.expectations = exact_expectations(setup, obs, model);
  const std::size_t n_obs = obs.size();

  if (model == Model::particles) {
    std::vector<PeriodicTable> tables;
    for (const auto& o : obs) tables.emplace_back(o.phi);
    detail::parallel_for_realizations(M, setup.workers, [&] {
      return [&](std::size_t r) {
        ParticleEnsemble ens(setup.placement, seed, r);
        for (std::size_t m = 0; m < n_obs; ++m) {
          ens.advance_to(obs[m].time);
          out.values[r * n_obs + m] = pair_with(ens, tables[m]) - out.expectations[m];
        }
      };
    });
    return out;
  }

  SchemeConfig cfg;
  cfg.dt = setup.dt;
  cfg.model = dk_model_of(model);
  cfg.noise_seed = seed;
  cfg.paper_literal_bdf2 = setup.paper_literal_bdf2;
  std::vector<double> times;
  for (const auto& o : obs) times.push_back(o.time);
  const std::vector<long> steps = steps_for_times(times, cfg.dt);
  const long last = steps.back();
  std::shared_ptr<const MeanFieldAmplitude> mean_field;
  if (cfg.model == DkModel::linearised) {
    mean_field = std::make_shared<MeanFieldAmplitude>(setup.placement.matched_density, cfg.dt, last);
  }
  std::vector<GridFunction> phi_h;
  for (const auto& o : obs) phi_h.push_back(interpolate(o.phi, setup.placement.grid));
  out.monitors.resize(M);

  detail::parallel_for_realizations(M, setup.workers, [&] {
    auto scheme = std::make_shared<DkScheme>(setup.placement.grid, setup.placement.particles, cfg, mean_field);
    return [&, scheme](std::size_t r) {
      std::size_t next = 0;
      out.monitors[r] = scheme->simulate(setup.placement.matched_density, r, last,
                                         [&](long step, const GridFunction& rho) {
                                           while (next < n_obs && steps[next] == step) {
                                             out.values[r * n_obs + next] =
                                                 inner_product(rho, phi_h[next]) - out.expectations[next];
                                             ++next;
                                           }
                                         });
    };
  });
  return out;
}

/// Reduces a sample to the moment with the given exponents (one per observable).
inline MomentEstimate reduce_moment(const ObservableSample& sample, const std::vector<int>& exponents, Model model,
                                    const std::string& spec_key) {
  if (exponents.size() != sample.observables) throw std::invalid_argument("reduce_moment: exponent count mismatch");
  RunningStats st;
  for (std::size_t r = 0; r < sample.realizations; ++r) {
    double p = 1.0;
    for (std::size_t m = 0; m < sample.observables; ++m) {
      for (int k = 0; k < exponents[m]; ++k) p *= sample.at(r, m);
    }
    st.add(p);
  }
  MomentEstimate e;
  e.mean = st.mean();
  e.stderr = st.stderr_of_mean();
  e.realizations = sample.realizations;
  e.model = model;
  e.exponents = exponents;
  e.spec_key = spec_key;
  return e;
}

inline std::string moment_key(const std::vector<Observable>& obs, const std::vector<int>& exponents) {
  return MomentSpec{obs, exponents}.key();
}

/// Monte Carlo estimate of one centered moment from M realizations.
inline MomentEstimate estimate_moment(const LabSetup& setup, const MomentSpec& spec, Model model, std::size_t M,
                                      std::uint64_t seed) {
  spec.validate();
  if (M < 2) throw std::invalid_argument("estimate_moment: need at least two realizations");
  const ObservableSample s = sample_observables(setup, spec.observables, model, M, seed);
  return reduce_moment(s, spec.exponents, model, spec.key());
}

/// Several moments over the same observables from one set of realizations.
inline std::vector<MomentEstimate> estimate_moments(const LabSetup& setup, const std::vector<Observable>& obs,
                                                    const std::vector<std::vector<int>>& exponent_sets, Model model,
                                                    std::size_t M, std::uint64_t seed) {
  if (M < 2) throw std::invalid_argument("estimate_moments: need at least two realizations");
  for (const auto& e : exponent_sets) MomentSpec{obs, e}.validate();
  const ObservableSample s = sample_observables(setup, obs, model, M, seed);
  std::vector<MomentEstimate> out;
  for (const auto& e : exponent_sets) out.push_back(reduce_moment(s, e, model, moment_key(obs, e)));
  return out;
}

/// One row of the moment report.
struct MomentRow {
  std::string model;
  int j1 = 0, j2 = 0;
  double T1 = 0.0, T2 = 0.0, h = 0.0;
  long N = 0;
  std::size_t M = 0;
  double mean = 0.0, stderr = 0.0;
};

inline void write_moment_csv(std::ostream& os, const std::vector<MomentRow>& rows) {
  os << "model,j1,j2,T1,T2,h,N,M,mean,stderr\n";
  char buf[320];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%.17g,%.17g,%.17g,%ld,%zu,%.17g,%.17g\n", r.model.c_str(), r.j1, r.j2,
                  r.T1, r.T2, r.h, r.N, r.M, r.mean, r.stderr);
    os << buf;
  }
}

}  // namespace dkfd
