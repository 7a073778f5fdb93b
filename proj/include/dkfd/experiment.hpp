#pragma once

// Experiment configuration, parameter sweeps, convergence reports and figure presets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dkfd/dk_dynamics.hpp"
#include "dkfd/heat_flow.hpp"
#include "dkfd/moments.hpp"
#include "dkfd/particles.hpp"
#include "dkfd/plot.hpp"
#include "dkfd/random.hpp"
#include "dkfd/stats.hpp"
#include "dkfd/test_function.hpp"

namespace dkfd {

/// Raised for invalid experiment configurations (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

/// Flat `key = value` text; `#` starts a comment. Later keys override earlier ones.
inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

enum class Profile { bump6, bump8, cusp };

inline const char* to_string(Profile p) {
  switch (p) {
    case Profile::bump6: return "bump6";
    case Profile::bump8: return "bump8";
    case Profile::cusp: return "cusp";
  }
  return "?";
}

inline Profile parse_profile(const std::string& s) {
  if (s == "bump6") return Profile::bump6;
  if (s == "bump8") return Profile::bump8;
  if (s == "cusp") return Profile::cusp;
  throw ConfigError("unknown rho0 profile '" + s + "' (bump6, bump8, cusp)");
}

inline std::function<double(double)> profile_function(Profile p) {
  switch (p) {
    case Profile::bump6: return profiles::bump6;
    case Profile::bump8: return profiles::bump8;
    case Profile::cusp: return profiles::cusp;
  }
  throw ConfigError("unknown profile");
}

/// Test-function pairs: `trig` is phi1 = cos 3x, phi2 = cos 3x + sin x; `profile` is
/// phi1 = rho0, phi2 = |d/dx P^{T1/4} phi1|^2.
enum class TestFamily { trig, profile };

/// `mass`: particle-matched density of unit mass. `raw`: the profile formula on the grid.
enum class Normalization { mass, raw };

struct MomentOrder {
  int j1 = 0;
  int j2 = 0;
  int total() const { return j1 + j2; }
  bool operator==(const MomentOrder&) const = default;
};

inline std::vector<MomentOrder> parse_moments(const std::string& s) {
  std::vector<MomentOrder> out;
  for (const auto& item : split(s, ';')) {
    if (item.empty()) continue;
    const auto parts = split(item, ',');
    if (parts.size() != 2) throw ConfigError("moment '" + item + "' must be j1,j2");
    MomentOrder m{std::stoi(parts[0]), std::stoi(parts[1])};
    if (m.j1 < 0 || m.j2 < 0 || m.total() < 1) throw ConfigError("moment '" + item + "' needs j1 + j2 >= 1");
    out.push_back(m);
  }
  return out;
}

template <class T, class F>
std::vector<T> parse_list(const std::string& s, F&& convert) {
  std::vector<T> out;
  for (const auto& item : split(s, ',')) {
    if (!item.empty()) out.push_back(convert(item));
  }
  return out;
}

struct ExperimentConfig {
  std::string name = "custom";
  Profile rho0 = Profile::bump6;
  Normalization normalization = Normalization::mass;
  TestFamily test_functions = TestFamily::trig;
  std::vector<long> N{8192};
  std::vector<int> L{64};
  double dt = 1e-3;
  double T1 = 0.4;
  double T2 = 0.32;
  std::vector<MomentOrder> moments{{2, 0}, {1, 1}};
  std::vector<Model> models{Model::particles, Model::dk};
  std::size_t M = 50000;
  std::size_t M_third = 200000;
  std::uint64_t seed = 20240601;
  int workers = 1;
  bool paper_literal_bdf2 = false;
  bool normalize_l2 = false;
  bool common_random_numbers = false;
  std::vector<double> record_times{0.4};
  std::string output = "out";
};

inline ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv,
                                        ExperimentConfig cfg = ExperimentConfig{}) {
  auto to_bool = [](const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected a boolean, got '" + v + "'");
  };
  for (const auto& [key, value] : kv) {
    try {
      if (key == "name" || key == "preset") cfg.name = value;
      else if (key == "rho0") cfg.rho0 = parse_profile(value);
      else if (key == "normalization") {
        if (value == "mass") cfg.normalization = Normalization::mass;
        else if (value == "raw") cfg.normalization = Normalization::raw;
        else throw ConfigError("normalization must be mass or raw");
      } else if (key == "test_functions") {
        if (value == "trig") cfg.test_functions = TestFamily::trig;
        else if (value == "profile") cfg.test_functions = TestFamily::profile;
        else throw ConfigError("test_functions must be trig or profile");
      } else if (key == "N") cfg.N = parse_list<long>(value, [](const std::string& s) { return std::stol(s); });
      else if (key == "L") cfg.L = parse_list<int>(value, [](const std::string& s) { return std::stoi(s); });
      else if (key == "dt") cfg.dt = std::stod(value);
      else if (key == "T1") cfg.T1 = std::stod(value);
      else if (key == "T2") cfg.T2 = std::stod(value);
      else if (key == "moments") cfg.moments = parse_moments(value);
      else if (key == "models") {
        cfg.models = parse_list<Model>(value, [](const std::string& s) { return parse_model(s); });
      } else if (key == "M") cfg.M = std::stoul(value);
      else if (key == "M_third") cfg.M_third = std::stoul(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "workers") cfg.workers = std::stoi(value);
      else if (key == "paper_literal_bdf2") cfg.paper_literal_bdf2 = to_bool(value);
      else if (key == "normalize_l2") cfg.normalize_l2 = to_bool(value);
      else if (key == "common_random_numbers") cfg.common_random_numbers = to_bool(value);
      else if (key == "record_times") {
        cfg.record_times = parse_list<double>(value, [](const std::string& s) { return std::stod(s); });
      } else if (key == "output") cfg.output = value;
      else throw ConfigError("unknown key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad value for '" + key + "': '" + value + "'");
    }
  }
  return cfg;
}

inline void write_config(std::ostream& os, const ExperimentConfig& c) {
  auto join = [](const auto& xs, auto&& fmt) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
    return s;
  };
  auto num = [](double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return std::string(b);
  };
  os << "name = " << c.name << "\n";
  os << "rho0 = " << to_string(c.rho0) << "\n";
  os << "normalization = " << (c.normalization == Normalization::mass ? "mass" : "raw") << "\n";
  os << "test_functions = " << (c.test_functions == TestFamily::trig ? "trig" : "profile") << "\n";
  os << "N = " << join(c.N, [](long v) { return std::to_string(v); }) << "\n";
  os << "L = " << join(c.L, [](int v) { return std::to_string(v); }) << "\n";
  os << "dt = " << num(c.dt) << "\nT1 = " << num(c.T1) << "\nT2 = " << num(c.T2) << "\n";
  std::string m;
  for (std::size_t i = 0; i < c.moments.size(); ++i) {
    m += (i ? ";" : "") + std::to_string(c.moments[i].j1) + "," + std::to_string(c.moments[i].j2);
  }
  os << "moments = " << m << "\n";
  os << "models = " << join(c.models, [](Model v) { return std::string(to_string(v)); }) << "\n";
  os << "M = " << c.M << "\nM_third = " << c.M_third << "\nseed = " << c.seed << "\n";
  os << "workers = " << c.workers << "\n";
  os << "paper_literal_bdf2 = " << (c.paper_literal_bdf2 ? "true" : "false") << "\n";
  os << "normalize_l2 = " << (c.normalize_l2 ? "true" : "false") << "\n";
  os << "common_random_numbers = " << (c.common_random_numbers ? "true" : "false") << "\n";
  os << "record_times = " << join(c.record_times, num) << "\n";
  os << "output = " << c.output << "\n";
}

/// h below this is flagged: the finite-difference error no longer dominates the time error.
inline const double kFineGridThreshold = kTwoPi / 128.0;

struct Diagnostics {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  bool ok() const { return errors.empty(); }
};

inline bool on_lattice(double t, double dt) {
  return std::abs(t - std::round(t / dt) * dt) <= 1e-12 * std::max(1.0, t);
}

/// Checks everything a run would reject, before any simulation starts.
inline Diagnostics validate(const ExperimentConfig& c) {
  Diagnostics d;
  if (!(c.dt > 0.0)) d.errors.push_back("dt must be positive");
  if (c.N.empty()) d.errors.push_back("N list is empty");
  if (c.L.empty()) d.errors.push_back("L list is empty");
  if (c.workers < 1) d.errors.push_back("workers must be >= 1");
  for (double t : {c.T1, c.T2}) {
    if (!(t >= 0.0)) d.errors.push_back("observation times must be >= 0");
  }
  if (c.dt > 0.0) {
    for (double t : {c.T1, c.T2}) {
      if (t >= 0.0 && !on_lattice(t, c.dt)) {
        d.errors.push_back("time " + std::to_string(t) + " is not a multiple of dt");
      }
    }
    for (double t : c.record_times) {
      if (!(t >= 0.0) || !on_lattice(t, c.dt)) {
        d.errors.push_back("record time " + std::to_string(t) + " is not a nonnegative multiple of dt");
      }
    }
    if (d.errors.empty()) {
      const long steps = std::lround(std::max(c.T1, c.T2) / c.dt);
      d.notes.push_back("time lattice ok (" + std::to_string(steps) + " steps)");
    }
  }
  for (long n : c.N) {
    if (n < 1) d.errors.push_back("N must be >= 1");
  }
  for (int L : c.L) {
    if (L < 4 || L % 2 != 0) {
      d.errors.push_back("L = " + std::to_string(L) + " must be even and >= 4");
      continue;
    }
    const double h = kTwoPi / L;
    if (h < kFineGridThreshold * (1.0 - 1e-12)) {
      d.warnings.push_back("h = " + std::to_string(h) + " is below 2 pi 2^-7; the time-stepping error may dominate");
    }
    for (long n : c.N) {
      if (c.normalization == Normalization::mass && n < L) {
        d.errors.push_back("N = " + std::to_string(n) + " is smaller than the " + std::to_string(L) +
                           " grid nodes; particles cannot be placed");
      }
      if (h < std::pow(static_cast<double>(n), -1.0)) {
        d.warnings.push_back("L = " + std::to_string(L) + ", N = " + std::to_string(n) +
                             ": outside the scaling regime h >= N^-1");
      }
    }
  }
  for (const auto& m : c.moments) {
    if (m.total() < 1) d.errors.push_back("moment orders need j1 + j2 >= 1");
  }
  if (c.M < 2) d.errors.push_back("M must be >= 2");
  if (c.normalization == Normalization::raw &&
      std::find(c.models.begin(), c.models.end(), Model::particles) != c.models.end()) {
    d.errors.push_back("raw normalization has no particle counterpart; drop 'particles' from models");
  }
  return d;
}

inline void write_diagnostics(std::ostream& os, const Diagnostics& d) {
  for (const auto& e : d.errors) os << "error: " << e << "\n";
  for (const auto& w : d.warnings) os << "warning: " << w << "\n";
  for (const auto& n : d.notes) os << "ok: " << n << "\n";
}

/// phi1, phi2 for a configuration.
inline std::pair<TestFunction, TestFunction> make_test_functions(const ExperimentConfig& c) {
  TestFunction phi1 = TestFunction::cosine(3);
  TestFunction phi2 = TestFunction::from_closure([](double x) { return std::cos(3.0 * x) + std::sin(x); });
  if (c.test_functions == TestFamily::profile) {
    phi1 = TestFunction::from_closure(profile_function(c.rho0));
    phi2 = gradient_squared_after_flow(phi1, c.T1 / 4.0);
  }
  if (c.normalize_l2) {
    phi1 = phi1.normalized_l2();
    phi2 = phi2.normalized_l2();
  }
  return {phi1, phi2};
}

/// Observables sorted by time, plus the exponent vector for (j1, j2).
struct TwoTimeObservables {
  std::vector<Observable> observables;
  bool first_is_phi1 = false;

  std::vector<int> exponents(const MomentOrder& m) const {
    return first_is_phi1 ? std::vector<int>{m.j1, m.j2} : std::vector<int>{m.j2, m.j1};
  }
};

inline TwoTimeObservables two_time_observables(const TestFunction& phi1, double T1, const TestFunction& phi2,
                                               double T2) {
  TwoTimeObservables o;
  o.first_is_phi1 = T1 < T2;
  if (o.first_is_phi1) {
    o.observables = {{T1, phi1}, {T2, phi2}};
  } else {
    o.observables = {{T2, phi2}, {T1, phi1}};
  }
  return o;
}

inline InitialPlacement make_placement(const ExperimentConfig& c, int L, long N) {
  return place_particles(profile_function(c.rho0), Grid::line(L), N);
}

/// Deterministic per-row, per-model seed.
inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t row, Model model, bool common_random_numbers) {
  const std::uint64_t tag =
      common_random_numbers && model != Model::particles ? 0 : static_cast<std::uint64_t>(model) + 1;
  return splitmix64(splitmix64(seed ^ (0x9E3779B97F4A7C15ull * (row + 1))) ^ tag);
}

enum class SweepAxis { h, N };

struct ConvergenceRow {
  double value = 0.0;
  double diff = 0.0;
  double stderr = 0.0;
  bool significant = false;
};

/// |model - particles| along a sweep, with a log-log slope over the 3-sigma-significant rows.
struct ConvergenceReport {
  std::string model;
  MomentOrder order;
  std::vector<ConvergenceRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();
  /// Two standard errors of the fitted slope.
  double half_width = std::numeric_limits<double>::quiet_NaN();
  std::size_t significant_rows = 0;
  bool noise_limited = true;
  /// Fit over every row with a nonzero difference, regardless of significance.
  double slope_all_rows = std::numeric_limits<double>::quiet_NaN();
  double half_width_all_rows = std::numeric_limits<double>::quiet_NaN();
};

inline ConvergenceReport fit_convergence(std::string model, MomentOrder order, std::vector<ConvergenceRow> rows) {
  ConvergenceReport r;
  r.model = std::move(model);
  r.order = order;
  r.rows = std::move(rows);
  std::vector<double> xs, ys, xa, ya;
  for (const auto& row : r.rows) {
    if (row.significant) {
      xs.push_back(row.value);
      ys.push_back(row.diff);
    }
    if (row.diff > 0.0 && row.value > 0.0) {
      xa.push_back(row.value);
      ya.push_back(row.diff);
    }
  }
  r.significant_rows = xs.size();
  if (xs.size() >= 3) {
    const LineFit f = fit_loglog(xs, ys);
    r.slope = f.slope;
    r.half_width = 2.0 * f.slope_stderr;
    r.noise_limited = false;
  }
  if (xa.size() >= 2) {
    const LineFit f = fit_loglog(xa, ya);
    r.slope_all_rows = f.slope;
    r.half_width_all_rows = 2.0 * f.slope_stderr;
  }
  return r;
}

struct SweepResult {
  SweepAxis axis = SweepAxis::h;
  std::vector<MomentRow> moment_rows;
  std::vector<ConvergenceReport> reports;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs every model at every sweep value and compares each DK model with the particles.
inline SweepResult sweep(const ExperimentConfig& c, SweepAxis axis, const ProgressFn& progress = {}) {
  const Diagnostics d = validate(c);
  if (!d.ok()) throw ConfigError(d.errors.front());
  if (std::find(c.models.begin(), c.models.end(), Model::particles) == c.models.end()) {
    throw ConfigError("a sweep needs 'particles' among the models as the reference");
  }
  const auto [phi1, phi2] = make_test_functions(c);
  const TwoTimeObservables obs = two_time_observables(phi1, c.T1, phi2, c.T2);
  std::vector<std::vector<int>> exps;
  bool third = false;
  for (const auto& m : c.moments) {
    exps.push_back(obs.exponents(m));
    third = third || m.total() >= 3;
  }
  const std::size_t M = third ? std::max(c.M, c.M_third) : c.M;

  std::vector<std::pair<int, long>> points;
  if (axis == SweepAxis::h) {
    if (c.N.size() != 1) throw ConfigError("an h sweep takes a single N");
    for (int L : c.L) points.emplace_back(L, c.N.front());
  } else {
    if (c.L.size() != 1) throw ConfigError("an N sweep takes a single L");
    for (long n : c.N) points.emplace_back(c.L.front(), n);
  }

  SweepResult out;
  out.axis = axis;
  // estimates[point][model][moment]
  std::vector<std::vector<std::vector<MomentEstimate>>> est(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto [L, N] = points[p];
    const InitialPlacement placement = make_placement(c, L, N);
    const LabSetup setup{placement, c.dt, c.workers, c.paper_literal_bdf2};
    for (Model model : c.models) {
      if (progress) {
        progress(std::string("L=") + std::to_string(L) + " N=" + std::to_string(N) + " model=" + to_string(model));
      }
      const auto e = estimate_moments(setup, obs.observables, exps, model, M,
                                      derived_seed(c.seed, p, model, c.common_random_numbers));
      for (std::size_t k = 0; k < c.moments.size(); ++k) {
        out.moment_rows.push_back(MomentRow{to_string(model), c.moments[k].j1, c.moments[k].j2, c.T1, c.T2,
                                            kTwoPi / L, N, M, e[k].mean, e[k].stderr});
      }
      est[p].push_back(e);
    }
  }
  const std::size_t ref = static_cast<std::size_t>(
      std::find(c.models.begin(), c.models.end(), Model::particles) - c.models.begin());
  for (std::size_t mi = 0; mi < c.models.size(); ++mi) {
    if (mi == ref) continue;
    for (std::size_t k = 0; k < c.moments.size(); ++k) {
      std::vector<ConvergenceRow> rows;
      for (std::size_t p = 0; p < points.size(); ++p) {
        const auto diff = moment_difference(est[p][mi][k], est[p][ref][k]);
        const double value = axis == SweepAxis::h ? kTwoPi / points[p].first : static_cast<double>(points[p].second);
        rows.push_back({value, diff.diff, diff.combined_stderr, diff.significant});
      }
      out.reports.push_back(fit_convergence(to_string(c.models[mi]), c.moments[k], std::move(rows)));
    }
  }
  return out;
}

inline void write_convergence_csv(std::ostream& os, const SweepResult& r) {
  os << (r.axis == SweepAxis::h ? "h" : "N") << ",model,j1,j2,diff,stderr,significant\n";
  char buf[256];
  for (const auto& rep : r.reports) {
    for (const auto& row : rep.rows) {
      std::snprintf(buf, sizeof buf, "%.17g,%s,%d,%d,%.17g,%.17g,%d\n", row.value, rep.model.c_str(), rep.order.j1,
                    rep.order.j2, row.diff, row.stderr, row.significant ? 1 : 0);
      os << buf;
    }
  }
}

inline void write_slope_csv(std::ostream& os, const std::vector<ConvergenceReport>& reports) {
  os << "model,j1,j2,significant_rows,slope,half_width,status,slope_all_rows,half_width_all_rows\n";
  char buf[320];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%zu,%.6g,%.6g,%s,%.6g,%.6g\n", r.model.c_str(), r.order.j1, r.order.j2,
                  r.significant_rows, r.slope, r.half_width, r.noise_limited ? "noise-limited" : "fitted",
                  r.slope_all_rows, r.half_width_all_rows);
    os << buf;
  }
}

/// Reads back a convergence CSV written by write_convergence_csv.
inline std::vector<ConvergenceReport> read_convergence_csv(std::istream& is, SweepAxis* axis = nullptr) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty convergence table");
  const auto header = split(trim(line), ',');
  if (header.size() != 7 || (header[0] != "h" && header[0] != "N")) throw ConfigError("not a convergence table");
  if (axis) *axis = header[0] == "h" ? SweepAxis::h : SweepAxis::N;
  std::vector<std::pair<std::pair<std::string, MomentOrder>, std::vector<ConvergenceRow>>> groups;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 7) throw ConfigError("malformed convergence row: " + line);
    const std::pair<std::string, MomentOrder> key{f[1], MomentOrder{std::stoi(f[2]), std::stoi(f[3])}};
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = groups.end() - 1;
    }
    it->second.push_back({std::stod(f[0]), std::stod(f[4]), std::stod(f[5]), f[6] == "1"});
  }
  std::vector<ConvergenceReport> out;
  for (auto& g : groups) out.push_back(fit_convergence(g.first.first, g.first.second, std::move(g.second)));
  return out;
}

inline std::vector<MomentRow> read_moment_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != "model,j1,j2,T1,T2,h,N,M,mean,stderr") {
    throw ConfigError("not a moment table");
  }
  std::vector<MomentRow> rows;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 10) throw ConfigError("malformed moment row: " + line);
    rows.push_back(MomentRow{f[0], std::stoi(f[1]), std::stoi(f[2]), std::stod(f[3]), std::stod(f[4]),
                             std::stod(f[5]), std::stol(f[6]), static_cast<std::size_t>(std::stoull(f[7])),
                             std::stod(f[8]), std::stod(f[9])});
  }
  return rows;
}

/// Log-log plot of a convergence table; the plot is computed from the CSV text only.
inline void plot_convergence_csv(const std::string& csv_path, const std::string& svg_path, const std::string& title) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot read " + csv_path);
  SweepAxis axis = SweepAxis::h;
  const auto reports = read_convergence_csv(in, &axis);
  Plot plot;
  plot.title = title;
  plot.x_label = axis == SweepAxis::h ? "h" : "N";
  plot.y_label = "|M_model - M_particles|";
  plot.log_x = plot.log_y = true;
  for (const auto& r : reports) {
    Series s;
    s.label = r.model + " (" + std::to_string(r.order.j1) + "," + std::to_string(r.order.j2) + ")";
    for (const auto& row : r.rows) {
      if (row.diff > 0.0) {
        s.x.push_back(row.value);
        s.y.push_back(row.diff);
      }
    }
    s.dashed = r.model == "dk-linearised";
    plot.series.push_back(std::move(s));
  }
  std::ofstream out(svg_path);
  write_svg(out, plot);
}

/// Linear plot of the numeric columns of a `x,...` table against its first column.
inline void plot_profile_csv(const std::string& csv_path, const std::string& svg_path, const std::string& title) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot read " + csv_path);
  std::string line;
  std::getline(in, line);
  const auto header = split(trim(line), ',');
  Plot plot;
  plot.title = title;
  plot.x_label = header.empty() ? "x" : header[0];
  plot.y_label = "";
  for (std::size_t k = 1; k < header.size(); ++k) plot.series.push_back(Series{header[k], {}, {}, false});
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    for (std::size_t k = 1; k < f.size() && k < header.size(); ++k) {
      plot.series[k - 1].x.push_back(std::stod(f[0]));
      plot.series[k - 1].y.push_back(std::stod(f[k]));
    }
  }
  std::ofstream out(svg_path);
  write_svg(out, plot);
}

enum class Scale { desk, paper };

inline Scale parse_scale(const std::string& s) {
  if (s == "desk") return Scale::desk;
  if (s == "paper") return Scale::paper;
  throw ConfigError("scale must be desk or paper");
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig2-sample", "fig3-conv-h", "fig4-sample", "fig5-conv-n",
                                              "fig6-linearised"};
  return names;
}

/// Full preset name for a short alias (fig2 .. fig6); other names pass through.
inline std::string canonical_preset(const std::string& name) {
  for (const auto& n : preset_names()) {
    if (n.rfind(name + "-", 0) == 0) return n;
  }
  return name;
}

inline std::vector<int> dyadic_L(int kmin, int kmax) {
  std::vector<int> out;
  for (int k = kmin; k <= kmax; ++k) out.push_back(1 << k);
  return out;
}

/// One panel of a preset: a configuration plus what to run with it.
struct PresetPanel {
  std::string tag;
  ExperimentConfig config;
  enum class Kind { sample, sweep_h, sweep_n } kind = Kind::sweep_h;
};

inline std::vector<PresetPanel> preset_panels(const std::string& preset, Scale scale) {
  const std::string name = canonical_preset(preset);
  const bool desk = scale == Scale::desk;
  std::vector<PresetPanel> out;
  ExperimentConfig base;
  base.name = name;
  base.dt = 1e-3;
  base.T1 = 0.4;
  base.T2 = 0.32;
  if (name == "fig2-sample") {
    ExperimentConfig c = base;
    c.rho0 = Profile::cusp;
    c.N = {8137};
    c.L = {128};
    c.record_times = {0.4};
    out.push_back({"cusp", c, PresetPanel::Kind::sample});
  } else if (name == "fig4-sample") {
    ExperimentConfig c = base;
    c.rho0 = Profile::bump6;
    c.N = {8211};
    c.L = {128};
    c.record_times = {0.4};
    out.push_back({"bump6", c, PresetPanel::Kind::sample});
  } else if (name == "fig3-conv-h") {
    ExperimentConfig a = base;
    a.rho0 = Profile::bump6;
    a.N = {desk ? 8192L : 8211L};
    a.L = desk ? dyadic_L(3, 6) : dyadic_L(3, 7);
    a.moments = {{1, 0}, {2, 0}, {1, 1}, {2, 1}};
    a.M = desk ? 50000 : 200000;
    a.M_third = desk ? 50000 : 200000;
    out.push_back({"bump6", a, PresetPanel::Kind::sweep_h});
    ExperimentConfig b = a;
    b.rho0 = Profile::cusp;
    b.N = {desk ? 8192L : 524291L};
    out.push_back({"cusp", b, PresetPanel::Kind::sweep_h});
  } else if (name == "fig5-conv-n") {
    ExperimentConfig c = base;
    c.rho0 = Profile::bump6;
    c.L = {64};
    c.N = desk ? std::vector<long>{1024, 2048, 4096, 8192, 16384}
               : std::vector<long>{1024, 2048, 4096, 8192, 16384, 32768, 65536};
    c.moments = {{1, 0}, {2, 0}, {1, 1}, {2, 1}};
    c.M = desk ? 50000 : 200000;
    c.M_third = c.M;
    out.push_back({"bump6", c, PresetPanel::Kind::sweep_n});
  } else if (name == "fig6-linearised") {
    ExperimentConfig c = base;
    c.rho0 = Profile::bump8;
    c.T2 = 0.2;
    c.test_functions = TestFamily::profile;
    c.models = {Model::particles, Model::dk, Model::dk_linearised};
    c.moments = {{2, 0}, {2, 1}};
    c.L = desk ? dyadic_L(3, 5) : dyadic_L(3, 7);
    c.M = desk ? 200000 : 1000000;
    c.M_third = c.M;
    c.N = {2011};
    out.push_back({"N2011", c, PresetPanel::Kind::sweep_h});
    if (!desk) {
      c.N = {4096};
      out.push_back({"N4096", c, PresetPanel::Kind::sweep_h});
    }
    ExperimentConfig s = c;
    s.N = {2011};
    s.L = {128};
    s.record_times = {0.4};
    out.push_back({"sample", s, PresetPanel::Kind::sample});
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return out;
}

/// Writes `x,rho0,mean_field,<model samples...>` and `x,phi1,phi2` tables for one panel.
inline void write_sample_tables(const ExperimentConfig& c, const std::string& stem) {
  const int L = c.L.front();
  const long N = c.N.front();
  const InitialPlacement placement = make_placement(c, L, N);
  const Grid& g = placement.grid;
  const double T = c.record_times.back();
  const GridFunction mean = expected_dk(placement, T);
  std::vector<std::pair<std::string, GridFunction>> samples;
  for (Model m : c.models) {
    if (m == Model::particles) continue;
    SchemeConfig sc;
    sc.dt = c.dt;
    sc.model = dk_model_of(m);
    sc.noise_seed = derived_seed(c.seed, 0, m, c.common_random_numbers);
    sc.paper_literal_bdf2 = c.paper_literal_bdf2;
    samples.emplace_back(to_string(m), run_trajectory(placement, sc, {T}).snapshots.back().second);
  }
  {
    std::ofstream os(stem + "_density.csv");
    os << "x,rho0,mean_field";
    for (const auto& s : samples) os << "," << s.first;
    os << "\n";
    char buf[64];
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", g.coordinate(static_cast<int>(i)));
      os << buf;
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g", placement.matched_density[i], mean[i]);
      os << buf;
      for (const auto& s : samples) {
        std::snprintf(buf, sizeof buf, ",%.17g", s.second[i]);
        os << buf;
      }
      os << "\n";
    }
  }
  {
    const auto [phi1, phi2] = make_test_functions(c);
    std::ofstream os(stem + "_test_functions.csv");
    os << "x,phi1,phi2\n";
    char buf[96];
    for (int i = 0; i < 256; ++i) {
      const double x = -kPi + kTwoPi * i / 256.0;
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x, phi1(x), phi2(x));
      os << buf;
    }
  }
}

struct PresetArtifacts {
  std::vector<std::string> files;
  std::vector<ConvergenceReport> reports;
};

inline PresetArtifacts run_preset(const std::string& preset, Scale scale, const std::string& out_dir,
                                  const std::function<void(ExperimentConfig&)>& override_cfg = {},
                                  const ProgressFn& progress = {}) {
  const std::string name = canonical_preset(preset);
  auto panels = preset_panels(name, scale);
  for (auto& p : panels) {
    if (override_cfg) override_cfg(p.config);
    const Diagnostics d = validate(p.config);
    if (!d.ok()) throw ConfigError(name + "/" + p.tag + ": " + d.errors.front());
  }
  std::filesystem::create_directories(out_dir);
  PresetArtifacts art;
  for (const auto& p : panels) {
    const std::string stem = out_dir + "/" + name + "_" + p.tag;
    {
      std::ofstream os(stem + "_config.txt");
      write_config(os, p.config);
    }
    art.files.push_back(stem + "_config.txt");
    if (p.kind == PresetPanel::Kind::sample) {
      write_sample_tables(p.config, stem);
      plot_profile_csv(stem + "_density.csv", stem + "_density.svg", name + " " + p.tag + ": density at T1");
      plot_profile_csv(stem + "_test_functions.csv", stem + "_test_functions.svg", name + " " + p.tag + ": test functions");
      for (const char* suffix : {"_density.csv", "_density.svg", "_test_functions.csv", "_test_functions.svg"}) {
        art.files.push_back(stem + suffix);
      }
      continue;
    }
    const SweepAxis axis = p.kind == PresetPanel::Kind::sweep_h ? SweepAxis::h : SweepAxis::N;
    const SweepResult r = sweep(p.config, axis, progress);
    {
      std::ofstream os(stem + "_moments.csv");
      write_moment_csv(os, r.moment_rows);
    }
    {
      std::ofstream os(stem + "_convergence.csv");
      write_convergence_csv(os, r);
    }
    {
      std::ofstream os(stem + "_slopes.csv");
      write_slope_csv(os, r.reports);
    }
    plot_convergence_csv(stem + "_convergence.csv", stem + "_convergence.svg", name + " " + p.tag);
    for (const char* suffix : {"_moments.csv", "_convergence.csv", "_slopes.csv", "_convergence.svg"}) {
      art.files.push_back(stem + suffix);
    }
    art.reports.insert(art.reports.end(), r.reports.begin(), r.reports.end());
  }
  return art;
}

}  // namespace dkfd
