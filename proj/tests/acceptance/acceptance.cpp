// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dkfd/dkfd.hpp"

using namespace dkfd;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Outcome& o, double seconds, double limit = 0.0) {
  bool pass = o.pass;
  std::string detail = o.detail;
  if (limit > 0.0 && seconds > limit) {
    pass = false;
    detail += "; over the time limit";
  }
  if (!pass) ++failures;
  std::printf("%s %2d %-26s %s  [%.1f s%s]\n", pass ? "PASS" : "FAIL", id, name, detail.c_str(), seconds,
              limit > 0.0 ? (" / " + std::to_string(static_cast<int>(limit)) + " s").c_str() : "");
  std::fflush(stdout);
}

template <class F>
void run(int id, const char* name, double limit, F&& f) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(id, name, o, std::chrono::duration<double>(Clock::now() - t0).count(), limit);
}

std::string fmt(const char* f, double a) {
  char b[96];
  std::snprintf(b, sizeof b, f, a);
  return b;
}

const TestFunction& bump6_function() {
  static const TestFunction phi = TestFunction::from_closure(profiles::bump6);
  return phi;
}

/// Relative constant of the backward-flow error: max over k = 3..8 of err / (h^2 ||I_h phi||_h).
double backward_flow_constant() {
  double c = 0.0;
  for (int L : dyadic_L(3, 8)) {
    const Grid g = Grid::line(L);
    const double h = g.spacing();
    c = std::max(c, backward_flow_error(bump6_function(), g, 0.4) / (h * h * norm(interpolate(bump6_function(), g))));
  }
  return c;
}

Outcome deterministic_rates() {
  std::vector<double> h, e1, e2;
  for (int L : dyadic_L(3, 8)) {
    const Grid g = Grid::line(L);
    h.push_back(g.spacing());
    e1.push_back(backward_flow_error(bump6_function(), g, 0.4));
    e2.push_back(gradient_product_error(bump6_function(), bump6_function(), g, 0.4));
  }
  const double s1 = fit_loglog(h, e1).slope, s2 = fit_loglog(h, e2).slope;
  return {std::abs(s1 - 2.0) <= 0.2 && std::abs(s2 - 2.0) <= 0.2,
          fmt("flow slope %.3f", s1) + fmt(", gradient-product slope %.3f (2.0 +- 0.2)", s2)};
}

Outcome conservation() {
  const InitialPlacement p = place_particles(profiles::bump6, Grid::line(64), 8192);
  SchemeConfig cfg;
  cfg.noise_seed = 101;
  DkScheme scheme(p.grid, p.particles, cfg);
  double worst = 0.0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const TrajectoryMonitor m = scheme.simulate(p.matched_density, r, 400, [](long, const GridFunction&) {});
    worst = std::max(worst, m.mass_drift);
  }
  return {worst < 1e-10, fmt("max relative mass drift %.2e (< 1e-10)", worst)};
}

Outcome first_moments() {
  const ExperimentConfig c;
  const auto [phi1, phi2] = make_test_functions(c);
  const TwoTimeObservables obs = two_time_observables(phi1, c.T1, phi2, c.T2);
  const LabSetup setup{make_placement(c, 64, 8192), c.dt, 1, false};
  const std::vector<std::vector<int>> exps{obs.exponents({1, 0}), obs.exponents({0, 1})};
  bool pass = true;
  std::string detail;
  for (Model m : {Model::particles, Model::dk}) {
    const auto est = estimate_moments(setup, obs.observables, exps, m, 10000, derived_seed(c.seed, 0, m, false));
    for (std::size_t k = 0; k < est.size(); ++k) {
      const double z = est[k].mean / est[k].stderr;
      pass = pass && std::abs(z) <= 4.0;
      detail += std::string(detail.empty() ? "" : ", ") + to_string(m) + (k == 0 ? " (1,0) " : " (0,1) ") +
                fmt("z=%.2f", z);
    }
  }
  return {pass, detail + " (|z| <= 4)"};
}

Outcome oracle_equivalence() {
  const TestFunction phi = TestFunction::cosine(3);
  const double T = 0.4, dt = 1e-3;
  const LabSetup setup{place_particles(profiles::bump6, Grid::line(64), 2048), dt, 1, false};
  const MomentSpec spec{{{T, phi}}, {2}};
  const MomentEstimate p = estimate_moment(setup, spec, Model::particles, 50000, 401);
  const MomentEstimate d = estimate_moment(setup, spec, Model::dk, 50000, 402);
  const double po = particle_variance_oracle(setup.placement, phi, T);
  const double dko = dk_second_moment_oracle(setup.placement, phi, T, dt);
  const double h = setup.placement.grid.spacing();
  const double band = std::max(4.0 * d.stderr, 5.0 * backward_flow_constant() * h * h * std::abs(dko));
  const double zp = (p.mean - po) / p.stderr;
  const bool pass = std::abs(zp) <= 4.0 && std::abs(d.mean - dko) <= band;
  return {pass, fmt("particles z=%.2f", zp) + fmt(" (oracle %.4e)", po) +
                    fmt(", DK |diff| %.3e", std::abs(d.mean - dko)) + fmt(" <= band %.3e", band) +
                    fmt(" (oracle %.4e)", dko)};
}

Outcome quadratic_variation() {
  const InitialPlacement p = place_particles(profiles::bump6, Grid::line(64), 64);
  SchemeConfig cfg;
  cfg.noise_seed = 501;
  const GridFunction rho = run_trajectory(p, cfg, {0.2}, 0).snapshots.front().second;
  const Grid& g = rho.grid();
  const long N = 64;
  const double dt = 1e-3;
  const std::vector<std::pair<GridFunction, GridFunction>> pairs{
      {interpolate([](double x) { return std::cos(x); }, g), interpolate([](double x) { return std::cos(x); }, g)},
      {interpolate([](double x) { return std::cos(3 * x); }, g),
       interpolate([](double x) { return std::cos(3 * x) + std::sin(x); }, g)},
      {interpolate(profiles::bump6, g), interpolate([](double x) { return std::sin(2 * x); }, g)}};
  GridFunction rho_plus = rho;
  for (double& v : rho_plus.values()) v = std::max(v, 0.0);
  std::vector<RunningStats> stats(pairs.size());
  RandomStream stream(502, 0, Subsystem::noise_check);
  GridFunction dW(g);
  for (int r = 0; r < 100000; ++r) {
    stream.fill_normal(dW.values(), std::sqrt(dt));
    const GridFunction n = assemble_noise(rho, N, dW);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      stats[k].add(inner_product(n, pairs[k].first) * inner_product(n, pairs[k].second));
    }
  }
  bool pass = true;
  std::string detail = fmt("frozen state min %.3g; ", rho.min());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double expected =
        dt / N * inner_product(rho_plus, dot(apply_gradient(pairs[k].first), apply_gradient(pairs[k].second)));
    const double z = (stats[k].mean() - expected) / stats[k].stderr_of_mean();
    pass = pass && std::abs(z) <= 4.0;
    detail += fmt("pair %.0f ", static_cast<double>(k + 1)) + fmt("z=%.2f ", z);
  }
  return {pass, detail + "(|z| <= 4)"};
}

std::string report_line(const ConvergenceReport& r, bool all_rows) {
  std::string s = r.model + " (" + std::to_string(r.order.j1) + "," + std::to_string(r.order.j2) + ") ";
  if (all_rows) return s + fmt("slope %.3f", r.slope_all_rows);
  if (r.noise_limited) return s + "noise-limited (" + std::to_string(r.significant_rows) + " significant rows)";
  return s + fmt("slope %.3f", r.slope) + " over " + std::to_string(r.significant_rows) + " rows";
}

Outcome figure3_desk() {
  ExperimentConfig c;
  c.rho0 = Profile::bump6;
  c.N = {8192};
  c.L = dyadic_L(3, 6);
  c.moments = {{2, 0}, {1, 1}};
  c.models = {Model::particles, Model::dk};
  c.M = 50000;
  const SweepResult r = sweep(c, SweepAxis::h);
  bool pass = true;
  std::string detail;
  for (const auto& rep : r.reports) {
    pass = pass && !rep.noise_limited && rep.slope >= 1.5 && rep.slope <= 2.5;
    detail += (detail.empty() ? "" : ", ") + report_line(rep, false);
  }
  return {pass, detail + " (in [1.5, 2.5])"};
}

Outcome figure5_desk() {
  ExperimentConfig c;
  c.rho0 = Profile::bump6;
  c.L = {64};
  c.N = {1024, 2048, 4096, 8192, 16384};
  c.moments = {{1, 0}, {2, 0}, {1, 1}, {2, 1}};
  c.models = {Model::particles, Model::dk};
  c.M = 50000;
  c.M_third = 50000;
  const SweepResult r = sweep(c, SweepAxis::N);
  bool pass = true;
  std::string detail;
  for (const auto& rep : r.reports) {
    const double target = -0.5 * rep.order.total();
    pass = pass && std::abs(rep.slope_all_rows - target) <= 0.3;
    detail += (detail.empty() ? "" : ", ") + report_line(rep, true) + fmt(" vs %.1f", target);
  }
  return {pass, detail + " (+- 0.3)"};
}

Outcome figure6_qualitative() {
  ExperimentConfig c;
  c.rho0 = Profile::bump8;
  c.T2 = 0.2;
  c.test_functions = TestFamily::profile;
  c.models = {Model::particles, Model::dk, Model::dk_linearised};
  c.moments = {{2, 0}, {2, 1}};
  c.N = {2011};
  c.L = {8, 16};
  c.M = 1000000;
  c.M_third = 1000000;
  const SweepResult r = sweep(c, SweepAxis::h);
  auto find = [&](const std::string& model, MomentOrder o) -> const ConvergenceReport& {
    for (const auto& rep : r.reports) {
      if (rep.model == model && rep.order == o) return rep;
    }
    throw std::logic_error("missing report");
  };
  const auto& lin21 = find("dk-linearised", {2, 1});
  const auto& dk21 = find("dk", {2, 1});
  const auto& lin20 = find("dk-linearised", {2, 0});
  const auto& dk20 = find("dk", {2, 0});
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < lin21.rows.size(); ++i) {
    const bool sig = lin21.rows[i].significant;
    const double ratio = lin21.rows[i].diff / dk21.rows[i].diff;
    const double gap20 = std::abs(lin20.rows[i].diff - dk20.rows[i].diff);
    const double se20 = std::hypot(lin20.rows[i].stderr, dk20.rows[i].stderr);
    pass = pass && sig && ratio >= 1.5 && gap20 <= 4.0 * se20;
    detail += fmt("h=%.4f: ", lin21.rows[i].value) + (sig ? "" : "(2,1) not significant, ") +
              fmt("(2,1) lin/dk error ratio %.2f, ", ratio) + fmt("(2,0) gap %.2f sigma; ", gap20 / se20);
  }
  return {pass, detail + "(ratio >= 1.5, gap <= 4 sigma)"};
}

Outcome negative_part() {
  const Grid g = Grid::line(64);
  const GridFunction rho0 = interpolate(profiles::bump6, g);
  const std::vector<long> Ns{8, 16, 32, 64, 128, 256, 512};
  std::vector<double> means;
  NegativePartReport last;
  for (long N : Ns) {
    SchemeConfig cfg;
    cfg.noise_seed = 900 + static_cast<std::uint64_t>(N);
    DkScheme scheme(g, N, cfg);
    std::vector<TrajectoryMonitor> ms;
    for (std::uint64_t r = 0; r < 1000; ++r) {
      ms.push_back(scheme.simulate(rho0, r, 400, [](long, const GridFunction&) {}));
    }
    last = negative_part_report(ms, N, g, rho0.min(), rho0.max());
    means.push_back(last.mean_sup_negative_norm);
  }
  bool monotone = true;
  std::string seq;
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (i > 0 && means[i] > means[i - 1]) monotone = false;
    seq += fmt(i ? ", %.3g" : "%.3g", means[i]);
  }
  const bool pass = monotone && last.fraction_negative < 1e-2 && rho0.min() >= 1.0;
  return {pass, fmt("rho_min %.3f, ", rho0.min()) + fmt("N h = %.1f: ", 512 * g.spacing()) +
                    fmt("negative fraction %.4f (< 0.01); ", last.fraction_negative) + "mean sup||rho^-|| over N = 8..512: " +
                    seq + (monotone ? " (nonincreasing)" : " (NOT monotone)")};
}

Outcome temporal_order() {
  const Grid g = Grid::line(64);
  const GridFunction rho0 = interpolate(profiles::bump6, g);
  const GridFunction exact = discrete_forward_flow(rho0, 0.4);
  std::vector<double> dts{4e-3, 2e-3, 1e-3}, errs;
  for (double dt : dts) {
    SchemeConfig cfg;
    cfg.dt = dt;
    cfg.model = DkModel::deterministic;
    DkScheme scheme(g, 1, cfg);
    GridFunction last(g);
    scheme.simulate(rho0, 0, steps_for_times({0.4}, dt).front(), [&](long, const GridFunction& r) { last = r; });
    errs.push_back(norm(last - exact));
  }
  const double s = fit_loglog(dts, errs).slope;
  return {std::abs(s - 2.0) <= 0.2, fmt("order %.3f (2.0 +- 0.2)", s)};
}

}  // namespace

int main() {
  run(1, "deterministic h^2 rates", 1.0, deterministic_rates);
  run(2, "mass conservation", 10.0, conservation);
  run(3, "first moments", 0.0, first_moments);
  run(4, "oracle equivalence", 120.0, oracle_equivalence);
  run(5, "quadratic variation", 60.0, quadratic_variation);
  run(6, "h-sweep rate (desk)", 0.0, figure3_desk);
  run(7, "N-sweep rate (desk)", 0.0, figure5_desk);
  run(8, "linearised vs nonlinear", 0.0, figure6_qualitative);
  run(9, "negative part", 0.0, negative_part);
  run(10, "temporal order", 1.0, temporal_order);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
