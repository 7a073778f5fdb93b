// Command-line driver: simulations, moment estimates, sweeps and figure presets.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dkfd/dkfd.hpp"

namespace {

using namespace dkfd;

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  bool paper_literal_bdf2 = false;
  bool normalize_l2 = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_file, "key = value configuration file");
  cmd->add_option("-s,--set", o.overrides, "override a configuration key (key=value)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--workers", o.workers, "worker threads");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--paper-literal-bdf2", o.paper_literal_bdf2, "use (2/3) dt Delta_h as the implicit BDF2 term");
  cmd->add_flag("--normalize-l2", o.normalize_l2, "normalise test functions to unit L2 norm");
  cmd->add_flag("-q,--quiet", o.quiet, "no progress output");
}

ExperimentConfig load_config(const CommonOptions& o, ExperimentConfig cfg = {}) {
  std::map<std::string, std::string> kv;
  if (!o.config_file.empty()) {
    std::ifstream in(o.config_file);
    if (!in) throw ConfigError("cannot read config file " + o.config_file);
    kv = parse_key_values(in);
  }
  for (const auto& s : o.overrides) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  cfg = config_from_map(kv, cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.out.empty()) cfg.output = o.out;
  if (o.paper_literal_bdf2) cfg.paper_literal_bdf2 = true;
  if (o.normalize_l2) cfg.normalize_l2 = true;
  return cfg;
}

void require_valid(const ExperimentConfig& cfg) {
  const Diagnostics d = validate(cfg);
  write_diagnostics(std::cerr, Diagnostics{d.errors, d.warnings, {}});
  if (!d.ok()) throw ConfigError("configuration rejected");
}

ProgressFn progress_printer(bool quiet) {
  if (quiet) return {};
  return [](const std::string& s) { std::cerr << "  " << s << std::endl; };
}

std::string output_dir(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.output);
  return cfg.output;
}

void print_reports(const std::vector<ConvergenceReport>& reports) {
  for (const auto& r : reports) {
    std::printf("%-14s (%d,%d)  ", r.model.c_str(), r.order.j1, r.order.j2);
    if (r.noise_limited) {
      std::printf("noise-limited (%zu significant rows)", r.significant_rows);
    } else {
      std::printf("slope %.3f +- %.3f over %zu rows", r.slope, r.half_width, r.significant_rows);
    }
    std::printf("   [all rows: %.3f]\n", r.slope_all_rows);
  }
}

GridFunction initial_density(const ExperimentConfig& cfg, int L, long N, std::optional<InitialPlacement>& placement) {
  if (cfg.normalization == Normalization::raw) return interpolate(profile_function(cfg.rho0), Grid::line(L));
  placement = make_placement(cfg, L, N);
  return placement->matched_density;
}

int cmd_validate(const CommonOptions& o) {
  const ExperimentConfig cfg = load_config(o);
  const Diagnostics d = validate(cfg);
  write_diagnostics(std::cout, d);
  return d.ok() ? 0 : 2;
}

int cmd_simulate(const CommonOptions& o) {
  ExperimentConfig cfg = load_config(o);
  cfg.models.erase(std::remove(cfg.models.begin(), cfg.models.end(), Model::particles), cfg.models.end());
  if (cfg.models.empty()) throw ConfigError("simulate needs a Dean-Kawasaki model");
  require_valid(cfg);
  const std::string dir = output_dir(cfg);
  const int L = cfg.L.front();
  const long N = cfg.N.front();
  std::optional<InitialPlacement> placement;
  const GridFunction rho0 = initial_density(cfg, L, N, placement);
  SchemeConfig sc;
  sc.dt = cfg.dt;
  sc.model = dk_model_of(cfg.models.front());
  sc.noise_seed = cfg.seed;
  sc.paper_literal_bdf2 = cfg.paper_literal_bdf2;
  const std::vector<long> steps = steps_for_times(cfg.record_times, cfg.dt);
  std::shared_ptr<const MeanFieldAmplitude> mean_field;
  if (sc.model == DkModel::linearised) mean_field = std::make_shared<MeanFieldAmplitude>(rho0, cfg.dt, steps.back());
  DkScheme scheme(rho0.grid(), N, sc, mean_field);
  std::size_t next = 0;
  const TrajectoryMonitor mon = scheme.simulate(rho0, 0, steps.back(), [&](long step, const GridFunction& rho) {
    while (next < steps.size() && steps[next] == step) {
      char name[64];
      std::snprintf(name, sizeof name, "/snapshot_t%.6f.csv", cfg.record_times[next]);
      std::ofstream os(dir + name);
      write_csv(os, rho);
      ++next;
    }
  });
  {
    std::ofstream os(dir + "/monitor.csv");
    write_monitor_csv(os, std::span<const TrajectoryMonitor>(&mon, 1));
  }
  std::printf("steps %ld  mass drift %.3e  min density %.6g  sup ||rho^-|| %.3e\n", steps.back(), mon.mass_drift,
              mon.min_density, mon.sup_negative_norm);
  return 0;
}

int cmd_moments(const CommonOptions& o) {
  const ExperimentConfig cfg = load_config(o);
  require_valid(cfg);
  const std::string dir = output_dir(cfg);
  const auto [phi1, phi2] = make_test_functions(cfg);
  const TwoTimeObservables obs = two_time_observables(phi1, cfg.T1, phi2, cfg.T2);
  std::vector<std::vector<int>> exps;
  bool third = false;
  for (const auto& m : cfg.moments) {
    exps.push_back(obs.exponents(m));
    third = third || m.total() >= 3;
  }
  const std::size_t M = third ? std::max(cfg.M, cfg.M_third) : cfg.M;
  std::vector<MomentRow> rows;
  const InitialPlacement placement = make_placement(cfg, cfg.L.front(), cfg.N.front());
  const LabSetup setup{placement, cfg.dt, cfg.workers, cfg.paper_literal_bdf2};
  for (Model model : cfg.models) {
    if (!o.quiet) std::cerr << "  model=" << to_string(model) << std::endl;
    const auto est = estimate_moments(setup, obs.observables, exps, model, M,
                                      derived_seed(cfg.seed, 0, model, cfg.common_random_numbers));
    for (std::size_t k = 0; k < cfg.moments.size(); ++k) {
      rows.push_back(MomentRow{to_string(model), cfg.moments[k].j1, cfg.moments[k].j2, cfg.T1, cfg.T2,
                               placement.grid.spacing(), placement.particles, M, est[k].mean, est[k].stderr});
    }
  }
  std::ofstream os(dir + "/moments.csv");
  write_moment_csv(os, rows);
  write_moment_csv(std::cout, rows);
  return 0;
}

int cmd_sweep(const CommonOptions& o, SweepAxis axis, ExperimentConfig defaults, const std::string& stem) {
  const ExperimentConfig cfg = load_config(o, defaults);
  require_valid(cfg);
  const std::string dir = output_dir(cfg);
  const SweepResult r = sweep(cfg, axis, progress_printer(o.quiet));
  const std::string base = dir + "/" + stem;
  {
    std::ofstream os(base + "_moments.csv");
    write_moment_csv(os, r.moment_rows);
  }
  {
    std::ofstream os(base + "_convergence.csv");
    write_convergence_csv(os, r);
  }
  {
    std::ofstream os(base + "_slopes.csv");
    write_slope_csv(os, r.reports);
  }
  plot_convergence_csv(base + "_convergence.csv", base + "_convergence.svg", stem);
  print_reports(r.reports);
  return 0;
}

int cmd_compare_linearised(const CommonOptions& o) {
  ExperimentConfig d;
  d.rho0 = Profile::bump8;
  d.T2 = 0.2;
  d.test_functions = TestFamily::profile;
  d.N = {2011};
  d.L = {8, 16, 32};
  d.moments = {{2, 0}, {2, 1}};
  d.models = {Model::particles, Model::dk, Model::dk_linearised};
  d.M = d.M_third = 200000;
  const ExperimentConfig cfg = load_config(o, d);
  require_valid(cfg);
  const std::string dir = output_dir(cfg);
  const SweepResult r = sweep(cfg, SweepAxis::h, progress_printer(o.quiet));
  {
    std::ofstream os(dir + "/compare_linearised_moments.csv");
    write_moment_csv(os, r.moment_rows);
  }
  {
    std::ofstream os(dir + "/compare_linearised_convergence.csv");
    write_convergence_csv(os, r);
  }
  plot_convergence_csv(dir + "/compare_linearised_convergence.csv", dir + "/compare_linearised_convergence.svg",
                       "dk vs dk-linearised");
  std::printf("%-10s %-6s %-14s %-14s %-14s %-14s\n", "h", "(j1,j2)", "err dk", "err lin", "se dk", "se lin");
  for (const auto& m : cfg.moments) {
    const ConvergenceReport *a = nullptr, *b = nullptr;
    for (const auto& rep : r.reports) {
      if (rep.order == m && rep.model == "dk") a = &rep;
      if (rep.order == m && rep.model == "dk-linearised") b = &rep;
    }
    if (!a || !b) continue;
    for (std::size_t i = 0; i < a->rows.size(); ++i) {
      std::printf("%-10.5f (%d,%d)  %-14.4e %-14.4e %-14.2e %-14.2e\n", a->rows[i].value, m.j1, m.j2, a->rows[i].diff,
                  b->rows[i].diff, a->rows[i].stderr, b->rows[i].stderr);
    }
  }
  return 0;
}

int cmd_negative_part(const CommonOptions& o) {
  ExperimentConfig d;
  d.normalization = Normalization::raw;
  d.models = {Model::dk};
  d.L = {64};
  d.N = {8, 16, 32, 64, 128, 256, 512};
  d.M = 1000;
  d.record_times = {0.4};
  ExperimentConfig cfg = load_config(o, d);
  cfg.models.erase(std::remove(cfg.models.begin(), cfg.models.end(), Model::particles), cfg.models.end());
  if (cfg.models.empty()) throw ConfigError("negative-part needs a Dean-Kawasaki model");
  require_valid(cfg);
  const std::string dir = output_dir(cfg);
  const int L = cfg.L.front();
  const long steps = steps_for_times({cfg.record_times.back()}, cfg.dt).back();
  std::ofstream summary(dir + "/negative_part.csv");
  summary << "N,h,Nh,rho_min,rho_max,fraction_negative,mean_sup_neg,max_sup_neg,envelope,scaling_regime\n";
  std::printf("%-8s %-8s %-10s %-12s %-12s\n", "N", "N h", "fraction", "mean sup", "max sup");
  for (long N : cfg.N) {
    std::optional<InitialPlacement> placement;
    const GridFunction rho0 = initial_density(cfg, L, N, placement);
    SchemeConfig sc;
    sc.dt = cfg.dt;
    sc.model = dk_model_of(cfg.models.front());
    sc.noise_seed = derived_seed(cfg.seed, static_cast<std::uint64_t>(N), cfg.models.front(), false);
    sc.paper_literal_bdf2 = cfg.paper_literal_bdf2;
    std::shared_ptr<const MeanFieldAmplitude> mean_field;
    if (sc.model == DkModel::linearised) mean_field = std::make_shared<MeanFieldAmplitude>(rho0, cfg.dt, steps);
    std::vector<TrajectoryMonitor> monitors(cfg.M);
    detail::parallel_for_realizations(cfg.M, cfg.workers, [&] {
      auto scheme = std::make_shared<DkScheme>(rho0.grid(), N, sc, mean_field);
      return [&, scheme](std::size_t r) {
        monitors[r] = scheme->simulate(rho0, r, steps, [](long, const GridFunction&) {});
      };
    });
    const double rmin = rho0.min(), rmax = rho0.max();
    const NegativePartReport rep = negative_part_report(monitors, N, rho0.grid(), rmin, rmax);
    {
      std::ofstream os(dir + "/monitor_N" + std::to_string(N) + ".csv");
      write_monitor_csv(os, monitors);
    }
    char buf[320];
    const double h = rho0.grid().spacing();
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", N, h, N * h, rmin,
                  rmax, rep.fraction_negative, rep.mean_sup_negative_norm, rep.max_sup_negative_norm, rep.envelope,
                  rep.scaling_regime ? 1 : 0);
    summary << buf;
    std::printf("%-8ld %-8.2f %-10.4f %-12.4e %-12.4e\n", N, N * h, rep.fraction_negative, rep.mean_sup_negative_norm,
                rep.max_sup_negative_norm);
  }
  return 0;
}

int cmd_run(const CommonOptions& o, const std::string& preset, const std::string& scale) {
  const Scale sc = parse_scale(scale);
  const std::string dir = o.out.empty() ? "out/" + preset : o.out;
  const bool has_overrides = !o.config_file.empty() || !o.overrides.empty();
  auto override_cfg = [&](ExperimentConfig& c) {
    if (has_overrides) c = load_config(o, c);
    if (o.seed) c.seed = *o.seed;
    if (o.workers) c.workers = *o.workers;
    if (o.paper_literal_bdf2) c.paper_literal_bdf2 = true;
    if (o.normalize_l2) c.normalize_l2 = true;
    c.output = dir;
  };
  const PresetArtifacts art = run_preset(preset, sc, dir, override_cfg, progress_printer(o.quiet));
  print_reports(art.reports);
  for (const auto& f : art.files) std::printf("wrote %s\n", f.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-difference Dean-Kawasaki simulations and moment studies"};
  app.require_subcommand(1);
  CommonOptions opts;

  auto* validate_cmd = app.add_subcommand("validate", "check a configuration without running it");
  auto* simulate_cmd = app.add_subcommand("simulate", "one Dean-Kawasaki trajectory with snapshots and monitor");
  auto* moments_cmd = app.add_subcommand("moments", "centered moments for every model at one (h, N)");
  auto* sweep_h_cmd = app.add_subcommand("sweep-h", "moment errors against h (L list, single N)");
  auto* sweep_n_cmd = app.add_subcommand("sweep-n", "moment errors against N (N list, single L)");
  auto* compare_cmd = app.add_subcommand("compare-linearised", "nonlinear vs linearised moment errors against h");
  auto* negative_cmd = app.add_subcommand("negative-part", "negative-part statistics along an N sweep");
  auto* run_cmd = app.add_subcommand("run", "run a figure preset");
  for (auto* c : {validate_cmd, simulate_cmd, moments_cmd, sweep_h_cmd, sweep_n_cmd, compare_cmd, negative_cmd, run_cmd}) {
    add_common(c, opts);
  }
  std::string preset;
  std::string scale = "desk";
  run_cmd->add_option("preset", preset, "preset name (fig2 .. fig6 or the full name)")
      ->required()
      ->transform(CLI::Validator(
          [](std::string& s) {
            s = canonical_preset(s);
            const auto& names = preset_names();
            return std::find(names.begin(), names.end(), s) == names.end() ? "unknown preset '" + s + "'"
                                                                             : std::string();
          },
          "PRESET"));
  run_cmd->add_option("--scale", scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*validate_cmd) return cmd_validate(opts);
    if (*simulate_cmd) return cmd_simulate(opts);
    if (*moments_cmd) return cmd_moments(opts);
    if (*sweep_h_cmd) {
      ExperimentConfig d;
      d.L = {8, 16, 32, 64};
      return cmd_sweep(opts, SweepAxis::h, d, "sweep_h");
    }
    if (*sweep_n_cmd) {
      ExperimentConfig d;
      d.N = {1024, 2048, 4096, 8192, 16384};
      return cmd_sweep(opts, SweepAxis::N, d, "sweep_n");
    }
    if (*compare_cmd) return cmd_compare_linearised(opts);
    if (*negative_cmd) return cmd_negative_part(opts);
    if (*run_cmd) return cmd_run(opts, preset, scale);
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
