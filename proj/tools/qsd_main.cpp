// qsd: batch front door for the simulation library.
//
//   qsd master      -c cfg.json   deterministic GKSL integration -> CSV
//   qsd trajectory  -c cfg.json   one stochastic trajectory -> CSV
//   qsd ensemble    -c cfg.json   Monte Carlo ensemble -> CSV + comparison report
//   qsd discrete    -c cfg.json   collapse-chain trajectories or exhaustive coarse grain
//   qsd verify      -c cfg.json   named invariant suites -> report, exit 0/1
//
// Exit codes: 0 success/pass, 1 check failure, 2 configuration error.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qsd/qsd.hpp"

namespace {

using namespace qsd;

struct CliOptions {
  std::string config_path;
  std::string output_dir;  // from -o
  unsigned threads = 0;
  std::uint64_t stream = 0;
  bool dump_config = false;
};

std::string resolve_output_dir(const CliOptions& cli, const RunConfig& cfg) {
  if (!cli.output_dir.empty()) return cli.output_dir;
  if (!cfg.output_directory.empty()) return cfg.output_directory;
  if (const char* env = std::getenv("QSD_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path.string());
  std::cout << "writing " << path.string() << '\n';
  return out;
}

int run_master(const CliOptions& cli, const RunConfig& cfg) {
  const auto states = master_evolve(cfg.system, DensityMatrix::pure(cfg.initial_state),
                                    cfg.grid.duration(), cfg.grid.dt);
  auto out = open_output(resolve_output_dir(cli, cfg), "master.csv");
  csv::write_master(out, csv::metadata_line(cfg.master_seed, cfg.grid.dt, 1, "master"),
                    cfg.grid.dt, states);
  return 0;
}

int run_trajectory(const CliOptions& cli, const RunConfig& cfg) {
  if (cfg.scheme == Scheme::discrete)
    throw ConfigError("scheme", "use the discrete subcommand for collapse chains");
  const auto path = sample_complex_path({cfg.master_seed, cli.stream}, cfg.grid,
                                        cfg.system.channels());
  TrajectoryRecord rec;
  switch (cfg.scheme) {
    case Scheme::linear:
    case Scheme::linear_reweight:
      rec = linear_sse_evolve(cfg.system, cfg.initial_state, path);
      break;
    case Scheme::nonlinear:
      rec = nonlinear_evolve(cfg.system, cfg.initial_state, path, cfg.renormalize);
      break;
    case Scheme::gisin_percival:
      rec = gisin_percival_evolve(cfg.system, cfg.initial_state, path, cfg.renormalize);
      break;
    case Scheme::discrete:
      break;
  }
  auto out = open_output(resolve_output_dir(cli, cfg), "trajectory.csv");
  csv::write_trajectory(
      out, csv::metadata_line(cfg.master_seed, cfg.grid.dt, 1, to_string(cfg.scheme)), rec);
  return 0;
}

int run_ensemble_cmd(const CliOptions& cli, const RunConfig& cfg) {
  if (cfg.scheme == Scheme::discrete)
    throw ConfigError("scheme", "use the discrete subcommand for collapse chains");
  const EnsembleConfig ens = cfg.ensemble_config();
  const EnsembleResult result = run_ensemble(cfg.system, cfg.initial_state, ens, cli.threads);
  const auto master = master_evolve(cfg.system, DensityMatrix::pure(cfg.initial_state),
                                    cfg.grid.duration(), cfg.grid.dt);

  const std::string dir = resolve_output_dir(cli, cfg);
  {
    auto out = open_output(dir, "ensemble.csv");
    csv::write_ensemble(out,
                        csv::metadata_line(cfg.master_seed, cfg.grid.dt, cfg.n_traj,
                                           to_string(cfg.scheme)),
                        result);
  }

  Json report;
  report["abs_floor"] = kDefaultComparisonFloor;
  report["rows"] = Json::array();
  bool pass = true;
  for (std::size_t s = 0; s < result.times.size(); ++s) {
    const std::size_t idx = cfg.grid.index_of(result.times[s]);
    const double distance = trace_distance(result.rho_hat[s].data, master[idx].data);
    const bool row_pass =
        distance <= std::max(kDefaultComparisonFloor, 5.0 * result.std_error[s]);
    pass = pass && row_pass;
    report["rows"].push_back({{"time", result.times[s]},
                              {"trace_distance", distance},
                              {"stderr", result.std_error[s]},
                              {"pass", row_pass}});
    std::cout << (row_pass ? "[PASS] " : "[FAIL] ") << "t=" << result.times[s]
              << " trace_distance=" << distance << " stderr=" << result.std_error[s] << '\n';
  }
  report["pass"] = pass;
  {
    auto out = open_output(dir, "comparison.json");
    out << report.dump(2) << '\n';
  }
  return pass ? 0 : 1;
}

int run_discrete(const CliOptions& cli, const RunConfig& cfg) {
  if (!cfg.discrete)
    throw ConfigError("discrete", "this subcommand needs a discrete block in the config");
  const DiscreteConfig& dc = *cfg.discrete;
  const std::string dir = resolve_output_dir(cli, cfg);
  const auto k = dc.family.outcomes();

  if (dc.exhaustive) {
    const DensityMatrix grain = coarse_grain_discrete(dc.family, cfg.initial_state, dc.steps);
    DensityMatrix power = DensityMatrix::pure(cfg.initial_state);
    std::vector<DensityMatrix> sequence{power};
    for (std::size_t n = 0; n < dc.steps; ++n) {
      power = channel_apply(dc.family, power);
      sequence.push_back(power);
    }
    const double deviation = max_abs(grain.data - power.data);
    {
      auto out = open_output(dir, "discrete_coarse.csv");
      csv::write_master(out, csv::metadata_line(cfg.master_seed, 1.0, 1, "discrete"), 1.0,
                        sequence);
    }
    std::cout << (deviation <= 1e-10 ? "[PASS] " : "[FAIL] ")
              << "exhaustive coarse grain vs channel power: max deviation " << deviation << '\n';
    return deviation <= 1e-10 ? 0 : 1;
  }

  for (std::size_t i = 0; i < dc.n_trajectories; ++i) {
    const auto traj =
        sample_trajectory(dc.family, cfg.initial_state, dc.steps, {cfg.master_seed, i});
    auto out = open_output(dir, "discrete_traj_" + std::to_string(i) + ".csv");
    csv::write_discrete(out, csv::metadata_line(cfg.master_seed, 1.0, dc.n_trajectories,
                                                "discrete"),
                        traj, k);
  }
  return 0;
}

int run_verify_cmd(const CliOptions& cli, const RunConfig& cfg) {
  const auto results = run_verify(cfg, cfg.verify_checks, cli.threads);
  bool pass = true;
  Json report = Json::array();
  for (const auto& r : results) {
    pass = pass && r.pass;
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": measured " << r.measured
              << " against " << r.tolerance << " (" << r.detail << ")\n";
    report.push_back({{"name", r.name},
                      {"pass", r.pass},
                      {"measured", r.measured},
                      {"tolerance", r.tolerance},
                      {"detail", r.detail}});
  }
  auto out = open_output(resolve_output_dir(cli, cfg), "verify_report.json");
  out << Json{{"pass", pass}, {"checks", report}}.dump(2) << '\n';
  std::cout << (pass ? "all checks passed" : "some checks FAILED") << '\n';
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"open-quantum-system simulator: GKSL master equation, stochastic "
               "Schroedinger unravelings and discrete collapse chains"};
  app.set_version_flag("--version", std::string("qsd ") + qsd::kVersion);
  app.require_subcommand(0, 1);

  CliOptions cli;
  app.add_option("-c,--config", cli.config_path, "run configuration (JSON)");
  app.add_option("-o,--output-dir", cli.output_dir,
                 "output directory (overrides config and QSD_OUTPUT_DIR)");
  app.add_option("--threads", cli.threads, "worker threads (0 = hardware)");
  app.add_flag("--dump-config", cli.dump_config,
               "print the normalized configuration and exit");

  auto* master = app.add_subcommand("master", "integrate the master equation");
  auto* trajectory = app.add_subcommand("trajectory", "run one stochastic trajectory");
  trajectory->add_option("--stream", cli.stream, "trajectory stream index (default 0)");
  auto* ensemble = app.add_subcommand("ensemble", "Monte Carlo ensemble + master comparison");
  auto* discrete = app.add_subcommand("discrete", "collapse-chain workflows");
  auto* verify = app.add_subcommand("verify", "run named verification suites");
  for (auto* sub : {master, trajectory, ensemble, discrete, verify}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cli.config_path.empty()) throw qsd::ConfigError("config", "no configuration given (-c)");
    const qsd::RunConfig cfg = qsd::load_config(cli.config_path);
    if (cli.dump_config) {
      std::cout << qsd::to_json(cfg).dump(2) << '\n';
      return 0;
    }
    if (master->parsed()) return run_master(cli, cfg);
    if (trajectory->parsed()) return run_trajectory(cli, cfg);
    if (ensemble->parsed()) return run_ensemble_cmd(cli, cfg);
    if (discrete->parsed()) return run_discrete(cli, cfg);
    if (verify->parsed()) return run_verify_cmd(cli, cfg);
    std::cerr << "no subcommand given; see --help\n";
    return 2;
  } catch (const qsd::ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
