// Run configuration: a single JSON document describing the system, grid,
// scheme, ensemble size, outputs and verification checks. Matrices are
// row-major lists of [re, im] pairs. Unknown keys are rejected, and every
// violation is reported with its field path.
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsd/core.hpp"
#include "qsd/discrete.hpp"
#include "qsd/ensemble.hpp"
#include "qsd/noise.hpp"
#include "qsd/types.hpp"
#include "qsd/unravel.hpp"

namespace qsd {

using Json = nlohmann::json;

/// Configuration problem: carries the offending field path in what().
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::runtime_error(path + ": " + message) {}
};

struct DiscreteConfig {
  KrausFamily family;
  std::size_t steps = 1;
  bool exhaustive = true;
  std::size_t n_trajectories = 1;
};

struct RunConfig {
  OperatorSet system;
  Vector initial_state;
  TimeGrid grid;
  std::vector<double> store_times;
  Scheme scheme = Scheme::nonlinear;
  bool renormalize = true;
  std::size_t n_traj = 1;
  std::uint64_t master_seed = 0;
  std::string output_directory;  // empty = unset (resolved by the CLI)
  std::vector<std::string> output_formats = {"csv"};
  std::vector<std::string> verify_checks = {"all"};
  std::optional<DiscreteConfig> discrete;

  EnsembleConfig ensemble_config() const {
    return EnsembleConfig{n_traj, master_seed, grid, scheme, renormalize, store_times};
  }
};

namespace detail {

inline void reject_unknown_keys(const Json& node, const std::set<std::string>& known,
                                const std::string& path) {
  for (const auto& [key, value] : node.items()) {
    if (!known.contains(key)) throw ConfigError(path + "." + key, "unknown key");
  }
}

inline const Json& fetch(const Json& node, const std::string& key, const std::string& path) {
  const auto it = node.find(key);
  if (it == node.end()) throw ConfigError(path + "." + key, "missing required field");
  return *it;
}

inline Complex parse_complex(const Json& node, const std::string& path) {
  if (!node.is_array() || node.size() != 2 || !node[0].is_number() || !node[1].is_number())
    throw ConfigError(path, "expected a [re, im] pair");
  return Complex(node[0].get<double>(), node[1].get<double>());
}

inline Matrix parse_matrix(const Json& node, Eigen::Index d, const std::string& path) {
  if (!node.is_array() || node.size() != static_cast<std::size_t>(d * d))
    throw ConfigError(path, "expected a row-major list of " + std::to_string(d * d) +
                                " [re, im] pairs");
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      m(i, j) = parse_complex(node[static_cast<std::size_t>(i * d + j)],
                              path + "[" + std::to_string(i * d + j) + "]");
  return m;
}

inline Vector parse_state(const Json& node, Eigen::Index d, const std::string& path) {
  if (!node.is_array() || node.size() != static_cast<std::size_t>(d))
    throw ConfigError(path, "expected " + std::to_string(d) + " [re, im] pairs");
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i)
    v(i) = parse_complex(node[static_cast<std::size_t>(i)],
                         path + "[" + std::to_string(i) + "]");
  return v;
}

inline Json complex_to_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

inline Json matrix_to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(complex_to_json(m(i, j)));
  return out;
}

inline Json state_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

inline Scheme parse_scheme(const std::string& name, const std::string& path) {
  if (name == "linear") return Scheme::linear;
  if (name == "linear+reweight") return Scheme::linear_reweight;
  if (name == "nonlinear") return Scheme::nonlinear;
  if (name == "gisin-percival") return Scheme::gisin_percival;
  if (name == "discrete") return Scheme::discrete;
  throw ConfigError(path, "unknown scheme '" + name +
                              "' (expected linear, linear+reweight, nonlinear, "
                              "gisin-percival or discrete)");
}

}  // namespace detail

inline RunConfig config_from_json(const Json& root) {
  using detail::fetch;
  if (!root.is_object()) throw ConfigError("config", "top level must be an object");
  detail::reject_unknown_keys(root, {"system", "initial_state", "grid", "scheme", "renormalize",
                                     "ensemble", "outputs", "verify", "discrete"},
                              "config");
  RunConfig cfg;

  // system block
  const Json& system = fetch(root, "system", "config");
  detail::reject_unknown_keys(system, {"dim", "hamiltonian", "lindblads", "dissipator_prefactor"},
                              "system");
  const Json& dim_node = fetch(system, "dim", "system");
  if (!dim_node.is_number_integer() || dim_node.get<int>() < 1)
    throw ConfigError("system.dim", "must be a positive integer");
  const auto d = static_cast<Eigen::Index>(dim_node.get<int>());
  cfg.system.hamiltonian = detail::parse_matrix(fetch(system, "hamiltonian", "system"), d,
                                                "system.hamiltonian");
  if (hermiticity_error(cfg.system.hamiltonian) > kHermitianTol)
    throw ConfigError("system.hamiltonian", "not Hermitian within 1e-12");
  if (system.contains("lindblads")) {
    const Json& ls = system["lindblads"];
    if (!ls.is_array()) throw ConfigError("system.lindblads", "expected a list of matrices");
    for (std::size_t k = 0; k < ls.size(); ++k)
      cfg.system.lindblads.push_back(
          detail::parse_matrix(ls[k], d, "system.lindblads[" + std::to_string(k) + "]"));
  }
  cfg.system.dissipator_prefactor = system.value("dissipator_prefactor", 1.0);
  if (cfg.system.dissipator_prefactor != 0.5 && cfg.system.dissipator_prefactor != 1.0)
    throw ConfigError("system.dissipator_prefactor", "must be exactly 0.5 or 1");

  // initial state
  cfg.initial_state = detail::parse_state(fetch(root, "initial_state", "config"), d,
                                          "initial_state");
  if (std::abs(cfg.initial_state.norm() - 1.0) > kStateNormTol)
    throw ConfigError("initial_state", "not normalized within 1e-10");

  // grid block
  const Json& grid = fetch(root, "grid", "config");
  detail::reject_unknown_keys(grid, {"dt", "T", "store_times"}, "grid");
  const double dt = fetch(grid, "dt", "grid").get<double>();
  const double horizon = fetch(grid, "T", "grid").get<double>();
  if (dt <= 0.0) throw ConfigError("grid.dt", "must be positive");
  if (horizon < dt) throw ConfigError("grid.T", "must be at least dt");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  if (std::abs(static_cast<double>(steps) * dt - horizon) > 1e-9 * std::max(1.0, horizon))
    throw ConfigError("grid.T", "must be an integer multiple of dt");
  cfg.grid = TimeGrid{dt, steps};
  if (grid.contains("store_times")) {
    for (std::size_t i = 0; i < grid["store_times"].size(); ++i) {
      const double t = grid["store_times"][i].get<double>();
      try {
        cfg.grid.index_of(t);
      } catch (const std::invalid_argument&) {
        throw ConfigError("grid.store_times[" + std::to_string(i) + "]", "not on the grid");
      }
      if (!cfg.store_times.empty() && t <= cfg.store_times.back())
        throw ConfigError("grid.store_times", "must be strictly increasing");
      cfg.store_times.push_back(t);
    }
  } else {
    cfg.store_times = {cfg.grid.duration()};
  }

  if (root.contains("scheme"))
    cfg.scheme = detail::parse_scheme(root["scheme"].get<std::string>(), "scheme");
  cfg.renormalize = root.value("renormalize", true);

  // the convention lock: stochastic unravelings are defined for c = 1 only
  const bool stochastic = cfg.scheme == Scheme::linear || cfg.scheme == Scheme::linear_reweight ||
                          cfg.scheme == Scheme::nonlinear ||
                          cfg.scheme == Scheme::gisin_percival;
  if (stochastic && cfg.system.dissipator_prefactor != 1.0)
    throw ConfigError("system.dissipator_prefactor",
                      "stochastic schemes require the c=1 convention (noise rule dB dB* = 2dt); "
                      "use lindblads scaled by sqrt(2) instead of c=1/2");

  if (root.contains("ensemble")) {
    const Json& ens = root["ensemble"];
    detail::reject_unknown_keys(ens, {"n_traj", "master_seed"}, "ensemble");
    if (ens.contains("n_traj")) {
      if (!ens["n_traj"].is_number_integer() || ens["n_traj"].get<long long>() < 1)
        throw ConfigError("ensemble.n_traj", "must be a positive integer");
      cfg.n_traj = ens["n_traj"].get<std::size_t>();
    }
    cfg.master_seed = ens.value("master_seed", std::uint64_t{0});
  }

  if (root.contains("outputs")) {
    const Json& outputs = root["outputs"];
    detail::reject_unknown_keys(outputs, {"directory", "formats"}, "outputs");
    cfg.output_directory = outputs.value("directory", std::string());
    if (outputs.contains("formats")) {
      cfg.output_formats.clear();
      for (const auto& f : outputs["formats"]) {
        const auto name = f.get<std::string>();
        if (name != "csv" && name != "json")
          throw ConfigError("outputs.formats", "unsupported format '" + name + "'");
        cfg.output_formats.push_back(name);
      }
    }
  }

  if (root.contains("verify")) {
    cfg.verify_checks.clear();
    for (const auto& name : root["verify"]) cfg.verify_checks.push_back(name.get<std::string>());
  }

  if (root.contains("discrete")) {
    const Json& disc = root["discrete"];
    detail::reject_unknown_keys(disc, {"kraus", "steps", "mode", "n_trajectories"}, "discrete");
    DiscreteConfig dc;
    const Json& kraus = fetch(disc, "kraus", "discrete");
    if (!kraus.is_array() || kraus.empty())
      throw ConfigError("discrete.kraus", "expected a nonempty list of matrices");
    for (std::size_t k = 0; k < kraus.size(); ++k)
      dc.family.operators.push_back(
          detail::parse_matrix(kraus[k], d, "discrete.kraus[" + std::to_string(k) + "]"));
    const double deviation = kraus_validate(dc.family);
    if (deviation > kKrausTol)
      throw ConfigError("discrete.kraus", "sum K^dag K deviates from identity by " +
                                              std::to_string(deviation));
    dc.steps = disc.value("steps", std::size_t{1});
    const auto mode = disc.value("mode", std::string("exhaustive"));
    if (mode != "exhaustive" && mode != "sample")
      throw ConfigError("discrete.mode", "expected 'exhaustive' or 'sample'");
    dc.exhaustive = mode == "exhaustive";
    dc.n_trajectories = disc.value("n_trajectories", std::size_t{1});
    if (dc.n_trajectories < 1)
      throw ConfigError("discrete.n_trajectories", "must be a positive integer");
    cfg.discrete = std::move(dc);
  }

  validate(cfg.system);
  return cfg;
}

inline Json to_json(const RunConfig& cfg) {
  Json root;
  root["system"] = {{"dim", static_cast<int>(cfg.system.dim())},
                    {"hamiltonian", detail::matrix_to_json(cfg.system.hamiltonian)},
                    {"dissipator_prefactor", cfg.system.dissipator_prefactor}};
  Json lindblads = Json::array();
  for (const auto& l : cfg.system.lindblads) lindblads.push_back(detail::matrix_to_json(l));
  root["system"]["lindblads"] = lindblads;
  root["initial_state"] = detail::state_to_json(cfg.initial_state);
  root["grid"] = {{"dt", cfg.grid.dt},
                  {"T", cfg.grid.duration()},
                  {"store_times", cfg.store_times}};
  root["scheme"] = to_string(cfg.scheme);
  root["renormalize"] = cfg.renormalize;
  root["ensemble"] = {{"n_traj", cfg.n_traj}, {"master_seed", cfg.master_seed}};
  root["outputs"] = {{"directory", cfg.output_directory}, {"formats", cfg.output_formats}};
  root["verify"] = cfg.verify_checks;
  if (cfg.discrete) {
    Json kraus = Json::array();
    for (const auto& k : cfg.discrete->family.operators)
      kraus.push_back(detail::matrix_to_json(k));
    root["discrete"] = {{"kraus", kraus},
                        {"steps", cfg.discrete->steps},
                        {"mode", cfg.discrete->exhaustive ? "exhaustive" : "sample"},
                        {"n_trajectories", cfg.discrete->n_trajectories}};
  }
  return root;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  Json root;
  try {
    in >> root;
  } catch (const Json::parse_error& err) {
    throw ConfigError("config", std::string("parse error: ") + err.what());
  }
  try {
    return config_from_json(root);
  } catch (const std::invalid_argument& err) {
    // invariant violations from module validation surface as config errors
    throw ConfigError("config", err.what());
  }
}

}  // namespace qsd
