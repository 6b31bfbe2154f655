// Parallel Monte Carlo over trajectories, coarse-graining to density
// matrices, standard-error estimation and cross-method comparison against
// the deterministic master equation.
//
// Determinism: trajectory i always uses RNG stream i, contributions are
// accumulated into fixed-size chunks in index order, and chunk partials are
// reduced in chunk order, so the result is bitwise identical for any worker
// count.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qsd/core.hpp"
#include "qsd/noise.hpp"
#include "qsd/rng.hpp"
#include "qsd/types.hpp"
#include "qsd/unravel.hpp"

namespace qsd {

enum class Scheme {
  linear,           // E[|psi><psi|], unnormalized linear solution
  linear_reweight,  // E[Z |Psi><Psi|], normalized state times Girsanov weight
  nonlinear,        // E[|Psi><Psi|], norm-preserving diffusion
  gisin_percival,   // E[|Psi><Psi|], Gisin-Percival form
  discrete,         // Kraus collapse chain (handled by the discrete module)
};

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::linear: return "linear";
    case Scheme::linear_reweight: return "linear+reweight";
    case Scheme::nonlinear: return "nonlinear";
    case Scheme::gisin_percival: return "gisin-percival";
    case Scheme::discrete: return "discrete";
  }
  return "?";
}

struct EnsembleConfig {
  std::size_t n_traj = 1;
  std::uint64_t master_seed = 0;
  TimeGrid grid;
  Scheme scheme = Scheme::nonlinear;
  bool renormalize = true;
  std::vector<double> store_times;  // must lie on the grid
};

struct EnsembleResult {
  std::vector<double> times;
  std::vector<DensityMatrix> rho_hat;
  std::vector<double> std_error;  // max entrywise standard error per store time
  std::size_t n_traj = 0;
};

namespace detail {

inline constexpr std::size_t kChunkSize = 64;

inline UnravelScheme unravel_scheme(Scheme s) {
  switch (s) {
    case Scheme::linear:
    case Scheme::linear_reweight: return UnravelScheme::linear;
    case Scheme::nonlinear: return UnravelScheme::nonlinear;
    case Scheme::gisin_percival: return UnravelScheme::gisin_percival;
    case Scheme::discrete: break;
  }
  throw std::invalid_argument("ensemble: the discrete scheme needs a Kraus chain; "
                              "use the discrete workflow");
}

/// Rank-one contribution of one trajectory state under the given scheme.
inline void add_contribution(Scheme scheme, const Vector& state, Matrix& sum,
                             RealMatrix& sum_sq) {
  thread_local Matrix contrib;
  switch (scheme) {
    case Scheme::linear:
      contrib = state * state.adjoint();
      break;
    case Scheme::linear_reweight: {
      const double z = state.squaredNorm();
      if (z > 0.0) {
        const Vector normalized = state / std::sqrt(z);
        contrib = z * (normalized * normalized.adjoint());
      } else {
        contrib = state * state.adjoint();
      }
      break;
    }
    case Scheme::nonlinear:
    case Scheme::gisin_percival: {
      const double ns = state.squaredNorm();
      contrib = (state * state.adjoint()) / (ns > 0.0 ? ns : 1.0);
      break;
    }
    case Scheme::discrete:
      throw std::logic_error("add_contribution: discrete scheme");
  }
  sum += contrib;
  sum_sq += contrib.cwiseAbs2();
}

}  // namespace detail

/// Runs cfg.n_traj trajectories and averages rank-one projectors at the
/// store times. Trajectory i uses stream index i of the master seed, so any
/// single trajectory can be reproduced in isolation.
inline EnsembleResult run_ensemble(const OperatorSet& ops, const Vector& psi0,
                                   const EnsembleConfig& cfg, unsigned n_threads = 0) {
  validate(ops);
  validate(cfg.grid);
  require(cfg.n_traj >= 1, "run_ensemble: n_traj must be at least 1");
  require(!cfg.store_times.empty(), "run_ensemble: no store times");
  const UnravelScheme scheme = detail::unravel_scheme(cfg.scheme);
  (void)scheme;  // validated here, instantiated per worker below

  std::vector<std::size_t> store_idx;
  store_idx.reserve(cfg.store_times.size());
  for (const double t : cfg.store_times) store_idx.push_back(cfg.grid.index_of(t));
  require(std::is_sorted(store_idx.begin(), store_idx.end()),
          "run_ensemble: store_times must be increasing");

  const std::size_t n_stores = store_idx.size();
  const Eigen::Index d = ops.dim();
  const std::size_t n_chunks = (cfg.n_traj + detail::kChunkSize - 1) / detail::kChunkSize;

  std::vector<std::vector<Matrix>> chunk_sum(n_chunks);
  std::vector<std::vector<RealMatrix>> chunk_sq(n_chunks);

  std::atomic<std::size_t> next_chunk{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  // The sampled increments are standard complex Brownian. The linear and
  // gisin-percival equations are driven by exactly that (mu for the linear
  // pair, mu_G's B' for GP). The nonlinear norm-preserving form is written in terms
  // of the mu-Brownian, but its *physical* trajectories live under mu_G:
  // coarse graining without weights requires dB = dB' + 2 <L_k>^* dt per the
  // Girsanov substitution. Feeding it unshifted reference noise and averaging
  // unweighted would estimate E_mu[|psi><psi| / <psi|psi>], which is not
  // rho_t.
  const bool shift_increments = cfg.scheme == Scheme::nonlinear;

  auto worker = [&]() {
    Unraveler engine(ops, detail::unravel_scheme(cfg.scheme), cfg.renormalize);
    std::vector<Complex> db(ops.channels());
    const double scale = std::sqrt(cfg.grid.dt);
    while (true) {
      const std::size_t c = next_chunk.fetch_add(1);
      if (c >= n_chunks) return;
      const std::size_t begin = c * detail::kChunkSize;
      const std::size_t end = std::min(begin + detail::kChunkSize, cfg.n_traj);
      std::vector<Matrix> sum(n_stores, Matrix::Zero(d, d));
      std::vector<RealMatrix> sq(n_stores, RealMatrix::Zero(d, d));
      try {
        for (std::size_t i = begin; i < end; ++i) {
          rng::CounterRng gen(cfg.master_seed, i);
          engine.reset(psi0);
          std::size_t s = 0;
          if (s < n_stores && store_idx[s] == 0) {
            detail::add_contribution(cfg.scheme, engine.state(), sum[s], sq[s]);
            ++s;
          }
          for (std::size_t j = 0; j < cfg.grid.steps && s < n_stores; ++j) {
            for (std::size_t k = 0; k < ops.channels(); ++k) {
              const auto [z1, z2] = gen.normal_pair(j, static_cast<std::uint32_t>(k));
              db[k] = Complex(scale * z1, scale * z2);
            }
            if (shift_increments) {
              const Vector ell = expectations(ops, engine.state(), psi0);
              for (std::size_t k = 0; k < ops.channels(); ++k)
                db[k] += 2.0 * std::conj(ell(k)) * cfg.grid.dt;
            }
            engine.step(db, cfg.grid.dt);
            if (store_idx[s] == j + 1) {
              detail::add_contribution(cfg.scheme, engine.state(), sum[s], sq[s]);
              ++s;
            }
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) {
          try {
            std::throw_with_nested(std::runtime_error(
                "run_ensemble: trajectory chunk starting at index " + std::to_string(begin)));
          } catch (...) {
            first_error = std::current_exception();
          }
        }
        return;
      }
      chunk_sum[c] = std::move(sum);
      chunk_sq[c] = std::move(sq);
    }
  };

  unsigned workers = n_threads != 0 ? n_threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_chunks));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // Fixed-order reduction over chunks.
  std::vector<Matrix> total(n_stores, Matrix::Zero(d, d));
  std::vector<RealMatrix> total_sq(n_stores, RealMatrix::Zero(d, d));
  for (std::size_t c = 0; c < n_chunks; ++c) {
    for (std::size_t s = 0; s < n_stores; ++s) {
      total[s] += chunk_sum[c][s];
      total_sq[s] += chunk_sq[c][s];
    }
  }

  const auto n = static_cast<double>(cfg.n_traj);
  EnsembleResult result;
  result.times = cfg.store_times;
  result.n_traj = cfg.n_traj;
  result.rho_hat.reserve(n_stores);
  result.std_error.reserve(n_stores);
  for (std::size_t s = 0; s < n_stores; ++s) {
    Matrix mean = total[s] / n;
    double max_err = 0.0;
    if (cfg.n_traj > 1) {
      const RealMatrix variance =
          ((total_sq[s] - n * mean.cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0);
      max_err = std::sqrt(variance.maxCoeff() / n);
    }
    result.rho_hat.push_back(DensityMatrix{std::move(mean)});
    result.std_error.push_back(max_err);
  }
  return result;
}

/// Trace distance (1/2) sum of singular values of rho1 - rho2.
inline double trace_distance(const Matrix& rho1, const Matrix& rho2) {
  require(rho1.rows() == rho2.rows() && rho1.cols() == rho2.cols(),
          "trace_distance: dimension mismatch");
  const RealVector eigs = hermitian_eigenvalues(rho1 - rho2);
  return 0.5 * eigs.cwiseAbs().sum();
}

inline double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  return trace_distance(rho1.data, rho2.data);
}

struct ComparisonRow {
  double time = 0.0;
  double distance = 0.0;
  double std_error = 0.0;
  bool pass = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double abs_floor = 0.0;
  bool pass = true;
};

// Euler-Maruyama carries an O(dt) weak bias, so the comparison floor cannot
// be tightened below it; 0.02 corresponds to dt = 1e-3 at desk scale.
inline constexpr double kDefaultComparisonFloor = 0.02;

/// Unraveling claim under test: the trajectory ensemble reproduces the
/// master-equation state at every store time, pass iff
/// trace_distance <= max(abs_floor, 5 * stderr).
inline ComparisonReport compare_to_master(const OperatorSet& ops, const Vector& psi0,
                                          const EnsembleConfig& cfg,
                                          double abs_floor = kDefaultComparisonFloor,
                                          unsigned n_threads = 0) {
  const EnsembleResult mc = run_ensemble(ops, psi0, cfg, n_threads);
  const auto master =
      master_evolve(ops, DensityMatrix::pure(psi0), cfg.grid.duration(), cfg.grid.dt);

  ComparisonReport report;
  report.abs_floor = abs_floor;
  for (std::size_t s = 0; s < mc.times.size(); ++s) {
    const std::size_t idx = cfg.grid.index_of(mc.times[s]);
    ComparisonRow row;
    row.time = mc.times[s];
    row.distance = trace_distance(mc.rho_hat[s].data, master[idx].data);
    row.std_error = mc.std_error[s];
    row.pass = row.distance <= std::max(abs_floor, 5.0 * row.std_error);
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace qsd
