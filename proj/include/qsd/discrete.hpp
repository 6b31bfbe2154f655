// Discrete-time irreversible dynamics: Kraus channel powers, Stinespring
// block-unitary completion, the measurement-collapse Markov chain, outcome
// distributions nu_n and the likelihood-ratio martingale Z_n = k^n nu_n.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qsd/core.hpp"
#include "qsd/noise.hpp"
#include "qsd/rng.hpp"
#include "qsd/types.hpp"

namespace qsd {

inline constexpr double kKrausTol = 1e-10;
// Outcomes with p below this are excluded from the sampling support entirely.
inline constexpr double kImpossibleProb = 1e-300;

/// Channel {K_y}, y = 0..k-1, with sum_y K_y^dag K_y = I.
struct KrausFamily {
  std::vector<Matrix> operators;

  Eigen::Index dim() const { return operators.empty() ? 0 : operators.front().rows(); }
  std::size_t outcomes() const { return operators.size(); }
};

/// Max entry of |sum_y K_y^dag K_y - I|; the family is valid iff <= 1e-10.
inline double kraus_validate(const KrausFamily& family) {
  require(!family.operators.empty(), "KrausFamily: no operators");
  const Eigen::Index d = family.dim();
  Matrix acc = Matrix::Zero(d, d);
  for (const auto& k : family.operators) {
    require(k.rows() == d && k.cols() == d, "KrausFamily: inconsistent dimensions");
    acc += k.adjoint() * k;
  }
  return max_abs(acc - Matrix::Identity(d, d));
}

inline void require_valid(const KrausFamily& family) {
  const double dev = kraus_validate(family);
  require(dev <= kKrausTol,
          "KrausFamily: sum K^dag K deviates from identity by " + std::to_string(dev));
}

// ---------------------------------------------------------------------------
// Stinespring dilation.

/// Block unitary U on C^d (x) C^k with block (y,x) = L_{yx} at rows
/// [y d, (y+1) d), columns [x d, (x+1) d); block column x = 0 is the Kraus
/// family. U |phi (x) x> = sum_y (L_{yx} phi) (x) |y>.
struct DilationUnitary {
  Eigen::Index sys_dim = 0;
  std::size_t outcomes = 0;
  Matrix matrix;  // (d k) x (d k)

  Matrix block(std::size_t y, std::size_t x) const {
    return matrix.block(static_cast<Eigen::Index>(y) * sys_dim,
                        static_cast<Eigen::Index>(x) * sys_dim, sys_dim, sys_dim);
  }
};

/// Completes the isometry column (K_0; K_1; ...) to a unitary by modified
/// Gram-Schmidt over the standard basis in fixed order (rank threshold
/// 1e-12), so the completion is deterministic given the family.
inline DilationUnitary dilate(const KrausFamily& family) {
  require_valid(family);
  const Eigen::Index d = family.dim();
  const auto k = static_cast<Eigen::Index>(family.outcomes());
  const Eigen::Index dk = d * k;

  Matrix u(dk, dk);
  for (Eigen::Index y = 0; y < k; ++y)
    u.block(y * d, 0, d, d) = family.operators[static_cast<std::size_t>(y)];

  Eigen::Index filled = d;
  for (Eigen::Index candidate = 0; candidate < dk && filled < dk; ++candidate) {
    Vector w = Vector::Zero(dk);
    w(candidate) = 1.0;
    for (int pass = 0; pass < 2; ++pass)  // re-orthogonalize for unitarity
      for (Eigen::Index c = 0; c < filled; ++c) w -= u.col(c).dot(w) * u.col(c);
    const double norm = w.norm();
    if (norm > 1e-12) {
      u.col(filled) = w / norm;
      ++filled;
    }
  }
  require(filled == dk, "dilate: failed to complete unitary");
  return DilationUnitary{d, family.outcomes(), std::move(u)};
}

// ---------------------------------------------------------------------------
// Channel action.

/// Schroedinger form T*(rho) = sum_y K_y rho K_y^dag.
inline DensityMatrix channel_apply(const KrausFamily& family, const DensityMatrix& rho) {
  require(rho.dim() == family.dim(), "channel_apply: dimension mismatch");
  Matrix out = Matrix::Zero(family.dim(), family.dim());
  for (const auto& k : family.operators) out += k * rho.data * k.adjoint();
  return DensityMatrix{std::move(out)};
}

/// Heisenberg form T(X) = sum_y K_y^dag X K_y; unital, T(I) = I.
inline Matrix channel_heisenberg(const KrausFamily& family, const Matrix& x) {
  require(x.rows() == family.dim() && x.cols() == family.dim(),
          "channel_heisenberg: dimension mismatch");
  Matrix out = Matrix::Zero(family.dim(), family.dim());
  for (const auto& k : family.operators) out += k.adjoint() * x * k;
  return out;
}

// ---------------------------------------------------------------------------
// Measurement-collapse chain.

/// p(y | Psi) = ||K_y Psi||^2 for all outcomes; sums to 1 for valid families.
inline std::vector<double> outcome_probabilities(const KrausFamily& family, const Vector& psi) {
  require(psi.size() == family.dim(), "outcome_probabilities: dimension mismatch");
  std::vector<double> p(family.outcomes());
  for (std::size_t y = 0; y < family.outcomes(); ++y)
    p[y] = (family.operators[y] * psi).squaredNorm();
  return p;
}

struct CollapseResult {
  Vector state;        // K_y Psi / ||K_y Psi||
  double probability;  // ||K_y Psi||^2
};

/// Collapse onto outcome y. An outcome with vanishing probability cannot
/// occur; asking for its post-measurement state is an error.
inline CollapseResult collapse_step(const KrausFamily& family, const Vector& psi,
                                    std::size_t y) {
  require(y < family.outcomes(), "collapse_step: outcome out of range");
  require(std::abs(psi.norm() - 1.0) <= kStateNormTol,
          "collapse_step: state must be normalized");
  Vector branch = family.operators[y] * psi;
  const double p = branch.squaredNorm();
  if (p < kImpossibleProb) {
    throw std::domain_error("collapse_step: outcome " + std::to_string(y) +
                            " has zero probability and cannot occur");
  }
  branch /= std::sqrt(p);
  return CollapseResult{std::move(branch), p};
}

struct DiscreteTrajectory {
  std::vector<std::size_t> outcomes;     // y_1 .. y_n
  std::vector<Vector> states;            // Psi_0 (= phi0), Psi_1, .., Psi_n
  std::vector<double> step_probability;  // p(y_j | Psi_{j-1})
  double nu = 1.0;                       // nu_n = prod_j p_j
  double Z = 1.0;                        // Z_n = k^n nu_n
};

/// Samples the collapse chain for n steps. Outcome j is drawn by inverse CDF
/// from the counter RNG at (stream, step j), so trajectories are pure
/// functions of the seed.
inline DiscreteTrajectory sample_trajectory(const KrausFamily& family, const Vector& phi0,
                                            std::size_t n, const NoiseSeed& seed) {
  require_valid(family);
  require(std::abs(phi0.norm() - 1.0) <= kStateNormTol,
          "sample_trajectory: initial state must be normalized");
  rng::CounterRng gen(seed.master_seed, seed.stream_index);

  DiscreteTrajectory traj;
  traj.outcomes.reserve(n);
  traj.states.reserve(n + 1);
  traj.step_probability.reserve(n);
  traj.states.push_back(phi0);

  Vector psi = phi0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::vector<double> p = outcome_probabilities(family, psi);
    const double draw = gen.uniform(j, 0, rng::Purpose::outcome);
    double cumulative = 0.0;
    std::size_t picked = family.outcomes();
    for (std::size_t y = 0; y < family.outcomes(); ++y) {
      if (p[y] < kImpossibleProb) continue;  // excluded from the support
      cumulative += p[y];
      if (draw < cumulative) {
        picked = y;
        break;
      }
    }
    if (picked == family.outcomes()) {  // guard against roundoff at the top end
      for (std::size_t y = family.outcomes(); y-- > 0;) {
        if (p[y] >= kImpossibleProb) {
          picked = y;
          break;
        }
      }
    }
    auto [state, prob] = collapse_step(family, psi, picked);
    psi = std::move(state);
    traj.outcomes.push_back(picked);
    traj.states.push_back(psi);
    traj.step_probability.push_back(prob);
    traj.nu *= prob;
  }
  traj.Z = std::pow(static_cast<double>(family.outcomes()), static_cast<double>(n)) * traj.nu;
  return traj;
}

/// nu_n and the collapsed state from the single-shot product formula
/// Psi_n = K_{y_n} ... K_{y_1} phi0 / ||...||.
inline CollapseResult collapse_closed_form(const KrausFamily& family, const Vector& phi0,
                                           const std::vector<std::size_t>& outcomes) {
  Vector chi = phi0;
  for (const std::size_t y : outcomes) chi = family.operators[y] * chi;
  const double nu = chi.squaredNorm();
  if (nu < kImpossibleProb) {
    throw std::domain_error("collapse_closed_form: outcome string has zero probability");
  }
  return CollapseResult{Vector(chi / std::sqrt(nu)), nu};
}

// ---------------------------------------------------------------------------
// Coarse graining sum_y |Psi_n(y)><Psi_n(y)| nu_n(y).

inline constexpr std::size_t kExhaustiveLimit = 1'000'000;

/// Exhaustive mode: sums |chi><chi| over all k^n outcome strings, where chi
/// is the unnormalized product K_{y_n}...K_{y_1} phi0 (so each term already
/// carries its nu weight). Equals n applications of the channel to
/// |phi0><phi0| exactly.
inline DensityMatrix coarse_grain_discrete(const KrausFamily& family, const Vector& phi0,
                                           std::size_t n) {
  require_valid(family);
  require(std::abs(phi0.norm() - 1.0) <= kStateNormTol,
          "coarse_grain_discrete: initial state must be normalized");
  double count = std::pow(static_cast<double>(family.outcomes()), static_cast<double>(n));
  require(count <= static_cast<double>(kExhaustiveLimit),
          "coarse_grain_discrete: k^n exceeds the exhaustive-mode limit");

  Matrix acc = Matrix::Zero(family.dim(), family.dim());
  std::vector<Vector> stack;
  stack.reserve(n + 1);
  stack.push_back(phi0);

  // Depth-first over outcome strings; states on the stack are unnormalized.
  std::vector<std::size_t> cursor(n, 0);
  if (n == 0) return DensityMatrix::pure(phi0);
  std::size_t depth = 0;
  while (true) {
    while (depth < n) {
      stack.push_back(family.operators[cursor[depth]] * stack.back());
      ++depth;
    }
    acc += stack.back() * stack.back().adjoint();
    // backtrack to the next string
    while (depth > 0) {
      stack.pop_back();
      --depth;
      if (++cursor[depth] < family.outcomes()) break;
      cursor[depth] = 0;
      if (depth == 0) return DensityMatrix{std::move(acc)};
    }
  }
}

/// Monte Carlo mode: averages |Psi_n><Psi_n| over sampled trajectories
/// (trajectory i uses stream index i).
inline DensityMatrix coarse_grain_discrete_mc(const KrausFamily& family, const Vector& phi0,
                                              std::size_t n, std::size_t n_samples,
                                              std::uint64_t master_seed) {
  require(n_samples >= 1, "coarse_grain_discrete_mc: need at least one sample");
  Matrix acc = Matrix::Zero(family.dim(), family.dim());
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto traj = sample_trajectory(family, phi0, n, NoiseSeed{master_seed, i});
    acc += traj.states.back() * traj.states.back().adjoint();
  }
  return DensityMatrix{Matrix(acc / static_cast<double>(n_samples))};
}

}  // namespace qsd
