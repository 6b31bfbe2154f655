// Stochastic Schroedinger integrators driven by complex Brownian paths:
//
//   linear          d psi = sum_k L_k psi dB_k - (iH + sum_k L_k^dag L_k) psi dt
//   nonlinear       d Psi = sum_k (L_k - <L_k>) Psi dB_k
//                           - [iH + sum_k (L_k^dag L_k - |<L_k>|^2)] Psi dt
//   gisin_percival  d Psi = sum_k (L_k - <L_k>) Psi dB'_k
//                           - [iH + sum_k (L_k^dag L_k + |<L_k>|^2 - 2 L_k <L_k>^*)] Psi dt
//
// All schemes are Euler-Maruyama with state-dependent coefficients frozen at
// the left endpoint of each cell. They require the c = 1 dissipator
// convention: the driving noise satisfies dB dB^* = 2 dt, and feeding c = 1/2
// operators into these equations is the classic silent factor-2 bug, so it is
// rejected up front.
//
// The squared norm of the linear solution is the Girsanov weight
// Z_t = <psi_t|psi_t> relating the physical measure to the reference Wiener
// measure; it is recorded alongside each trajectory.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qsd/core.hpp"
#include "qsd/noise.hpp"
#include "qsd/types.hpp"

namespace qsd {

inline constexpr double kDefaultEpsNorm = 1e-14;

/// Unravelings are defined for the c=1 (doubled-noise) convention only.
inline void require_unraveling_convention(const OperatorSet& ops) {
  if (ops.dissipator_prefactor != 1.0) {
    throw std::invalid_argument(
        "stochastic unraveling requires the c=1 dissipator convention "
        "(generator with c=1 and {L_k} equals c=1/2 with {sqrt(2) L_k}); "
        "convert the operator set explicitly instead of reinterpreting it");
  }
}

/// ell_k = <psi|L_k|psi>/<psi|psi> when the norm exceeds eps_norm, otherwise
/// the frozen initial-state expectation <psi0|L_k|psi0>.
inline Vector expectations(const OperatorSet& ops, const Vector& psi, const Vector& psi0,
                           double eps_norm = kDefaultEpsNorm) {
  require(eps_norm > 0.0, "expectations: eps_norm must be positive");
  const double ns = psi.squaredNorm();
  Vector ell(ops.channels());
  for (std::size_t k = 0; k < ops.channels(); ++k) {
    if (ns > eps_norm) {
      ell(k) = psi.dot(ops.lindblads[k] * psi) / ns;
    } else {
      ell(k) = psi0.dot(ops.lindblads[k] * psi0);
    }
  }
  return ell;
}

enum class UnravelScheme { linear, nonlinear, gisin_percival };

inline const char* to_string(UnravelScheme s) {
  switch (s) {
    case UnravelScheme::linear: return "linear";
    case UnravelScheme::nonlinear: return "nonlinear";
    case UnravelScheme::gisin_percival: return "gisin-percival";
  }
  return "?";
}

/// One-trajectory Euler-Maruyama engine with preallocated workspace.
/// A single instance is sequential; distinct instances are independent.
class Unraveler {
 public:
  Unraveler(const OperatorSet& ops, UnravelScheme scheme, bool renormalize = true,
            double eps_norm = kDefaultEpsNorm)
      : ops_(ops), scheme_(scheme), renormalize_(renormalize), eps_norm_(eps_norm) {
    validate(ops_);
    require_unraveling_convention(ops_);
    const Eigen::Index d = ops_.dim();
    drift_ = Complex(0.0, -1.0) * ops_.hamiltonian;
    for (const auto& l : ops_.lindblads) drift_ -= l.adjoint() * l;
    lpsi_.assign(ops_.channels(), Vector(d));
    ell_ = Vector::Zero(ops_.channels());
    ell0_ = Vector::Zero(ops_.channels());
    tmp_.resize(d);
    next_.resize(d);
  }

  void reset(const Vector& psi0) {
    require(psi0.size() == ops_.dim(), "Unraveler: state dimension mismatch");
    require(std::abs(psi0.norm() - 1.0) <= kStateNormTol,
            "Unraveler: initial state must be normalized");
    psi_ = psi0;
    psi0_ = psi0;
    for (std::size_t k = 0; k < ops_.channels(); ++k)
      ell0_(k) = psi0.dot(ops_.lindblads[k] * psi0);
    step_ = 0;
  }

  /// Advance one cell with complex increments dB (one per channel).
  void step(std::span<const Complex> db, double dt) {
    const std::size_t n = ops_.channels();
    require(db.size() == n, "Unraveler::step: increment count mismatch");

    for (std::size_t k = 0; k < n; ++k) lpsi_[k].noalias() = ops_.lindblads[k] * psi_;
    const double ns = psi_.squaredNorm();
    double ell2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      ell_(k) = ns > eps_norm_ ? psi_.dot(lpsi_[k]) / ns : ell0_(k);
      ell2 += std::norm(ell_(k));
    }

    tmp_.noalias() = drift_ * psi_;  // -(iH + sum L^dag L) psi
    next_ = psi_;
    switch (scheme_) {
      case UnravelScheme::linear:
        next_ += dt * tmp_;
        for (std::size_t k = 0; k < n; ++k) next_ += db[k] * lpsi_[k];
        break;
      case UnravelScheme::nonlinear:
        next_ += dt * (tmp_ + ell2 * psi_);
        for (std::size_t k = 0; k < n; ++k) next_ += db[k] * (lpsi_[k] - ell_(k) * psi_);
        break;
      case UnravelScheme::gisin_percival:
        next_ += dt * (tmp_ - ell2 * psi_);
        for (std::size_t k = 0; k < n; ++k) {
          next_ += (2.0 * dt * std::conj(ell_(k))) * lpsi_[k];
          next_ += db[k] * (lpsi_[k] - ell_(k) * psi_);
        }
        break;
    }
    if (renormalize_ && scheme_ != UnravelScheme::linear) next_ /= next_.norm();
    if (!next_.allFinite()) {
      throw std::runtime_error("Unraveler: non-finite amplitudes at step " +
                               std::to_string(step_ + 1));
    }
    psi_.swap(next_);
    ++step_;
  }

  const Vector& state() const { return psi_; }
  /// ell evaluated at the left endpoint of the most recent step.
  const Vector& last_expectations() const { return ell_; }
  const Vector& initial_state() const { return psi0_; }
  std::size_t steps_taken() const { return step_; }
  const OperatorSet& ops() const { return ops_; }

 private:
  OperatorSet ops_;
  UnravelScheme scheme_;
  bool renormalize_;
  double eps_norm_;
  Matrix drift_;
  Vector psi_, psi0_, ell_, ell0_, tmp_, next_;
  std::vector<Vector> lpsi_;
  std::size_t step_ = 0;
};

// ---------------------------------------------------------------------------
// Full-trajectory records.

struct TrajectoryRecord {
  TimeGrid grid;
  std::vector<Vector> psi;              // raw integrator states (steps+1)
  std::vector<Vector> Psi;              // normalized states
  std::vector<double> norm_sq;          // <psi_j|psi_j>
  std::vector<double> girsanov_weight;  // Z_j = norm_sq[j]
  std::vector<Complex> running_ldB;     // int sum_k ell_k dB_k
  std::vector<double> running_l2;       // int sum_k |ell_k|^2 ds
};

namespace detail {

inline TrajectoryRecord evolve_record(const OperatorSet& ops, const Vector& psi0,
                                      const ComplexNoisePath& path, UnravelScheme scheme,
                                      bool renormalize) {
  require(path.channels() == ops.channels(), "evolve: path channel count mismatch");
  Unraveler engine(ops, scheme, renormalize);
  engine.reset(psi0);

  const std::size_t m = path.grid.steps;
  TrajectoryRecord rec;
  rec.grid = path.grid;
  rec.psi.reserve(m + 1);
  rec.Psi.reserve(m + 1);
  rec.norm_sq.reserve(m + 1);
  rec.girsanov_weight.reserve(m + 1);
  rec.running_ldB.reserve(m + 1);
  rec.running_l2.reserve(m + 1);

  auto push_state = [&rec](const Vector& state) {
    const double ns = state.squaredNorm();
    rec.psi.push_back(state);
    rec.Psi.push_back(ns > 0.0 ? Vector(state / std::sqrt(ns)) : state);
    rec.norm_sq.push_back(ns);
    rec.girsanov_weight.push_back(ns);
  };

  push_state(psi0);
  rec.running_ldB.push_back(0.0);
  rec.running_l2.push_back(0.0);

  std::vector<Complex> db(ops.channels());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < ops.channels(); ++k) db[k] = path.increments(j, k);
    engine.step(db, path.grid.dt);
    const Vector& ell = engine.last_expectations();
    Complex ldb = 0.0;
    double l2 = 0.0;
    for (std::size_t k = 0; k < ops.channels(); ++k) {
      ldb += ell(k) * db[k];
      l2 += std::norm(ell(k));
    }
    rec.running_ldB.push_back(rec.running_ldB.back() + ldb);
    rec.running_l2.push_back(rec.running_l2.back() + l2 * path.grid.dt);
    push_state(engine.state());
  }
  return rec;
}

}  // namespace detail

inline TrajectoryRecord linear_sse_evolve(const OperatorSet& ops, const Vector& psi0,
                                          const ComplexNoisePath& path) {
  return detail::evolve_record(ops, psi0, path, UnravelScheme::linear, false);
}

inline TrajectoryRecord nonlinear_evolve(const OperatorSet& ops, const Vector& psi0,
                                         const ComplexNoisePath& path, bool renormalize) {
  return detail::evolve_record(ops, psi0, path, UnravelScheme::nonlinear, renormalize);
}

inline TrajectoryRecord gisin_percival_evolve(const OperatorSet& ops, const Vector& psi0,
                                              const ComplexNoisePath& path, bool renormalize) {
  return detail::evolve_record(ops, psi0, path, UnravelScheme::gisin_percival, renormalize);
}

/// Norm recomputed from the running integrals,
///   <psi_t|psi_t> = exp( 2 Re int sum_k ell_k dB_k - 2 int sum_k |ell_k|^2 ds ),
/// an independent route that matches the recorded norm to O(dt).
inline std::vector<double> norm_closed_form(const TrajectoryRecord& rec) {
  std::vector<double> out(rec.running_ldB.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = std::exp(2.0 * rec.running_ldB[j].real() - 2.0 * rec.running_l2[j]);
  return out;
}

/// Explicit solution Psi_t = Phi_t(-<L>_psi) psi_t built from a linear-SSE
/// record and the same noise path. The Phi factor uses the non-anticipating
/// displacement f(t_j) = -ell(psi_j); its exponent is
/// exp(-int ell dB + int |ell|^2 ds), which keeps |Phi|^2 <psi|psi> = 1.
inline std::vector<Vector> explicit_solution(const OperatorSet& ops,
                                             const TrajectoryRecord& rec,
                                             const ComplexNoisePath& path,
                                             double eps_norm = kDefaultEpsNorm) {
  require(rec.grid == path.grid, "explicit_solution: record/path grid mismatch");
  require(rec.psi.size() == path.grid.steps + 1, "explicit_solution: incomplete record");
  require(path.channels() == ops.channels(), "explicit_solution: channel mismatch");

  TestFunction f = TestFunction::zero(rec.grid, ops.channels());
  for (std::size_t j = 0; j < rec.grid.steps; ++j) {
    const Vector ell = expectations(ops, rec.psi[j], rec.psi[0], eps_norm);
    f.values.row(j) = -ell.transpose();
  }
  const std::vector<Complex> phi = phi_process(f, path);

  std::vector<Vector> out(rec.psi.size());
  for (std::size_t j = 0; j < rec.psi.size(); ++j) out[j] = phi[j] * rec.psi[j];
  return out;
}

/// Z_t = <psi_t|psi_t>: the Radon-Nikodym factor of the Girsanov change of
/// measure, mu_G(dB) = Z_t mu(dB).
inline double girsanov_weight(const TrajectoryRecord& rec, double t) {
  return rec.norm_sq[rec.grid.index_of(t)];
}

}  // namespace qsd
