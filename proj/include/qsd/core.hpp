// System-space operators, the GKSL generator in both pictures, deterministic
// master-equation integration and complete-positivity diagnostics.
//
// Conventions fixed here and relied on everywhere else:
//   * dissipator prefactor c is an explicit field of OperatorSet, c in {1/2, 1};
//     generator(c=1, {L_k}) == generator(c=1/2, {sqrt(2) L_k}).
//   * operators are vectorized row-major: vec(X)[i*d + j] = X(i,j), so that
//     vec(A X B) = (A kron B^T) vec(X).
#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "qsd/types.hpp"

namespace qsd {

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kDensityTol = 1e-10;
inline constexpr double kEigenvalueFloor = -1e-9;
inline constexpr double kStateNormTol = 1e-10;

/// Hamiltonian H plus Lindblad operators L_1..L_n and the dissipator
/// normalization they are meant to be used with.
struct OperatorSet {
  Matrix hamiltonian;
  std::vector<Matrix> lindblads;
  double dissipator_prefactor = 1.0;

  Eigen::Index dim() const { return hamiltonian.rows(); }
  std::size_t channels() const { return lindblads.size(); }
};

inline void validate(const OperatorSet& ops) {
  require(ops.hamiltonian.rows() > 0 && ops.hamiltonian.rows() == ops.hamiltonian.cols(),
          "OperatorSet: hamiltonian must be a nonempty square matrix");
  require(hermiticity_error(ops.hamiltonian) <= kHermitianTol,
          "OperatorSet: hamiltonian is not Hermitian within 1e-12");
  for (std::size_t k = 0; k < ops.lindblads.size(); ++k) {
    require(ops.lindblads[k].rows() == ops.dim() && ops.lindblads[k].cols() == ops.dim(),
            "OperatorSet: lindblad " + std::to_string(k) + " has wrong dimension");
  }
  require(ops.dissipator_prefactor == 0.5 || ops.dissipator_prefactor == 1.0,
          "OperatorSet: dissipator_prefactor must be exactly 1/2 or 1");
}

/// Same generator, expressed in another prefactor convention
/// (L_k -> sqrt(c_old/c_new) L_k).
inline OperatorSet with_prefactor(const OperatorSet& ops, double c_new) {
  require(c_new == 0.5 || c_new == 1.0, "with_prefactor: target must be 1/2 or 1");
  OperatorSet out = ops;
  const double scale = std::sqrt(ops.dissipator_prefactor / c_new);
  for (auto& l : out.lindblads) l *= scale;
  out.dissipator_prefactor = c_new;
  return out;
}

struct DensityMatrix {
  Matrix data;

  Eigen::Index dim() const { return data.rows(); }

  static DensityMatrix pure(const Vector& psi) {
    return DensityMatrix{psi * psi.adjoint()};
  }

  double trace_deviation() const { return std::abs(data.trace() - Complex(1.0, 0.0)); }
  double hermiticity() const { return hermiticity_error(data); }
  double min_eigenvalue() const { return hermitian_eigenvalues(data).minCoeff(); }

  void validate(double eig_floor = kEigenvalueFloor) const {
    require(data.rows() == data.cols() && data.rows() > 0, "DensityMatrix: not square");
    require(hermiticity() <= kDensityTol, "DensityMatrix: not Hermitian within 1e-10");
    require(trace_deviation() <= kDensityTol, "DensityMatrix: trace not 1 within 1e-10");
    require(min_eigenvalue() >= eig_floor, "DensityMatrix: negative eigenvalue below floor");
  }
};

// ---------------------------------------------------------------------------
// Row-major vectorization and superoperators.

inline Vector vectorize(const Matrix& x) {
  const Eigen::Index d = x.rows();
  Vector v(d * x.cols());
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) v(i * x.cols() + j) = x(i, j);
  return v;
}

inline Matrix unvectorize(const Vector& v, Eigen::Index d) {
  require(v.size() == d * d, "unvectorize: size mismatch");
  Matrix x(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = v(i * d + j);
  return x;
}

/// kron(A, B) with row-major block layout.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// d^2 x d^2 matrix acting on row-major vectorized d x d operators.
struct Superoperator {
  Eigen::Index dim = 0;  // system dimension d
  Matrix mat;            // d^2 x d^2

  Matrix apply(const Matrix& x) const {
    require(x.rows() == dim && x.cols() == dim, "Superoperator::apply: dimension mismatch");
    return unvectorize(mat * vectorize(x), dim);
  }

  static Superoperator identity(Eigen::Index d) {
    return Superoperator{d, Matrix::Identity(d * d, d * d)};
  }
};

enum class Picture { heisenberg, schrodinger };

// ---------------------------------------------------------------------------
// GKSL generator.

/// L(X) = i[H,X] - c sum_k (Lk^dag Lk X + X Lk^dag Lk - 2 Lk^dag X Lk).
inline Matrix generator_heisenberg(const OperatorSet& ops, const Matrix& x) {
  const Eigen::Index d = ops.dim();
  require(x.rows() == d && x.cols() == d, "generator_heisenberg: dimension mismatch");
  const Complex i_unit(0.0, 1.0);
  Matrix out = i_unit * (ops.hamiltonian * x - x * ops.hamiltonian);
  const double c = ops.dissipator_prefactor;
  for (const auto& l : ops.lindblads) {
    const Matrix ll = l.adjoint() * l;
    out.noalias() -= c * (ll * x + x * ll - 2.0 * l.adjoint() * x * l);
  }
  return out;
}

/// Schroedinger form: drho/dt = -i[H,rho] - c sum_k (Lk^dag Lk rho + rho Lk^dag Lk - 2 Lk rho Lk^dag).
inline Matrix generator_schrodinger(const OperatorSet& ops, const Matrix& rho) {
  const Eigen::Index d = ops.dim();
  require(rho.rows() == d && rho.cols() == d, "generator_schrodinger: dimension mismatch");
  const Complex i_unit(0.0, 1.0);
  Matrix out = -i_unit * (ops.hamiltonian * rho - rho * ops.hamiltonian);
  const double c = ops.dissipator_prefactor;
  for (const auto& l : ops.lindblads) {
    const Matrix ll = l.adjoint() * l;
    out.noalias() -= c * (ll * rho + rho * ll - 2.0 * l * rho * l.adjoint());
  }
  return out;
}

inline Matrix generator_schrodinger(const OperatorSet& ops, const DensityMatrix& rho) {
  return generator_schrodinger(ops, rho.data);
}

/// Vectorized generator; unvectorize(mat * vec(X)) equals the pointwise form.
inline Superoperator liouvillian_matrix(const OperatorSet& ops, Picture picture) {
  const Eigen::Index d = ops.dim();
  const Matrix id = Matrix::Identity(d, d);
  const Complex i_unit(0.0, 1.0);
  const double c = ops.dissipator_prefactor;
  Matrix m = Matrix::Zero(d * d, d * d);
  if (picture == Picture::heisenberg) {
    m = i_unit * (kron(ops.hamiltonian, id) - kron(id, ops.hamiltonian.transpose()));
    for (const auto& l : ops.lindblads) {
      const Matrix ll = l.adjoint() * l;
      m -= c * (kron(ll, id) + kron(id, ll.transpose()) - 2.0 * kron(l.adjoint(), l.transpose()));
    }
  } else {
    m = -i_unit * (kron(ops.hamiltonian, id) - kron(id, ops.hamiltonian.transpose()));
    for (const auto& l : ops.lindblads) {
      const Matrix ll = l.adjoint() * l;
      m -= c * (kron(ll, id) + kron(id, ll.transpose()) - 2.0 * kron(l, l.adjoint().transpose()));
    }
  }
  return Superoperator{d, std::move(m)};
}

/// T_t = exp(t L) via Eigen's scaling-and-squaring matrix exponential.
inline Superoperator semigroup_exact(const OperatorSet& ops, double t,
                                     Picture picture = Picture::heisenberg) {
  require(t >= 0.0, "semigroup_exact: t must be nonnegative");
  Superoperator gen = liouvillian_matrix(ops, picture);
  gen.mat = (t * gen.mat).exp();
  return gen;
}

// ---------------------------------------------------------------------------
// Deterministic integration (classical RK4, fixed step).

/// Integrates the Schroedinger-picture master equation from rho0 over [0, T].
/// Returns states on the full grid (T/dt + 1 entries, including rho0). The
/// state is re-Hermitized after every step; the trace is never renormalized.
/// Throws if a stored state violates the density-matrix invariants,
/// identifying the offending step.
inline std::vector<DensityMatrix> master_evolve(const OperatorSet& ops,
                                                const DensityMatrix& rho0, double T,
                                                double dt) {
  validate(ops);
  require(dt > 0.0, "master_evolve: dt must be positive");
  require(T >= dt, "master_evolve: T must be at least dt");
  rho0.validate();
  require(rho0.dim() == ops.dim(), "master_evolve: state dimension mismatch");

  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  require(std::abs(steps * dt - T) <= 1e-9 * std::max(1.0, T),
          "master_evolve: T must be an integer multiple of dt");

  std::vector<DensityMatrix> out;
  out.reserve(steps + 1);
  out.push_back(rho0);
  Matrix rho = rho0.data;
  Matrix k1, k2, k3, k4;
  for (std::size_t j = 0; j < steps; ++j) {
    k1 = generator_schrodinger(ops, rho);
    k2 = generator_schrodinger(ops, Matrix(rho + 0.5 * dt * k1));
    k3 = generator_schrodinger(ops, Matrix(rho + 0.5 * dt * k2));
    k4 = generator_schrodinger(ops, Matrix(rho + dt * k3));
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = hermitize(rho);

    DensityMatrix state{rho};
    const double tr_dev = state.trace_deviation();
    const double min_eig = state.min_eigenvalue();
    if (tr_dev > kDensityTol || min_eig < kEigenvalueFloor) {
      std::ostringstream msg;
      msg << "master_evolve: invariant violated at step " << (j + 1) << " (t=" << (j + 1) * dt
          << "): trace deviation " << tr_dev << ", min eigenvalue " << min_eig;
      throw std::runtime_error(msg.str());
    }
    out.push_back(std::move(state));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Complete-positivity diagnostics.

/// Choi matrix sum_ij E_ij kron T(E_ij) built by applying T to matrix units.
inline Matrix choi_matrix(const Superoperator& t) {
  const Eigen::Index d = t.dim;
  Matrix choi(d * d, d * d);
  Matrix unit = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      unit(i, j) = 1.0;
      choi.block(i * d, j * d, d, d) = t.apply(unit);
      unit(i, j) = 0.0;
    }
  }
  return choi;
}

struct CpCheck {
  double min_eigenvalue = 0.0;
  bool is_cp = false;
};

inline CpCheck choi_check(const Superoperator& t) {
  const Matrix choi = choi_matrix(t);
  require(hermiticity_error(choi) <= kDensityTol, "choi_check: Choi matrix not Hermitian");
  const double min_eig = hermitian_eigenvalues(choi).minCoeff();
  return CpCheck{min_eig, min_eig >= kEigenvalueFloor};
}

}  // namespace qsd
