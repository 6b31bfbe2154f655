// Transformations of (L, H) that leave the GKSL generator invariant:
// translation by a complex vector and rotation by a unitary channel mixer.
//
// The Hamiltonian shift accompanying a translation depends on the dissipator
// convention. Requiring i[dH, X] to cancel the dissipator's first-order
// terms gives dH = (c/i) sum_k (l_k^* L_k - l_k L_k^dag): the textbook
// 1/(2i) coefficient for c = 1/2, and twice that for the c = 1 convention.
#pragma once

#include <cstddef>
#include <vector>

#include "qsd/core.hpp"
#include "qsd/types.hpp"

namespace qsd {

/// Translation parameter: one row per grid cell for time-dependent f, a
/// single row for the constant case.
struct TranslationParam {
  Matrix values;  // rows x channels

  static TranslationParam constant(const Vector& ell) {
    return TranslationParam{ell.transpose()};
  }
  static TranslationParam on_grid(Matrix values) { return TranslationParam{std::move(values)}; }

  bool time_dependent() const { return values.rows() > 1; }
  std::size_t channels() const { return static_cast<std::size_t>(values.cols()); }
  Vector at(std::size_t cell) const {
    return values.row(values.rows() == 1 ? 0 : static_cast<Eigen::Index>(cell)).transpose();
  }
};

struct RotationMatrix {
  Matrix u;  // n x n, unitary within 1e-12
};

inline void validate(const RotationMatrix& rot) {
  require(rot.u.rows() == rot.u.cols(), "RotationMatrix: not square");
  require(max_abs(rot.u.adjoint() * rot.u - Matrix::Identity(rot.u.rows(), rot.u.cols())) <=
              1e-12,
          "RotationMatrix: not unitary within 1e-12");
}

namespace detail {

inline OperatorSet translate_with(const OperatorSet& ops, const Vector& ell) {
  require(static_cast<std::size_t>(ell.size()) == ops.channels(),
          "translate_ops: channel count mismatch");
  const Eigen::Index d = ops.dim();
  OperatorSet out = ops;
  Matrix shift = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < ops.channels(); ++k) {
    out.lindblads[k] = ops.lindblads[k] + ell(k) * Matrix::Identity(d, d);
    shift += std::conj(ell(k)) * ops.lindblads[k] - ell(k) * ops.lindblads[k].adjoint();
  }
  out.hamiltonian = ops.hamiltonian + (ops.dissipator_prefactor / Complex(0.0, 1.0)) * shift;
  return out;
}

}  // namespace detail

/// L_k -> L_k + l_k I with the convention-consistent Hamiltonian shift
/// H -> H + (c/i) sum_k (l_k^* L_k - l_k L_k^dag).
inline OperatorSet translate_ops(const OperatorSet& ops, const TranslationParam& ell) {
  require(!ell.time_dependent(),
          "translate_ops: time-dependent parameter; use translate_ops_at per cell");
  return detail::translate_with(ops, ell.at(0));
}

/// Frozen-coefficient transform for cell j of a time-dependent parameter.
inline OperatorSet translate_ops_at(const OperatorSet& ops, const TranslationParam& ell,
                                    std::size_t cell) {
  require(cell < static_cast<std::size_t>(ell.values.rows()) || !ell.time_dependent(),
          "translate_ops_at: cell out of range");
  return detail::translate_with(ops, ell.at(cell));
}

/// L_i -> sum_j u_ij L_j, H unchanged; valid for any convention.
inline OperatorSet rotate_ops(const OperatorSet& ops, const RotationMatrix& rot) {
  validate(rot);
  require(static_cast<std::size_t>(rot.u.rows()) == ops.channels(),
          "rotate_ops: rotation size must match channel count");
  OperatorSet out = ops;
  for (std::size_t i = 0; i < ops.channels(); ++i) {
    Matrix acc = Matrix::Zero(ops.dim(), ops.dim());
    for (std::size_t j = 0; j < ops.channels(); ++j) acc += rot.u(i, j) * ops.lindblads[j];
    out.lindblads[i] = std::move(acc);
  }
  return out;
}

/// Max over the matrix-unit basis of the max-entry difference between the
/// two Heisenberg generators; operationalizes "the generator is invariant".
inline double generator_distance(const OperatorSet& a, const OperatorSet& b) {
  require(a.dim() == b.dim(), "generator_distance: dimension mismatch");
  require(a.dissipator_prefactor == b.dissipator_prefactor,
          "generator_distance: conventions differ");
  const Eigen::Index d = a.dim();
  Matrix unit = Matrix::Zero(d, d);
  double dist = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      unit(i, j) = 1.0;
      dist = std::max(dist, max_abs(generator_heisenberg(a, unit) - generator_heisenberg(b, unit)));
      unit(i, j) = 0.0;
    }
  }
  return dist;
}

}  // namespace qsd
