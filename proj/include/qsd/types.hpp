// Common scalar/matrix aliases and small numeric helpers shared by all
// qsd modules. Everything is built on dense Eigen types; system dimensions
// are desk scale (d <= ~16), so no sparse or fixed-size specializations.
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qsd {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Pure system states are plain complex vectors; density matrices and
// operator collections get their own structs where invariants matter.
using StateVector = Vector;

inline double max_abs(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

/// Max entry of |A - A^dag|; zero for exactly Hermitian matrices.
inline double hermiticity_error(const Matrix& a) {
  return max_abs(a - a.adjoint());
}

inline Matrix hermitize(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

/// Eigenvalues of the Hermitian part, ascending.
inline RealVector hermitian_eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace qsd
