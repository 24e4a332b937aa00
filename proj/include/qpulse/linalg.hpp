#ifndef QPULSE_LINALG_HPP
#define QPULSE_LINALG_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace qpulse {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;

inline double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const Matrix& h, double tol = 1e-10) {
  return h.rows() == h.cols() && max_abs(h - Matrix(h.adjoint())) <= tol;
}

inline bool is_unitary(const Matrix& u, double tol = 1e-10) {
  if (u.rows() != u.cols()) return false;
  Matrix d = u.adjoint() * u;
  d -= Matrix::Identity(u.rows(), u.cols());
  return max_abs(d) <= tol;
}

/// exp(-i*dt*H) for Hermitian H via eigendecomposition, so the result is
/// unitary up to eigensolver tolerance.
inline Matrix matrix_exp_hermitian(const Matrix& h, double dt) {
  if (!is_hermitian(h)) throw std::invalid_argument("matrix_exp_hermitian: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const auto& lambda = es.eigenvalues();
  Eigen::VectorXcd phases(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k)
    phases(k) = std::exp(Complex(0.0, -dt * lambda(k)));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace qpulse

#endif
