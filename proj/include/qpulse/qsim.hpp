#ifndef QPULSE_QSIM_HPP
#define QPULSE_QSIM_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qpulse/linalg.hpp"
#include "qpulse/spin_system.hpp"

namespace qpulse {

/// 2^n x 2^n density matrix. Validation checks Hermiticity, unit trace and
/// eigenvalue positivity within the stated tolerances.
struct DensityMatrix {
  Matrix entries;

  DensityMatrix() = default;
  explicit DensityMatrix(Matrix m) : entries(std::move(m)) {}

  int dim() const { return static_cast<int>(entries.rows()); }

  void validate(double tol = 1e-10) const {
    if (!is_hermitian(entries, tol)) throw std::invalid_argument("DensityMatrix: not Hermitian");
    if (std::abs(entries.trace().real() - 1.0) > tol || std::abs(entries.trace().imag()) > tol)
      throw std::invalid_argument("DensityMatrix: trace != 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(entries);
    if (es.eigenvalues().minCoeff() < -tol)
      throw std::invalid_argument("DensityMatrix: negative eigenvalue");
  }
};

struct UnitaryOperator {
  Matrix entries;

  UnitaryOperator() = default;
  explicit UnitaryOperator(Matrix m) : entries(std::move(m)) {
    if (!is_unitary(entries)) throw std::invalid_argument("UnitaryOperator: not unitary");
  }
};

/// One constant-Hamiltonian segment of a waveform.
struct Segment {
  Matrix hamiltonian;  // rad/s
  double dt;           // seconds
};

namespace detail {
inline Matrix single_qubit_pauli(Axis axis) {
  Matrix s(2, 2);
  switch (axis) {
    case Axis::X: s << 0, 1, 1, 0; break;
    case Axis::Y: s << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case Axis::Z: s << 1, 0, 0, -1; break;
  }
  return s;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}
}  // namespace detail

/// Tensor product I x ... x sigma_axis x ... x I with sigma at `qubit`
/// (1-based, qubit 1 is the most significant bit of the basis label).
inline Matrix pauli_operator(Axis axis, int qubit, int n_qubits) {
  if (qubit < 1 || qubit > n_qubits) throw std::out_of_range("pauli_operator: qubit out of range");
  Matrix op = Matrix::Identity(1, 1);
  for (int q = 1; q <= n_qubits; ++q)
    op = detail::kron(op, q == qubit ? detail::single_qubit_pauli(axis) : Matrix::Identity(2, 2));
  return op;
}

/// Rotating-frame internal Hamiltonian: sum over coupling pairs of
/// pi J_ij sigma_z^i sigma_z^j / 2, in rad/s. Diagonal in the computational basis.
inline Matrix internal_hamiltonian(const SpinSystem& sys) {
  sys.validate();
  Matrix h = Matrix::Zero(sys.dim(), sys.dim());
  for (const auto& c : sys.couplings) {
    h += (std::numbers::pi * c.j_hz / 2.0) *
         (pauli_operator(Axis::Z, c.i, sys.n_qubits) * pauli_operator(Axis::Z, c.j, sys.n_qubits));
  }
  return h;
}

/// H_m = H_S + sum_j 2 pi (u_x^j[m] sigma_x^j + u_y^j[m] sigma_y^j); the 2 pi
/// converts the Hz amplitudes to angular frequency here, never in the pulse.
inline Matrix slice_hamiltonian(const SpinSystem& sys, const ControlPulse& pulse, int m) {
  if (m < 1 || m > sys.slice_count) throw std::out_of_range("slice_hamiltonian: slice out of range");
  Matrix h = internal_hamiltonian(sys);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (int j = 1; j <= sys.n_qubits; ++j) {
    h += two_pi * pulse.at(sys, j, Axis::X, m) * pauli_operator(Axis::X, j, sys.n_qubits);
    h += two_pi * pulse.at(sys, j, Axis::Y, m) * pauli_operator(Axis::Y, j, sys.n_qubits);
  }
  return h;
}

/// rho_f = (prod_m U_m) rho_0 (prod_m U_m)^dag, later segments applied on the left.
inline DensityMatrix evolve(const SpinSystem& sys, const std::vector<Segment>& waveform,
                            const DensityMatrix& rho0) {
  (void)sys;
  if (waveform.empty()) throw std::invalid_argument("evolve: empty waveform");
  Matrix rho = rho0.entries;
  for (const auto& seg : waveform) {
    if (seg.hamiltonian.rows() != rho.rows())
      throw std::invalid_argument("evolve: dimension mismatch");
    Matrix u = matrix_exp_hermitian(seg.hamiltonian, seg.dt);
    rho = u * rho * u.adjoint();
  }
  DensityMatrix out(std::move(rho));
  out.validate();
  return out;
}

enum class Sign { Plus, Minus };

/// exp(-(+/-)i (pi/4) sigma_axis^qubit): a +/- pi/2 rotation about `axis`.
inline UnitaryOperator local_rotation(Axis axis, Sign sign, int qubit, int n_qubits) {
  if (axis == Axis::Z) throw std::invalid_argument("local_rotation: axis must be x or y");
  Matrix sigma = pauli_operator(axis, qubit, n_qubits);
  double theta = (sign == Sign::Plus ? 1.0 : -1.0) * std::numbers::pi / 4.0;
  return UnitaryOperator(matrix_exp_hermitian(sigma, theta));
}

/// Evolves rho0 through segments 1..m, applies `rotation`, then continues
/// through the remaining segments. m = 0 rotates the initial state.
inline DensityMatrix evolve_with_insertion(const SpinSystem& sys,
                                           const std::vector<Segment>& waveform,
                                           const DensityMatrix& rho0, int after_slice,
                                           const UnitaryOperator& rotation) {
  (void)sys;
  if (after_slice < 0 || after_slice > static_cast<int>(waveform.size()))
    throw std::out_of_range("evolve_with_insertion: slice index out of range");
  Matrix rho = rho0.entries;
  auto apply = [&rho](const Matrix& u) { rho = u * rho * u.adjoint(); };
  for (int m = 0; m < static_cast<int>(waveform.size()); ++m) {
    if (m == after_slice) apply(rotation.entries);
    apply(matrix_exp_hermitian(waveform[m].hamiltonian, waveform[m].dt));
  }
  if (after_slice == static_cast<int>(waveform.size())) apply(rotation.entries);
  DensityMatrix out(std::move(rho));
  out.validate();
  return out;
}

/// Tr(rho_f rho_t), with numerical dust below 1e-12 discarded and the result
/// clipped to [0, 1]. Larger imaginary residues are an error.
inline double state_fidelity(const DensityMatrix& rho_f, const DensityMatrix& rho_t) {
  if (rho_f.dim() != rho_t.dim()) throw std::invalid_argument("state_fidelity: dimension mismatch");
  Complex tr = (rho_f.entries * rho_t.entries).trace();
  if (std::abs(tr.imag()) > 1e-12) throw std::runtime_error("state_fidelity: imaginary residue");
  return std::clamp(tr.real(), 0.0, 1.0);
}

/// Projector onto the Bell state (|10> + |01>)/sqrt(2).
inline DensityMatrix bell_target() {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
  psi(1) = psi(2) = 1.0 / std::sqrt(2.0);
  return DensityMatrix(psi * psi.adjoint());
}

}  // namespace qpulse

#endif
