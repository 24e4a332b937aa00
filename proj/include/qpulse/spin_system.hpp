#ifndef QPULSE_SPIN_SYSTEM_HPP
#define QPULSE_SPIN_SYSTEM_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qpulse/linalg.hpp"

namespace qpulse {

struct Coupling {
  int i = 1;       // 1-based qubit indices, i < j
  int j = 2;
  double j_hz = 0.0;
};

/// Static model of the controlled spin system: qubit count, scalar couplings,
/// total pulse duration T and slice count M.
struct SpinSystem {
  int n_qubits = 2;
  std::vector<Coupling> couplings;
  double total_time = 0.0;  // seconds
  int slice_count = 1;      // M

  double slice_duration() const { return total_time / slice_count; }
  int dim() const { return 1 << n_qubits; }
  int pulse_length() const { return 2 * n_qubits * slice_count; }

  void validate() const {
    if (n_qubits < 1) throw std::invalid_argument("SpinSystem: n_qubits must be positive");
    if (slice_count < 1) throw std::invalid_argument("SpinSystem: slice_count must be >= 1");
    if (total_time <= 0.0) throw std::invalid_argument("SpinSystem: total_time must be > 0");
    for (const auto& c : couplings) {
      if (c.i < 1 || c.i > n_qubits || c.j < 1 || c.j > n_qubits || c.i == c.j)
        throw std::invalid_argument("SpinSystem: coupling indices out of range");
    }
  }
};

enum class Axis { X, Y, Z };

/// The optimization variable: 2nM amplitudes in Hz, laid out per qubit as an
/// x-block followed by a y-block, qubits in ascending order:
///   (u_x^1[1..M], u_y^1[1..M], u_x^2[1..M], u_y^2[1..M], ...)
struct ControlPulse {
  Vector amplitudes;

  ControlPulse() = default;
  explicit ControlPulse(Vector a) : amplitudes(std::move(a)) {}

  static ControlPulse zeros(const SpinSystem& sys) {
    return ControlPulse(Vector::Zero(sys.pulse_length()));
  }

  /// Flat index of u_axis^qubit[slice]; qubit and slice are 1-based.
  static int index_of(const SpinSystem& sys, int qubit, Axis axis, int slice) {
    if (qubit < 1 || qubit > sys.n_qubits) throw std::out_of_range("ControlPulse: qubit out of range");
    if (slice < 1 || slice > sys.slice_count) throw std::out_of_range("ControlPulse: slice out of range");
    if (axis == Axis::Z) throw std::invalid_argument("ControlPulse: no z control channel");
    int block = (qubit - 1) * 2 + (axis == Axis::Y ? 1 : 0);
    return block * sys.slice_count + (slice - 1);
  }

  double at(const SpinSystem& sys, int qubit, Axis axis, int slice) const {
    return amplitudes(index_of(sys, qubit, axis, slice));
  }
};

inline void clip_to_bounds(Vector& u, double lo, double hi) {
  u = u.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace qpulse

#endif
