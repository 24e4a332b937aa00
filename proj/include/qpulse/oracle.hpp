#ifndef QPULSE_ORACLE_HPP
#define QPULSE_ORACLE_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "qpulse/distort.hpp"
#include "qpulse/measure.hpp"
#include "qpulse/qsim.hpp"
#include "qpulse/spin_system.hpp"

namespace qpulse {

/// Binds the simulator pipeline (distortion -> evolution -> tomography ->
/// noise) into the fidelity oracle the optimizers query. Every evaluate call
/// charges the channel; exact() is the cost-free verification channel.
///
/// Rotation-insertion evaluations reuse a per-pulse cache of boundary states
/// and back-propagated basis operators, so a full GRAPE gradient costs O(M)
/// propagator builds instead of O(p * M).
class ObjectiveOracle {
 public:
  ObjectiveOracle(SpinSystem sys, DensityMatrix rho0, DensityMatrix target,
                  DistortionConfig distortion, MeasurementChannel channel)
      : sys_(std::move(sys)),
        rho0_(std::move(rho0)),
        target_(std::move(target)),
        distortion_(std::move(distortion)),
        channel_(std::move(channel)) {
    sys_.validate();
    distortion_.validate();
    // Undistorted pipelines need no sub-slicing.
    if (distortion_.t_r == 0.0) distortion_.sub_steps = 1;
    for (int j = 1; j <= sys_.n_qubits; ++j) {
      rot_plus_.push_back(local_rotation(Axis::X, Sign::Plus, j, sys_.n_qubits).entries);
      rot_minus_.push_back(local_rotation(Axis::X, Sign::Minus, j, sys_.n_qubits).entries);
      rot_plus_.push_back(local_rotation(Axis::Y, Sign::Plus, j, sys_.n_qubits).entries);
      rot_minus_.push_back(local_rotation(Axis::Y, Sign::Minus, j, sys_.n_qubits).entries);
    }
  }

  const SpinSystem& system() const { return sys_; }
  int dimension() const { return sys_.pulse_length(); }
  double slice_duration() const { return sys_.slice_duration(); }
  MeasurementChannel& channel() { return channel_; }
  std::uint64_t evals() const { return channel_.eval_counter(); }

  MeasuredFidelity evaluate(const ControlPulse& pulse) {
    prepare(pulse);
    return channel_.measure(DensityMatrix(cache_.states.back()));
  }

  /// Fidelity with R_axis^qubit(+/- pi/2) inserted after control slice m
  /// (0 <= m <= M; for distorted waveforms after the last sub-slice of m).
  MeasuredFidelity evaluate_with_insertion(const ControlPulse& pulse, int after_slice, Axis axis,
                                           Sign sign, int qubit) {
    if (after_slice < 0 || after_slice > sys_.slice_count)
      throw std::out_of_range("evaluate_with_insertion: slice out of range");
    prepare(pulse);
    const Matrix& rot = rotation(axis, sign, qubit);
    Matrix rho = rot * cache_.states[after_slice] * rot.adjoint();
    double f = channel_.scheme().scale * channel_.scheme().offset;
    const auto& terms = channel_.scheme().basis_terms;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      Complex tr = (rho * cache_.back_ops[t][after_slice]).trace();
      f += channel_.scheme().scale * terms[t].coefficient * tr.real();
    }
    MeasuredFidelity noiseless{f, static_cast<int>(terms.size())};
    // Route the assembled value through the channel's noise stream and
    // counter exactly like a direct measurement.
    return channel_noise(noiseless);
  }

  double exact(const ControlPulse& pulse) {
    prepare(pulse);
    return exact_fidelity(DensityMatrix(cache_.states.back()), target_);
  }

 private:
  struct Cache {
    bool valid = false;
    Vector pulse;
    /// states[m]: density matrix after control slices 1..m (boundary m=0..M).
    std::vector<Matrix> states;
    /// back_ops[t][m]: basis operator t conjugated back through slices m+1..M.
    std::vector<std::vector<Matrix>> back_ops;
  };

  const Matrix& rotation(Axis axis, Sign sign, int qubit) const {
    if (axis == Axis::Z) throw std::invalid_argument("insertion axis must be x or y");
    int idx = (qubit - 1) * 2 + (axis == Axis::Y ? 1 : 0);
    return sign == Sign::Plus ? rot_plus_.at(idx) : rot_minus_.at(idx);
  }

  MeasuredFidelity channel_noise(MeasuredFidelity m) {
    // Same noise stream and accounting as a direct channel measurement.
    double f = m.value;
    if (channel_.noise_sigma() > 0.0) f += channel_.noise_draw();
    channel_.charge(m.evals_charged);
    return {f, m.evals_charged};
  }

  void prepare(const ControlPulse& pulse) {
    if (cache_.valid && cache_.pulse.size() == pulse.amplitudes.size() &&
        cache_.pulse == pulse.amplitudes)
      return;
    Waveform w = distort_pulse(sys_, pulse, distortion_);
    auto segs = waveform_hamiltonians(sys_, w);
    const int s = distortion_.sub_steps;
    const int m_slices = sys_.slice_count;

    std::vector<Matrix> props(segs.size());
    for (std::size_t k = 0; k < segs.size(); ++k)
      props[k] = matrix_exp_hermitian(segs[k].hamiltonian, segs[k].dt);

    cache_.states.assign(m_slices + 1, Matrix());
    cache_.states[0] = rho0_.entries;
    Matrix rho = rho0_.entries;
    for (int m = 0; m < m_slices; ++m) {
      for (int k = 0; k < s; ++k) {
        const Matrix& u = props[m * s + k];
        rho = u * rho * u.adjoint();
      }
      cache_.states[m + 1] = rho;
    }

    const auto& terms = channel_.scheme().basis_terms;
    cache_.back_ops.assign(terms.size(), std::vector<Matrix>(m_slices + 1));
    for (std::size_t t = 0; t < terms.size(); ++t) {
      Matrix op = terms[t].op;
      cache_.back_ops[t][m_slices] = op;
      for (int m = m_slices - 1; m >= 0; --m) {
        for (int k = s - 1; k >= 0; --k) {
          const Matrix& u = props[m * s + k];
          op = u.adjoint() * op * u;
        }
        cache_.back_ops[t][m] = op;
      }
    }
    cache_.pulse = pulse.amplitudes;
    cache_.valid = true;
  }

  SpinSystem sys_;
  DensityMatrix rho0_;
  DensityMatrix target_;
  DistortionConfig distortion_;
  MeasurementChannel channel_;
  std::vector<Matrix> rot_plus_, rot_minus_;
  Cache cache_;
};

}  // namespace qpulse

#endif
