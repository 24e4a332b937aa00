#ifndef QPULSE_DISTORT_HPP
#define QPULSE_DISTORT_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qpulse/qsim.hpp"
#include "qpulse/spin_system.hpp"

namespace qpulse {

/// First-order low-pass model of control hardware: impulse response
/// h(t) = (1/t_r) exp(-t/t_r), filter state starting from rest.
struct DistortionConfig {
  double t_r = 0.0;    // seconds
  int sub_steps = 32;  // sub-slices per control slice

  void validate() const {
    if (t_r < 0.0) throw std::invalid_argument("DistortionConfig: t_r < 0");
    if (sub_steps < 1) throw std::invalid_argument("DistortionConfig: sub_steps < 1");
  }
};

/// Piecewise-constant waveform on M*S sub-slices; same channel layout as
/// ControlPulse but with slice_count sub-slices per channel block.
struct Waveform {
  int n_qubits = 0;
  int slice_count = 0;  // total sub-slices
  double dt = 0.0;      // per sub-slice
  Vector amplitudes;    // 2 * n_qubits * slice_count, Hz

  double at(int channel, int slice) const { return amplitudes(channel * slice_count + slice); }
};

/// Filter state value after holding constant input u for time dt, starting at v.
inline double filter_step(double v, double u, double dt, double t_r) {
  if (t_r <= 0.0) return u;
  return u + (v - u) * std::exp(-dt / t_r);
}

/// Time average of the filter response over [0, dt] with constant input u
/// starting at state v; exact integral of the exponential transient.
inline double filter_average(double v, double u, double dt, double t_r) {
  if (t_r <= 0.0) return u;
  return u + (v - u) * t_r / dt * (1.0 - std::exp(-dt / t_r));
}

/// Passes every control channel through the first-order filter and returns
/// the sub-sliced waveform whose amplitudes are exact sub-slice averages of
/// the analytic response. t_r = 0 replicates the pulse onto the sub-slices.
inline Waveform distort_pulse(const SpinSystem& sys, const ControlPulse& pulse,
                              const DistortionConfig& cfg) {
  cfg.validate();
  if (pulse.amplitudes.size() != sys.pulse_length())
    throw std::invalid_argument("distort_pulse: pulse does not match system");
  const int channels = 2 * sys.n_qubits;
  const int m_total = sys.slice_count * cfg.sub_steps;
  const double sub_dt = sys.slice_duration() / cfg.sub_steps;

  Waveform w;
  w.n_qubits = sys.n_qubits;
  w.slice_count = m_total;
  w.dt = sub_dt;
  w.amplitudes.resize(channels * m_total);

  for (int c = 0; c < channels; ++c) {
    double v = 0.0;  // amplifier starts from rest
    for (int m = 0; m < sys.slice_count; ++m) {
      double u = pulse.amplitudes(c * sys.slice_count + m);
      for (int s = 0; s < cfg.sub_steps; ++s) {
        w.amplitudes(c * m_total + m * cfg.sub_steps + s) = filter_average(v, u, sub_dt, cfg.t_r);
        v = filter_step(v, u, sub_dt, cfg.t_r);
      }
    }
  }
  return w;
}

/// One slice_hamiltonian-style segment per sub-slice of the waveform.
inline std::vector<Segment> waveform_hamiltonians(const SpinSystem& sys, const Waveform& w) {
  if (w.n_qubits != sys.n_qubits) throw std::invalid_argument("waveform_hamiltonians: dimension mismatch");
  Matrix hs = internal_hamiltonian(sys);
  std::vector<Matrix> sx(sys.n_qubits), sy(sys.n_qubits);
  for (int j = 0; j < sys.n_qubits; ++j) {
    sx[j] = pauli_operator(Axis::X, j + 1, sys.n_qubits);
    sy[j] = pauli_operator(Axis::Y, j + 1, sys.n_qubits);
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<Segment> segs;
  segs.reserve(w.slice_count);
  for (int m = 0; m < w.slice_count; ++m) {
    Matrix h = hs;
    for (int j = 0; j < sys.n_qubits; ++j) {
      h += two_pi * w.at(2 * j, m) * sx[j];
      h += two_pi * w.at(2 * j + 1, m) * sy[j];
    }
    segs.push_back({std::move(h), w.dt});
  }
  return segs;
}

}  // namespace qpulse

#endif
