#ifndef QPULSE_GRAPE_HPP
#define QPULSE_GRAPE_HPP

#include <cmath>
#include <cstdint>
#include <limits>

#include "qpulse/optim.hpp"
#include "qpulse/qsim.hpp"
#include "qpulse/spin_system.hpp"

namespace qpulse {

/// Rotation-measured gradient: for every control component (j, axis, m) two
/// fidelity measurements with R_axis^j(+/- pi/2) inserted after slice m,
/// giving g_k = dt * (f+ - f-). Layout matches the pulse layout. Charges
/// 3 * (4 n M) evaluations. Components beyond `max_evals` are left zero.
template <class Oracle>
Vector grape_measure_gradient(Oracle& oracle, const ControlPulse& pulse,
                              std::uint64_t max_evals = std::numeric_limits<std::uint64_t>::max()) {
  const SpinSystem& sys = oracle.system();
  const double dt = sys.slice_duration();
  Vector g = Vector::Zero(sys.pulse_length());
  for (int j = 1; j <= sys.n_qubits; ++j) {
    for (Axis axis : {Axis::X, Axis::Y}) {
      for (int m = 1; m <= sys.slice_count; ++m) {
        if (oracle.evals() > max_evals) return g;
        double fp = oracle.evaluate_with_insertion(pulse, m, axis, Sign::Plus, j).value;
        double fm = oracle.evaluate_with_insertion(pulse, m, axis, Sign::Minus, j).value;
        g(ControlPulse::index_of(sys, j, axis, m)) = dt * (fp - fm);
      }
    }
  }
  return g;
}

/// Gradient ascent with the measured gradient. Each iteration measures the
/// baseline fidelity (3 evals) and the gradient (3 * 4nM evals), then steps
/// u <- u + lambda * g. The step length halves whenever the baseline fails to
/// improve on the previous iteration, up to max_decays halvings. Updates are
/// not clipped to bounds.
template <class Oracle>
RunTrace grape_run(Oracle& oracle, const GrapeConfig& cfg, const ControlPulse& initial,
                   const StoppingRule& stop) {
  detail::RunMonitor<Oracle> mon(oracle, stop);
  ControlPulse u = initial;
  double lambda = cfg.lambda0;
  int decays = 0;
  double prev_baseline = -std::numeric_limits<double>::infinity();
  std::uint64_t iter = 0;
  std::uint64_t cap = std::min<std::uint64_t>(stop.max_iterations, cfg.max_iterations);

  while (iter < cap) {
    ++iter;
    std::uint64_t evals_before = oracle.evals();
    double f = oracle.evaluate(u).value;
    if (!std::isfinite(f)) {
      mon.abort();
      mon.record(f, u, iter);
      break;
    }
    mon.record(f, u, iter);
    if (mon.check(f)) break;

    Vector g = grape_measure_gradient(oracle, u, stop.max_evals);
    mon.log_iteration(iter, oracle.evals() - evals_before, NmBranch::None);
    if (mon.check_budget()) break;
    if (!g.allFinite()) {
      mon.abort();
      break;
    }

    if (f <= prev_baseline && decays < cfg.max_decays) {
      lambda *= cfg.decay;
      ++decays;
    }
    prev_baseline = f;
    u.amplitudes += lambda * g;
  }
  return mon.finish(std::move(u));
}

}  // namespace qpulse

#endif
