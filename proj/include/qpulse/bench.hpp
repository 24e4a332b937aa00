#ifndef QPULSE_BENCH_HPP
#define QPULSE_BENCH_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qpulse/de.hpp"
#include "qpulse/grape.hpp"
#include "qpulse/nmplus.hpp"
#include "qpulse/oracle.hpp"
#include "qpulse/rng.hpp"

namespace qpulse {

enum class Algorithm { Grape, Nmplus, De };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Grape: return "grape";
    case Algorithm::Nmplus: return "nmplus";
    case Algorithm::De: return "de";
  }
  return "unknown";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "grape") return Algorithm::Grape;
  if (s == "nmplus") return Algorithm::Nmplus;
  if (s == "de") return Algorithm::De;
  throw std::invalid_argument("unknown algorithm: " + s);
}

/// A fully specified closed-loop experiment: system, target, algorithm and
/// its parameters, uncertainty models, stopping rule, and batch seeding.
struct Experiment {
  SpinSystem system;
  DensityMatrix initial_state;
  DensityMatrix target;
  double lo = -50.0;
  double hi = 50.0;
  Algorithm algorithm = Algorithm::Nmplus;
  GrapeConfig grape;
  NmplusConfig nmplus;
  DeConfig de;
  DistortionConfig distortion;
  double noise_sigma = 0.0;
  StoppingRule stopping;
  int runs = 50;
  std::uint64_t master_seed = 20200828;
  std::uint64_t sweep_index = 0;  // distinguishes seed streams across sweep points
};

/// The Bell-state benchmark: two qubits with J = 214.5 Hz, T = 5 ms split
/// into M = 10 slices, amplitudes bounded to +/-50 Hz, |00> start, Bell
/// target, and the per-algorithm parameter defaults.
inline Experiment bell_benchmark(Algorithm algo) {
  Experiment e;
  e.system.n_qubits = 2;
  e.system.couplings = {{1, 2, 214.5}};
  e.system.total_time = 0.005;
  e.system.slice_count = 10;
  Matrix rho0 = Matrix::Zero(4, 4);
  rho0(0, 0) = 1.0;
  e.initial_state = DensityMatrix(rho0);
  e.target = bell_target();
  e.algorithm = algo;
  e.stopping.threshold_infidelity = 0.001;
  e.stopping.max_evals = 100000;
  e.nmplus.lo = e.de.lo = e.lo;
  e.nmplus.hi = e.de.hi = e.hi;
  return e;
}

inline ObjectiveOracle make_oracle(const Experiment& e, std::uint64_t channel_seed) {
  return ObjectiveOracle(e.system, e.initial_state, e.target, e.distortion,
                         MeasurementChannel(TomographyScheme::bell(), e.noise_sigma, channel_seed));
}

/// One independent closed-loop run. Seeds are derived from
/// (master_seed, sweep_index, run_index, role) so runs never share streams.
/// Optimizer exceptions become failed-run records, not batch failures.
inline RunTrace run_single(const Experiment& e, std::uint64_t run_index) {
  ObjectiveOracle oracle = make_oracle(e, derive_seed(e.master_seed, e.sweep_index, run_index, 1));
  Rng rng(derive_seed(e.master_seed, e.sweep_index, run_index, 2));
  try {
    switch (e.algorithm) {
      case Algorithm::Grape: {
        std::uniform_real_distribution<double> amp(e.lo, e.hi);
        Vector u0 = Vector::NullaryExpr(e.system.pulse_length(), [&](Eigen::Index) { return amp(rng); });
        return grape_run(oracle, e.grape, ControlPulse(u0), e.stopping);
      }
      case Algorithm::Nmplus:
        return nmplus_run(oracle, e.nmplus, e.stopping, rng);
      case Algorithm::De:
        return de_run(oracle, e.de, e.stopping, rng);
    }
  } catch (const std::exception&) {
    RunTrace t;
    t.stop_reason = StopReason::Aborted;
    return t;
  }
  return {};
}

/// Smallest cumulative evaluation count at which the best measured fidelity
/// reached `fidelity_threshold`; nullopt when never reached.
inline std::optional<std::uint64_t> evals_to_threshold(const RunTrace& trace,
                                                       double fidelity_threshold) {
  for (const auto& s : trace.samples)
    if (s.best_measured_fidelity >= fidelity_threshold) return s.cum_evals;
  return std::nullopt;
}

struct BatchSummary {
  int runs = 0;
  int successes = 0;
  double success_rate = 0.0;
  double exact_success_rate = 0.0;  // secondary: terminal exact fidelity within threshold
  double mean_evals = 0.0;          // over successful runs only
  double var_evals = 0.0;
  std::optional<double> eval65, eval85, eval99;  // mean crossing evals over crossing runs
  std::vector<double> curve_evals;
  std::vector<double> curve_infidelity;
};

namespace detail {

/// Step interpolation (last value carried forward) of a run's best-measured
/// infidelity at evaluation count eval.
inline double infidelity_at(const RunTrace& trace, double eval) {
  double value = 1.0;
  bool seen = false;
  for (const auto& s : trace.samples) {
    if (!seen) {  // before the first sample, carry its value backward
      value = 1.0 - s.best_measured_fidelity;
      seen = true;
    }
    if (static_cast<double>(s.cum_evals) <= eval) value = 1.0 - s.best_measured_fidelity;
    else break;
  }
  return value;
}

/// Sorted before reduction so aggregate statistics do not depend on the
/// order runs completed in (floating point addition is not associative).
inline double ordered_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

inline std::optional<double> mean_crossing(const std::vector<RunTrace>& traces, double threshold) {
  std::vector<double> crossings;
  for (const auto& t : traces)
    if (auto c = evals_to_threshold(t, threshold)) crossings.push_back(static_cast<double>(*c));
  if (crossings.empty()) return std::nullopt;
  return ordered_sum(crossings) / crossings.size();
}

}  // namespace detail

inline BatchSummary summarize(const Experiment& e, const std::vector<RunTrace>& traces,
                              int curve_points = 200) {
  BatchSummary s;
  s.runs = static_cast<int>(traces.size());
  std::vector<double> success_evals;
  int exact_successes = 0;
  std::uint64_t max_evals_seen = 0;
  for (const auto& t : traces) {
    if (t.stop_reason == StopReason::ThresholdReached) {
      ++s.successes;
      success_evals.push_back(static_cast<double>(t.total_evals()));
    }
    if (1.0 - t.terminal_exact <= e.stopping.threshold_infidelity) ++exact_successes;
    max_evals_seen = std::max(max_evals_seen, t.total_evals());
  }
  s.success_rate = s.runs ? static_cast<double>(s.successes) / s.runs : 0.0;
  s.exact_success_rate = s.runs ? static_cast<double>(exact_successes) / s.runs : 0.0;
  if (!success_evals.empty()) {
    double mean = detail::ordered_sum(success_evals) / success_evals.size();
    std::vector<double> sq;
    sq.reserve(success_evals.size());
    for (double v : success_evals) sq.push_back((v - mean) * (v - mean));
    s.mean_evals = mean;
    s.var_evals =
        success_evals.size() > 1 ? detail::ordered_sum(sq) / (success_evals.size() - 1) : 0.0;
  }
  s.eval65 = detail::mean_crossing(traces, 0.65);
  s.eval85 = detail::mean_crossing(traces, 0.85);
  s.eval99 = detail::mean_crossing(traces, 0.99);

  if (max_evals_seen > 0 && !traces.empty()) {
    s.curve_evals.resize(curve_points);
    s.curve_infidelity.resize(curve_points);
    for (int k = 0; k < curve_points; ++k) {
      double eval = static_cast<double>(max_evals_seen) * (k + 1) / curve_points;
      std::vector<double> values;
      values.reserve(traces.size());
      for (const auto& t : traces) values.push_back(detail::infidelity_at(t, eval));
      s.curve_evals[k] = eval;
      s.curve_infidelity[k] = detail::ordered_sum(values) / traces.size();
    }
  }
  return s;
}

struct BatchResult {
  std::vector<RunTrace> traces;
  BatchSummary summary;
};

/// Runs indices 0..runs-1 (optionally across threads); aggregation is a pure
/// fold over the completed traces, independent of execution order.
inline BatchResult run_batch(const Experiment& e, int threads = 1) {
  if (e.runs < 1) throw std::invalid_argument("run_batch: runs must be >= 1");
  std::vector<RunTrace> traces(e.runs);
  if (threads <= 1) {
    for (int i = 0; i < e.runs; ++i) traces[i] = run_single(e, i);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int i = next.fetch_add(1); i < e.runs; i = next.fetch_add(1))
        traces[i] = run_single(e, i);
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  BatchSummary summary = summarize(e, traces);
  return {std::move(traces), std::move(summary)};
}

enum class SweepParameter { TrOverDt, NoiseSigma };

struct SweepPoint {
  double value = 0.0;
  BatchSummary summary;
};

/// One batch per parameter value, all else fixed; sweep_index feeds the seed
/// derivation so points are independent but reproducible.
inline std::vector<SweepPoint> sweep(const Experiment& base, SweepParameter param,
                                     const std::vector<double>& values, int threads = 1) {
  std::vector<SweepPoint> points;
  points.reserve(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    Experiment e = base;
    e.sweep_index = k;
    if (param == SweepParameter::TrOverDt)
      e.distortion.t_r = values[k] * e.system.slice_duration();
    else
      e.noise_sigma = values[k];
    points.push_back({values[k], run_batch(e, threads).summary});
  }
  return points;
}

}  // namespace qpulse

#endif
