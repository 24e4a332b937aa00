#ifndef QPULSE_OPTIM_HPP
#define QPULSE_OPTIM_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qpulse/spin_system.hpp"

namespace qpulse {

struct GrapeConfig {
  double lambda0 = 2e4;  // initial step length
  double decay = 0.5;
  int max_decays = 40;
  int max_iterations = 15;
};

struct NmplusConfig {
  double alpha = 3.0;       // reflection step length, Hz
  double beta = 1.0 / 3.0;  // contraction
  double gamma_exp = 2.0;   // expansion (named to avoid the noise sigma symbol)
  double delta = 1.0 / 3.0; // shrink
  double lo = -50.0;
  double hi = 50.0;
  int max_iterations = 300;
};

struct DeConfig {
  double scale_r = 0.6;     // R
  double crossover = 0.95;  // Cr
  int population = 10;      // Pn
  double lo = -50.0;
  double hi = 50.0;
  int max_iterations = 75;

  void validate() const {
    if (population < 6)
      throw std::invalid_argument("DeConfig: population must be >= 6 (mutation draws 5 distinct indices)");
    if (crossover < 0.0 || crossover > 1.0) throw std::invalid_argument("DeConfig: crossover outside [0,1]");
  }
};

enum class StopReason { ThresholdReached, EvalBudgetExhausted, MaxIterations, Aborted };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::ThresholdReached: return "threshold_reached";
    case StopReason::EvalBudgetExhausted: return "eval_budget_exhausted";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::Aborted: return "aborted";
  }
  return "unknown";
}

/// Evaluated after every fidelity measurement; first trigger wins.
struct StoppingRule {
  double threshold_infidelity = 0.001;
  std::uint64_t max_evals = 100000;
  std::uint64_t max_iterations = std::numeric_limits<std::uint64_t>::max();

  bool threshold_hit(double measured_fidelity) const {
    return 1.0 - measured_fidelity <= threshold_infidelity;
  }
  bool budget_exhausted(std::uint64_t evals) const { return evals > max_evals; }
};

struct TraceSample {
  std::uint64_t cum_evals = 0;
  double best_measured_fidelity = 0.0;
  double best_exact_fidelity = 0.0;
  std::uint64_t iteration = 0;
};

enum class NmBranch { None, Reflect, Expand, ContractOutside, ContractInside, Shrink };

struct IterationRecord {
  std::uint64_t iteration = 0;
  std::uint64_t evals_charged = 0;
  NmBranch branch = NmBranch::None;
};

struct RunTrace {
  std::vector<TraceSample> samples;
  std::vector<IterationRecord> iterations;
  ControlPulse terminal_pulse;
  double terminal_exact = 0.0;  // exact fidelity of terminal_pulse (verification channel)
  StopReason stop_reason = StopReason::MaxIterations;

  double final_measured() const { return samples.empty() ? 0.0 : samples.back().best_measured_fidelity; }
  double final_exact() const { return samples.empty() ? 0.0 : samples.back().best_exact_fidelity; }
  std::uint64_t total_evals() const { return samples.empty() ? 0 : samples.back().cum_evals; }
};

namespace detail {

/// Shared bookkeeping for the three run loops: stop checks after each
/// measurement, trace samples when the tracked best changes.
template <class Oracle>
class RunMonitor {
 public:
  RunMonitor(Oracle& oracle, const StoppingRule& rule) : oracle_(oracle), rule_(rule) {}

  /// Stop check for a pulse-fidelity measurement. Returns true to stop.
  bool check(double measured) {
    if (stop_) return true;
    if (rule_.threshold_hit(measured)) {
      stop_ = StopReason::ThresholdReached;
      return true;
    }
    return check_budget();
  }

  /// Budget-only check (rotation-insertion measurements).
  bool check_budget() {
    if (stop_) return true;
    if (rule_.budget_exhausted(oracle_.evals())) {
      stop_ = StopReason::EvalBudgetExhausted;
      return true;
    }
    return false;
  }

  bool iteration_cap(std::uint64_t completed) const { return completed >= rule_.max_iterations; }

  void record(double measured, const ControlPulse& pulse, std::uint64_t iteration) {
    trace_.samples.push_back({oracle_.evals(), measured, oracle_.exact(pulse), iteration});
  }

  void log_iteration(std::uint64_t iteration, std::uint64_t evals_charged, NmBranch branch) {
    trace_.iterations.push_back({iteration, evals_charged, branch});
  }

  void abort() { stop_ = StopReason::Aborted; }

  RunTrace finish(ControlPulse terminal, StopReason fallback = StopReason::MaxIterations) {
    trace_.terminal_exact = oracle_.exact(terminal);
    trace_.terminal_pulse = std::move(terminal);
    trace_.stop_reason = stop_ ? *stop_ : fallback;
    return std::move(trace_);
  }

  bool stopped() const { return stop_.has_value(); }

 private:
  Oracle& oracle_;
  StoppingRule rule_;
  RunTrace trace_;
  std::optional<StopReason> stop_;
};

}  // namespace detail

}  // namespace qpulse

#endif
