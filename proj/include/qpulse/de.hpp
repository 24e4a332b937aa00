#ifndef QPULSE_DE_HPP
#define QPULSE_DE_HPP

#include <algorithm>
#include <random>
#include <vector>

#include "qpulse/optim.hpp"
#include "qpulse/rng.hpp"
#include "qpulse/spin_system.hpp"

namespace qpulse {

/// Best-base donor: u_rb + R (u_r1 - u_r2 + u_r3 - u_r4) with r1..r4 mutually
/// distinct and distinct from the target index (they may equal best_idx).
/// Components are clipped to [lo, hi].
inline Vector de_mutate(const std::vector<Vector>& population, int best_idx, int target_idx,
                        double scale_r, Rng& rng, double lo, double hi) {
  const int pn = static_cast<int>(population.size());
  if (pn < 6) throw std::invalid_argument("de_mutate: population must be >= 6");
  std::vector<int> pool;
  pool.reserve(pn - 1);
  for (int i = 0; i < pn; ++i)
    if (i != target_idx) pool.push_back(i);
  int r[4];
  for (int k = 0; k < 4; ++k) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
    int at = pick(rng);
    r[k] = pool[at];
    pool.erase(pool.begin() + at);
  }
  Vector donor = population[best_idx] +
                 scale_r * (population[r[0]] - population[r[1]] + population[r[2]] - population[r[3]]);
  clip_to_bounds(donor, lo, hi);
  return donor;
}

/// Binomial crossover: component j comes from the donor when rand <= Cr or
/// j == j_rand (so at least one donor component survives).
inline Vector de_crossover(const Vector& target, const Vector& donor, double cr, Rng& rng) {
  if (target.size() != donor.size()) throw std::invalid_argument("de_crossover: length mismatch");
  const int p = static_cast<int>(target.size());
  std::uniform_int_distribution<int> jpick(0, p - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int j_rand = jpick(rng);
  Vector trial(p);
  for (int j = 0; j < p; ++j)
    trial(j) = (unit(rng) <= cr || j == j_rand) ? donor(j) : target(j);
  return trial;
}

/// Differential evolution with greedy selection. Each generation re-measures
/// both the parent and the trial (6 evaluations per individual), keeping the
/// trial when its measured fidelity is at least the parent's.
template <class Oracle>
RunTrace de_run(Oracle& oracle, const DeConfig& cfg, const StoppingRule& stop, Rng& rng) {
  cfg.validate();
  detail::RunMonitor<Oracle> mon(oracle, stop);
  const int p = oracle.dimension();
  const int pn = cfg.population;

  std::uniform_real_distribution<double> amp(cfg.lo, cfg.hi);
  std::vector<Vector> pop(pn);
  std::vector<double> fit(pn);
  double best_measured = -std::numeric_limits<double>::infinity();
  Vector best_pulse = Vector::Zero(p);
  auto note_best = [&](double fid, const Vector& u, std::uint64_t iter) {
    if (fid > best_measured) {
      best_measured = fid;
      best_pulse = u;
      mon.record(fid, ControlPulse(u), iter);
    }
  };

  bool stopped = false;
  for (int i = 0; i < pn && !stopped; ++i) {
    pop[i] = Vector::NullaryExpr(p, [&](Eigen::Index) { return amp(rng); });
    fit[i] = oracle.evaluate(ControlPulse(pop[i])).value;
    note_best(fit[i], pop[i], 0);
    stopped = mon.check(fit[i]);
  }

  std::uint64_t iter = 0;
  std::uint64_t cap = std::min<std::uint64_t>(stop.max_iterations, cfg.max_iterations);
  while (!stopped && iter < cap) {
    ++iter;
    std::uint64_t evals_before = oracle.evals();
    for (int i = 0; i < pn && !stopped; ++i) {
      int best_idx = static_cast<int>(std::max_element(fit.begin(), fit.end()) - fit.begin());
      Vector donor = de_mutate(pop, best_idx, i, cfg.scale_r, rng, cfg.lo, cfg.hi);
      Vector trial = de_crossover(pop[i], donor, cfg.crossover, rng);

      double f_parent = oracle.evaluate(ControlPulse(pop[i])).value;
      note_best(f_parent, pop[i], iter);
      if (mon.check(f_parent)) { stopped = true; break; }
      double f_trial = oracle.evaluate(ControlPulse(trial)).value;
      note_best(f_trial, trial, iter);
      if (mon.check(f_trial)) stopped = true;

      if (f_trial >= f_parent) {
        pop[i] = trial;
        fit[i] = f_trial;
      } else {
        fit[i] = f_parent;
      }
      if (stopped) break;
    }
    mon.log_iteration(iter, oracle.evals() - evals_before, NmBranch::None);
  }
  return mon.finish(ControlPulse(best_pulse));
}

}  // namespace qpulse

#endif
