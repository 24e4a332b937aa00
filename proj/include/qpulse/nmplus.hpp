#ifndef QPULSE_NMPLUS_HPP
#define QPULSE_NMPLUS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "qpulse/optim.hpp"
#include "qpulse/rng.hpp"
#include "qpulse/spin_system.hpp"

namespace qpulse {

/// Regular initial simplex: vertex 1 is `base`, vertex i = j+1 offsets
/// component j by (C_ij/sqrt(p))(sqrt(p+1)+p-1) and every other component by
/// (C_ij/sqrt(p))(sqrt(p+1)-1), with C_ij drawn uniformly from [lo, hi].
/// All vertices are clipped to the bounds.
inline std::vector<Vector> nm_regular_simplex(int p, const Vector& base, Rng& rng, double lo,
                                              double hi) {
  if (p < 1) throw std::invalid_argument("nm_regular_simplex: p must be >= 1");
  const double sp = std::sqrt(static_cast<double>(p));
  const double off_diag = std::sqrt(p + 1.0) - 1.0;
  const double on_diag = std::sqrt(p + 1.0) + p - 1.0;
  std::uniform_real_distribution<double> amp(lo, hi);

  std::vector<Vector> vertices;
  vertices.reserve(p + 1);
  vertices.push_back(base);
  for (int i = 2; i <= p + 1; ++i) {
    Vector v(p);
    for (int j = 1; j <= p; ++j) {
      double c = amp(rng);
      v(j - 1) = base(j - 1) + c / sp * (i == j + 1 ? on_diag : off_diag);
    }
    clip_to_bounds(v, lo, hi);
    vertices.push_back(std::move(v));
  }
  return vertices;
}

/// Least-squares-free hyperplane fit through all p+1 vertices:
/// f_i = a_0 + a.u_i solved exactly; returns (a_1..a_p) with the intercept
/// dropped. Returns nullopt when the vertex matrix is singular or its
/// condition estimate exceeds 1e12 (degenerate simplex).
inline std::optional<Vector> nm_hyperplane_direction(const std::vector<Vector>& vertices,
                                                     const Vector& infidelities) {
  const int p = static_cast<int>(vertices.size()) - 1;
  if (p < 1 || infidelities.size() != p + 1)
    throw std::invalid_argument("nm_hyperplane_direction: need p+1 vertices and values");
  Eigen::MatrixXd x(p + 1, p + 1);
  for (int i = 0; i <= p; ++i) {
    x(i, 0) = 1.0;
    x.row(i).tail(p) = vertices[i].transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin > 1e12) return std::nullopt;
  Eigen::VectorXd g = svd.solve(infidelities);
  return Vector(g.tail(p));
}

/// Quasi-gradient Nelder-Mead. Minimizes infidelity 1 - f over the simplex:
/// reflection steps `alpha` Hz from the best vertex along the (normalized)
/// fitted descent direction, then the standard expansion / contraction /
/// shrink cases. Falls back to the classic centroid reflection whenever the
/// hyperplane system is ill-conditioned.
template <class Oracle>
RunTrace nmplus_run(Oracle& oracle, const NmplusConfig& cfg, const StoppingRule& stop, Rng& rng) {
  detail::RunMonitor<Oracle> mon(oracle, stop);
  const int p = oracle.dimension();

  std::vector<Vector> v = nm_regular_simplex(p, Vector::Zero(p), rng, cfg.lo, cfg.hi);
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = a + 1; b < v.size(); ++b)
      if ((v[a] - v[b]).cwiseAbs().maxCoeff() < 1e-12)
        throw std::invalid_argument("nmplus_run: degenerate initial simplex");

  auto measure = [&](const Vector& u) { return oracle.evaluate(ControlPulse(u)).value; };

  Vector f(p + 1);  // infidelities by vertex
  Vector best_pulse = Vector::Zero(p);
  double best_measured = -std::numeric_limits<double>::infinity();
  auto note_best = [&](double fid, const Vector& u, std::uint64_t iter) {
    if (fid > best_measured) {
      best_measured = fid;
      best_pulse = u;
      mon.record(fid, ControlPulse(u), iter);
    }
  };

  bool stopped = false;
  for (int i = 0; i <= p && !stopped; ++i) {
    double fid = measure(v[i]);
    f(i) = 1.0 - fid;
    note_best(fid, v[i], 0);
    stopped = mon.check(fid);
  }

  std::uint64_t iter = 0;
  std::uint64_t cap = std::min<std::uint64_t>(stop.max_iterations, cfg.max_iterations);
  while (!stopped && iter < cap) {
    ++iter;
    std::uint64_t evals_before = oracle.evals();

    // sort ascending by infidelity
    std::vector<int> order(p + 1);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f(a) < f(b); });
    std::vector<Vector> vs(p + 1);
    Vector fs(p + 1);
    for (int i = 0; i <= p; ++i) {
      vs[i] = v[order[i]];
      fs(i) = f(order[i]);
    }
    v = std::move(vs);
    f = fs;

    Vector ur;
    auto dir = nm_hyperplane_direction(v, f);
    if (dir && dir->norm() > 0.0) {
      ur = v[0] - cfg.alpha * (*dir / dir->norm());
    } else {
      // degenerate (or flat) fit: classic reflection of the worst vertex
      Vector centroid = Vector::Zero(p);
      for (int i = 0; i < p; ++i) centroid += v[i];
      centroid /= p;
      ur = centroid + (centroid - v[p]);
    }
    clip_to_bounds(ur, cfg.lo, cfg.hi);

    NmBranch branch = NmBranch::Reflect;
    double fid_r = measure(ur);
    double fr = 1.0 - fid_r;
    note_best(fid_r, ur, iter);
    if (mon.check(fid_r)) { stopped = true; }

    if (!stopped) {
      if (f(0) <= fr && fr < f(p - 1)) {
        v[p] = ur;
        f(p) = fr;
      } else if (fr < f(0)) {
        branch = NmBranch::Expand;
        Vector ue = v[0] + cfg.gamma_exp * (ur - v[0]);
        clip_to_bounds(ue, cfg.lo, cfg.hi);
        double fid_e = measure(ue);
        double fe = 1.0 - fid_e;
        note_best(fid_e, ue, iter);
        if (mon.check(fid_e)) stopped = true;
        if (fe < fr) {
          v[p] = ue;
          f(p) = fe;
        } else {
          v[p] = ur;
          f(p) = fr;
        }
      } else {
        bool outside = fr < f(p);
        branch = outside ? NmBranch::ContractOutside : NmBranch::ContractInside;
        Vector uc = v[0] + (outside ? cfg.beta : -cfg.beta) * (ur - v[0]);
        clip_to_bounds(uc, cfg.lo, cfg.hi);
        double fid_c = measure(uc);
        double fc = 1.0 - fid_c;
        note_best(fid_c, uc, iter);
        if (mon.check(fid_c)) stopped = true;
        if (!stopped) {
          if (fc <= fr) {
            v[p] = uc;
            f(p) = fc;
          } else {
            branch = NmBranch::Shrink;
            for (int i = 1; i <= p && !stopped; ++i) {
              v[i] = v[0] + cfg.delta * (v[i] - v[0]);
              double fid_i = measure(v[i]);
              f(i) = 1.0 - fid_i;
              note_best(fid_i, v[i], iter);
              stopped = mon.check(fid_i);
            }
          }
        }
      }
    }
    mon.log_iteration(iter, oracle.evals() - evals_before, branch);
  }

  return mon.finish(ControlPulse(best_pulse));
}

}  // namespace qpulse

#endif
