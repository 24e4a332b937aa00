#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "qpulse/bench.hpp"
#include "qpulse/de.hpp"
#include "qpulse/grape.hpp"
#include "qpulse/nmplus.hpp"
#include "qpulse/oracle.hpp"

using namespace qpulse;

namespace {

SpinSystem benchmark_system() {
  SpinSystem sys;
  sys.n_qubits = 2;
  sys.couplings = {{1, 2, 214.5}};
  sys.total_time = 0.005;
  sys.slice_count = 10;
  return sys;
}

ObjectiveOracle noiseless_oracle(std::uint64_t seed = 1) {
  SpinSystem sys = benchmark_system();
  Matrix rho0 = Matrix::Zero(4, 4);
  rho0(0, 0) = 1.0;
  return ObjectiveOracle(sys, DensityMatrix(rho0), bell_target(), DistortionConfig{0.0, 1},
                         MeasurementChannel(TomographyScheme::bell(), 0.0, seed));
}

ControlPulse random_pulse(const SpinSystem& sys, Rng& rng) {
  std::uniform_real_distribution<double> amp(-50.0, 50.0);
  return ControlPulse(
      Vector::NullaryExpr(sys.pulse_length(), [&](Eigen::Index) { return amp(rng); }));
}

/// Smooth synthetic objective: fidelity peaks at `target`, every evaluation
/// charges 3 like the tomography channel.
struct QuadraticOracle {
  Vector target;
  std::uint64_t counter = 0;
  std::vector<Vector> seen;

  int dimension() const { return static_cast<int>(target.size()); }
  std::uint64_t evals() const { return counter; }
  double fid(const Vector& u) const {
    double d2 = (u - target).squaredNorm();
    return 1.0 / (1.0 + d2);
  }
  MeasuredFidelity evaluate(const ControlPulse& u) {
    counter += 3;
    seen.push_back(u.amplitudes);
    return {fid(u.amplitudes), 3};
  }
  double exact(const ControlPulse& u) const { return fid(u.amplitudes); }
};

/// Insertion oracle returning scripted values, for gradient plumbing tests.
struct ScriptedOracle {
  SpinSystem sys;
  double base = 0.5;
  bool patterned = false;  // encode (qubit, axis, slice) in the plus branch
  std::uint64_t counter = 0;

  const SpinSystem& system() const { return sys; }
  int dimension() const { return sys.pulse_length(); }
  std::uint64_t evals() const { return counter; }
  MeasuredFidelity evaluate(const ControlPulse&) {
    counter += 3;
    return {base, 3};
  }
  MeasuredFidelity evaluate_with_insertion(const ControlPulse&, int m, Axis axis, Sign sign,
                                           int qubit) {
    counter += 3;
    if (!patterned) return {base, 3};
    double code = 100.0 * qubit + 10.0 * (axis == Axis::Y ? 1 : 0) + m;
    return {sign == Sign::Plus ? code : 0.0, 3};
  }
  double exact(const ControlPulse&) const { return base; }
};

int branch_measurements(NmBranch b, int p) {
  switch (b) {
    case NmBranch::Reflect: return 1;
    case NmBranch::Expand: return 2;
    case NmBranch::ContractOutside: return 2;
    case NmBranch::ContractInside: return 2;
    case NmBranch::Shrink: return 2 + p;
    case NmBranch::None: return 0;
  }
  return 0;
}

}  // namespace

TEST_CASE("oracle matches the bare pipeline when noiseless and undistorted") {
  ObjectiveOracle oracle = noiseless_oracle();
  SpinSystem sys = benchmark_system();
  Matrix rho00 = Matrix::Zero(4, 4);
  rho00(0, 0) = 1.0;
  DensityMatrix rho0(rho00);
  DensityMatrix target = bell_target();
  Rng rng(2);

  for (int trial = 0; trial < 5; ++trial) {
    ControlPulse pulse = random_pulse(sys, rng);
    std::vector<Segment> segs;
    for (int m = 1; m <= sys.slice_count; ++m)
      segs.push_back({slice_hamiltonian(sys, pulse, m), sys.slice_duration()});
    double expected = exact_fidelity(evolve(sys, segs, rho0), target);

    std::uint64_t before = oracle.evals();
    MeasuredFidelity f = oracle.evaluate(pulse);
    CHECK(std::abs(f.value - expected) < 1e-12);
    CHECK(oracle.evals() - before == 3);
    CHECK(std::abs(oracle.exact(pulse) - expected) < 1e-12);

    // insertion path against the direct matrix-chain pipeline
    UnitaryOperator rot = local_rotation(Axis::Y, Sign::Minus, 2, 2);
    DensityMatrix rotated = evolve_with_insertion(sys, segs, rho0, 4, rot);
    double direct = TomographyScheme::bell().reconstruct(rotated);
    double via_oracle =
        oracle.evaluate_with_insertion(pulse, 4, Axis::Y, Sign::Minus, 2).value;
    CHECK(std::abs(via_oracle - direct) < 1e-12);
  }
}

TEST_CASE("measured gradient layout and scale") {
  ScriptedOracle flat{benchmark_system()};
  Vector g = grape_measure_gradient(flat, ControlPulse::zeros(flat.sys));
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);  // symmetric insertions cancel
  CHECK(flat.evals() == 3ull * 4 * 2 * 10);

  ScriptedOracle coded{benchmark_system()};
  coded.patterned = true;
  Vector gc = grape_measure_gradient(coded, ControlPulse::zeros(coded.sys));
  double dt = coded.sys.slice_duration();
  for (int j = 1; j <= 2; ++j)
    for (Axis axis : {Axis::X, Axis::Y})
      for (int m = 1; m <= 10; ++m) {
        double code = 100.0 * j + 10.0 * (axis == Axis::Y ? 1 : 0) + m;
        CHECK(gc(ControlPulse::index_of(coded.sys, j, axis, m)) ==
              doctest::Approx(dt * code).epsilon(1e-14));
      }

  // the slice duration enters linearly
  ScriptedOracle longer{benchmark_system()};
  longer.patterned = true;
  longer.sys.total_time *= 2.0;
  Vector g2 = grape_measure_gradient(longer, ControlPulse::zeros(longer.sys));
  CHECK((g2 - 2.0 * gc).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("grape with a zero gradient never moves") {
  ScriptedOracle flat{benchmark_system()};
  GrapeConfig cfg;
  cfg.max_iterations = 4;
  StoppingRule stop;
  ControlPulse u0 = ControlPulse::zeros(flat.sys);
  RunTrace trace = grape_run(flat, cfg, u0, stop);
  CHECK(trace.stop_reason == StopReason::MaxIterations);
  CHECK(trace.terminal_pulse.amplitudes.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(trace.iterations.size() == 4);
  for (const auto& rec : trace.iterations) CHECK(rec.evals_charged == 243);
}

TEST_CASE("grape accounting on the benchmark") {
  ObjectiveOracle oracle = noiseless_oracle(3);
  GrapeConfig cfg;
  cfg.max_iterations = 1;
  StoppingRule stop;
  stop.threshold_infidelity = -1.0;  // never triggers
  Rng rng(3);
  RunTrace trace = grape_run(oracle, cfg, random_pulse(oracle.system(), rng), stop);
  CHECK(oracle.evals() == 243);
  REQUIRE(trace.iterations.size() == 1);
  CHECK(trace.iterations[0].evals_charged == 243);
}

TEST_CASE("regular simplex construction") {
  // mirror the construction with an identical generator stream
  const int p = 3;
  Rng rng(10);
  auto vertices = nm_regular_simplex(p, Vector::Zero(p), rng, -50.0, 50.0);
  REQUIRE(static_cast<int>(vertices.size()) == p + 1);
  CHECK(vertices[0].cwiseAbs().maxCoeff() == 0.0);

  Rng mirror(10);
  std::uniform_real_distribution<double> amp(-50.0, 50.0);
  const double sp = std::sqrt(static_cast<double>(p));
  for (int i = 2; i <= p + 1; ++i) {
    for (int j = 1; j <= p; ++j) {
      double c = amp(mirror);
      double scale = (i == j + 1) ? std::sqrt(p + 1.0) + p - 1.0 : std::sqrt(p + 1.0) - 1.0;
      double expected = std::clamp(c / sp * scale, -50.0, 50.0);
      CHECK(vertices[i - 1](j - 1) == doctest::Approx(expected).epsilon(1e-14));
    }
  }

  // p = 1 closed form: single vertex at c * sqrt(2)
  Rng rng1(20), mirror1(20);
  auto line = nm_regular_simplex(1, Vector::Zero(1), rng1, -1000.0, 1000.0);
  std::uniform_real_distribution<double> wide(-1000.0, 1000.0);
  CHECK(line[1](0) == doctest::Approx(wide(mirror1) * std::sqrt(2.0)).epsilon(1e-14));

  CHECK_THROWS_AS((void)nm_regular_simplex(0, Vector::Zero(1), rng, -1, 1), std::invalid_argument);
}

TEST_CASE("hyperplane fit direction") {
  // p = 1 by hand: f = 1 + 2u through (0, 1) and (2, 5)
  std::vector<Vector> line{Vector::Zero(1), Vector::Constant(1, 2.0)};
  Vector f(2);
  f << 1.0, 5.0;
  auto dir = nm_hyperplane_direction(line, f);
  REQUIRE(dir.has_value());
  CHECK((*dir)(0) == doctest::Approx(2.0).epsilon(1e-12));

  // flat objective gives the zero direction
  Rng rng(8);
  std::normal_distribution<double> g(0.0, 10.0);
  std::vector<Vector> simplex;
  for (int i = 0; i < 6; ++i)
    simplex.push_back(Vector::NullaryExpr(5, [&](Eigen::Index) { return g(rng); }));
  auto flat = nm_hyperplane_direction(simplex, Vector::Constant(6, 0.7));
  REQUIRE(flat.has_value());
  CHECK(flat->cwiseAbs().maxCoeff() < 1e-10);

  // exact linear objective is recovered
  Vector c = Vector::NullaryExpr(5, [&](Eigen::Index) { return g(rng); });
  Vector values(6);
  for (int i = 0; i < 6; ++i) values(i) = 3.0 + c.dot(simplex[i]);
  auto fit = nm_hyperplane_direction(simplex, values);
  REQUIRE(fit.has_value());
  CHECK((*fit - c).cwiseAbs().maxCoeff() < 1e-10);

  // degenerate simplex signals fallback
  std::vector<Vector> collapsed(6, simplex[0]);
  CHECK_FALSE(nm_hyperplane_direction(collapsed, values).has_value());
}

TEST_CASE("nmplus on a smooth synthetic objective") {
  QuadraticOracle oracle{Vector::Constant(4, 2.5)};
  NmplusConfig cfg;
  cfg.lo = -10.0;
  cfg.hi = 10.0;
  cfg.alpha = 0.5;
  cfg.max_iterations = 150;
  StoppingRule stop;
  stop.threshold_infidelity = 1e-6;
  Rng rng(14);
  RunTrace trace = nmplus_run(oracle, cfg, stop, rng);

  // elitism: recorded best fidelity is nondecreasing
  for (std::size_t k = 1; k < trace.samples.size(); ++k)
    CHECK(trace.samples[k].best_measured_fidelity >=
          trace.samples[k - 1].best_measured_fidelity);
  CHECK(trace.final_measured() > 0.9);

  // every query respected the bounds
  for (const auto& u : oracle.seen) {
    CHECK(u.minCoeff() >= -10.0);
    CHECK(u.maxCoeff() <= 10.0);
  }

  // per-iteration charges are 3w with w fixed by the branch
  for (const auto& rec : trace.iterations)
    CHECK(rec.evals_charged == 3ull * branch_measurements(rec.branch, oracle.dimension()));
}

TEST_CASE("nmplus rejects a degenerate initial simplex") {
  QuadraticOracle oracle{Vector::Constant(3, 1.0)};
  NmplusConfig cfg;
  cfg.lo = 0.0;
  cfg.hi = 0.0;  // everything clips to the origin
  StoppingRule stop;
  Rng rng(1);
  CHECK_THROWS_AS((void)nmplus_run(oracle, cfg, stop, rng), std::invalid_argument);
}

TEST_CASE("de mutation") {
  Rng rng(6);
  std::vector<Vector> pop(6, Vector::Zero(2));
  pop[0] << 1.0, 7.0;
  for (int i = 1; i <= 5; ++i) pop[i] << 4.0, -2.0;

  // equal pool members: the differences cancel for any index draw
  Vector donor = de_mutate(pop, 3, 0, 0.6, rng, -50.0, 50.0);
  CHECK((donor - pop[3]).cwiseAbs().maxCoeff() < 1e-14);

  // R = 0 pins the donor to the best individual
  std::vector<Vector> mixed(6);
  for (int i = 0; i < 6; ++i) mixed[i] = Vector::Constant(2, static_cast<double>(i));
  CHECK((de_mutate(mixed, 2, 5, 0.0, rng, -50.0, 50.0) - mixed[2]).cwiseAbs().maxCoeff() == 0.0);

  // general draw lands in the enumerated set of admissible donors
  std::vector<Vector> varied(6, Vector(2));
  varied[0] << 10.0, 0.0;
  varied[1] << 5.0, 5.0;
  varied[2] << 0.0, 0.0;
  varied[3] << 1.0, 1.0;
  varied[4] << -3.0, 2.0;
  varied[5] << 2.0, -1.0;
  Vector d = de_mutate(varied, 0, 5, 0.6, rng, -50.0, 50.0);
  bool matched = false;
  int idx[4];
  for (idx[0] = 0; idx[0] < 5; ++idx[0])
    for (idx[1] = 0; idx[1] < 5; ++idx[1])
      for (idx[2] = 0; idx[2] < 5; ++idx[2])
        for (idx[3] = 0; idx[3] < 5; ++idx[3]) {
          std::set<int> distinct(idx, idx + 4);
          if (distinct.size() != 4) continue;
          Vector cand = varied[0] + 0.6 * (varied[idx[0]] - varied[idx[1]] + varied[idx[2]] -
                                           varied[idx[3]]);
          if ((cand - d).cwiseAbs().maxCoeff() < 1e-12) matched = true;
        }
  CHECK(matched);

  std::vector<Vector> tiny(5, Vector::Zero(2));
  CHECK_THROWS_AS((void)de_mutate(tiny, 0, 1, 0.6, rng, -1, 1), std::invalid_argument);
}

TEST_CASE("de crossover") {
  Rng rng(9);
  Vector target = Vector::Constant(8, 1.0);
  Vector donor = Vector::Constant(8, -1.0);

  CHECK((de_crossover(target, donor, 1.0, rng) - donor).cwiseAbs().maxCoeff() == 0.0);

  Vector one = de_crossover(target, donor, 0.0, rng);
  int changed = 0;
  for (int j = 0; j < 8; ++j)
    if (one(j) == donor(j)) ++changed;
  CHECK(changed == 1);

  // Cr = 0.95, p = 40: mean donor components over many draws near 0.95*39 + 1
  Vector t40 = Vector::Constant(40, 1.0);
  Vector d40 = Vector::Constant(40, -1.0);
  double total = 0.0;
  const int reps = 10000;
  for (int k = 0; k < reps; ++k) {
    Vector trial = de_crossover(t40, d40, 0.95, rng);
    for (int j = 0; j < 40; ++j)
      if (trial(j) == d40(j)) total += 1.0;
  }
  CHECK(std::abs(total / reps - (0.95 * 39.0 + 1.0)) < 0.5);
}

TEST_CASE("de on a smooth synthetic objective") {
  QuadraticOracle oracle{Vector::Constant(3, 1.5)};
  DeConfig cfg;
  cfg.lo = -5.0;
  cfg.hi = 5.0;
  cfg.population = 6;
  cfg.max_iterations = 30;
  StoppingRule stop;
  stop.threshold_infidelity = 1e-9;
  Rng rng(77);
  RunTrace trace = de_run(oracle, cfg, stop, rng);

  for (std::size_t k = 1; k < trace.samples.size(); ++k)
    CHECK(trace.samples[k].best_measured_fidelity >=
          trace.samples[k - 1].best_measured_fidelity);
  for (const auto& rec : trace.iterations) CHECK(rec.evals_charged == 6ull * cfg.population);
  for (const auto& u : oracle.seen) {
    CHECK(u.minCoeff() >= -5.0);
    CHECK(u.maxCoeff() <= 5.0);
  }
}

TEST_CASE("de accounting on the benchmark") {
  ObjectiveOracle oracle = noiseless_oracle(4);
  DeConfig cfg;
  cfg.max_iterations = 2;
  StoppingRule stop;
  stop.threshold_infidelity = -1.0;
  Rng rng(4);
  RunTrace trace = de_run(oracle, cfg, stop, rng);
  // 10 initial measurements plus 60 per generation
  CHECK(oracle.evals() == 30 + 2 * 60);
  REQUIRE(trace.iterations.size() == 2);
  CHECK(trace.iterations[0].evals_charged == 60);
  CHECK(trace.iterations[1].evals_charged == 60);
}

TEST_CASE("stopping rule") {
  StoppingRule stop;
  CHECK(stop.threshold_hit(0.9992));
  CHECK_FALSE(stop.threshold_hit(0.9));
  CHECK_FALSE(stop.budget_exhausted(100000));
  CHECK(stop.budget_exhausted(100001));
  CHECK(to_string(StopReason::ThresholdReached) == "threshold_reached");
  CHECK(to_string(StopReason::EvalBudgetExhausted) == "eval_budget_exhausted");
}

TEST_CASE("identical seeds give identical runs") {
  auto run_once = [] {
    ObjectiveOracle oracle = noiseless_oracle(12);
    NmplusConfig cfg;
    cfg.max_iterations = 20;
    StoppingRule stop;
    Rng rng(99);
    return nmplus_run(oracle, cfg, stop, rng);
  };
  RunTrace a = run_once();
  RunTrace b = run_once();
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    CHECK(a.samples[k].cum_evals == b.samples[k].cum_evals);
    CHECK(a.samples[k].best_measured_fidelity == b.samples[k].best_measured_fidelity);
    CHECK(a.samples[k].best_exact_fidelity == b.samples[k].best_exact_fidelity);
  }
  CHECK((a.terminal_pulse.amplitudes - b.terminal_pulse.amplitudes).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trace evaluation counts increase strictly") {
  ObjectiveOracle oracle = noiseless_oracle(15);
  DeConfig cfg;
  cfg.max_iterations = 5;
  StoppingRule stop;
  Rng rng(15);
  RunTrace trace = de_run(oracle, cfg, stop, rng);
  for (std::size_t k = 1; k < trace.samples.size(); ++k)
    CHECK(trace.samples[k].cum_evals > trace.samples[k - 1].cum_evals);
}
