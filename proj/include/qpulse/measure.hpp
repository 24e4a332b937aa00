#ifndef QPULSE_MEASURE_HPP
#define QPULSE_MEASURE_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qpulse/qsim.hpp"
#include "qpulse/rng.hpp"

namespace qpulse {

/// Tr(rho * op) for Hermitian op; the trace must be real up to 1e-12.
inline double pauli_expectation(const DensityMatrix& rho, const Matrix& op) {
  if (rho.dim() != op.rows()) throw std::invalid_argument("pauli_expectation: dimension mismatch");
  Complex tr = (rho.entries * op).trace();
  if (std::abs(tr.imag()) > 1e-12) throw std::runtime_error("pauli_expectation: imaginary residue");
  return tr.real();
}

struct BasisTerm {
  double coefficient;
  std::string label;
  Matrix op;
};

/// Pauli decomposition of the target used for partial state tomography:
/// fidelity = scale * (offset + sum_k coeff_k <op_k>).
struct TomographyScheme {
  std::vector<BasisTerm> basis_terms;
  double offset = 1.0;
  double scale = 0.25;

  static TomographyScheme bell() {
    TomographyScheme s;
    Matrix xx = pauli_operator(Axis::X, 1, 2) * pauli_operator(Axis::X, 2, 2);
    Matrix yy = pauli_operator(Axis::Y, 1, 2) * pauli_operator(Axis::Y, 2, 2);
    Matrix zz = pauli_operator(Axis::Z, 1, 2) * pauli_operator(Axis::Z, 2, 2);
    s.basis_terms = {{+1.0, "XX", std::move(xx)}, {+1.0, "YY", std::move(yy)}, {-1.0, "ZZ", std::move(zz)}};
    return s;
  }

  double reconstruct(const DensityMatrix& rho) const {
    double acc = offset;
    for (const auto& t : basis_terms) acc += t.coefficient * pauli_expectation(rho, t.op);
    return scale * acc;
  }
};

struct MeasuredFidelity {
  double value = 0.0;         // may lie slightly outside [0,1] under noise
  int evals_charged = 0;
};

/// The virtual spectrometer: assembles a fidelity from the tomography basis,
/// adds one Gaussian draw of std-dev noise_sigma, and counts 3 function
/// evaluations per measurement. Stateful; one channel per run.
class MeasurementChannel {
 public:
  MeasurementChannel(TomographyScheme scheme, double noise_sigma, std::uint64_t rng_seed)
      : scheme_(std::move(scheme)), noise_sigma_(noise_sigma), rng_(rng_seed) {
    if (noise_sigma < 0.0) throw std::invalid_argument("MeasurementChannel: noise_sigma < 0");
  }

  MeasuredFidelity measure(const DensityMatrix& rho) {
    double f = scheme_.reconstruct(rho);
    if (noise_sigma_ > 0.0) f += noise_draw();
    int k = static_cast<int>(scheme_.basis_terms.size());
    eval_counter_ += k;
    return {f, k};
  }

  /// One sample from the channel's seeded noise stream.
  double noise_draw() {
    return std::normal_distribution<double>(0.0, noise_sigma_)(rng_);
  }

  void charge(std::uint64_t k) {
    if (k < 1) throw std::invalid_argument("charge: k must be >= 1");
    eval_counter_ += k;
  }

  std::uint64_t eval_counter() const { return eval_counter_; }
  double noise_sigma() const { return noise_sigma_; }
  const TomographyScheme& scheme() const { return scheme_; }

 private:
  TomographyScheme scheme_;
  double noise_sigma_;
  Rng rng_;
  std::uint64_t eval_counter_ = 0;
};

/// Cost-free verification oracle; never touches the evaluation counter.
inline double exact_fidelity(const DensityMatrix& rho, const DensityMatrix& target) {
  return state_fidelity(rho, target);
}

}  // namespace qpulse

#endif
