#ifndef QPULSE_IO_HPP
#define QPULSE_IO_HPP

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpulse/bench.hpp"

namespace qpulse {

using Json = nlohmann::json;

/// Canonical 12-significant-digit formatting for all emitted numbers.
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline double sig12(double v) { return std::stod(format_number(v)); }

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

inline std::string trace_to_csv(const RunTrace& trace) {
  std::ostringstream os;
  os << "iteration,cum_evals,measured_fidelity,exact_fidelity\n";
  for (const auto& s : trace.samples)
    os << s.iteration << ',' << s.cum_evals << ',' << format_number(s.best_measured_fidelity)
       << ',' << format_number(s.best_exact_fidelity) << '\n';
  return os.str();
}

/// Pulse dump mirroring the ControlPulse layout: one row per slice, one
/// column per control channel.
inline std::string pulse_to_csv(const SpinSystem& sys, const ControlPulse& pulse) {
  std::ostringstream os;
  os << "slice";
  for (int j = 1; j <= sys.n_qubits; ++j) os << ",ux_q" << j << ",uy_q" << j;
  os << '\n';
  for (int m = 1; m <= sys.slice_count; ++m) {
    os << m;
    for (int j = 1; j <= sys.n_qubits; ++j)
      os << ',' << format_number(pulse.at(sys, j, Axis::X, m)) << ','
         << format_number(pulse.at(sys, j, Axis::Y, m));
    os << '\n';
  }
  return os.str();
}

inline Json summary_to_json(const BatchSummary& s) {
  Json j;
  j["runs"] = s.runs;
  j["successes"] = s.successes;
  j["success_rate"] = sig12(s.success_rate);
  j["exact_success_rate"] = sig12(s.exact_success_rate);
  j["mean_evals"] = sig12(s.mean_evals);
  j["var_evals"] = sig12(s.var_evals);
  j["eval65"] = s.eval65 ? Json(sig12(*s.eval65)) : Json(nullptr);
  j["eval85"] = s.eval85 ? Json(sig12(*s.eval85)) : Json(nullptr);
  j["eval99"] = s.eval99 ? Json(sig12(*s.eval99)) : Json(nullptr);
  Json evals = Json::array(), infid = Json::array();
  for (double v : s.curve_evals) evals.push_back(sig12(v));
  for (double v : s.curve_infidelity) infid.push_back(sig12(v));
  j["curve"] = Json{{"evals", evals}, {"infidelity", infid}};
  return j;
}

namespace detail {

inline void reject_unknown_keys(const Json& j, const std::vector<std::string>& known,
                                const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + scope);
  }
}

}  // namespace detail

/// Parses a config document into an Experiment. Missing keys keep the
/// bell_benchmark defaults for the configured algorithm; unknown keys are
/// rejected with the offending field named.
inline Experiment experiment_from_json(const Json& j) {
  detail::reject_unknown_keys(j,
                              {"algorithm", "system", "bounds", "grape", "nmplus", "de",
                               "distortion", "noise_sigma", "stopping", "runs", "master_seed",
                               "output_dir"},
                              "top level");
  Algorithm algo = Algorithm::Nmplus;
  if (j.contains("algorithm")) algo = algorithm_from_string(j.at("algorithm").get<std::string>());
  Experiment e = bell_benchmark(algo);

  if (j.contains("system")) {
    const Json& s = j.at("system");
    detail::reject_unknown_keys(s, {"n_qubits", "couplings", "total_time", "slice_count"}, "system");
    if (s.contains("n_qubits")) e.system.n_qubits = s.at("n_qubits").get<int>();
    if (s.contains("total_time")) e.system.total_time = s.at("total_time").get<double>();
    if (s.contains("slice_count")) e.system.slice_count = s.at("slice_count").get<int>();
    if (s.contains("couplings")) {
      e.system.couplings.clear();
      for (const auto& c : s.at("couplings"))
        e.system.couplings.push_back({c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<double>()});
    }
    e.system.validate();
  }
  if (j.contains("bounds")) {
    const Json& b = j.at("bounds");
    detail::reject_unknown_keys(b, {"lo", "hi"}, "bounds");
    if (b.contains("lo")) e.lo = b.at("lo").get<double>();
    if (b.contains("hi")) e.hi = b.at("hi").get<double>();
    e.nmplus.lo = e.de.lo = e.lo;
    e.nmplus.hi = e.de.hi = e.hi;
  }
  if (j.contains("grape")) {
    const Json& g = j.at("grape");
    detail::reject_unknown_keys(g, {"lambda0", "decay", "max_decays", "max_iterations"}, "grape");
    if (g.contains("lambda0")) e.grape.lambda0 = g.at("lambda0").get<double>();
    if (g.contains("decay")) e.grape.decay = g.at("decay").get<double>();
    if (g.contains("max_decays")) e.grape.max_decays = g.at("max_decays").get<int>();
    if (g.contains("max_iterations")) e.grape.max_iterations = g.at("max_iterations").get<int>();
  }
  if (j.contains("nmplus")) {
    const Json& n = j.at("nmplus");
    detail::reject_unknown_keys(n, {"alpha", "beta", "gamma_exp", "delta", "max_iterations"},
                                "nmplus");
    if (n.contains("alpha")) e.nmplus.alpha = n.at("alpha").get<double>();
    if (n.contains("beta")) e.nmplus.beta = n.at("beta").get<double>();
    if (n.contains("gamma_exp")) e.nmplus.gamma_exp = n.at("gamma_exp").get<double>();
    if (n.contains("delta")) e.nmplus.delta = n.at("delta").get<double>();
    if (n.contains("max_iterations")) e.nmplus.max_iterations = n.at("max_iterations").get<int>();
  }
  if (j.contains("de")) {
    const Json& d = j.at("de");
    detail::reject_unknown_keys(d, {"scale_r", "crossover", "population", "max_iterations"}, "de");
    if (d.contains("scale_r")) e.de.scale_r = d.at("scale_r").get<double>();
    if (d.contains("crossover")) e.de.crossover = d.at("crossover").get<double>();
    if (d.contains("population")) e.de.population = d.at("population").get<int>();
    if (d.contains("max_iterations")) e.de.max_iterations = d.at("max_iterations").get<int>();
    e.de.validate();
  }
  if (j.contains("distortion")) {
    const Json& d = j.at("distortion");
    detail::reject_unknown_keys(d, {"t_r", "sub_steps"}, "distortion");
    if (d.contains("t_r")) e.distortion.t_r = d.at("t_r").get<double>();
    if (d.contains("sub_steps")) e.distortion.sub_steps = d.at("sub_steps").get<int>();
    e.distortion.validate();
  }
  if (j.contains("noise_sigma")) e.noise_sigma = j.at("noise_sigma").get<double>();
  if (j.contains("stopping")) {
    const Json& s = j.at("stopping");
    detail::reject_unknown_keys(s, {"threshold_infidelity", "max_evals", "max_iterations"},
                                "stopping");
    if (s.contains("threshold_infidelity"))
      e.stopping.threshold_infidelity = s.at("threshold_infidelity").get<double>();
    if (s.contains("max_evals")) e.stopping.max_evals = s.at("max_evals").get<std::uint64_t>();
    if (s.contains("max_iterations"))
      e.stopping.max_iterations = s.at("max_iterations").get<std::uint64_t>();
  }
  if (j.contains("runs")) e.runs = j.at("runs").get<int>();
  if (j.contains("master_seed")) e.master_seed = j.at("master_seed").get<std::uint64_t>();
  return e;
}

inline Experiment load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& err) {
    throw std::invalid_argument(std::string("config parse error: ") + err.what());
  }
  return experiment_from_json(j);
}

}  // namespace qpulse

#endif
