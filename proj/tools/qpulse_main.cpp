// Command-line front end: single runs, seeded batches, and parameter sweeps
// over the closed-loop pulse-search benchmark, emitting plot-ready CSV/JSON.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qpulse/bench.hpp"
#include "qpulse/io.hpp"

namespace fs = std::filesystem;
using namespace qpulse;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string algorithm;
  std::optional<std::uint64_t> seed;
  std::optional<int> sub_steps;
  std::string out;
  int threads = 1;
};

Experiment build_experiment(const CommonFlags& flags) {
  Experiment e = flags.config_path.empty()
                     ? bell_benchmark(flags.algorithm.empty()
                                          ? Algorithm::Nmplus
                                          : algorithm_from_string(flags.algorithm))
                     : load_experiment(flags.config_path);
  // CLI flags override config file values.
  if (!flags.algorithm.empty() && !flags.config_path.empty()) {
    Algorithm a = algorithm_from_string(flags.algorithm);
    if (a != e.algorithm) {
      Experiment fresh = bell_benchmark(a);
      fresh.system = e.system;
      fresh.lo = e.lo;
      fresh.hi = e.hi;
      fresh.distortion = e.distortion;
      fresh.noise_sigma = e.noise_sigma;
      fresh.stopping = e.stopping;
      fresh.runs = e.runs;
      fresh.master_seed = e.master_seed;
      e = fresh;
    }
  }
  if (flags.seed) e.master_seed = *flags.seed;
  if (flags.sub_steps) e.distortion.sub_steps = *flags.sub_steps;
  return e;
}

std::string default_out_dir() {
  if (const char* env = std::getenv("QPULSE_OUT_DIR")) return env;
  return "qpulse_out";
}

std::vector<double> parse_grid(const std::string& spec) {
  double start = 0, step = 0, end = 0;
  char c1 = 0, c2 = 0;
  std::istringstream is(spec);
  if (!(is >> start >> c1 >> step >> c2 >> end) || c1 != ':' || c2 != ':' || start < 0 ||
      step < 0 || end < start)
    throw std::invalid_argument("invalid grid spec (want start:step:end with nonnegative values): " +
                                spec);
  std::vector<double> values{start};
  if (step > 0)
    for (double v = start + step; v <= end + step * 1e-9; v += step) values.push_back(v);
  return values;
}

void write_summary(const fs::path& path, const BatchSummary& s) {
  write_file(path.string(), summary_to_json(s).dump(2) + "\n");
}

int cmd_run(const CommonFlags& flags) {
  Experiment e = build_experiment(flags);
  RunTrace trace = run_single(e, 0);
  fs::path out = flags.out.empty()
                     ? fs::path(default_out_dir()) /
                           ("run_" + to_string(e.algorithm) + "_seed" + std::to_string(e.master_seed) + ".csv")
                     : fs::path(flags.out);
  fs::create_directories(out.parent_path().empty() ? "." : out.parent_path());
  write_file(out.string(), trace_to_csv(trace));
  fs::path pulse_out = out;
  pulse_out.replace_extension(".pulse.csv");
  write_file(pulse_out.string(), pulse_to_csv(e.system, trace.terminal_pulse));
  std::cout << "algorithm=" << to_string(e.algorithm) << " final_measured="
            << format_number(trace.final_measured()) << " final_exact="
            << format_number(trace.terminal_exact) << " total_evals=" << trace.total_evals()
            << " stop=" << to_string(trace.stop_reason) << " trace=" << out.string() << "\n";
  return 0;
}

int cmd_batch(const CommonFlags& flags, std::optional<int> runs) {
  Experiment e = build_experiment(flags);
  if (runs) e.runs = *runs;
  fs::path dir = flags.out.empty() ? fs::path(default_out_dir()) / ("batch_" + to_string(e.algorithm))
                                   : fs::path(flags.out);
  fs::create_directories(dir);
  BatchResult result = run_batch(e, flags.threads);
  for (int i = 0; i < e.runs; ++i)
    write_file((dir / ("trace_" + std::to_string(i) + ".csv")).string(),
               trace_to_csv(result.traces[i]));
  write_summary(dir / "summary.json", result.summary);
  std::cout << "runs=" << e.runs << " success_rate=" << format_number(result.summary.success_rate)
            << " mean_evals=" << format_number(result.summary.mean_evals)
            << " var_evals=" << format_number(result.summary.var_evals) << " out=" << dir.string()
            << "\n";
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& param, const std::string& grid,
              std::optional<int> runs) {
  Experiment e = build_experiment(flags);
  if (runs) e.runs = *runs;
  SweepParameter p;
  if (param == "tr") p = SweepParameter::TrOverDt;
  else if (param == "gamma") p = SweepParameter::NoiseSigma;
  else throw std::invalid_argument("unknown sweep parameter (want tr or gamma): " + param);
  std::vector<double> values = parse_grid(grid);

  fs::path dir = flags.out.empty() ? fs::path(default_out_dir()) / ("sweep_" + param) : fs::path(flags.out);
  fs::create_directories(dir);
  auto points = sweep(e, p, values, flags.threads);

  std::ostringstream table;
  table << "value,success_rate,mean_evals,var_evals\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    write_summary(dir / ("summary_" + std::to_string(k) + ".json"), points[k].summary);
    table << format_number(points[k].value) << ',' << format_number(points[k].summary.success_rate)
          << ',' << format_number(points[k].summary.mean_evals) << ','
          << format_number(points[k].summary.var_evals) << '\n';
  }
  write_file((dir / "sweep.csv").string(), table.str());
  std::cout << "points=" << points.size() << " out=" << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop quantum control pulse search benchmark"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::optional<int> runs;
  std::string param, grid;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "JSON experiment config");
    cmd->add_option("--algorithm", flags.algorithm, "grape | nmplus | de");
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--sub-steps", flags.sub_steps, "distortion sub-slices per control slice");
    cmd->add_option("--out", flags.out, "output file or directory");
    cmd->add_option("--threads", flags.threads, "worker threads for batches");
  };

  CLI::App* run = app.add_subcommand("run", "execute a single closed-loop run");
  add_common(run);
  CLI::App* batch = app.add_subcommand("batch", "execute a seeded batch of runs");
  add_common(batch);
  batch->add_option("--runs", runs, "number of runs");
  CLI::App* sw = app.add_subcommand("sweep", "sweep distortion or noise over a grid");
  add_common(sw);
  sw->add_option("--runs", runs, "number of runs per grid point");
  sw->add_option("--param", param, "tr | gamma")->required();
  sw->add_option("--grid", grid, "start:step:end")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(flags);
    if (batch->parsed()) return cmd_batch(flags, runs);
    if (sw->parsed()) return cmd_sweep(flags, param, grid, runs);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
