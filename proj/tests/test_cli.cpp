#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kWorkDir = fs::temp_directory_path() / "qpulse_cli_test";

int run_cli(const std::string& args) {
  std::string cmd = std::string(QPULSE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return status;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

struct Workspace {
  Workspace() {
    fs::remove_all(kWorkDir);
    fs::create_directories(kWorkDir);
    write(kWorkDir / "quick.json", R"({
      "algorithm": "nmplus",
      "nmplus": {"max_iterations": 10},
      "runs": 3,
      "master_seed": 11
    })");
  }
};

}  // namespace

TEST_CASE("run writes a trace and a pulse dump") {
  Workspace ws;
  fs::path out = kWorkDir / "trace.csv";
  CHECK(run_cli("run --config " + (kWorkDir / "quick.json").string() + " --out " + out.string()) ==
        0);
  std::string csv = slurp(out);
  CHECK(csv.rfind("iteration,cum_evals,measured_fidelity,exact_fidelity\n", 0) == 0);
  CHECK(fs::exists(kWorkDir / "trace.pulse.csv"));
}

TEST_CASE("repeated runs are byte identical") {
  Workspace ws;
  fs::path a = kWorkDir / "a.csv";
  fs::path b = kWorkDir / "b.csv";
  std::string flags = "run --algorithm grape --seed 3 ";
  CHECK(run_cli(flags + "--out " + a.string()) == 0);
  CHECK(run_cli(flags + "--out " + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));

  fs::path c = kWorkDir / "c.csv";
  CHECK(run_cli("run --algorithm grape --seed 4 --out " + c.string()) == 0);
  CHECK(slurp(a) != slurp(c));
}

TEST_CASE("malformed config fails without partial output") {
  Workspace ws;
  write(kWorkDir / "broken.json", "{ not json");
  fs::path out = kWorkDir / "never.csv";
  CHECK(run_cli("run --config " + (kWorkDir / "broken.json").string() + " --out " + out.string()) !=
        0);
  CHECK_FALSE(fs::exists(out));

  write(kWorkDir / "unknown.json", R"({"mystery": 1})");
  CHECK(run_cli("run --config " + (kWorkDir / "unknown.json").string() + " --out " + out.string()) !=
        0);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("batch emits traces and a summary") {
  Workspace ws;
  fs::path dir = kWorkDir / "batch";
  CHECK(run_cli("batch --config " + (kWorkDir / "quick.json").string() + " --runs 2 --out " +
                dir.string()) == 0);
  CHECK(fs::exists(dir / "trace_0.csv"));
  CHECK(fs::exists(dir / "trace_1.csv"));
  std::string summary = slurp(dir / "summary.json");
  CHECK(summary.find("\"success_rate\"") != std::string::npos);
  CHECK(summary.find("\"mean_evals\"") != std::string::npos);

  fs::path single = kWorkDir / "single";
  CHECK(run_cli("batch --config " + (kWorkDir / "quick.json").string() + " --runs 1 --out " +
                single.string()) == 0);
  CHECK(slurp(single / "summary.json").find("\"var_evals\": 0") != std::string::npos);
}

TEST_CASE("degenerate sweep equals the plain batch") {
  Workspace ws;
  fs::path sdir = kWorkDir / "sweep";
  fs::path bdir = kWorkDir / "base";
  std::string cfg = (kWorkDir / "quick.json").string();
  CHECK(run_cli("sweep --config " + cfg + " --param tr --grid 0:1:0 --out " + sdir.string()) == 0);
  CHECK(run_cli("batch --config " + cfg + " --out " + bdir.string()) == 0);
  CHECK(slurp(sdir / "summary_0.json") == slurp(bdir / "summary.json"));
  std::string table = slurp(sdir / "sweep.csv");
  CHECK(table.rfind("value,success_rate,mean_evals,var_evals\n", 0) == 0);

  CHECK(run_cli("sweep --config " + cfg + " --param banana --grid 0:1:0 --out " + sdir.string()) !=
        0);
  CHECK(run_cli("sweep --config " + cfg + " --param tr --grid 1:0:0 --out " + sdir.string()) != 0);
}
