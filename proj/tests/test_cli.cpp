#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
  const char* p = std::getenv("VLQ_CLI");
  REQUIRE_MESSAGE(p != nullptr, "VLQ_CLI must point at the command-line binary");
  return p;
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "vlq-cli-test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << text;
  return p;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kHandConfig = R"({
  "dims": {"d": 1, "l": 1},
  "grid": {"T": 1.0, "N": 2},
  "kernels": {"B": {"family": "constant", "params": {"value": 1.0}}},
  "cost": {"Q": 0.0, "R": 1.0, "G": 1.0},
  "input": {"phi1": {"family": "constant", "params": {"value": 1.0}}, "phi2": 1.0},
  "run": {"scheme": "dp", "tolerance": 1e-06}
})";

}  // namespace

TEST_CASE("solve on a minimal config writes the solution artifacts") {
  const fs::path cfg = write_config("hand.json", kHandConfig);
  const fs::path out = scratch_dir() / "out-solve";
  fs::remove_all(out);
  CHECK(run("solve --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "solution" / "P1.csv"));
  CHECK(fs::exists(out / "solution" / "P2.csv"));
  CHECK(fs::exists(out / "solution" / "P3.csv"));
  CHECK(fs::exists(out / "solution" / "P4.csv"));
  CHECK(fs::exists(out / "solution" / "Theta2.csv"));
  const std::string rep = slurp(out / "report.json");
  CHECK(rep.find("\"pass\": true") != std::string::npos);
  // The two-step value solved by hand is 1/2.
  CHECK(rep.find("\"value\": 0.5") != std::string::npos);
}

TEST_CASE("verify cross-checks the hand-checkable instance against the oracles") {
  const fs::path cfg = write_config("hand.json", kHandConfig);
  const fs::path out = scratch_dir() / "out-verify";
  CHECK(run("verify --config " + cfg.string() + " --out " + out.string()) == 0);
  const std::string rep = slurp(out / "report.json");
  CHECK(rep.find("\"dp_value\": 0.5") != std::string::npos);
  CHECK(rep.find("qp_vs_dp") != std::string::npos);
  CHECK(rep.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("simulate writes an ensemble") {
  const fs::path cfg = write_config("hand.json", kHandConfig);
  const fs::path out = scratch_dir() / "out-sim";
  CHECK(run("simulate --config " + cfg.string() + " --out " + out.string() + " --seed 3") == 0);
  CHECK(fs::exists(out / "ensemble.csv"));
  const std::string head = slurp(out / "ensemble.csv").substr(0, 40);
  CHECK(head.find("path,k,t") == 0);
}

TEST_CASE("unknown configuration keys are rejected by name") {
  const fs::path cfg = write_config("bad-key.json", R"({
    "dims": {"d": 1, "l": 1},
    "grid": {"T": 1.0, "N": 2},
    "kernels": {},
    "cost": {"Q": 0.0, "R": 1.0, "G": 1.0},
    "input": {"phi1": {"family": "constant", "params": {"value": 1.0}}, "phi2": 1.0},
    "foo": 1
  })");
  const fs::path out = scratch_dir() / "out-bad";
  const std::string cmd =
      cli_path() + " solve --config " + cfg.string() + " --out " + out.string() + " 2> " +
      (scratch_dir() / "err.txt").string();
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 2);
  const std::string err = slurp(scratch_dir() / "err.txt");
  CHECK(err.find("foo") != std::string::npos);
}

TEST_CASE("invalid kernel parameters are rejected") {
  const fs::path cfg = write_config("bad-h.json", R"({
    "dims": {"d": 1, "l": 1},
    "grid": {"T": 1.0, "N": 4},
    "kernels": {"B": {"family": "fractional", "params": {"c": 1.0, "H": -0.1}}},
    "cost": {"Q": 1.0, "R": 1.0, "G": 0.0},
    "input": {"phi1": {"family": "constant", "params": {"value": 1.0}}, "phi2": 0.0}
  })");
  CHECK(run("solve --config " + cfg.string() + " --out " +
            (scratch_dir() / "out-bad-h").string()) == 2);
}

TEST_CASE("sweep reports a convergence order against the discrete oracle") {
  const fs::path cfg = write_config("hand.json", kHandConfig);
  const fs::path out = scratch_dir() / "out-sweep";
  CHECK(run("sweep --config " + cfg.string() + " --out " + out.string() +
            " --scheme direct --sweep 4 8 16") == 0);
  const std::string rep = slurp(out / "report.json");
  CHECK(rep.find("order_fit") != std::string::npos);
}

TEST_CASE("reduce picks the matching special case") {
  // Zero A, C, D: the deterministic Volterra collapse applies.
  const fs::path cfg = write_config("hand.json", kHandConfig);
  const fs::path out = scratch_dir() / "out-reduce";
  CHECK(run("reduce --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(slurp(out / "report.json").find("deterministic-volterra") != std::string::npos);

  // Constant nonzero drift: the classical Riccati comparison applies.
  const fs::path cfg2 = write_config("const.json", R"({
    "dims": {"d": 1, "l": 1},
    "grid": {"T": 1.0, "N": 8},
    "kernels": {"A": {"family": "constant", "params": {"value": 0.5}},
                "B": {"family": "constant", "params": {"value": 1.0}}},
    "cost": {"Q": 1.0, "R": 1.0, "G": 1.0},
    "input": {"phi1": {"family": "constant", "params": {"value": 1.0}}, "phi2": 1.0}
  })");
  const fs::path out2 = scratch_dir() / "out-reduce2";
  CHECK(run("reduce --config " + cfg2.string() + " --out " + out2.string()) == 0);
  CHECK(slurp(out2 / "report.json").find("constant-coefficient") != std::string::npos);
}
