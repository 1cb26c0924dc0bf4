// End-to-end tests that drive the aglm executable through a shell.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result invoke(const std::string& args) {
  const std::string cmd = std::string(AGLM_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config_path(const char* name) { return std::string(AGLM_CONFIG_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("aglm_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const Json& doc) {
  const fs::path file = dir / "config.json";
  std::ofstream(file) << doc.dump(2);
  return file;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Drops the trailing wall_s column, the only nondeterministic field.
std::string without_wall_clock(const std::string& csv) {
  std::istringstream in(csv);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) cells.push_back(cell);
    if (cells.size() > 9) cells.erase(cells.begin() + 9);
    for (const auto& c : cells) out += c + ",";
    out += "\n";
  }
  return out;
}

Json small_grid() {
  return Json::parse(R"({
    "problem": {"kind": "rosenbrock2"},
    "solvers": [
      {"solver": "lm", "grid": {"rho_min": [0.001, 0.1]}},
      {"solver": "pg", "grid": {"L_min": [1.0]}},
      {"solver": "dp", "grid": {"mu": [0.01], "L": [100]}}
    ],
    "max_outer_iters": 3000,
    "seed": 5
  })");
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(invoke("").code != 0);
  CHECK(invoke("frobnicate").code == 2);
  CHECK(invoke("run /nonexistent/config.json").code == 2);

  const fs::path dir = scratch("usage");
  Json doc = small_grid();
  doc["solvers"] = Json::array();
  const Result empty = invoke("run " + write_config(dir, doc).string());
  CHECK(empty.code == 2);
  CHECK(empty.output.find("solver") != std::string::npos);

  doc = small_grid();
  doc["solvers"][0]["grid"]["theta"] = Json::array({1.5});
  CHECK(invoke("run " + write_config(dir, doc).string()).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("list-problems names every bundled instance") {
  const Result r = invoke("list-problems");
  CHECK(r.code == 0);
  for (const char* kind : {"rosenbrock2", "rosenbrock_nd", "nmf_synthetic", "toy_interval", "linear_ls"}) {
    CHECK(r.output.find(kind) != std::string::npos);
  }
}

TEST_CASE("run writes csvs and summary, and flags override the file") {
  const fs::path dir = scratch("run");
  const fs::path out = dir / "out";
  const Result r = invoke("run " + write_config(dir, small_grid()).string() + " --out " +
                          out.string() + " --eps 1e-6 --log-iterates");
  REQUIRE(r.code == 0);
  for (const char* f : {"lm_000.csv", "lm_001.csv", "pg_000.csv", "dp_000.csv"}) {
    const std::string csv = read_file(out / f);
    CHECK(csv.rfind("k,F,delta,omega,rho,mu,inner_iters,backtracks,oracle_cost,wall_s,x_0,x_1\n", 0) == 0);
  }
  std::ifstream in(out / "summary.json");
  const Json s = Json::parse(in);
  CHECK(s["epsilon"] == 1e-6);
  CHECK(s["runs"].size() == 4);
  CHECK(s["best"].contains("lm"));
  fs::remove_all(dir);
}

TEST_CASE("budget zero stops every run at the initial point") {
  const fs::path dir = scratch("budget");
  Json doc = small_grid();
  doc["output_dir"] = (dir / "out").string();
  const Result r = invoke("run " + write_config(dir, doc).string() + " --budget 0");
  REQUIRE(r.code == 0);
  std::ifstream in(dir / "out" / "summary.json");
  const Json s = Json::parse(in);
  for (const Json& run : s["runs"]) {
    CHECK(run["status"] == "BudgetExhausted");
    const std::string csv = read_file(dir / "out" / run["csv"].get<std::string>());
    std::istringstream lines(csv);
    std::string header, row0, extra;
    std::getline(lines, header);
    std::getline(lines, row0);
    CHECK(header == "k,F,delta,omega,rho,mu,inner_iters,backtracks,oracle_cost,wall_s");
    CHECK(row0.rfind("0,", 0) == 0);
    CHECK_FALSE(std::getline(lines, extra));
  }
  fs::remove_all(dir);
}

TEST_CASE("identical configs give identical traces apart from wall time") {
  const fs::path dir = scratch("determinism");
  Json doc = small_grid();
  doc["problem"] = {{"kind", "nmf_synthetic"}, {"p", 6}, {"q", 7}, {"rank", 2}, {"num_observed", 30}};
  doc["max_outer_iters"] = 40;
  const fs::path cfg = write_config(dir, doc);
  REQUIRE(invoke("run " + cfg.string() + " --out " + (dir / "a").string() + " --workers 1").code == 0);
  REQUIRE(invoke("run " + cfg.string() + " --out " + (dir / "b").string() + " --workers 3").code == 0);
  for (const char* f : {"lm_000.csv", "lm_001.csv", "pg_000.csv", "dp_000.csv"}) {
    CAPTURE(f);
    CHECK(without_wall_clock(read_file(dir / "a" / f)) == without_wall_clock(read_file(dir / "b" / f)));
  }
  fs::remove_all(dir);
}

TEST_CASE("verify on the bundled configs") {
  const Result ok = invoke("verify " + config_path("rosenbrock2.json"));
  CHECK(ok.code == 0);
  CHECK(ok.output.find("FAIL") == std::string::npos);
  CHECK(ok.output.find("PASS membership") != std::string::npos);

  const Result bad = invoke("verify " + config_path("corrupt_vjp.json"));
  CHECK(bad.code == 1);
  CHECK(bad.output.find("FAIL adjoint") != std::string::npos);

  const Result toy = invoke("verify " + config_path("toy_interval.json"));
  CHECK(toy.code == 0);
  CHECK(toy.output.find("PASS finite_termination") != std::string::npos);
}
