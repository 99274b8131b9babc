#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "screenopt/app.hpp"
#include "screenopt/error.hpp"
#include "screenopt/io.hpp"
#include "screenopt/solver.hpp"

using namespace screenopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "screenopt_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SCREENOPT_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config(const std::string& name) { return std::string(SCREENOPT_CONFIG_DIR) + "/" + name; }

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("uniform_1d run reproduces the closed form and writes the report keys") {
  const fs::path out = scratch("uniform_1d");
  REQUIRE(cli("run " + config("uniform_1d.json") + " --out " + out.string(), out / "log.txt") == 0);
  std::ifstream fin(out / "field.csv");
  const SurplusField f = read_field_csv(fin);
  REQUIRE(f.size() == 101);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double theta = f.grid().coord(i, 0);
    CHECK(std::abs(f.v(i) - (theta - 1.0) * (theta - 1.0)) <= 6e-3);
    CHECK(std::abs(f.p(i, 0) - 2.0 * (theta - 1.0)) <= 2e-2);
  }
  const nlohmann::json report = nlohmann::json::parse(slurp(out / "report.json"));
  std::vector<std::string> keys;
  for (const auto& [k, v] : report.items()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  CHECK(keys == std::vector<std::string>{"iters", "max_violation", "objective", "q_cap_bound"});
  CHECK(fs::exists(out / "contracts.csv"));
  CHECK(fs::exists(out / "segmentation.csv"));
}

TEST_CASE("fig1_profitability run emits a positive 1D certificate") {
  const fs::path out = scratch("fig1");
  REQUIRE(cli("run " + config("fig1_profitability.json") + " --out " + out.string(), out / "log.txt") == 0);
  const nlohmann::json c = nlohmann::json::parse(slurp(out / "certificate.json"));
  CHECK(c["type"] == "1d");
  CHECK(c["positive"] == true);
  CHECK(c["jprime0"].get<double>() > 0.0);
  CHECK(c.contains("spec"));
}

TEST_CASE("a single-node axis is a configuration error") {
  const fs::path dir = scratch("bad");
  const fs::path cfg = write_config(dir, R"({"version": 1, "problem": "classical-1d",
    "domain": {"lo": [1.0], "hi": [2.0]}, "grid": {"n": [1]}})");
  CHECK(cli("run " + cfg.string() + " --out " + (dir / "out").string(), dir / "log.txt") == 1);
  CHECK(slurp(dir / "log.txt").find("invalid-resolution") != std::string::npos);
  CHECK(cli("check " + cfg.string(), dir / "log2.txt") == 1);
  CHECK(slurp(dir / "log2.txt").find("invalid-resolution") != std::string::npos);
}

TEST_CASE("check validates without solving") {
  const fs::path dir = scratch("check");
  CHECK(cli("check " + config("uniform_2d.json"), dir / "log.txt") == 0);
  CHECK(slurp(dir / "log.txt") == "ok\n");
}

TEST_CASE("configuration parsing rejects malformed input") {
  CHECK_THROWS_AS(parse_config("{"), Error);
  CHECK_THROWS_AS(parse_config(R"({"problem": "classical-1d"})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "problem": "quadratic"})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "problem": "classical-1d", "domain": {"lo": [1], "hi": [2]},
    "grid": {"n": [5]}, "density": {"kind": "fig1", "a": 1.5}})"),
                  Error);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "problem": "classical-1d", "domain": {"lo": [1], "hi": [2]},
    "grid": {"n": [5]}, "density": {"kind": "csv", "path": "missing.csv"}})"),
                  Error);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "problem": "classical-1d", "domain": {"lo": [1], "hi": [2]},
    "grid": {"n": [5]}, "typo": 3})"),
                  Error);
  const RunConfig ok = parse_config(R"({"version": 1, "problem": "classical-2d",
    "domain": {"lo": [1, 1], "hi": [2, 2]}, "grid": {"n": [5, 5]}})");
  CHECK(ok.problem == ProblemKind::Classical2D);
}

TEST_CASE("nonconvergence exits with 2 and still writes a feasible field") {
  const fs::path dir = scratch("budget");
  const fs::path cfg = write_config(dir, R"({"version": 1, "problem": "classical-2d",
    "domain": {"lo": [1.0, 1.0], "hi": [2.0, 2.0]}, "grid": {"n": [5, 5]}, "solver": {"max_iters": 2}})");
  CHECK(cli("run " + cfg.string() + " --out " + (dir / "out").string(), dir / "log.txt") == 2);
  std::ifstream in(dir / "out" / "field.csv");
  const SurplusField f = read_field_csv(in);
  CHECK(check_feasibility(f, assemble_constraints(f.grid()), 1e-8).feasible);
}

TEST_CASE("repeated runs produce byte-identical artifacts") {
  const fs::path a = scratch("repeat_a"), b = scratch("repeat_b");
  REQUIRE(cli("run " + config("independence.json") + " --out " + a.string() + " --seed 3", a / "log.txt") == 0);
  const std::string cmd_env = "SCREENOPT_THREADS=1 ";
  const std::string cmd = cmd_env + SCREENOPT_CLI + " run " + config("independence.json") + " --out " + b.string() +
                          " > /dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  for (const char* name : {"report.json", "field.csv", "contracts.csv", "segmentation.csv", "diagnostics.json"})
    CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name);
}

TEST_CASE("compare: self, product-density extended vs classical, fig1 extended vs classical") {
  const fs::path ind = scratch("cmp_ind"), cls = scratch("cmp_cls"), ext = scratch("cmp_ext"), fcl = scratch("cmp_fcl");
  REQUIRE(cli("run " + config("independence.json") + " --out " + ind.string(), ind / "log.txt") == 0);
  REQUIRE(cli("run " + config("fig1_extended.json") + " --out " + ext.string(), ext / "log.txt") == 0);
  REQUIRE(cli("run " + config("fig1_classical.json") + " --out " + fcl.string(), fcl / "log.txt") == 0);
  const fs::path cfg = write_config(cls, R"({"version": 1, "problem": "classical-1d",
    "domain": {"lo": [1.0], "hi": [2.0]}, "grid": {"n": [21]}})");
  REQUIRE(cli("run " + cfg.string() + " --out " + (cls / "out").string(), cls / "log.txt") == 0);

  const ComparisonReport self = compare(ind, ind);
  CHECK(self.objective_delta == 0.0);
  CHECK(self.linf_v == 0.0);
  CHECK(self.linf_p == 0.0);
  CHECK(self.linf_q == 0.0);

  const ComparisonReport prod = compare(cls / "out", ind);
  CHECK(std::abs(prod.objective_delta) <= 1e-4 * std::abs(prod.objective_a));
  CHECK(prod.max_q_b <= 1e-4);

  const ComparisonReport lot = compare(fcl, ext);
  CHECK(lot.objective_delta > 1e-3);

  CHECK_THROWS_AS(compare(ind, scratch("empty")), Error);
  const fs::path log = scratch("cmp_cli") / "log.txt";
  CHECK(cli("compare " + ind.string() + " " + ind.string(), log) == 0);
  CHECK(nlohmann::json::parse(slurp(log))["objective_delta"] == 0.0);
}

TEST_CASE("field CSV round trip") {
  const SolveResult r = solve(assemble_extended(uniform_density(
      Grid::build(TypeDomain{{1.0}, {2.0}}, AversionDomain{2.0}, std::vector<int>{4}, 3))));
  std::stringstream s;
  write_field_csv(s, r.field);
  CHECK(s.str().rfind("axis0,alpha,v,p0,q\n", 0) == 0);
  const SurplusField back = read_field_csv(s);
  CHECK(back.grid() == r.field.grid());
  CHECK(back.data() == r.field.data());
}
