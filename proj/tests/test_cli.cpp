#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "selfdual/cli.hpp"
#include "selfdual/errors.hpp"

using namespace selfdual;
namespace fs = std::filesystem;

namespace {

const fs::path kPresets = SELFDUAL_PRESET_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A fresh scratch directory per call, under the system temp dir.
fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "selfdual_test_cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name) / "case.cfg";
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

int run(const std::string& command, const fs::path& config, const fs::path& out = {}, std::uint64_t seed = 42) {
  CommandOptions o;
  o.config_path = config.string();
  o.out_dir = out.string();
  o.seed = seed;
  std::ostringstream sout, serr;
  return run_command(command, o, sout, serr);
}

nlohmann::json report(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "report.json")); }

}  // namespace

TEST_CASE("config parsing") {
  const Config c = Config::parse("# comment\n[grid]\nnx = 5 ; trailing\n  x = 0 2  \n\n[potential]\np=3\n");
  CHECK(c.get("grid", "nx") == "5");
  CHECK(c.get("grid", "x") == "0 2");
  CHECK(c.get_double("potential", "p") == 3.0);
  CHECK(c.get_int("grid", "nx") == 5);
  CHECK_FALSE(c.has("grid", "ny"));
  CHECK_THROWS_AS(c.get("grid", "ny"), ConfigError);
  CHECK_THROWS_AS(c.get_int("grid", "x"), ConfigError);

  CHECK_THROWS_AS(Config::parse("[nowhere]\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[grid]\nnodes = 3\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[grid]\nnx = 3\nnx = 4\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[grid]\nnx =\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[grid]\nnx 3\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("nx = 3\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[grid\n"), ConfigError);
  try {
    Config::parse("[grid]\nnx = 3\n\nbogus = 1\n", "f.cfg");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("f.cfg:4") != std::string::npos);
  }
}

TEST_CASE("manifest echoes resolved values in schema order") {
  Config c = Config::parse("[potential]\np = 3\n[grid]\nnx = 9\n");
  CHECK(c.get_double("solver", "tol", 1e-10) == 1e-10);
  CHECK(c.get_int("grid", "dim", 1) == 1);
  CHECK(c.get_bool("skew", "inconsistent_divergence", false) == false);
  CHECK(c.get_double("potential", "p", 2.0) == 3.0);
  CHECK(c.manifest() ==
        "[grid]\ndim = 1\nnx = 9\n\n[potential]\np = 3\n\n[solver]\ntol = 1e-10\n\n"
        "[skew]\ninconsistent_divergence = false\n");
  // The manifest parses back to the same configuration.
  CHECK(Config::parse(c.manifest()).manifest() == c.manifest());
}

TEST_CASE("exit codes of the shipped presets") {
  const std::pair<const char*, const char*> commands[] = {{"skew_", "check-skew"}, {"asd_", "verify-asd"}};
  struct Case {
    const char* preset;
    int code;
  };
  const Case cases[] = {
      {"skew_1d", 0}, {"skew_negative", 1}, {"asd_basic", 0}, {"asd_regularized", 0}, {"asd_antisym", 0},
      {"asd_broken_sign", 1}, {"homogeneous", 0}, {"linear", 0}, {"manufactured_p3", 0},
      {"manufactured_sin_p3", 0}, {"sublinear_p15", 0}, {"weighted_tau", 0}, {"viscous_1d", 0},
      {"viscous_2d", 0}, {"infeasible_tau", 3}, {"linear_ode_spacetime", 0}, {"linear_ode_prox", 0},
      {"heat", 0}, {"transport_evolution", 0}, {"homogeneous_evolution", 0}, {"invalid_initial", 3},
  };
  const std::string evolution[] = {"linear_ode_spacetime", "linear_ode_prox", "heat", "transport_evolution",
                                   "homogeneous_evolution", "invalid_initial"};
  for (const Case& c : cases) {
    std::string command = "solve-stationary";
    for (const auto& [prefix, cmd] : commands)
      if (std::string(c.preset).rfind(prefix, 0) == 0) command = cmd;
    for (const std::string& e : evolution)
      if (e == c.preset) command = "solve-evolution";
    INFO(c.preset);
    CHECK(run(command, kPresets / (std::string(c.preset) + ".cfg")) == c.code);
  }
}

TEST_CASE("configuration errors exit with code 2") {
  CHECK(run("solve-stationary", write_config("empty", "# nothing here\n")) == kExitConfigError);
  CHECK(run("solve-stationary", kPresets / "no_such_file.cfg") == kExitConfigError);
  CHECK(run("no-such-command", kPresets / "linear.cfg") == kExitConfigError);
  CHECK(run("solve-stationary", write_config("unknown_key", "[grid]\nnx = 9\nspacing = 2\n")) == kExitConfigError);
  CHECK(run("solve-stationary", write_config("missing_nx", "[grid]\ndim = 1\n")) == kExitConfigError);
  CHECK(run("solve-stationary", write_config("bad_expr", "[grid]\nnx = 9\n[vectorfield]\nax = 1 +\n")) ==
        kExitConfigError);
  // The evolution equation has no source term.
  CHECK(run("solve-evolution", write_config("evolution_f", "[grid]\nnx = 9\n[vectorfield]\nax = 0\n"
                                                           "[coefficients]\nf = 1\n[problem]\nT = 1\nsteps = 2\n"
                                                           "initial = 0\n")) == kExitConfigError);
}

TEST_CASE("stationary outputs") {
  const fs::path out = scratch("linear_out");
  REQUIRE(run("solve-stationary", kPresets / "linear.cfg", out) == 0);
  const nlohmann::json r = report(out);
  CHECK(r.size() == 6);
  for (const char* k : {"I_total", "fenchel_gap", "inflow_trace_sq", "pde_residual_linf", "iterations", "converged"})
    CHECK(r.contains(k));
  CHECK(r["I_total"].get<double>() <= 1e-8);
  CHECK(r["inflow_trace_sq"].get<double>() <= 1e-8);
  CHECK(r["converged"].get<bool>());

  const std::string csv = slurp(out / "solution.csv");
  CHECK(csv.rfind("x,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 130);
  const std::string manifest = slurp(out / "manifest.cfg");
  CHECK(manifest.rfind("# command = solve-stationary\n# seed = 42\n", 0) == 0);
  CHECK(manifest.find("nx = 129") != std::string::npos);

  // A tolerance no solver meets turns the oracle comparison into a violation.
  const std::string tight = "[grid]\nnx = 129\n[vectorfield]\nax = 1\n[coefficients]\na0 = 1\nf = -1\n"
                            "[oracle]\nfile = " + (kPresets / "linear_oracle.csv").string() + "\ntol = 1e-300\n";
  CHECK(run("solve-stationary", write_config("tight_oracle", tight)) == kExitPropertyViolated);
  const std::string wrong = "[grid]\nnx = 65\n[vectorfield]\nax = 1\n"
                            "[oracle]\nfile = " + (kPresets / "linear_oracle.csv").string() + "\n";
  CHECK(run("solve-stationary", write_config("wrong_oracle", wrong)) == kExitConfigError);
}

TEST_CASE("evolution outputs") {
  const fs::path out = scratch("ode_out");
  REQUIRE(run("solve-evolution", kPresets / "linear_ode_prox.cfg", out) == 0);
  const nlohmann::json r = report(out);
  CHECK(r["scheme"] == "prox");
  CHECK(r["N"] == 128);
  CHECK(r["dt"].get<double>() == 1.0 / 128);
  CHECK(r["max_step_certificate"].get<double>() <= 1e-8);
  CHECK(r["contraction_ratios"].size() == 128);
  const std::string csv = slurp(out / "trajectory.csv");
  CHECK(csv.rfind("k,t,node,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 129 * 2);

  const fs::path st = scratch("ode_st_out");
  REQUIRE(run("solve-evolution", kPresets / "linear_ode_spacetime.cfg", st) == 0);
  CHECK(report(st)["I_total"].get<double>() <= 1e-8);
  CHECK_FALSE(report(st).contains("max_step_certificate"));
}

TEST_CASE("repeated runs are byte-identical") {
  const std::pair<const char*, const char*> runs[] = {{"check-skew", "skew_1d"},
                                                      {"verify-asd", "asd_regularized"},
                                                      {"solve-stationary", "manufactured_p3"},
                                                      {"solve-stationary", "viscous_2d"},
                                                      {"solve-evolution", "transport_evolution"},
                                                      {"solve-evolution", "heat"}};
  for (const auto& [command, preset] : runs) {
    INFO(preset);
    const fs::path a = scratch(std::string(preset) + "_a"), b = scratch(std::string(preset) + "_b");
    REQUIRE(run(command, kPresets / (std::string(preset) + ".cfg"), a) == 0);
    REQUIRE(run(command, kPresets / (std::string(preset) + ".cfg"), b) == 0);
    int files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    }
    CHECK(files >= 2);
  }
}

TEST_CASE("the seed selects the sampled pairs") {
  const fs::path a = scratch("seed_a"), b = scratch("seed_b");
  REQUIRE(run("check-skew", kPresets / "skew_1d.cfg", a, 1) == 0);
  REQUIRE(run("check-skew", kPresets / "skew_1d.cfg", b, 2) == 0);
  CHECK(report(a)["max_green_residual"] != report(b)["max_green_residual"]);
  CHECK(slurp(a / "manifest.cfg").find("# seed = 1\n") != std::string::npos);
}
