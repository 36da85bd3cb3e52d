#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>
#include <string>

#include "sobloop/harness/suites.hpp"

using namespace sobloop;
using namespace sobloop::harness;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, known_tolerance_names());
}

}  // namespace

TEST_CASE("config survives a write and parse round trip") {
  RunConfig c;
  c.grid_size = 128;
  c.s = 0.25;
  c.p = 3.0;
  c.seed = 7;
  c.output_format = OutputFormat::csv;
  c.output_path = "out/report.csv";
  c.system = "nls";
  c.dt = 1.0 / 3.0;
  c.t_end = 0.1;
  c.flow_operator = 0;
  c.flow_hamiltonian = 0;
  c.flow_pair_set = true;
  c.kdv_normalization = "positive_dispersion";
  c.nls_operator = "derivative";
  c.grids = {64, 96};
  c.magri_h1_scale = -1.0;
  c.tolerances["jacobi.constant_J_fd"] = 2.5e-3;
  CHECK(parse(write_config(c)) == c);
  CHECK(parse(write_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("config comments, whitespace and overrides") {
  const RunConfig c = parse("# comment\n  grid_size =  64 \n\np=1.5\ntolerance.multipliers.parseval = 1e-9\n");
  CHECK(c.grid_size == 64);
  CHECK(c.p == 1.5);
  CHECK(c.tolerances.at("multipliers.parseval") == 1e-9);
}

TEST_CASE("config rejects unknown keys, tolerances and bad values") {
  CHECK_THROWS_AS(parse("gird_size = 64\n"), ConfigError);
  CHECK_THROWS_AS(parse("tolerance.multipliers.nonexistent = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("grid_size = 63\n"), ConfigError);
  CHECK_THROWS_AS(parse("grid_size = sixty\n"), ConfigError);
  CHECK_THROWS_AS(parse("s = 0.75\n"), ConfigError);
  CHECK_THROWS_AS(parse("p = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("output_format = xml\n"), ConfigError);
  CHECK_THROWS_AS(parse("just a line\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/sobloop.cfg"), ConfigError);
}

TEST_CASE("every suite threshold is a valid tolerance key") {
  const auto names = known_tolerance_names();
  for (const auto& suite : suite_names()) {
    const std::string prefix = suite + ".";
    CHECK(std::any_of(names.begin(), names.end(), [&](const std::string& n) { return n.rfind(prefix, 0) == 0; }));
  }
  CHECK_THROWS_AS(run_suite("nonexistent", RunConfig{}), ConfigError);
}

TEST_CASE("report records checks, roles and timings") {
  RunConfig cfg;
  cfg.tolerances["demo.b"] = 10.0;
  VerificationReport rep("demo", cfg);
  rep.add("a", 0.5, 1.0, Comparison::le);
  rep.add("b", 5.0, 1.0, Comparison::lt);  // threshold overridden to 10
  rep.diagnostic("c", 3.0, 1.0, Comparison::le, "recorded only");
  CHECK(rep.pass());
  rep.add_timing("runtime", 0.1, 1.0);
  rep.finish();
  const auto j = rep.to_json();
  CHECK(j["suite"] == "demo");
  CHECK(j["checks"].size() == 3);
  CHECK(j["checks"][1]["threshold"] == 10.0);
  CHECK(j["checks"][2]["role"] == "diagnostic");
  CHECK(j["checks"][2]["pass"] == false);
  CHECK(j["pass"] == true);
  CHECK(j["environment"]["N"] == 256);
  const std::string csv = rep.to_csv();
  CHECK(csv.rfind("suite,name,measured,threshold,comparison,pass,role\n", 0) == 0);
  CHECK(csv.find("demo,c,3,1,<=,false,diagnostic") != std::string::npos);
  CHECK(csv.find("demo,runtime,") != std::string::npos);
  rep.add("d", 2.0, 1.0, Comparison::eq);
  CHECK_FALSE(rep.pass());
  const auto stripped = strip_timing(rep.to_json());
  CHECK_FALSE(stripped.contains("wall_time_s"));
  CHECK_FALSE(stripped.contains("timings"));
}

TEST_CASE("a suite rerun with the same seed is identical up to timing") {
  RunConfig cfg;
  cfg.grid_size = 64;
  const auto a = strip_timing(run_suite("presymplectic", cfg).to_json());
  const auto b = strip_timing(run_suite("presymplectic", cfg).to_json());
  CHECK(a.dump() == b.dump());
  CHECK(a["pass"] == true);
}

TEST_CASE("a tolerance override can flip a verdict") {
  RunConfig cfg;
  cfg.grid_size = 64;
  cfg.tolerances["presymplectic.skewness"] = -1.0;
  const auto rep = run_suite("presymplectic", cfg);
  CHECK_FALSE(rep.pass());
  REQUIRE(rep.find("skewness") != nullptr);
  CHECK(rep.find("skewness")->threshold == -1.0);
}

TEST_CASE("magri report passes and its negative control fails") {
  RunConfig cfg;
  cfg.grid_size = 64;
  CHECK(magri_report(cfg).pass());
  cfg.magri_h1_scale = -1.0;
  const auto bad = magri_report(cfg);
  CHECK_FALSE(bad.pass());
  CHECK(bad.find("max_discrepancy")->measured > 1.0);
}

TEST_CASE("estimate-constants tabulates one row per grid") {
  RunConfig cfg;
  cfg.grids = {64};
  CHECK_THROWS_AS(estimate_constants(cfg), ConfigError);
  cfg.grids = {64, 128};
  const auto j = estimate_constants(cfg).to_json();
  REQUIRE(j["data"]["table"].size() == 2);
  const auto& row = j["data"]["table"][1];
  CHECK(row["N"] == 128);
  CHECK(row["c_or_band"] == "constant");
  CHECK(row["ratios"].size() == 5);
  cfg.p = 3.0;
  CHECK(estimate_constants(cfg).to_json()["data"]["table"][0]["c_or_band"] == "band");
}

TEST_CASE("flow driver writes the conserved-quantity log") {
  RunConfig cfg;
  cfg.grid_size = 64;
  cfg.system = "kdv";
  cfg.t_end = 0.01;
  const FlowRun run = run_flow(cfg);
  CHECK(run.csv.rfind("t,H0,H1,C,l2_norm\n", 0) == 0);
  CHECK(run.summary["steps"] == 100);
  CHECK(run.summary["dt_source"] == "reference");
  CHECK(run.pass);
  cfg.dt = 0.05;
  CHECK_THROWS_AS(run_flow(cfg), StepGuardError);
  cfg.system = "dubrovin_novikov";
  CHECK_THROWS_AS(run_flow(cfg), ConfigError);
  cfg.system = "burgers";
  CHECK_THROWS_AS(run_flow(cfg), ConfigError);
}

TEST_CASE("random density functionals carry consistent gradients") {
  std::mt19937_64 rng(3);
  const Grid g(32);
  for (int i = 0; i < 5; ++i) {
    const Functional F = random_density_functional(2, rng);
    const LoopSample gamma = random_smooth_loop(g, 2, rng, 4, true);
    const LoopSample h = random_smooth_loop(g, 2, rng, 4, true);
    CHECK(gradient_check(F, gamma, h) < 1e-7);
  }
}
