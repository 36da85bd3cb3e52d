#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "sobloop/harness/suites.hpp"

namespace {

namespace h = sobloop::harness;

constexpr int exit_pass = 0;
constexpr int exit_fail = 1;
constexpr int exit_usage = 2;
constexpr int exit_unstable = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::size_t> grid;
  std::optional<double> s;
  std::optional<double> p;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::optional<double> dt;
  std::optional<double> t_end;
  std::string grids;
  std::optional<double> scale_h1;
  std::optional<std::size_t> op;
  std::optional<std::size_t> hamiltonian;
  std::string kdv_normalization;
  std::string nls_operator;
};

h::RunConfig build_config(const Overrides& o) {
  std::set<std::string> known = h::known_tolerance_names();
  h::RunConfig cfg = o.config_path.empty() ? h::RunConfig{} : h::load_config(o.config_path, known);
  auto set = [&](const std::string& k, const std::string& v) { h::set_config_value(cfg, k, v, known); };
  auto num = [](double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
  };
  if (o.grid) set("grid_size", std::to_string(*o.grid));
  if (o.s) set("s", num(*o.s));
  if (o.p) set("p", num(*o.p));
  if (o.seed) set("seed", std::to_string(*o.seed));
  if (!o.format.empty()) set("output_format", o.format);
  if (!o.out.empty()) set("output_path", o.out);
  if (o.dt) set("dt", num(*o.dt));
  if (o.t_end) set("t_end", num(*o.t_end));
  if (!o.grids.empty()) set("grids", o.grids);
  if (o.scale_h1) set("magri_h1_scale", num(*o.scale_h1));
  if (o.op) set("flow_operator", std::to_string(*o.op));
  if (o.hamiltonian) set("flow_hamiltonian", std::to_string(*o.hamiltonian));
  if (!o.kdv_normalization.empty()) set("kdv_normalization", o.kdv_normalization);
  if (!o.nls_operator.empty()) set("nls_operator", o.nls_operator);
  h::validate(cfg);
  return cfg;
}

/// Explicit output path, else $SOBLOOP_OUT_DIR/<stem>.<ext>, else empty
/// (standard output).
std::string resolve_output(const h::RunConfig& cfg, const std::string& stem, const std::string& ext) {
  if (!cfg.output_path.empty()) return cfg.output_path;
  if (const char* dir = std::getenv("SOBLOOP_OUT_DIR"); dir != nullptr && *dir != '\0') {
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / (stem + "." + ext)).string();
  }
  return {};
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw h::ConfigError("cannot write '" + path + "'");
  out << text;
}

void emit_report(const h::VerificationReport& rep, const h::RunConfig& cfg, const std::string& stem) {
  const bool csv = cfg.output_format == h::OutputFormat::csv;
  const std::string path = resolve_output(cfg, stem, csv ? "csv" : "json");
  emit(path, csv ? rep.to_csv() : rep.to_json().dump(2) + "\n");
  std::cerr << rep.suite() << ": " << (rep.pass() ? "PASS" : "FAIL");
  if (!path.empty()) std::cerr << " -> " << path;
  std::cerr << "\n";
  for (const auto& c : rep.checks()) {
    if (!c.pass) {
      std::cerr << "  " << (c.role == h::Role::criterion ? "failed" : "diagnostic") << " " << c.name
                << ": " << c.measured << " " << h::to_string(c.comparison) << " " << c.threshold << "\n";
    }
  }
  for (const auto& t : rep.timings()) {
    if (!t.pass) std::cerr << "  slow " << t.name << ": " << t.measured_s << " s\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop-space Sobolev and Poisson-bracket verification"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config_path, "key = value configuration file");
  app.add_option("--grid", o.grid, "grid size N (even, >= 16)");
  app.add_option("--s", o.s, "smoothness s in (0, 1/2]");
  app.add_option("--p", o.p, "integrability p in (1, inf)");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--out", o.out, "output path (flow: base path for .csv and .json)");
  app.add_option("--format", o.format, "json or csv");

  std::string suite;
  auto* verify = app.add_subcommand("verify", "run one verification suite");
  verify->add_option("suite", suite, "suite name")->required();

  std::string system;
  auto* flow = app.add_subcommand("flow", "evolve an integrable system and log conserved quantities");
  flow->add_option("system", system, "kdv, nls or ch")->required();
  flow->add_option("--dt", o.dt, "time step (default: reference step, reduced if the guard needs it)");
  flow->add_option("--t-end", o.t_end, "final time");
  flow->add_option("--operator", o.op, "Poisson operator index");
  flow->add_option("--hamiltonian", o.hamiltonian, "Hamiltonian index");
  flow->add_option("--kdv-normalization", o.kdv_normalization, "flow_consistent or positive_dispersion");
  flow->add_option("--nls-operator", o.nls_operator, "canonical or derivative");

  auto* est = app.add_subcommand("estimate-constants", "tabulate equivalence constants against N");
  est->add_option("--grids", o.grids, "comma-separated grid sizes");

  auto* magri = app.add_subcommand("magri", "Magri recursion check on random smooth data");
  magri->add_option("--scale-h1", o.scale_h1, "multiply H1 (values != 1 are a negative control)");
  magri->add_option("--kdv-normalization", o.kdv_normalization, "flow_consistent or positive_dispersion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    h::RunConfig cfg = build_config(o);
    if (*verify) {
      const bool known = std::find(h::suite_names().begin(), h::suite_names().end(), suite) !=
                         h::suite_names().end();
      if (!known) throw h::ConfigError("verify: unknown suite '" + suite + "'");
      const h::VerificationReport rep = h::run_suite(suite, cfg);
      emit_report(rep, cfg, "verify_" + suite);
      return rep.pass() ? exit_pass : exit_fail;
    }
    if (*flow) {
      cfg.system = system;
      const h::FlowRun run = h::run_flow(cfg);
      std::string base = resolve_output(cfg, "flow_" + run.summary["system"].get<std::string>(), "csv");
      if (base.empty()) {
        std::cout << run.csv;
        std::cerr << run.summary.dump(2) << "\n";
      } else {
        std::filesystem::path bp(base);
        if (bp.has_extension()) bp.replace_extension();
        emit(bp.string() + ".csv", run.csv);
        emit(bp.string() + ".json", run.summary.dump(2) + "\n");
        std::cerr << "flow " << system << ": " << (run.pass ? "PASS" : "FAIL") << " -> " << bp.string()
                  << ".{csv,json}\n";
      }
      if (!run.state.stable) {
        std::cerr << run.state.diagnostic << "\n";
        return exit_unstable;
      }
      return run.pass ? exit_pass : exit_fail;
    }
    if (*est) {
      const h::VerificationReport rep = h::estimate_constants(cfg);
      emit_report(rep, cfg, "estimate_constants");
      return rep.pass() ? exit_pass : exit_fail;
    }
    if (*magri) {
      const h::VerificationReport rep = h::magri_report(cfg);
      emit_report(rep, cfg, "magri");
      return rep.pass() ? exit_pass : exit_fail;
    }
  } catch (const sobloop::StepGuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_unstable;
  } catch (const h::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const sobloop::RegularityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }
  return exit_usage;
}
