#pragma once

#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sobloop/harness/config.hpp"
#include "sobloop/integrable.hpp"

namespace sobloop::harness {

/// Reference step, horizon, initial data and default pair of one system.
struct FlowSetup {
  SystemName system = SystemName::kdv;
  double dt = 1e-4;
  double t_end = 0.5;
  FlowPair pair{0, 1};
  std::string initial_data;
};

inline FlowSetup flow_setup(SystemName name) {
  switch (name) {
    case SystemName::kdv: return {name, 1e-4, 0.5, {0, 1}, "cos t"};
    case SystemName::nls: return {name, 1e-3, 1.0, {0, 0}, "0.1 (cos t, 0)"};
    case SystemName::camassa_holm: return {name, 1e-3, 1.0, {0, 1}, "0.5 cos t"};
    case SystemName::dubrovin_novikov: break;
  }
  throw ConfigError("flow: dubrovin_novikov needs coefficient maps and is library-only");
}

inline LoopSample flow_initial_data(SystemName name, const Grid& grid) {
  switch (name) {
    case SystemName::kdv: return LoopSample::from_scalar(grid, [](double t) { return std::cos(t); });
    case SystemName::nls:
      return LoopSample::from_function(grid, 2, [](double t, std::span<double> o) {
        o[0] = 0.1 * std::cos(t);
        o[1] = 0.0;
      });
    case SystemName::camassa_holm:
      return LoopSample::from_scalar(grid, [](double t) { return 0.5 * std::cos(t); });
    case SystemName::dubrovin_novikov: break;
  }
  throw ConfigError("flow: no default initial data for dubrovin_novikov");
}

inline SystemParams system_params(const RunConfig& cfg) {
  SystemParams p;
  p.kdv = cfg.kdv_normalization == "positive_dispersion" ? KdvNormalization::positive_dispersion
                                                : KdvNormalization::flow_consistent;
  p.nls = cfg.nls_operator == "derivative" ? NlsOperator::derivative : NlsOperator::canonical;
  return p;
}

struct FlowRun {
  FlowState state;
  nlohmann::json summary;
  std::string csv;
  bool pass = false;
};

namespace detail {

inline double relative_drift(double now, double start) {
  return std::abs(now - start) / std::max(std::abs(start), 1e-300);
}

}  // namespace detail

/// Runs one flow. A reference dt that fails the step guard on the requested
/// grid is reduced to the largest step resolving |k| <= ceil(N/8); an
/// explicit dt is used as given. Thresholds: Casimirs 1e-10 absolute,
/// Hamiltonians 1e-6 relative, and for NLS the L^2 norm 1e-8 relative.
inline FlowRun run_flow(const RunConfig& cfg) {
  const SystemName name = [&] {
    try {
      return parse_system_name(cfg.system);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("flow: ") + e.what());
    }
  }();
  const FlowSetup setup = flow_setup(name);
  const Grid grid(cfg.grid_size);
  const SystemDescriptor sys = make_system(name, grid, system_params(cfg));
  FlowPair pair = setup.pair;
  if (cfg.flow_pair_set) pair = {cfg.flow_operator, cfg.flow_hamiltonian};
  if (pair.op >= sys.operators.size() || pair.hamiltonian >= sys.hamiltonians.size()) {
    throw ConfigError("flow: operator/hamiltonian index out of range for " + cfg.system);
  }
  const LoopSample u0 = flow_initial_data(name, grid);
  const double t_end = cfg.t_end < 0.0 ? setup.t_end : cfg.t_end;
  double dt = setup.dt;
  std::string dt_source = "reference";
  if (cfg.dt > 0.0) {
    dt = cfg.dt;
    dt_source = "config";
  } else {
    const EvolveOptions opt;
    const double kmin = std::ceil(opt.min_mode_fraction * static_cast<double>(grid.size()));
    const double stiff = sys.stiffness(pair.op, pair.hamiltonian, kmin, max_abs(u0));
    if (dt * stiff > opt.stability_limit) {
      const double steps = std::ceil(std::max(t_end, dt) * stiff / opt.stability_limit);
      dt = std::max(t_end, dt) / steps;
      dt_source = "reduced for step guard";
    }
  }

  FlowRun run{evolve(sys, pair, u0, dt, t_end), {}, {}, false};
  const auto& log = run.state.conserved_log;

  std::ostringstream csv;
  csv << std::setprecision(17) << "t";
  for (const auto& h : sys.hamiltonians) csv << "," << h.name;
  for (const auto& c : sys.casimirs) csv << "," << c.name;
  csv << ",l2_norm\n";
  for (const auto& e : log) {
    csv << e.time;
    for (double v : e.hamiltonians) csv << "," << v;
    for (double v : e.casimirs) csv << "," << v;
    csv << "," << e.l2_norm << "\n";
  }
  run.csv = csv.str();

  nlohmann::json drifts = nlohmann::json::array();
  bool pass = run.state.stable;
  auto add = [&](const std::string& qname, const std::string& kind, double drift, double thr) {
    const bool ok = drift <= thr;
    pass = pass && ok;
    drifts.push_back({{"quantity", qname}, {"kind", kind}, {"max_drift", drift}, {"threshold", thr},
                      {"pass", ok}});
  };
  for (std::size_t i = 0; i < sys.hamiltonians.size(); ++i) {
    double worst = 0.0;
    for (const auto& e : log) {
      worst = std::max(worst, detail::relative_drift(e.hamiltonians[i], log.front().hamiltonians[i]));
    }
    add(sys.hamiltonians[i].name, "relative", worst, 1e-6);
  }
  for (std::size_t i = 0; i < sys.casimirs.size(); ++i) {
    double worst = 0.0;
    for (const auto& e : log) worst = std::max(worst, std::abs(e.casimirs[i] - log.front().casimirs[i]));
    add(sys.casimirs[i].name, "absolute", worst, 1e-10);
  }
  if (name == SystemName::nls) {
    double worst = 0.0;
    for (const auto& e : log) worst = std::max(worst, detail::relative_drift(e.l2_norm, log.front().l2_norm));
    add("l2_norm", "relative", worst, 1e-8);
  }
  run.pass = pass;
  run.summary = {{"system", to_string(name)},
                 {"operator", sys.operators[pair.op].name()},
                 {"hamiltonian", sys.hamiltonians[pair.hamiltonian].name},
                 {"initial_data", setup.initial_data},
                 {"N", grid.size()},
                 {"dt", dt},
                 {"dt_source", dt_source},
                 {"t_end", t_end},
                 {"steps", run.state.steps},
                 {"galerkin_modes", run.state.galerkin_modes},
                 {"stable", run.state.stable},
                 {"diagnostic", run.state.diagnostic},
                 {"drifts", drifts},
                 {"pass", pass}};
  return run;
}

}  // namespace sobloop::harness
