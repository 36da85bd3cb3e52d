#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sobloop/harness/config.hpp"

namespace sobloop::harness {

enum class Comparison { le, lt, ge, gt, eq };

inline const char* to_string(Comparison c) noexcept {
  switch (c) {
    case Comparison::le: return "<=";
    case Comparison::lt: return "<";
    case Comparison::ge: return ">=";
    case Comparison::gt: return ">";
    case Comparison::eq: return "==";
  }
  return "?";
}

inline bool compare(double measured, Comparison c, double threshold) noexcept {
  if (std::isnan(measured)) return false;
  switch (c) {
    case Comparison::le: return measured <= threshold;
    case Comparison::lt: return measured < threshold;
    case Comparison::ge: return measured >= threshold;
    case Comparison::gt: return measured > threshold;
    case Comparison::eq: return measured == threshold;
  }
  return false;
}

/// criterion checks decide the verdict; diagnostic checks are recorded only.
enum class Role { criterion, diagnostic };

struct Check {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  Comparison comparison = Comparison::le;
  bool pass = false;
  Role role = Role::criterion;
  std::string note;
};

struct Timing {
  std::string name;
  double measured_s = 0.0;
  double threshold_s = 0.0;
  bool pass = false;
};

/// Append-only record of one suite run. The timing entries and wall_time_s
/// are the only fields that vary between identical runs.
class VerificationReport {
 public:
  VerificationReport(std::string suite, const RunConfig& cfg)
      : suite_(std::move(suite)), cfg_(cfg), start_(std::chrono::steady_clock::now()) {}

  /// Threshold lookup honours tolerance.<suite>.<name> overrides.
  const Check& add(const std::string& name, double measured, double threshold, Comparison cmp,
                   Role role = Role::criterion, std::string note = {}) {
    const auto it = cfg_.tolerances.find(suite_ + "." + name);
    if (it != cfg_.tolerances.end()) threshold = it->second;
    checks_.push_back({name, measured, threshold, cmp, compare(measured, cmp, threshold), role,
                       std::move(note)});
    return checks_.back();
  }

  const Check& diagnostic(const std::string& name, double measured, double threshold,
                          Comparison cmp, std::string note = {}) {
    return add(name, measured, threshold, cmp, Role::diagnostic, std::move(note));
  }

  void add_timing(const std::string& name, double seconds, double threshold_s) {
    const auto it = cfg_.tolerances.find(suite_ + "." + name);
    if (it != cfg_.tolerances.end()) threshold_s = it->second;
    timings_.push_back({name, seconds, threshold_s, seconds < threshold_s});
  }

  /// Free-form deterministic payload (tables, estimated constants).
  nlohmann::json& extra() { return extra_; }

  [[nodiscard]] double elapsed_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  void finish() { wall_time_s_ = elapsed_s(); }

  [[nodiscard]] bool pass() const {
    for (const auto& c : checks_)
      if (c.role == Role::criterion && !c.pass) return false;
    for (const auto& t : timings_)
      if (!t.pass) return false;
    return true;
  }

  [[nodiscard]] const std::string& suite() const noexcept { return suite_; }
  [[nodiscard]] const std::vector<Check>& checks() const noexcept { return checks_; }
  [[nodiscard]] const std::vector<Timing>& timings() const noexcept { return timings_; }
  [[nodiscard]] const RunConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] double wall_time_s() const noexcept { return wall_time_s_; }

  [[nodiscard]] const Check* find(const std::string& name) const {
    for (const auto& c : checks_)
      if (c.name == name) return &c;
    return nullptr;
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["suite"] = suite_;
    j["environment"] = {{"N", cfg_.grid_size}, {"s", cfg_.s}, {"p", cfg_.p}, {"seed", cfg_.seed}};
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks_) {
      nlohmann::json e = {{"name", c.name},
                          {"measured", c.measured},
                          {"threshold", c.threshold},
                          {"comparison", to_string(c.comparison)},
                          {"pass", c.pass},
                          {"role", c.role == Role::criterion ? "criterion" : "diagnostic"}};
      if (!c.note.empty()) e["note"] = c.note;
      arr.push_back(std::move(e));
    }
    j["checks"] = std::move(arr);
    nlohmann::json tarr = nlohmann::json::array();
    for (const auto& t : timings_) {
      tarr.push_back({{"name", t.name},
                      {"measured_s", t.measured_s},
                      {"threshold_s", t.threshold_s},
                      {"pass", t.pass}});
    }
    j["timings"] = std::move(tarr);
    if (!extra_.is_null()) j["data"] = extra_;
    j["pass"] = pass();
    j["wall_time_s"] = wall_time_s_;
    return j;
  }

  /// One row per check and timing, 17 significant digits.
  [[nodiscard]] std::string to_csv() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "suite,name,measured,threshold,comparison,pass,role\n";
    for (const auto& c : checks_) {
      os << suite_ << "," << c.name << "," << c.measured << "," << c.threshold << ","
         << to_string(c.comparison) << "," << (c.pass ? "true" : "false") << ","
         << (c.role == Role::criterion ? "criterion" : "diagnostic") << "\n";
    }
    for (const auto& t : timings_) {
      os << suite_ << "," << t.name << "," << t.measured_s << "," << t.threshold_s << ",<,"
         << (t.pass ? "true" : "false") << ",timing\n";
    }
    return os.str();
  }

 private:
  std::string suite_;
  RunConfig cfg_;
  std::chrono::steady_clock::time_point start_;
  std::vector<Check> checks_;
  std::vector<Timing> timings_;
  nlohmann::json extra_;
  double wall_time_s_ = 0.0;
};

/// Report JSON with the run-to-run varying fields removed.
inline nlohmann::json strip_timing(nlohmann::json j) {
  j.erase("wall_time_s");
  j.erase("timings");
  return j;
}

}  // namespace sobloop::harness
