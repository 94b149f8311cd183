#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geofock/sequences.hpp"
#include "geofock/solvers.hpp"
#include "json.hpp"

namespace geofock {

/// Bad configuration; `key` is the dotted key path at fault.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Flat `dotted.key = value` configuration. Lines starting with '#' are
/// comments. Every key must be known; omitted keys take their defaults.
class RunConfig {
 public:
  RunConfig();
  static RunConfig parse(std::istream& in);
  static RunConfig load(const std::filesystem::path& file);

  /// Overrides one key, with the same checks as the parser.
  void set(const std::string& key, const std::string& value);
  bool is_set(const std::string& key) const { return explicit_.count(key) > 0; }

  int integer(const std::string& key) const;
  double real(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  std::vector<int> integers(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;

  /// Cross-key preconditions of the selected scenario.
  void validate() const;

  /// Every key with its resolved value.
  const std::map<std::string, std::string>& values() const { return values_; }
  static std::vector<std::string> known_keys();

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

struct ScenarioOutcome {
  std::vector<std::string> files;
  nlohmann::json summary;
  std::optional<ConvergenceReport> convergence;
  std::optional<BindingCurve> curve;
  bool converged = true;  // false when a solver point did not converge
};

/// Runs the configured scenario, writing CSVs and manifest.json into out_dir.
/// Output is a deterministic function of the configuration.
ScenarioOutcome run_scenario(const RunConfig& config, const std::filesystem::path& out_dir,
                             const std::string& command = "run");

/// One line {"status":"error","kind":...,"key":...,"message":...}.
std::string error_record(const std::string& kind, const std::string& key,
                         const std::string& message);

/// printf("%.17g").
std::string format_real(double x);

struct VerifyRow {
  std::string identity;
  int cases = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct VerifyReport {
  std::string level;
  std::vector<VerifyRow> rows;
  bool passed() const;
};

/// Identity battery over seeded random inputs. "full" adds the doubling
/// oracle and larger sample counts.
VerifyReport verify_suite(const std::string& level, std::uint64_t seed = 20240601);
void print_verify_report(const VerifyReport& report, std::ostream& out);

}  // namespace geofock
