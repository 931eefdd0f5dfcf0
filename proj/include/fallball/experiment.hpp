#pragma once

#include "fallball/core.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fallball {

enum class ExperimentKind {
  Simulate,
  Lyapunov,
  Noncontraction,
  Tau,
  Heart,
  Counts,
  Sufficiency,
  WedgeEquivalence,
  WedgeUnfold,
  IdentityCheck,
};

const char* to_string(ExperimentKind k) noexcept;
std::optional<ExperimentKind> parse_experiment_kind(const std::string& name);

enum class ValueType { Real, Int, Bool, String, RealList, IntList };

const char* to_string(ValueType t) noexcept;

struct ConfigKey {
  std::string name;
  ValueType type;
  std::string default_value;  ///< empty when the key has no default
  std::string help;
};

/// Every accepted key with its type, default and description.
const std::vector<ConfigKey>& config_schema();

/// Keys that must be present for the given experiment.
std::vector<std::string> required_keys(ExperimentKind kind);

/// Parse error carrying the 1-based line number (0 for whole-file checks).
class ConfigError : public Error {
 public:
  ConfigError(Errc code, int line, const std::string& message);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Simulate;
  std::vector<double> masses;
  double energy = 0.0;
  std::vector<std::uint64_t> seeds;
  std::int64_t horizon_events = -1;  ///< -1 when unset
  double horizon_time = -1.0;        ///< -1 when unset
  std::string output_dir;
  int jobs = 1;

  /// Every key after defaults are applied, as canonical text.
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  bool boolean(const std::string& key) const;
  const std::string& text(const std::string& key) const;

  /// FNV-1a over the canonical key = value lines, excluding `jobs` and `output.dir`.
  std::string hash() const;
};

/// Parses and validates. Throws ConfigError (UnknownKey, TypeMismatch,
/// MissingRequired, ParseError) or Error from mass validation.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunResult {
  int exit_code = 0;  ///< 0 success, 1 red flag
  std::filesystem::path output_dir;
  std::vector<std::string> red_flags;
};

/// Runs the experiment and writes events, report.json and tables/*.csv under
/// the output directory. A relative output directory is resolved against
/// FALLBALL_OUTPUT_ROOT when that variable is set.
RunResult run_experiment(const ExperimentConfig& cfg);

}  // namespace fallball
