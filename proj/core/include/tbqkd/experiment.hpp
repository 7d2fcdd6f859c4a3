#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tbqkd/apparatus.hpp"
#include "tbqkd/detection.hpp"
#include "tbqkd/qkd_protocol.hpp"

namespace tbqkd {

enum class RunMode { VisibilitySweep, QkdSession, EveAnalysis };

const char* to_string(RunMode mode);

/// Raised for malformed config files, bad flag values, and invariant
/// violations; maps to exit code 2 in the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Full description of one harness invocation. Defaults: filtration on with
/// N = 2, sigma^2 grid 0..1.5 in steps of 0.1, seed 0.
struct ExperimentConfig {
  RunMode mode = RunMode::VisibilitySweep;
  std::uint64_t seed = 0;
  std::int64_t trials = 100000;   ///< Monte Carlo trials per sweep/eve point
  std::int64_t rounds = 1000000;  ///< BB84 rounds per QKD session
  int threads = 0;                ///< 0 = all hardware threads; never affects output bytes
  std::vector<double> sigma2_grid;
  std::string output_path = "tbqkd_out.csv";

  ApparatusConfig apparatus;
  DetectorConfig detector;
  bool gate_bin_set = false;  ///< detector.gate_bin given explicitly (else central bin)
  DetectorPort monitored_port = DetectorPort::P1;
  bool paired = true;          ///< qkd mode: run filtration off/on back to back
  double eve_p_replace = 0.5;
  std::vector<int> sweep_extra_n_pairs;  ///< extra filtered variants in sweep mode

  /// Throws ConfigError listing every violated invariant.
  void validate() const;
};

ExperimentConfig default_experiment_config();

/// Parse a flat `key = value` file ('#' comments, dotted section prefixes).
/// Unknown keys and malformed values are hard errors, reported with
/// file:line. The result starts from the defaults.
ExperimentConfig load_config_file(const std::string& path);

/// Set one key (same names as the config file) on an existing config; used
/// for CLI flag overrides. Throws ConfigError on unknown key or bad value.
void apply_override(ExperimentConfig& config, std::string_view key, const std::string& value);

/// Full decimal precision (17 significant digits), locale-independent.
std::string format_double(double value);

/// Emit visibility-sweep CSV rows plus the security-zone crossing summary.
void run_visibility_sweep(const ExperimentConfig& config, std::ostream& csv,
                          std::ostream& summary);

/// Emit per-session QKD CSV rows plus the paired verdict-transition report.
void run_qkd(const ExperimentConfig& config, std::ostream& csv, std::ostream& report);

/// Emit eavesdropper-analysis CSV rows.
void run_eve(const ExperimentConfig& config, std::ostream& csv);

/// Validate, dispatch on mode, and write the CSV to config.output_path (with
/// a ".summary.txt" / ".report.txt" sidecar for sweep / paired qkd). Throws
/// ConfigError for config problems and std::runtime_error for I/O failures.
void run_experiment(const ExperimentConfig& config);

}  // namespace tbqkd
