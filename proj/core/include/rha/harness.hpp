#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rha/array_model.hpp"
#include "rha/robust.hpp"

namespace rha::harness {

// Scheme names accepted by the runner.
const std::vector<std::string>& scheme_names();
// Sweep axes accepted by the runner.
const std::vector<std::string>& sweep_names();

struct ExperimentConfig {
  array::ScenarioConfig scenario;
  // Synthetic estimation error drawn uniformly inside these balls, and the
  // radii handed to the robust schemes.
  double rho_theta = 0.0;
  double rho_g = 0.0;
  double gain_sigma = 1.0;  // expected path-gain magnitude in the blocking radius
  std::string sweep = "jam_power_db";
  std::vector<double> values = {40.0};
  std::vector<std::string> schemes = {"rha_robust_discrete"};
  int trials = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  bool timing = false;  // wall-clock column; off keeps outputs reproducible
  // solver knobs
  double kappa_relative = 1e-6;
  int randomization_samples = 1000;
  robust::CsiBall csi_ball = robust::CsiBall::stacked;
  double ula_spacing = 0.5;  // equal-element ULA spacing (wavelengths)

  void validate() const;
};

// key = value text; '#' starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(const std::string& text, const ExperimentConfig& base = {});
ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base = {});
// Apply one key/value pair (shared by the file parser and CLI overrides).
void set_option(ExperimentConfig& c, const std::string& key, const std::string& value);
std::string format_config(const ExperimentConfig& c);

// The scenario and radii of one sweep point.
struct SweepPoint {
  array::ScenarioConfig scenario;
  double rho_theta = 0.0;
  double rho_g = 0.0;
  bool estimate = false;  // run the ANM pipeline instead of the synthetic error source
};
SweepPoint apply_sweep(const ExperimentConfig& c, double value);

struct TrialRecord {
  std::string scheme;
  double sinr = 0.0;  // linear, true channel
  int antennas = 0;
  int blocked = 0;    // antennas failing the xi ratio
  RVec margins;       // per antenna xi P_a |s|^2 - P_j |j|^2, normalised
  bool failed = false;
  std::string error;
  double seconds = 0.0;

  bool feasible() const { return !failed && blocked == 0; }
};

// One trial of every listed scheme on a common channel draw. Schemes that
// share a solve (robust discrete/continuous) reuse it.
std::vector<TrialRecord> run_trials(const ExperimentConfig& c, const SweepPoint& p,
                                    const std::vector<std::string>& schemes, std::uint64_t trial_seed);
TrialRecord run_trial(const ExperimentConfig& c, const SweepPoint& p, const std::string& scheme,
                      std::uint64_t trial_seed);

struct MetricsRow {
  std::string scheme;
  std::string sweep_name;
  double sweep_value = 0.0;
  int trials = 0;
  double mean_sinr_db = -100.0;
  double min_sinr_db = -100.0;
  double feasible_prob = 0.0;
  int blocked_count = 0;
  int failures = 0;
  double secs_per_trial = 0.0;
  std::vector<double> sinr_db;  // per trial, kept for bootstrap statistics (not emitted)
};

// Fraction of records in which every antenna meets the ratio constraint.
double feasible_probability(const std::vector<TrialRecord>& records);
MetricsRow aggregate(const std::vector<TrialRecord>& records, const std::string& scheme,
                     const std::string& sweep_name, double sweep_value, bool timing);

struct ResultTable {
  ExperimentConfig config;
  std::vector<MetricsRow> rows;
};

using Progress = void (*)(const std::string& line);

// Trial i uses seed ^ i; results do not depend on the thread count.
ResultTable run_experiment(const ExperimentConfig& c, Progress progress = nullptr);

std::string to_csv(const ResultTable& t);
std::string to_json(const ResultTable& t);
ResultTable table_from_json(const std::string& text);
void emit_results(const ResultTable& t, const std::string& path, const std::string& format);

// Percentile bootstrap of mean(a) - mean(b) over paired per-trial values.
struct BootstrapInterval {
  double low = 0.0;
  double high = 0.0;
};
BootstrapInterval bootstrap_mean_difference(const std::vector<double>& a, const std::vector<double>& b,
                                            int resamples, double level, std::uint64_t seed);

}  // namespace rha::harness
