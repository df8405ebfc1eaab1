#pragma once

// Experiment harness: JSON configuration, scenario construction, seeded
// reruns, raw/summary CSV, SVG plots and the run manifest.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdesign/features.hpp"
#include "mdesign/markov_design.hpp"
#include "mdesign/scenarios.hpp"

namespace mdesign::harness {

using json = nlohmann::json;

inline constexpr const char* kLibraryVersion = "0.1.0";

struct ExperimentConfig {
  /// The configuration with defaults filled in and CSV matrices inlined.
  json resolved;

  std::size_t episodes = 0;
  std::vector<VariantKind> variants;
  std::size_t reruns = 1;
  std::uint64_t seed = 0;
  int workers = 0;  ///< 0: OpenMP default
  NonAdaptiveMode nonadaptive_mode = NonAdaptiveMode::Marginalized;
  FWConfig fw;
  FWConfig reference_fw;
  bool uncertain_oracle = false;
  bool drop_warm_start = false;
  bool record_wall_time = false;
  std::string output;
};

/// Validates `raw` and resolves CSV references relative to `base_dir`.
/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const json& raw, const std::filesystem::path& base_dir);

/// Reads a config file, or a manifest (its "config" entry).
ExperimentConfig load_config(const std::filesystem::path& path);
json load_config_json(const std::filesystem::path& path);

/// FNV-1a of the compact dump of `resolved`, as 16 hex digits.
std::string config_hash(const json& resolved);

struct Problem {
  TabularMdp mdp;
  std::shared_ptr<const FeatureMap> features;
  ObjectiveSpec objective;
  std::optional<SchedulingChain> scheduling;
  GammaSchedule gamma_schedule;
  std::vector<std::string> warnings;
};

Problem build_problem(const ExperimentConfig& cfg);

/// Synthetic robust family for the scheduling chain: for every rate r two
/// unit-norm rows sum_t exp(-r s_t) psi(t) and sum_t s_t exp(-r s_t) psi(t),
/// with s_t = t / (n - 1).
std::vector<Eigen::MatrixXd> synthetic_decay_family(const Eigen::MatrixXd& time_basis,
                                                    const std::vector<double>& rates);

struct RawRow {
  std::string variant;
  std::size_t rerun = 0;
  std::size_t episode = 0;  ///< 1-based
  double objective_value = 0.0;
  double suboptimality = 0.0;
  std::size_t fw_iters = 0;
  double wall_ms = 0.0;
};

struct ExperimentResult {
  ReferenceSolution reference;
  std::vector<RawRow> rows;
  std::vector<std::string> errors;
  std::vector<EpisodeLog> logs;  ///< variant-major, then rerun
};

ReferenceSolution compute_reference(const Problem& problem, const ExperimentConfig& cfg);

/// Runs every (variant, rerun) pair without touching the disk.
ExperimentResult execute(const ExperimentConfig& cfg, const Problem& problem,
                         std::ostream* progress = nullptr);

/// execute() plus raw.csv, timing.csv, summary.csv, slopes.csv,
/// convergence.svg and manifest.json in `out_dir`.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                std::ostream* progress = nullptr);

void write_raw_csv(const std::filesystem::path& path, const std::vector<RawRow>& rows);
std::vector<RawRow> read_raw_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Statistics

/// Linear interpolation between order statistics; `sorted` must be sorted.
double quantile(const std::vector<double>& sorted, double q);

struct SummaryRow {
  std::string variant;
  std::size_t episode = 0;
  double q10 = 0.0;
  double median = 0.0;
  double q90 = 0.0;
};

/// Quantiles of suboptimality across reruns per (variant, episode), in
/// first-appearance order of the variants.
std::vector<SummaryRow> summarize(const std::vector<RawRow>& rows);

/// Least-squares slope of log(max(y_t, floor)) against log(t) over episodes
/// t > T / 2, where series[i] belongs to episode i + 1. Needs T >= 2.
double tail_slope(const std::vector<double>& series, double floor);

/// Median tail slope per variant.
std::map<std::string, double> summary_slopes(const std::vector<SummaryRow>& summary, double floor);

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);
void write_slopes_csv(const std::filesystem::path& path,
                      const std::map<std::string, double>& slopes,
                      const std::vector<SummaryRow>& summary);

// ---------------------------------------------------------------------------
// Plot

struct PlotFrame {
  double width = 720.0;
  double height = 460.0;
  double left = 80.0;
  double right = 170.0;
  double top = 30.0;
  double bottom = 60.0;
};

/// Log-log median lines with shaded q10-q90 bands; values are clamped at
/// `floor` before the log.
std::string render_svg(const std::vector<SummaryRow>& summary, double floor,
                       const PlotFrame& frame = {});
void write_svg(const std::filesystem::path& path, const std::string& svg);

}  // namespace mdesign::harness
