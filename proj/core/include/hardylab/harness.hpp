#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hardylab/grid.hpp"

namespace hardylab {

struct Thresholds {
  double stable_factor = 2.0;     // consecutive change within this factor
  double trend_factor = 2.0;      // per-step factor for diverging/decaying
  double fatness_floor = 1e-3;
};

struct ExperimentConfig {
  std::vector<DomainSpec> domains;
  std::vector<double> p_list{2.0};
  std::vector<double> L_list{2.0};
  std::vector<int> resolutions{32, 64};
  std::size_t family_size = 12;
  std::uint64_t seed = 1;
  std::string output_dir = "hardylab-out";
  int threads = 0;
  std::size_t max_centers = 32;
  double density_q = 1.0;
  double density_L = 2.0;
  Thresholds thresholds;
};

// JSON config. Throws SpecError on malformed input or an empty domain list.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string default_config_text();

enum class Trend { stable, decaying, diverging, drifting, undetermined };
std::string to_string(Trend t);

// Needs at least two values; non-finite tails count as diverging.
Trend classify_trend(const std::vector<double>& values, const Thresholds& th);

struct EquivalenceRow {
  std::string family;
  std::string domain;
  double p = 0.0;
  double L = 0.0;
  int resolution = 0;
  double h = 0.0;
  double c0 = 0.0;
  double condition_b = 0.0;
  double condition_c = 0.0;
  double pointwise = 0.0;
  double pointwise_p999 = 0.0;
  double integral_quotient = 0.0;
  std::optional<double> wannebo_constant;
  std::optional<double> wannebo_beta;
  double inner_density = 0.0;
  std::size_t excluded = 0;
  std::vector<std::string> errors;      // module exceptions
  std::vector<std::string> violations;  // internal invariants
};

struct TrendEntry {
  std::string family;
  double p = 0.0;
  double L = 0.0;
  std::string metric;
  std::vector<double> values;
  Trend trend = Trend::undetermined;
};

struct EquivalenceReport {
  std::uint64_t seed = 0;
  std::vector<EquivalenceRow> rows;
  std::vector<TrendEntry> trends;
  std::vector<std::string> anomalies;  // mixed fatness / pointwise verdicts
  std::vector<std::string> errors;
  std::vector<std::string> violations;
  int exit_code() const;
};

// Runs the pipeline for every (domain, p, L, resolution) and, when
// `write` is set, writes summary.csv, trends.csv, per-profile CSVs,
// report.json and verdicts.txt into the output directory.
EquivalenceReport run_experiment(const ExperimentConfig& config, bool write = true);

std::string summary_csv(const EquivalenceReport& report);
std::string trends_csv(const EquivalenceReport& report);
std::string report_json(const EquivalenceReport& report);
std::string verdict_matrix(const EquivalenceReport& report);

// Output directory: HARDYLAB_OUTPUT_DIR overrides the config value.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

}  // namespace hardylab
