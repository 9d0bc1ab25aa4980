#pragma once

// Scenario sweeps over (policy x stations x DAP x seed), persistence of the
// per-cell records, and the aggregate tables behind each plot.

#include "ibac/baselines.hpp"
#include "ibac/metrics.hpp"
#include "ibac/owrp_sim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ibac::xp {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct ScenarioSpec {
  std::vector<baselines::PolicySpec> policies;
  std::vector<int> stations;
  std::vector<double> daps;
  std::vector<std::uint64_t> seeds;
  sim::SimConfig base;
  std::string out_dir;
  int workers = 1;

  void validate() const;
  std::size_t cell_count() const {
    return policies.size() * stations.size() * daps.size() * seeds.size();
  }
};

/// 4 policies x 6 station counts x 5 DAPs x 10 seeds.
ScenarioSpec default_scenario();

struct CellKey {
  int policy_index = 0;
  std::string policy;
  int stations = 0;
  double dap = 0.0;
  std::uint64_t seed = 0;
};

struct CellResult {
  CellKey key;
  std::optional<MetricsRecord> record;
  std::string error;
};

struct RunSet {
  std::vector<CellResult> cells;  // cross-product order, independent of completion order
  std::size_t failures = 0;
};

/// SimConfig for one cell: the base config with the cell's policy, station
/// count, DAP and seed applied.
sim::SimConfig cell_config(const ScenarioSpec& spec, const CellKey& key);

/// Runs every cell on spec.workers threads. Failed cells are recorded and the
/// sweep continues. When spec.out_dir is non-empty the outputs are written there.
RunSet sweep(const ScenarioSpec& spec);

// ---- aggregates ----

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t count = 0;
};
MeanSd mean_sd(std::vector<double> values);

struct SeriesPoint {
  std::string policy;
  double x = 0.0;
  MeanSd y;
};

std::vector<SeriesPoint> throughput_vs_stations(const RunSet& runs);
std::vector<SeriesPoint> plr_vs_dap(const RunSet& runs);
std::vector<SeriesPoint> plr_vs_stations(const RunSet& runs);
std::vector<SeriesPoint> fairness_vs_stations(const RunSet& runs);
std::vector<SeriesPoint> delay_vs_stations(const RunSet& runs);

struct PolicyLevelRow {
  std::string policy;
  int level = 1;
  double value = 0.0;
  std::uint64_t attempts = 0;
  std::uint64_t failures = 0;
};
/// Mean over cells of each level's share of attempts.
std::vector<PolicyLevelRow> bandwidth_pdf(const RunSet& runs);
/// Pooled PLR per effective level.
std::vector<PolicyLevelRow> per_width_plr(const RunSet& runs);

/// Empirical CDF sampled at `points` evenly spaced probabilities in (0, 1].
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values, int points = 100);

struct CdfRow {
  std::string policy;
  double probability = 0.0;
  double value = 0.0;
};
std::vector<CdfRow> throughput_cdf(const RunSet& runs);
std::vector<CdfRow> plr_cdf(const RunSet& runs);
std::vector<CdfRow> convergence_cdf(const RunSet& runs);

// ---- persistence ----

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string format_double(double v);
double parse_double(const std::string& text);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

CsvTable records_table(const RunSet& runs, int u);
/// Rebuilds the scalar fields of each record from a records table.
std::vector<CellResult> parse_records_table(const CsvTable& table, int u);

std::string config_hash(const ScenarioSpec& spec);

/// Writes records.csv, every aggregate table and a manifest next to each file.
void write_outputs(const ScenarioSpec& spec, const RunSet& runs, const std::filesystem::path& dir);

// ---- model cross-check ----

struct CrossCheck {
  int stations = 0;
  double observed_collision = 0.0;  // per-attempt collision fraction in the simulator
  double kappa = 0.0;               // fitted so the model reproduces it
  double analytic = 0.0;            // normalized throughput from the model
  double simulated = 0.0;           // successful payload airtime / duration
  double relative_error = 0.0;
  // The chain alone, fed the observed collision fraction instead of the closure.
  double chain_only = 0.0;
  double chain_only_error = 0.0;
};

/// Co-located single BSS with range scaling disabled under Static(1).
CrossCheck model_vs_sim(int stations, const sim::SimConfig& base);

}  // namespace ibac::xp
