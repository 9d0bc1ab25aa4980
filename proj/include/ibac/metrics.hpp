#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibac::xp {

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StationMetrics {
  int id = 0;
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
  double bytes_delivered = 0.0;
  double throughput_mbps = 0.0;

  bool operator==(const StationMetrics&) const = default;
};

struct MetricsRecord {
  std::string policy;
  int stations = 0;
  double dap = 0.0;
  std::uint64_t seed = 0;
  double duration_us = 0.0;

  std::vector<StationMetrics> per_station;

  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
  std::uint64_t collisions = 0;  // owrp + simultaneous
  std::uint64_t owrp_count = 0;
  std::uint64_t simultaneous_count = 0;
  std::uint64_t out_of_range = 0;
  std::uint64_t fallbacks = 0;  // secondary block busy at PIFS check
  std::uint64_t drops = 0;      // frames discarded at the retry limit

  double aggregate_mbps = 0.0;
  double avg_throughput_mbps = 0.0;  // per station
  double norm_throughput = 0.0;      // successful payload airtime / duration
  double plr = 0.0;                  // percent of attempts not delivered
  double delay_us = 0.0;             // head-of-queue to acknowledged, mean
  std::optional<double> jain;
  std::vector<double> bandwidth_pdf;           // by effective level
  std::vector<std::uint64_t> width_attempts;   // by effective level
  std::vector<std::uint64_t> width_failures;
  double plr_bin_ms = 0.0;
  std::vector<double> plr_series;              // percent, one value per bin
  std::optional<double> convergence_ms;

  bool operator==(const MetricsRecord&) const = default;
};

/// (sum x)^2 / (n sum x^2); absent when every value is zero.
/// Throws std::invalid_argument on an empty list or a negative entry.
std::optional<double> jain_index(std::span<const double> throughputs);

/// 100 (attempts - delivered) / attempts; zero when nothing was attempted.
double packet_loss_rate(std::uint64_t attempts, std::uint64_t delivered);

struct ConvergenceParams {
  double step_ms = 20.0;        // spacing of the PLR series
  double window_ms = 100.0;
  double var_threshold = 150.0; // PLR percent squared
};

/// Earliest time t after which every window of window_ms starting at or past
/// t has PLR variance below the threshold. Absent if never.
std::optional<double> convergence_latency(std::span<const double> plr_series,
                                          const ConvergenceParams& params);

}  // namespace ibac::xp
