#include "ibac/metrics.hpp"

#include <cmath>

namespace ibac::xp {

std::optional<double> jain_index(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("jain_index of an empty list");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double x : xs) {
    if (x < 0.0) throw std::invalid_argument("jain_index of a negative throughput");
    sum += x;
    sum_sq += x * x;
  }
  if (sum_sq == 0.0) return std::nullopt;
  return sum * sum / (static_cast<double>(xs.size()) * sum_sq);
}

double packet_loss_rate(std::uint64_t attempts, std::uint64_t delivered) {
  if (attempts == 0) return 0.0;
  return 100.0 * static_cast<double>(attempts - delivered) / static_cast<double>(attempts);
}

std::optional<double> convergence_latency(std::span<const double> series,
                                          const ConvergenceParams& params) {
  if (!(params.step_ms > 0.0) || !(params.window_ms >= params.step_ms))
    throw std::invalid_argument("convergence window must span at least one step");
  const auto k = static_cast<std::size_t>(std::llround(params.window_ms / params.step_ms));
  if (series.size() < 2 * k) throw InsufficientData("PLR series shorter than two windows");

  auto window_variance = [&](std::size_t start) {
    double mean = 0.0;
    for (std::size_t i = start; i < start + k; ++i) mean += series[i];
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (std::size_t i = start; i < start + k; ++i) var += (series[i] - mean) * (series[i] - mean);
    return var / static_cast<double>(k);
  };

  // Scan backwards: the answer is the start of the longest calm suffix of windows.
  const std::size_t last = series.size() - k;
  std::optional<std::size_t> earliest;
  for (std::size_t s = last + 1; s-- > 0;) {
    if (!(window_variance(s) < params.var_threshold)) break;
    earliest = s;
  }
  if (!earliest) return std::nullopt;
  return static_cast<double>(*earliest) * params.step_ms;
}

}  // namespace ibac::xp
