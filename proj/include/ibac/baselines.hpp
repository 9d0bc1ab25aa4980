#pragma once

// Comparison policies that share the simulator's MAC. The threshold and
// widest-common variants are proxies for DBS and WiderCast: they keep the
// shape of each decision rule, not the original optimizations.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibac::baselines {

enum class PolicyKind { Ibac, General, Threshold, Static, WidestCommon };

struct PolicySpec {
  PolicyKind kind = PolicyKind::Ibac;
  std::vector<double> thresholds;  // Threshold and WidestCommon: u - 1 increasing SNR cut points
  int level = 1;                   // Static

  void validate(int u) const;
  /// Output label; proxies are marked as such.
  std::string label() const;

  static PolicySpec ibac() { return {PolicyKind::Ibac, {}, 1}; }
  static PolicySpec general() { return {PolicyKind::General, {}, 1}; }
  static PolicySpec fixed(int c) { return {PolicyKind::Static, {}, c}; }
  static PolicySpec threshold(std::vector<double> cuts) {
    return {PolicyKind::Threshold, std::move(cuts), 1};
  }
  static PolicySpec widest_common(std::vector<double> cuts) {
    return {PolicyKind::WidestCommon, std::move(cuts), 1};
  }
};

/// Parses a label produced by PolicySpec::label ("IBAC", "General",
/// "Static(3)", "DBS-proxy(30,38,45)", "WiderCast-proxy(30,38,45)").
PolicySpec parse_policy(const std::string& label);

inline const std::vector<double>& default_thresholds() {
  static const std::vector<double> cuts{30.0, 38.0, 45.0};
  return cuts;
}

/// Standard DBCA: widest power-of-two block around the primary channel whose
/// channels were all idle for PIFS. Returns the level whose width is
/// 2^(level-1) channels. idle[primary] is taken as true (it was just won).
int general_decide(std::span<const bool> idle, int primary, int u);

/// 1 + number of cut points at or below snr, capped at u.
int threshold_decide(double snr, std::span<const double> thresholds, int u);

/// Narrowest of the stations' supportable levels. Throws std::domain_error on an empty group.
int widest_common_decide(std::span<const int> capabilities);

}  // namespace ibac::baselines
