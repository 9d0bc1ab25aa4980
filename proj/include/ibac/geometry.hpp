#pragma once

#include <Eigen/Core>

#include <cmath>

namespace ibac::sim {

using Position = Eigen::Vector2d;

/// Transmission and interference ranges at 20 MHz and their per-level
/// scaling. Wider channels shrink what can be decoded and enlarge what can
/// be disturbed.
struct GeometryParams {
  double tr_base = 30.0;  // m
  double ir_base = 60.0;  // m
  double tr_shrink = 0.8;
  double ir_grow = 1.25;
  double cr = 70.0;  // carrier-sense range, m
  double pathloss_exponent = 2.5;
  double snr_ref = 60.0;          // dB at 1 m over 20 MHz
  double noise_per_20mhz = 0.0;   // dB added to the noise floor

  void validate() const;
};

struct Ranges {
  double tr;
  double ir;
};

Ranges ranges_for_level(const GeometryParams& geometry, int level);

/// SNR over 20 MHz at distance d (clamped below at 1 m).
double snr_at(const GeometryParams& geometry, double distance);

inline double distance(const Position& a, const Position& b) { return (a - b).norm(); }

}  // namespace ibac::sim
