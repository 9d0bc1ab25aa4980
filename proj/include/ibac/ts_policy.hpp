#pragma once

// SNR-contextual bonding-level selection: a per-AP statistical table keyed by
// SNR bucket and bonding level, empirical prior and likelihood, and the
// explore-then-exploit decision loop.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

namespace ibac::policy {

/// The requested (bucket, level) has no recorded history.
class NoHistory : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BucketConfig {
  double snr_min = 25.0;  // dB
  double snr_max = 50.0;  // dB
  double d = 5.0;         // bucket width, dB

  int bucket_count() const;
  void validate() const;
};

struct BucketLookup {
  int index = 0;
  bool clamped = false;  // snr fell outside [snr_min, snr_max]
};

/// Half-open buckets [min + j d, min + (j + 1) d); the last one is closed on the right.
BucketLookup bucket_of(const BucketConfig& config, double snr);

inline constexpr std::size_t kDefaultHistoryLimit = 64;

struct LevelRecord {
  int level = 1;
  std::uint64_t uses = 0;
  double throughput_sum = 0.0;      // over every use, not just the retained ones
  std::deque<double> history;       // most recent normalized throughputs
};

class StatTable {
 public:
  StatTable(BucketConfig config, int u, std::size_t history_limit = kDefaultHistoryLimit);

  const BucketConfig& config() const { return config_; }
  int u() const { return u_; }
  std::size_t history_limit() const { return history_limit_; }

  bool has_bucket(int j) const;
  /// Records of bucket j ordered by level; empty when the bucket is unseen.
  std::vector<const LevelRecord*> records(int j) const;
  const LevelRecord* find(int j, int level) const;

  void record(int j, int level, double throughput);

  void write_snapshot(std::ostream& out) const;
  static StatTable read_snapshot(std::istream& in);

  friend bool operator==(const StatTable& a, const StatTable& b);

 private:
  BucketConfig config_;
  int u_;
  std::size_t history_limit_;
  std::map<int, std::map<int, LevelRecord>> buckets_;
};

/// Share of bucket j's uses that went to `level`.
double prior(const StatTable& table, int j, int level);

/// Mean of the retained normalized throughputs of (j, level).
double likelihood(const StatTable& table, int j, int level);

inline constexpr int kDefaultExplorationRounds = 50;

struct PolicyState {
  PolicyState(BucketConfig config, int u, std::uint64_t seed,
              int t_init = kDefaultExplorationRounds,
              std::size_t history_limit = kDefaultHistoryLimit);

  StatTable table;
  std::uint64_t t = 1;  // index of the next decision round
  int t_init;
  std::uint64_t rng_seed;
  std::mt19937_64 rng;
  std::uint64_t explorations = 0;
};

/// Level maximizing u * likelihood * prior over the levels recorded in bucket j;
/// ties go to the lower level. Throws NoHistory when the bucket is unseen.
int posterior_select(const PolicyState& state, int j);

/// Same rule with an explicit proportionality constant.
int posterior_select(const StatTable& table, int j, double scale);

int decide(PolicyState& state, double snr);

/// Throws std::invalid_argument on a throughput outside [0, 1] or a bad level.
void update(PolicyState& state, double snr, int level, double throughput);

}  // namespace ibac::policy
