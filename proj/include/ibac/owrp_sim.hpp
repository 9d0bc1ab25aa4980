#pragma once

// Seeded discrete-event simulator of dynamic bandwidth channel access over
// 2^(u-1) contiguous 20 MHz channels with explicit transmission,
// interference and carrier-sense ranges.

#include "ibac/baselines.hpp"
#include "ibac/dbca_markov.hpp"
#include "ibac/event_queue.hpp"
#include "ibac/geometry.hpp"
#include "ibac/metrics.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibac::sim {

enum class NodeKind { Ap, Sta };

struct NodeSpec {
  int id = 0;
  NodeKind kind = NodeKind::Sta;
  Position position = Position::Zero();
  int bss = 0;                         // id of the AP this node belongs to
  std::optional<bool> saturated;       // default: STAs yes, APs no
  std::optional<int> dest;             // default: STA -> its AP, AP -> its STAs in turn

  bool is_saturated() const { return saturated.value_or(kind == NodeKind::Sta); }
};

struct MacConfig {
  model::MacTiming<double> timing;
  int W = 16;
  int m = 6;
  int u = 4;
  int retry_limit = 7;
  double rate_mbps_per_20mhz = 100.0;

  double pifs() const { return timing.sifs + timing.sigma; }
};

struct SnrProcess {
  bool enabled = true;
  double snr_min = 25.0;
  double snr_max = 50.0;
  double step_db = 1.0;
  double interval_us = 10000.0;
};

enum class RewardFeed { Model, Measured };

struct IbacConfig {
  int t_init = 50;
  std::size_t history_limit = 64;
  double bucket_width_db = 5.0;
  RewardFeed feed = RewardFeed::Model;
};

/// Used when SimConfig.nodes is empty: two APs dap metres apart, stations
/// split between them and dropped uniformly in a disc around their AP.
struct TopologyConfig {
  int stations = 10;
  double radius = 20.0;
  double min_radius = 2.0;
};

struct SimConfig {
  std::vector<NodeSpec> nodes;
  GeometryParams geometry;
  MacConfig mac;
  baselines::PolicySpec policy;
  double duration_us = 1e6;
  std::uint64_t seed = 1;
  double dap = 100.0;
  TopologyConfig topology;
  SnrProcess snr_process;
  IbacConfig ibac;
  std::vector<int> primary_channels;  // per AP in id order; default all 0
  double plr_bin_ms = 20.0;
  xp::ConvergenceParams convergence;  // step_ms must equal plr_bin_ms
  bool check_invariants = false;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Every validation failure, each prefixed with its field path. Empty when valid.
std::vector<std::string> validate(const SimConfig& config);

std::vector<NodeSpec> make_two_bss_topology(const TopologyConfig& topology, double dap,
                                            std::uint64_t seed);

enum class Outcome { Pending, Success, Owrp, Simultaneous, OutOfRange };
const char* outcome_tag(Outcome outcome);

struct TxAttempt {
  std::uint64_t id = 0;
  int src = 0;
  int dst = 0;
  int requested_level = 1;
  int level = 1;  // effective: the attempt spans 2^(level-1) channels
  Time start = 0;
  Time data_end = 0;
  Time end = 0;   // end of the whole exchange (ACK included on success)
  int ch_lo = 0;  // channel range [ch_lo, ch_hi)
  int ch_hi = 1;
  bool fell_back = false;
  double snr = 0.0;
  Outcome outcome = Outcome::Pending;
};

void write_trace_line(std::ostream& out, const TxAttempt& attempt);

struct BackoffState {
  int stage = 0;
  int W = 16;
  int m = 6;
  int window() const { return W << stage; }
  void on_failure() { stage = stage < m ? stage + 1 : m; }
  void on_success() { stage = 0; }
};

/// Uniform draw in [0, 2^stage W - 1].
int dcf_backoff_step(const BackoffState& state, std::mt19937_64& rng);

struct ChannelBlock {
  int lo;
  int hi;  // exclusive
};

/// Aligned block of 2^(c-1) channels holding the primary channel.
ChannelBlock primary_block(int primary, int c, int u);
/// The buddy block that doubles the primary block; empty at c = u.
ChannelBlock secondary_block(int primary, int c, int u);

/// Per-node view of the channels: how many in-flight exchanges the node
/// hears on each channel and since when each channel has been quiet.
struct ChannelSense {
  std::vector<int> busy;
  std::vector<Time> idle_since;

  explicit ChannelSense(int channels, Time quiet_since = 0)
      : busy(channels, 0), idle_since(channels, quiet_since) {}
  bool idle(int ch) const { return busy[ch] == 0; }
  bool idle_for(int ch, Time now, Time window) const {
    return busy[ch] == 0 && now - idle_since[ch] >= window;
  }
  bool block_idle(ChannelBlock b) const;
};

struct TxPlan {
  bool primary_busy = false;
  ChannelBlock channels{0, 1};
  int level = 1;  // effective
  bool fell_back = false;
};

/// Channel acquisition at backoff expiry for requested level c: the bonded
/// width when the secondary block was idle for the PIFS window ending at
/// now, the primary width otherwise.
TxPlan dbca_acquire(const ChannelSense& sense, int primary, int c, int u, Time now, Time pifs);

/// Outcome of one attempt against every other attempt it may overlap.
Outcome resolve_attempt(const TxAttempt& attempt, std::span<const TxAttempt> others,
                        std::span<const Position> positions, const GeometryParams& geometry);

std::vector<Outcome> resolve_collisions(std::span<const TxAttempt> attempts,
                                        std::span<const Position> positions,
                                        const GeometryParams& geometry);

/// Runs the event loop for config.duration_us. When trace is non-null every
/// resolved attempt is appended to it.
xp::MetricsRecord run(const SimConfig& config, std::vector<TxAttempt>* trace = nullptr);

}  // namespace ibac::sim
