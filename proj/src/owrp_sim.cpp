#include "ibac/owrp_sim.hpp"

#include "ibac/dbca_solver.hpp"
#include "ibac/ts_policy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace ibac::sim {

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument([&] {
        std::string msg = "invalid SimConfig:";
        for (const auto& p : problems) msg += "\n  " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

std::vector<std::string> validate(const SimConfig& c) {
  std::vector<std::string> errs;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) errs.push_back(what);
  };
  check(c.duration_us > 0.0, "duration_us: must be positive");
  check(c.mac.u >= 1 && c.mac.u <= 6, "mac.u: must lie in [1, 6]");
  check(c.mac.W >= 2 && (c.mac.W & (c.mac.W - 1)) == 0, "mac.W: must be a power of two >= 2");
  check(c.mac.m >= 0 && c.mac.m <= 10, "mac.m: must lie in [0, 10]");
  check(c.mac.retry_limit >= 0, "mac.retry_limit: must be non-negative");
  check(c.mac.rate_mbps_per_20mhz > 0.0, "mac.rate_mbps_per_20mhz: must be positive");
  const auto& t = c.mac.timing;
  check(t.sigma > 0, "mac.timing.sigma: must be positive");
  check(t.sifs > 0, "mac.timing.sifs: must be positive");
  check(t.difs > t.sifs, "mac.timing.difs: must exceed sifs");
  check(t.header > 0, "mac.timing.header: must be positive");
  check(t.ack > 0, "mac.timing.ack: must be positive");
  check(t.delta > 0, "mac.timing.delta: must be positive");
  check(t.payload > 0, "mac.timing.payload: must be positive");
  try {
    c.geometry.validate();
  } catch (const std::exception& e) {
    errs.push_back(e.what());
  }
  if (c.mac.u >= 1 && c.mac.u <= 6) {
    try {
      c.policy.validate(c.mac.u);
    } catch (const std::exception& e) {
      errs.push_back(std::string("policy: ") + e.what());
    }
  }
  check(c.snr_process.snr_min < c.snr_process.snr_max, "snr_process: snr_min must be below snr_max");
  check(c.snr_process.interval_us > 0, "snr_process.interval_us: must be positive");
  check(c.ibac.t_init >= 0, "ibac.t_init: must be non-negative");
  check(c.ibac.history_limit > 0, "ibac.history_limit: must be positive");
  check(c.ibac.bucket_width_db > 0, "ibac.bucket_width_db: must be positive");
  check(c.plr_bin_ms > 0, "plr_bin_ms: must be positive");
  check(c.convergence.step_ms == c.plr_bin_ms, "convergence.step_ms: must equal plr_bin_ms");
  check(c.convergence.window_ms >= c.convergence.step_ms, "convergence.window_ms: must be at least one step");
  check(c.convergence.var_threshold > 0, "convergence.var_threshold: must be positive");
  if (c.nodes.empty()) {
    check(c.topology.stations >= 1, "topology.stations: must be >= 1");
    check(c.topology.radius >= c.topology.min_radius && c.topology.min_radius >= 0,
          "topology.radius: must be >= min_radius >= 0");
    check(c.dap >= 0, "dap: must be non-negative");
  }
  for (std::size_t i = 0; i < c.nodes.size(); ++i) {
    const auto& n = c.nodes[i];
    const std::string path = "nodes[" + std::to_string(i) + "]";
    check(n.id == static_cast<int>(i), path + ".id: ids must be 0..N-1 in order");
    check(std::isfinite(n.position.x()) && std::isfinite(n.position.y()),
          path + ".position: must be finite");
    const bool bss_ok = n.bss >= 0 && n.bss < static_cast<int>(c.nodes.size()) &&
                        c.nodes[n.bss].kind == NodeKind::Ap;
    check(bss_ok, path + ".bss: must reference an AP");
    if (n.kind == NodeKind::Ap) check(n.bss == n.id, path + ".bss: an AP belongs to itself");
    if (n.dest)
      check(*n.dest >= 0 && *n.dest < static_cast<int>(c.nodes.size()) && *n.dest != n.id,
            path + ".dest: must reference another node");
  }
  const int channels = c.mac.u >= 1 && c.mac.u <= 6 ? 1 << (c.mac.u - 1) : 1;
  for (std::size_t i = 0; i < c.primary_channels.size(); ++i)
    check(c.primary_channels[i] >= 0 && c.primary_channels[i] < channels,
          "primary_channels[" + std::to_string(i) + "]: outside the channel set");
  return errs;
}

std::vector<NodeSpec> make_two_bss_topology(const TopologyConfig& topology, double dap,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<NodeSpec> nodes;
  nodes.push_back({0, NodeKind::Ap, Position(0.0, 0.0), 0, {}, {}});
  nodes.push_back({1, NodeKind::Ap, Position(dap, 0.0), 1, {}, {}});
  const double r0 = topology.min_radius;
  const double r1 = topology.radius;
  for (int k = 0; k < topology.stations; ++k) {
    const int ap = k % 2;
    // Uniform over the annulus [r0, r1].
    const double r = std::sqrt(r0 * r0 + unit(rng) * (r1 * r1 - r0 * r0));
    const double a = 2.0 * std::numbers::pi * unit(rng);
    const Position pos = nodes[ap].position + Position(r * std::cos(a), r * std::sin(a));
    nodes.push_back({static_cast<int>(nodes.size()), NodeKind::Sta, pos, ap, {}, {}});
  }
  return nodes;
}

const char* outcome_tag(Outcome outcome) {
  switch (outcome) {
    case Outcome::Pending: return "pending";
    case Outcome::Success: return "success";
    case Outcome::Owrp: return "owrp";
    case Outcome::Simultaneous: return "simultaneous";
    case Outcome::OutOfRange: return "out-of-range";
  }
  return "?";
}

void write_trace_line(std::ostream& out, const TxAttempt& a) {
  out << to_us(a.start) << ' ' << to_us(a.end) << ' ' << a.src << ' ' << a.dst << ' ' << a.level
      << ' ' << a.ch_lo << '-' << (a.ch_hi - 1) << ' ' << outcome_tag(a.outcome)
      << (a.fell_back ? " fallback" : "") << '\n';
}

int dcf_backoff_step(const BackoffState& state, std::mt19937_64& rng) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(state.window()));
}

ChannelBlock primary_block(int primary, int c, int u) {
  const int width = 1 << (std::min(c, u) - 1);
  const int lo = primary / width * width;
  return {lo, lo + width};
}

ChannelBlock secondary_block(int primary, int c, int u) {
  if (c >= u) return {0, 0};
  const ChannelBlock p = primary_block(primary, c, u);
  const int width = p.hi - p.lo;
  const int lo = (p.lo / width) % 2 == 0 ? p.hi : p.lo - width;
  return {lo, lo + width};
}

bool ChannelSense::block_idle(ChannelBlock b) const {
  for (int ch = b.lo; ch < b.hi; ++ch)
    if (busy[ch] != 0) return false;
  return true;
}

TxPlan dbca_acquire(const ChannelSense& sense, int primary, int c, int u, Time now, Time pifs) {
  TxPlan plan;
  const ChannelBlock prim = primary_block(primary, c, u);
  if (!sense.block_idle(prim)) {
    plan.primary_busy = true;
    return plan;
  }
  plan.channels = prim;
  plan.level = std::min(c, u);
  const ChannelBlock sec = secondary_block(primary, c, u);
  if (sec.hi <= sec.lo) return plan;
  bool free = true;
  for (int ch = sec.lo; ch < sec.hi && free; ++ch) free = sense.idle_for(ch, now, pifs);
  if (free) {
    plan.channels = {std::min(prim.lo, sec.lo), std::max(prim.hi, sec.hi)};
    plan.level = c + 1;
  } else {
    plan.fell_back = true;
  }
  return plan;
}

Outcome resolve_attempt(const TxAttempt& a, std::span<const TxAttempt> others,
                        std::span<const Position> positions, const GeometryParams& geometry) {
  const Ranges at_level = ranges_for_level(geometry, a.level);
  const double ir_base = ranges_for_level(geometry, 1).ir;
  if (distance(positions[a.src], positions[a.dst]) > at_level.tr) return Outcome::OutOfRange;
  bool hit = false;
  bool all_owrp = true;
  for (const TxAttempt& b : others) {
    if (b.id == a.id && b.src == a.src) continue;
    const bool time_overlap = b.start < a.data_end && a.start < b.data_end;
    const bool channel_overlap = b.ch_lo < a.ch_hi && a.ch_lo < b.ch_hi;
    if (!time_overlap || !channel_overlap) continue;
    const double d = distance(positions[b.src], positions[a.dst]);
    if (b.src != a.dst && d > at_level.ir) continue;
    hit = true;
    // The interferer was silent when this attempt sensed the medium and only
    // the widened interference range reaches it.
    const bool owrp = b.src != a.dst && b.start > a.start && d > ir_base;
    all_owrp = all_owrp && owrp;
  }
  if (!hit) return Outcome::Success;
  return all_owrp ? Outcome::Owrp : Outcome::Simultaneous;
}

std::vector<Outcome> resolve_collisions(std::span<const TxAttempt> attempts,
                                        std::span<const Position> positions,
                                        const GeometryParams& geometry) {
  std::vector<Outcome> out;
  out.reserve(attempts.size());
  for (const TxAttempt& a : attempts) out.push_back(resolve_attempt(a, attempts, positions, geometry));
  return out;
}

namespace {

enum class EventKind { Expire, DataEnd, ExchangeEnd, SnrStep };

struct Event {
  EventKind kind;
  std::uint64_t ref;  // generation for Expire, attempt index otherwise
};

enum class Phase { Counting, Frozen, Transmitting, Idle };

struct MacState {
  Phase phase = Phase::Idle;
  BackoffState backoff;
  int retries = 0;
  int counter = 0;            // remaining slots while frozen
  bool pending_decrement = false;
  Time resume_start = 0;      // first slot boundary after DIFS
  int resume_counter = 0;     // counter value during the slot starting at resume_start
  Time expiry = -1;
  std::uint64_t generation = 0;
  int requested_level = 1;
  ChannelBlock block{0, 1};
  int primary = 0;
  Time head_of_queue = 0;
  int dest = -1;
  std::size_t dest_cursor = 0;
  double snr_offset = 0.0;
  double snr = 0.0;
  double decision_snr = 0.0;
  int contending = 1;  // saturated nodes within carrier sense, self included
};

struct StationTally {
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
  double bits = 0.0;
};

class Simulator {
 public:
  Simulator(const SimConfig& config, std::vector<TxAttempt>* trace)
      : cfg_(config), trace_(trace), rng_(config.seed) {
    nodes_ = cfg_.nodes.empty() ? make_two_bss_topology(cfg_.topology, cfg_.dap, cfg_.seed) : cfg_.nodes;
    channels_ = 1 << (cfg_.mac.u - 1);
    sigma_ = from_us(cfg_.mac.timing.sigma);
    difs_ = from_us(cfg_.mac.timing.difs);
    pifs_ = from_us(cfg_.mac.pifs());
    data_time_ = from_us(cfg_.mac.timing.header + cfg_.mac.timing.payload);
    ack_tail_ = from_us(cfg_.mac.timing.sifs + cfg_.mac.timing.delta + cfg_.mac.timing.ack +
                        cfg_.mac.timing.delta);
    delta_ = from_us(cfg_.mac.timing.delta);
    end_ = from_us(cfg_.duration_us);
    setup();
  }

  xp::MetricsRecord execute() {
    for (int x = 0; x < static_cast<int>(nodes_.size()); ++x)
      if (nodes_[x].is_saturated() && mac_[x].dest >= 0) begin_contention(x, 0);
    if (cfg_.snr_process.enabled) queue_.push(from_us(cfg_.snr_process.interval_us), -1, {EventKind::SnrStep, 0});

    while (!queue_.empty() && queue_.top_time() <= end_) {
      const auto e = queue_.pop();
      switch (e.payload.kind) {
        case EventKind::Expire: on_expire(e.node, e.payload.ref, e.time); break;
        case EventKind::DataEnd: on_data_end(e.payload.ref, e.time); break;
        case EventKind::ExchangeEnd: on_exchange_end(e.payload.ref, e.time); break;
        case EventKind::SnrStep: on_snr_step(e.time); break;
      }
      if (cfg_.check_invariants) check_invariants(e.time);
    }
    return collect();
  }

 private:
  // ---- setup ----
  void setup() {
    const int n = static_cast<int>(nodes_.size());
    positions_.reserve(n);
    for (const auto& node : nodes_) positions_.push_back(node.position);
    hearers_.assign(n, {});
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (a != b && distance(positions_[a], positions_[b]) <= cfg_.geometry.cr) hearers_[a].push_back(b);

    sense_.assign(n, ChannelSense(channels_, -difs_ - pifs_));
    mac_.assign(n, MacState{});
    tally_.assign(n, StationTally{});
    occupancy_.assign(channels_, 0);

    std::map<int, int> ap_rank;
    for (const auto& node : nodes_)
      if (node.kind == NodeKind::Ap) ap_rank.emplace(node.id, static_cast<int>(ap_rank.size()));
    members_.assign(n, {});
    for (const auto& node : nodes_)
      if (node.kind == NodeKind::Sta) members_[node.bss].push_back(node.id);

    for (int x = 0; x < n; ++x) {
      auto& s = mac_[x];
      const auto& node = nodes_[x];
      s.backoff = {0, cfg_.mac.W, cfg_.mac.m};
      const int rank = ap_rank[node.bss];
      s.primary = rank < static_cast<int>(cfg_.primary_channels.size()) ? cfg_.primary_channels[rank] : 0;
      if (node.dest)
        s.dest = *node.dest;
      else if (node.kind == NodeKind::Sta)
        s.dest = node.bss;
      else if (!members_[x].empty())
        s.dest = members_[x].front();
      s.snr = current_snr(x);
    }
    for (int x = 0; x < n; ++x) {
      mac_[x].contending = nodes_[x].is_saturated() ? 1 : 0;
      for (int y : hearers_[x])
        if (nodes_[y].is_saturated()) ++mac_[x].contending;
      mac_[x].contending = std::max(mac_[x].contending, 1);
    }

    if (cfg_.policy.kind == baselines::PolicyKind::Ibac) {
      const policy::BucketConfig buckets{cfg_.snr_process.snr_min, cfg_.snr_process.snr_max,
                                         cfg_.ibac.bucket_width_db};
      for (const auto& [ap, rank] : ap_rank)
        policies_.emplace(ap, policy::PolicyState(buckets, cfg_.mac.u,
                                                  cfg_.seed * 1000003ULL + static_cast<std::uint64_t>(ap),
                                                  cfg_.ibac.t_init, cfg_.ibac.history_limit));
    }
    level1_attempts_.assign(n, 0);
    level1_collisions_.assign(n, 0);
    width_attempts_.assign(cfg_.mac.u, 0);
    width_failures_.assign(cfg_.mac.u, 0);
  }

  double current_snr(int x) const {
    const auto& s = mac_[x];
    if (s.dest < 0) return cfg_.snr_process.snr_min;
    const double geo = snr_at(cfg_.geometry, distance(positions_[x], positions_[s.dest]));
    return std::clamp(geo + s.snr_offset, cfg_.snr_process.snr_min, cfg_.snr_process.snr_max);
  }

  // ---- policy ----
  int choose_level(int x) {
    auto& s = mac_[x];
    const int u = cfg_.mac.u;
    s.decision_snr = s.snr;
    switch (cfg_.policy.kind) {
      case baselines::PolicyKind::Ibac:
        return policy::decide(policies_.at(nodes_[x].bss), s.snr);
      case baselines::PolicyKind::General:
        return 1;  // contend on the primary channel, widen at expiry
      case baselines::PolicyKind::Static:
        return cfg_.policy.level;
      case baselines::PolicyKind::Threshold:
        return baselines::threshold_decide(s.snr, cfg_.policy.thresholds, u);
      case baselines::PolicyKind::WidestCommon: {
        std::vector<int> caps;
        const int ap = nodes_[x].bss;
        for (int y : members_[ap])
          if (nodes_[y].is_saturated()) caps.push_back(baselines::threshold_decide(mac_[y].snr, cfg_.policy.thresholds, u));
        if (nodes_[ap].is_saturated()) caps.push_back(baselines::threshold_decide(mac_[ap].snr, cfg_.policy.thresholds, u));
        if (caps.empty()) caps.push_back(baselines::threshold_decide(s.snr, cfg_.policy.thresholds, u));
        return baselines::widest_common_decide(caps);
      }
    }
    return 1;
  }

  double model_throughput(int x) {
    const int ap = nodes_[x].bss;
    std::uint64_t tries = 0;
    std::uint64_t hits = 0;
    for (int y : members_[ap]) {
      tries += level1_attempts_[y];
      hits += level1_collisions_[y];
    }
    tries += level1_attempts_[ap];
    hits += level1_collisions_[ap];
    const double fraction = tries == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(tries);
    const double kappa = model::kappa_from_level1_collisions(fraction, cfg_.mac.u);
    const int kappa_key = static_cast<int>(std::lround(kappa * 100.0));
    const auto key = std::make_pair(mac_[x].contending, kappa_key);
    const auto it = model_cache_.find(key);
    if (it != model_cache_.end()) return it->second;
    model::ModelParams<double> params;
    params.n = mac_[x].contending;
    params.W = cfg_.mac.W;
    params.m = cfg_.mac.m;
    params.u = cfg_.mac.u;
    params.kappa = kappa_key / 100.0;
    const double value = model::solve_fixed_point(params, cfg_.mac.timing).throughput;
    model_cache_.emplace(key, value);
    return value;
  }

  void feed_policy(const TxAttempt& a) {
    if (cfg_.policy.kind != baselines::PolicyKind::Ibac) return;
    const double width_share = static_cast<double>(a.ch_hi - a.ch_lo) / channels_;
    double reward = a.outcome == Outcome::Success ? width_share : 0.0;
    if (cfg_.ibac.feed == RewardFeed::Model) reward *= model_throughput(a.src);
    policy::update(policies_.at(nodes_[a.src].bss), a.snr, a.requested_level, std::clamp(reward, 0.0, 1.0));
  }

  // ---- contention ----
  void begin_contention(int x, Time now) {
    auto& s = mac_[x];
    s.requested_level = choose_level(x);
    s.block = primary_block(s.primary, s.requested_level, cfg_.mac.u);
    s.counter = dcf_backoff_step(s.backoff, rng_);
    s.pending_decrement = false;
    s.phase = Phase::Frozen;
    if (sense_[x].block_idle(s.block)) resume(x, now);
  }

  void resume(int x, Time now) {
    auto& s = mac_[x];
    s.phase = Phase::Counting;
    s.resume_start = now + difs_;
    s.resume_counter = s.pending_decrement ? s.counter - 1 : s.counter;
    s.expiry = s.resume_start + static_cast<Time>(s.resume_counter) * sigma_;
    ++s.generation;
    queue_.push(s.expiry, x, {EventKind::Expire, s.generation});
  }

  void freeze(int x, Time now) {
    auto& s = mac_[x];
    if (s.phase != Phase::Counting || s.expiry == now) return;
    if (now >= s.resume_start) {
      const auto elapsed = static_cast<int>((now - s.resume_start) / sigma_);
      s.counter = s.resume_counter - elapsed;
      s.pending_decrement = true;
    }
    s.phase = Phase::Frozen;
    s.expiry = -1;
    ++s.generation;
  }

  void on_expire(int x, std::uint64_t generation, Time now) {
    auto& s = mac_[x];
    if (generation != s.generation || s.phase != Phase::Counting) return;
    // Transmissions that began in this very slot cannot be sensed yet.
    ChannelSense view = sense_[x];
    for (auto i = attempts_.size(); i > 0 && attempts_[i - 1].start == now; --i) {
      const TxAttempt& b = attempts_[i - 1];
      if (std::find(hearers_[b.src].begin(), hearers_[b.src].end(), x) == hearers_[b.src].end()) continue;
      for (int ch = b.ch_lo; ch < b.ch_hi; ++ch) --view.busy[ch];
    }
    TxPlan plan;
    if (cfg_.policy.kind == baselines::PolicyKind::General) {
      std::array<bool, 32> idle{};
      for (int ch = 0; ch < channels_; ++ch) idle[ch] = view.idle_for(ch, now, pifs_);
      const int level = baselines::general_decide(std::span<const bool>(idle.data(), channels_), s.primary,
                                                  cfg_.mac.u);
      plan.channels = primary_block(s.primary, level, cfg_.mac.u);
      plan.level = level;
      plan.fell_back = level < cfg_.mac.u;
    } else {
      plan = dbca_acquire(view, s.primary, s.requested_level, cfg_.mac.u, now, pifs_);
    }
    if (plan.primary_busy) {
      // freeze() tracks every busy transition, so this means a bookkeeping bug.
      throw std::logic_error("backoff expired on a busy primary block");
    }
    start_exchange(x, plan, now);
  }

  void start_exchange(int x, const TxPlan& plan, Time now) {
    auto& s = mac_[x];
    s.phase = Phase::Transmitting;
    s.expiry = -1;
    ++s.generation;
    TxAttempt a;
    a.id = attempts_.size();
    a.src = x;
    a.dst = s.dest;
    a.requested_level = s.requested_level;
    a.level = plan.level;
    a.start = now;
    a.data_end = now + data_time_;
    a.end = a.data_end;
    a.ch_lo = plan.channels.lo;
    a.ch_hi = plan.channels.hi;
    a.fell_back = plan.fell_back;
    a.snr = s.decision_snr;
    attempts_.push_back(a);
    for (int ch = a.ch_lo; ch < a.ch_hi; ++ch) ++occupancy_[ch];
    for (int y : hearers_[x]) {
      auto& view = sense_[y];
      const bool was_idle = view.block_idle(mac_[y].block);
      for (int ch = a.ch_lo; ch < a.ch_hi; ++ch) ++view.busy[ch];
      if (was_idle && !view.block_idle(mac_[y].block)) freeze(y, now);
    }
    queue_.push(a.data_end, x, {EventKind::DataEnd, a.id});
  }

  void on_data_end(std::uint64_t index, Time now) {
    TxAttempt& a = attempts_[index];
    // Every attempt that can overlap started within one data time before a.
    std::size_t first = index;
    while (first > 0 && attempts_[first - 1].start > a.start - data_time_) --first;
    std::size_t last = index + 1;
    while (last < attempts_.size() && attempts_[last].start < a.data_end) ++last;
    a.outcome = resolve_attempt(a, std::span<const TxAttempt>(attempts_.data() + first, last - first),
                                positions_, cfg_.geometry);
    a.end = a.outcome == Outcome::Success ? now + ack_tail_ : now + delta_;
    record(a);
    queue_.push(a.end, a.src, {EventKind::ExchangeEnd, a.id});
  }

  void on_exchange_end(std::uint64_t index, Time now) {
    const TxAttempt a = attempts_[index];
    if (released_.size() <= index) released_.resize(attempts_.size(), 0);
    released_[index] = 1;
    for (int ch = a.ch_lo; ch < a.ch_hi; ++ch) --occupancy_[ch];
    for (int y : hearers_[a.src]) {
      auto& view = sense_[y];
      const bool was_idle = view.block_idle(mac_[y].block);
      for (int ch = a.ch_lo; ch < a.ch_hi; ++ch)
        if (--view.busy[ch] == 0) view.idle_since[ch] = now;
      if (!was_idle && view.block_idle(mac_[y].block) && mac_[y].phase == Phase::Frozen) resume(y, now);
    }

    auto& s = mac_[a.src];
    if (a.outcome == Outcome::Success) {
      s.backoff.on_success();
      s.retries = 0;
      next_frame(a.src, now);
    } else if (++s.retries > cfg_.mac.retry_limit) {
      ++drops_;
      s.backoff.on_success();
      s.retries = 0;
      next_frame(a.src, now);
    } else {
      s.backoff.on_failure();
    }
    feed_policy(a);
    if (trace_ != nullptr) trace_->push_back(a);
    begin_contention(a.src, now);
  }

  void next_frame(int x, Time now) {
    auto& s = mac_[x];
    s.head_of_queue = now;
    if (!nodes_[x].dest && nodes_[x].kind == NodeKind::Ap && !members_[x].empty()) {
      s.dest_cursor = (s.dest_cursor + 1) % members_[x].size();
      s.dest = members_[x][s.dest_cursor];
      s.snr = current_snr(x);
    }
  }

  void on_snr_step(Time now) {
    std::bernoulli_distribution coin(0.5);
    for (int x = 0; x < static_cast<int>(nodes_.size()); ++x) {
      auto& s = mac_[x];
      if (s.dest < 0) continue;
      const double geo = snr_at(cfg_.geometry, distance(positions_[x], positions_[s.dest]));
      const double step = coin(rng_) ? cfg_.snr_process.step_db : -cfg_.snr_process.step_db;
      s.snr_offset = std::clamp(s.snr_offset + step, cfg_.snr_process.snr_min - geo,
                                cfg_.snr_process.snr_max - geo);
      s.snr = current_snr(x);
    }
    queue_.push(now + from_us(cfg_.snr_process.interval_us), -1, {EventKind::SnrStep, 0});
  }

  // ---- bookkeeping ----
  void record(const TxAttempt& a) {
    auto& t = tally_[a.src];
    ++t.attempts;
    ++width_attempts_[a.level - 1];
    if (a.level == 1) ++level1_attempts_[a.src];
    const auto bin = static_cast<std::size_t>(to_us(a.data_end) / (cfg_.plr_bin_ms * 1000.0));
    if (bin >= bin_attempts_.size()) {
      bin_attempts_.resize(bin + 1, 0);
      bin_failures_.resize(bin + 1, 0);
    }
    ++bin_attempts_[bin];
    switch (a.outcome) {
      case Outcome::Success: {
        ++t.successes;
        ++successes_;
        const double width = a.ch_hi - a.ch_lo;
        t.bits += cfg_.mac.timing.payload * cfg_.mac.rate_mbps_per_20mhz * width;  // us * Mb/s = bits
        airtime_us_ += cfg_.mac.timing.payload;
        delay_sum_us_ += to_us(a.end - mac_[a.src].head_of_queue);
        ++delivered_frames_;
        return;
      }
      case Outcome::Owrp: ++owrp_; break;
      case Outcome::Simultaneous: ++simultaneous_; break;
      case Outcome::OutOfRange: ++out_of_range_; break;
      case Outcome::Pending: break;
    }
    if (a.level == 1 && a.outcome != Outcome::OutOfRange) ++level1_collisions_[a.src];
    ++width_failures_[a.level - 1];
    ++bin_failures_[bin];
  }

  void check_invariants(Time now) {
    if (now < last_event_) throw std::logic_error("event executed before an earlier one");
    last_event_ = now;
    std::vector<int> expected(channels_, 0);
    std::vector<std::vector<int>> heard(nodes_.size(), std::vector<int>(channels_, 0));
    for (std::size_t i = 0; i < attempts_.size(); ++i) {
      if (released_.size() > i && released_[i]) continue;
      const auto& a = attempts_[i];
      for (int ch = a.ch_lo; ch < a.ch_hi; ++ch) ++expected[ch];
      for (int y : hearers_[a.src])
        for (int ch = a.ch_lo; ch < a.ch_hi; ++ch) ++heard[y][ch];
    }
    if (expected != occupancy_) throw std::logic_error("channel occupancy diverged from in-flight attempts");
    for (std::size_t y = 0; y < nodes_.size(); ++y)
      if (heard[y] != sense_[y].busy) throw std::logic_error("sensed busy state diverged from in-flight attempts");
  }

  xp::MetricsRecord collect() {
    xp::MetricsRecord r;
    r.policy = cfg_.policy.label();
    r.dap = cfg_.dap;
    r.seed = cfg_.seed;
    r.duration_us = cfg_.duration_us;
    std::vector<double> per_station;
    double total_bits = 0.0;
    for (int x = 0; x < static_cast<int>(nodes_.size()); ++x) {
      const auto& t = tally_[x];
      r.attempts += t.attempts;
      total_bits += t.bits;
      if (!nodes_[x].is_saturated()) continue;
      xp::StationMetrics st;
      st.id = x;
      st.attempts = t.attempts;
      st.successes = t.successes;
      st.bytes_delivered = t.bits / 8.0;
      st.throughput_mbps = t.bits / cfg_.duration_us;
      per_station.push_back(st.throughput_mbps);
      r.per_station.push_back(st);
    }
    r.stations = static_cast<int>(r.per_station.size());
    r.successes = successes_;
    r.owrp_count = owrp_;
    r.simultaneous_count = simultaneous_;
    r.collisions = owrp_ + simultaneous_;
    r.out_of_range = out_of_range_;
    for (const auto& a : attempts_)
      if (a.outcome != Outcome::Pending && a.fell_back) ++r.fallbacks;
    r.drops = drops_;
    r.aggregate_mbps = total_bits / cfg_.duration_us;
    r.avg_throughput_mbps = r.stations > 0 ? r.aggregate_mbps / r.stations : 0.0;
    r.norm_throughput = airtime_us_ / cfg_.duration_us;
    r.plr = xp::packet_loss_rate(r.attempts, r.successes);
    r.delay_us = delivered_frames_ > 0 ? delay_sum_us_ / static_cast<double>(delivered_frames_) : 0.0;
    if (!per_station.empty()) r.jain = xp::jain_index(per_station);
    r.width_attempts = width_attempts_;
    r.width_failures = width_failures_;
    r.bandwidth_pdf.assign(cfg_.mac.u, 0.0);
    if (r.attempts > 0)
      for (int l = 0; l < cfg_.mac.u; ++l)
        r.bandwidth_pdf[l] = static_cast<double>(width_attempts_[l]) / static_cast<double>(r.attempts);

    r.plr_bin_ms = cfg_.plr_bin_ms;
    const auto bins = static_cast<std::size_t>(std::ceil(cfg_.duration_us / (cfg_.plr_bin_ms * 1000.0)));
    bin_attempts_.resize(std::max(bins, bin_attempts_.size()), 0);
    bin_failures_.resize(bin_attempts_.size(), 0);
    double carry = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      if (bin_attempts_[b] > 0) carry = xp::packet_loss_rate(bin_attempts_[b], bin_attempts_[b] - bin_failures_[b]);
      r.plr_series.push_back(carry);
    }
    try {
      r.convergence_ms = xp::convergence_latency(r.plr_series, cfg_.convergence);
    } catch (const xp::InsufficientData&) {
      r.convergence_ms.reset();
    }
    return r;
  }

  const SimConfig& cfg_;
  std::vector<TxAttempt>* trace_;
  std::mt19937_64 rng_;
  std::vector<NodeSpec> nodes_;
  std::vector<Position> positions_;
  std::vector<std::vector<int>> hearers_;  // nodes within carrier sense of each node
  std::vector<std::vector<int>> members_;  // STAs per AP id
  std::vector<ChannelSense> sense_;
  std::vector<MacState> mac_;
  std::vector<StationTally> tally_;
  std::vector<int> occupancy_;
  std::vector<TxAttempt> attempts_;
  std::vector<char> released_;
  Time last_event_ = 0;
  std::map<int, policy::PolicyState> policies_;
  std::map<std::pair<int, int>, double> model_cache_;
  std::vector<std::uint64_t> level1_attempts_, level1_collisions_;
  std::vector<std::uint64_t> width_attempts_, width_failures_;
  std::vector<std::uint64_t> bin_attempts_, bin_failures_;
  EventQueue<Event> queue_;
  int channels_ = 1;
  Time sigma_ = 0, difs_ = 0, pifs_ = 0, data_time_ = 0, ack_tail_ = 0, delta_ = 0, end_ = 0;
  std::uint64_t successes_ = 0, owrp_ = 0, simultaneous_ = 0, out_of_range_ = 0, drops_ = 0;
  std::uint64_t delivered_frames_ = 0;
  double airtime_us_ = 0.0;
  double delay_sum_us_ = 0.0;
};

}  // namespace

xp::MetricsRecord run(const SimConfig& config, std::vector<TxAttempt>* trace) {
  auto problems = validate(config);
  if (!problems.empty()) throw ConfigError(std::move(problems));
  Simulator sim(config, trace);
  return sim.execute();
}

}  // namespace ibac::sim
