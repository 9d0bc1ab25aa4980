#include "ibac/ts_policy.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace ibac::policy {

int BucketConfig::bucket_count() const {
  return static_cast<int>(std::ceil((snr_max - snr_min) / d));
}

void BucketConfig::validate() const {
  if (!(d > 0.0)) throw std::invalid_argument("BucketConfig.d must be positive");
  if (!(snr_min < snr_max)) throw std::invalid_argument("BucketConfig.snr_min must be below snr_max");
}

BucketLookup bucket_of(const BucketConfig& config, double snr) {
  BucketLookup out;
  if (snr < config.snr_min) {
    snr = config.snr_min;
    out.clamped = true;
  } else if (snr > config.snr_max) {
    snr = config.snr_max;
    out.clamped = true;
  }
  const int last = config.bucket_count() - 1;
  const int j = static_cast<int>(std::floor((snr - config.snr_min) / config.d));
  out.index = j > last ? last : j;
  return out;
}

StatTable::StatTable(BucketConfig config, int u, std::size_t history_limit)
    : config_(config), u_(u), history_limit_(history_limit) {
  config_.validate();
  if (u < 1) throw std::invalid_argument("StatTable requires u >= 1");
  if (history_limit == 0) throw std::invalid_argument("StatTable history limit must be positive");
}

bool StatTable::has_bucket(int j) const {
  const auto it = buckets_.find(j);
  return it != buckets_.end() && !it->second.empty();
}

std::vector<const LevelRecord*> StatTable::records(int j) const {
  std::vector<const LevelRecord*> out;
  const auto it = buckets_.find(j);
  if (it == buckets_.end()) return out;
  for (const auto& [level, rec] : it->second) out.push_back(&rec);
  return out;
}

const LevelRecord* StatTable::find(int j, int level) const {
  const auto it = buckets_.find(j);
  if (it == buckets_.end()) return nullptr;
  const auto rec = it->second.find(level);
  return rec == it->second.end() ? nullptr : &rec->second;
}

void StatTable::record(int j, int level, double throughput) {
  if (level < 1 || level > u_)
    throw std::invalid_argument("bonding level " + std::to_string(level) + " outside [1, u]");
  if (!(throughput >= 0.0 && throughput <= 1.0))
    throw std::invalid_argument("normalized throughput must lie in [0, 1]");
  auto& rec = buckets_[j][level];
  rec.level = level;
  ++rec.uses;
  rec.throughput_sum += throughput;
  rec.history.push_back(throughput);
  if (rec.history.size() > history_limit_) rec.history.pop_front();
}

// Format:
//   ibac-stat-table 1 <snr_min> <snr_max> <d> <u> <history_limit>
//   <bucket> <level> <uses> <throughput_sum> <count> <v1> ... <vcount>
void StatTable::write_snapshot(std::ostream& out) const {
  out << std::setprecision(17);
  out << "ibac-stat-table 1 " << config_.snr_min << ' ' << config_.snr_max << ' ' << config_.d << ' '
      << u_ << ' ' << history_limit_ << '\n';
  for (const auto& [j, levels] : buckets_) {
    for (const auto& [level, rec] : levels) {
      out << j << ' ' << level << ' ' << rec.uses << ' ' << rec.throughput_sum << ' '
          << rec.history.size();
      for (double v : rec.history) out << ' ' << v;
      out << '\n';
    }
  }
}

StatTable StatTable::read_snapshot(std::istream& in) {
  std::string magic;
  int version = 0;
  BucketConfig config;
  int u = 0;
  std::size_t limit = 0;
  if (!(in >> magic >> version >> config.snr_min >> config.snr_max >> config.d >> u >> limit) ||
      magic != "ibac-stat-table" || version != 1)
    throw std::runtime_error("not an ibac-stat-table v1 snapshot");
  StatTable table(config, u, limit);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    int j = 0;
    LevelRecord rec;
    std::size_t count = 0;
    if (!(row >> j >> rec.level >> rec.uses >> rec.throughput_sum >> count))
      throw std::runtime_error("malformed stat-table row: " + line);
    for (std::size_t i = 0; i < count; ++i) {
      double v = 0.0;
      if (!(row >> v)) throw std::runtime_error("truncated stat-table row: " + line);
      rec.history.push_back(v);
    }
    if (rec.level < 1 || rec.level > u || rec.history.size() > limit || rec.uses < rec.history.size())
      throw std::runtime_error("inconsistent stat-table row: " + line);
    table.buckets_[j][rec.level] = std::move(rec);
  }
  return table;
}

bool operator==(const StatTable& a, const StatTable& b) {
  if (a.config_.snr_min != b.config_.snr_min || a.config_.snr_max != b.config_.snr_max ||
      a.config_.d != b.config_.d || a.u_ != b.u_ || a.history_limit_ != b.history_limit_)
    return false;
  if (a.buckets_.size() != b.buckets_.size()) return false;
  for (const auto& [j, levels] : a.buckets_) {
    const auto it = b.buckets_.find(j);
    if (it == b.buckets_.end() || it->second.size() != levels.size()) return false;
    for (const auto& [level, rec] : levels) {
      const auto other = it->second.find(level);
      if (other == it->second.end()) return false;
      const LevelRecord& o = other->second;
      if (rec.uses != o.uses || rec.throughput_sum != o.throughput_sum || rec.history != o.history)
        return false;
    }
  }
  return true;
}

double prior(const StatTable& table, int j, int level) {
  const auto recs = table.records(j);
  if (recs.empty()) throw NoHistory("SNR bucket " + std::to_string(j) + " has no history");
  std::uint64_t total = 0;
  std::uint64_t hits = 0;
  for (const LevelRecord* rec : recs) {
    total += rec->uses;
    if (rec->level == level) hits = rec->uses;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

double likelihood(const StatTable& table, int j, int level) {
  const LevelRecord* rec = table.find(j, level);
  if (rec == nullptr || rec->history.empty())
    throw NoHistory("no throughput history for bucket " + std::to_string(j) + ", level " +
                    std::to_string(level));
  double sum = 0.0;
  for (double v : rec->history) sum += v;
  return sum / static_cast<double>(rec->history.size());
}

int posterior_select(const StatTable& table, int j, double scale) {
  const auto recs = table.records(j);
  if (recs.empty()) throw NoHistory("SNR bucket " + std::to_string(j) + " has no history");
  int best = 0;
  double best_score = -1.0;
  for (const LevelRecord* rec : recs) {
    const double score = scale * likelihood(table, j, rec->level) * prior(table, j, rec->level);
    if (score > best_score) {
      best_score = score;
      best = rec->level;
    }
  }
  return best;
}

int posterior_select(const PolicyState& state, int j) {
  return posterior_select(state.table, j, static_cast<double>(state.table.u()));
}

PolicyState::PolicyState(BucketConfig config, int u, std::uint64_t seed, int t_init,
                         std::size_t history_limit)
    : table(config, u, history_limit), t_init(t_init), rng_seed(seed), rng(seed) {
  if (t_init < 0) throw std::invalid_argument("t_init must be non-negative");
}

int decide(PolicyState& state, double snr) {
  const int j = bucket_of(state.table.config(), snr).index;
  const bool explore =
      state.t <= static_cast<std::uint64_t>(state.t_init) || !state.table.has_bucket(j);
  ++state.t;
  if (explore) {
    ++state.explorations;
    return 1 + static_cast<int>(state.rng() % static_cast<std::uint64_t>(state.table.u()));
  }
  return posterior_select(state, j);
}

void update(PolicyState& state, double snr, int level, double throughput) {
  state.table.record(bucket_of(state.table.config(), snr).index, level, throughput);
}

}  // namespace ibac::policy
