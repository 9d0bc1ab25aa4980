#include "ibac/config_io.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <stdexcept>

namespace ibac::io {

namespace {

// Rejects keys the reader does not know, so typos do not silently fall back to defaults.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

model::MacTiming<double> timing_from(const json& j) {
  check_keys(j, "mac.timing", {"sigma", "sifs", "difs", "header", "ack", "delta", "payload"});
  model::MacTiming<double> t;
  read(j, "sigma", t.sigma);
  read(j, "sifs", t.sifs);
  read(j, "difs", t.difs);
  read(j, "header", t.header);
  read(j, "ack", t.ack);
  read(j, "delta", t.delta);
  read(j, "payload", t.payload);
  return t;
}

json timing_to(const model::MacTiming<double>& t) {
  return {{"sigma", t.sigma}, {"sifs", t.sifs},   {"difs", t.difs},      {"header", t.header},
          {"ack", t.ack},     {"delta", t.delta}, {"payload", t.payload}};
}

sim::GeometryParams geometry_from(const json& j) {
  check_keys(j, "geometry", {"tr_base", "ir_base", "tr_shrink", "ir_grow", "cr", "pathloss_exponent",
                             "snr_ref", "noise_per_20mhz"});
  sim::GeometryParams g;
  read(j, "tr_base", g.tr_base);
  read(j, "ir_base", g.ir_base);
  read(j, "tr_shrink", g.tr_shrink);
  read(j, "ir_grow", g.ir_grow);
  read(j, "cr", g.cr);
  read(j, "pathloss_exponent", g.pathloss_exponent);
  read(j, "snr_ref", g.snr_ref);
  read(j, "noise_per_20mhz", g.noise_per_20mhz);
  return g;
}

json geometry_to(const sim::GeometryParams& g) {
  return {{"tr_base", g.tr_base}, {"ir_base", g.ir_base}, {"tr_shrink", g.tr_shrink},
          {"ir_grow", g.ir_grow}, {"cr", g.cr},           {"pathloss_exponent", g.pathloss_exponent},
          {"snr_ref", g.snr_ref}, {"noise_per_20mhz", g.noise_per_20mhz}};
}

baselines::PolicySpec policy_from(const json& j) {
  if (j.is_string()) return baselines::parse_policy(j.get<std::string>());
  check_keys(j, "policy", {"kind", "thresholds", "level"});
  const auto kind = j.at("kind").get<std::string>();
  baselines::PolicySpec p;
  if (kind == "ibac") p = baselines::PolicySpec::ibac();
  else if (kind == "general") p = baselines::PolicySpec::general();
  else if (kind == "static") p = baselines::PolicySpec::fixed(j.value("level", 1));
  else if (kind == "threshold") p = baselines::PolicySpec::threshold(baselines::default_thresholds());
  else if (kind == "widest_common") p = baselines::PolicySpec::widest_common(baselines::default_thresholds());
  else throw std::invalid_argument("policy.kind: unknown policy '" + kind + "'");
  read(j, "thresholds", p.thresholds);
  return p;
}

sim::NodeSpec node_from(const json& j) {
  check_keys(j, "nodes[]", {"id", "kind", "x", "y", "bss", "saturated", "dest"});
  sim::NodeSpec n;
  n.id = j.at("id").get<int>();
  const auto kind = j.value("kind", std::string("sta"));
  if (kind == "ap") n.kind = sim::NodeKind::Ap;
  else if (kind == "sta") n.kind = sim::NodeKind::Sta;
  else throw std::invalid_argument("nodes[].kind: expected 'ap' or 'sta'");
  n.position = sim::Position(j.value("x", 0.0), j.value("y", 0.0));
  read(j, "bss", n.bss);
  if (j.contains("saturated")) n.saturated = j.at("saturated").get<bool>();
  if (j.contains("dest")) n.dest = j.at("dest").get<int>();
  return n;
}

json node_to(const sim::NodeSpec& n) {
  json j{{"id", n.id},
         {"kind", n.kind == sim::NodeKind::Ap ? "ap" : "sta"},
         {"x", n.position.x()},
         {"y", n.position.y()},
         {"bss", n.bss}};
  if (n.saturated) j["saturated"] = *n.saturated;
  if (n.dest) j["dest"] = *n.dest;
  return j;
}

}  // namespace

sim::SimConfig sim_config_from_json(const json& j) {
  check_keys(j, "config", {"nodes", "geometry", "mac", "policy", "duration_us", "seed", "dap", "topology",
                           "snr_process", "ibac", "primary_channels", "plr_bin_ms", "convergence",
                           "check_invariants"});
  sim::SimConfig c;
  if (j.contains("nodes"))
    for (const auto& n : j.at("nodes")) c.nodes.push_back(node_from(n));
  if (j.contains("geometry")) c.geometry = geometry_from(j.at("geometry"));
  if (j.contains("mac")) {
    const auto& m = j.at("mac");
    check_keys(m, "mac", {"timing", "W", "m", "u", "retry_limit", "rate_mbps_per_20mhz"});
    if (m.contains("timing")) c.mac.timing = timing_from(m.at("timing"));
    read(m, "W", c.mac.W);
    read(m, "m", c.mac.m);
    read(m, "u", c.mac.u);
    read(m, "retry_limit", c.mac.retry_limit);
    read(m, "rate_mbps_per_20mhz", c.mac.rate_mbps_per_20mhz);
  }
  if (j.contains("policy")) c.policy = policy_from(j.at("policy"));
  read(j, "duration_us", c.duration_us);
  read(j, "seed", c.seed);
  read(j, "dap", c.dap);
  if (j.contains("topology")) {
    const auto& t = j.at("topology");
    check_keys(t, "topology", {"stations", "radius", "min_radius"});
    read(t, "stations", c.topology.stations);
    read(t, "radius", c.topology.radius);
    read(t, "min_radius", c.topology.min_radius);
  }
  if (j.contains("snr_process")) {
    const auto& s = j.at("snr_process");
    check_keys(s, "snr_process", {"enabled", "snr_min", "snr_max", "step_db", "interval_us"});
    read(s, "enabled", c.snr_process.enabled);
    read(s, "snr_min", c.snr_process.snr_min);
    read(s, "snr_max", c.snr_process.snr_max);
    read(s, "step_db", c.snr_process.step_db);
    read(s, "interval_us", c.snr_process.interval_us);
  }
  if (j.contains("ibac")) {
    const auto& b = j.at("ibac");
    check_keys(b, "ibac", {"t_init", "history_limit", "bucket_width_db", "feed"});
    read(b, "t_init", c.ibac.t_init);
    read(b, "history_limit", c.ibac.history_limit);
    read(b, "bucket_width_db", c.ibac.bucket_width_db);
    if (b.contains("feed")) {
      const auto feed = b.at("feed").get<std::string>();
      if (feed == "model") c.ibac.feed = sim::RewardFeed::Model;
      else if (feed == "measured") c.ibac.feed = sim::RewardFeed::Measured;
      else throw std::invalid_argument("ibac.feed: expected 'model' or 'measured'");
    }
  }
  read(j, "primary_channels", c.primary_channels);
  read(j, "plr_bin_ms", c.plr_bin_ms);
  if (j.contains("convergence")) {
    const auto& v = j.at("convergence");
    check_keys(v, "convergence", {"step_ms", "window_ms", "var_threshold"});
    read(v, "step_ms", c.convergence.step_ms);
    read(v, "window_ms", c.convergence.window_ms);
    read(v, "var_threshold", c.convergence.var_threshold);
  }
  read(j, "check_invariants", c.check_invariants);
  return c;
}

json to_json(const sim::SimConfig& c) {
  json nodes = json::array();
  for (const auto& n : c.nodes) nodes.push_back(node_to(n));
  return {
      {"nodes", nodes},
      {"geometry", geometry_to(c.geometry)},
      {"mac",
       {{"timing", timing_to(c.mac.timing)},
        {"W", c.mac.W},
        {"m", c.mac.m},
        {"u", c.mac.u},
        {"retry_limit", c.mac.retry_limit},
        {"rate_mbps_per_20mhz", c.mac.rate_mbps_per_20mhz}}},
      {"policy", c.policy.label()},
      {"duration_us", c.duration_us},
      {"seed", c.seed},
      {"dap", c.dap},
      {"topology",
       {{"stations", c.topology.stations}, {"radius", c.topology.radius}, {"min_radius", c.topology.min_radius}}},
      {"snr_process",
       {{"enabled", c.snr_process.enabled},
        {"snr_min", c.snr_process.snr_min},
        {"snr_max", c.snr_process.snr_max},
        {"step_db", c.snr_process.step_db},
        {"interval_us", c.snr_process.interval_us}}},
      {"ibac",
       {{"t_init", c.ibac.t_init},
        {"history_limit", c.ibac.history_limit},
        {"bucket_width_db", c.ibac.bucket_width_db},
        {"feed", c.ibac.feed == sim::RewardFeed::Model ? "model" : "measured"}}},
      {"primary_channels", c.primary_channels},
      {"plr_bin_ms", c.plr_bin_ms},
      {"convergence",
       {{"step_ms", c.convergence.step_ms},
        {"window_ms", c.convergence.window_ms},
        {"var_threshold", c.convergence.var_threshold}}},
      {"check_invariants", c.check_invariants},
  };
}

xp::ScenarioSpec scenario_from_json(const json& j) {
  check_keys(j, "scenario", {"policies", "stations", "daps", "seeds", "base", "out_dir", "workers"});
  xp::ScenarioSpec s = xp::default_scenario();
  if (j.contains("policies")) {
    s.policies.clear();
    for (const auto& p : j.at("policies")) s.policies.push_back(policy_from(p));
  }
  read(j, "stations", s.stations);
  read(j, "daps", s.daps);
  read(j, "seeds", s.seeds);
  if (j.contains("base")) s.base = sim_config_from_json(j.at("base"));
  read(j, "out_dir", s.out_dir);
  read(j, "workers", s.workers);
  return s;
}

json to_json(const xp::ScenarioSpec& s) {
  json policies = json::array();
  for (const auto& p : s.policies) policies.push_back(p.label());
  // out_dir and workers do not affect results and are left out so the hash is stable.
  return {{"policies", policies}, {"stations", s.stations}, {"daps", s.daps},
          {"seeds", s.seeds},     {"base", to_json(s.base)}};
}

json to_json(const xp::MetricsRecord& r) {
  json stations = json::array();
  for (const auto& s : r.per_station)
    stations.push_back({{"id", s.id},
                        {"attempts", s.attempts},
                        {"successes", s.successes},
                        {"bytes_delivered", s.bytes_delivered},
                        {"throughput_mbps", s.throughput_mbps}});
  json j{{"policy", r.policy},
         {"stations", r.stations},
         {"dap", r.dap},
         {"seed", r.seed},
         {"duration_us", r.duration_us},
         {"per_station", stations},
         {"attempts", r.attempts},
         {"successes", r.successes},
         {"collisions", r.collisions},
         {"owrp_count", r.owrp_count},
         {"simultaneous_count", r.simultaneous_count},
         {"out_of_range", r.out_of_range},
         {"fallbacks", r.fallbacks},
         {"drops", r.drops},
         {"aggregate_mbps", r.aggregate_mbps},
         {"avg_throughput_mbps", r.avg_throughput_mbps},
         {"norm_throughput", r.norm_throughput},
         {"plr", r.plr},
         {"delay_us", r.delay_us},
         {"jain", r.jain ? json(*r.jain) : json(nullptr)},
         {"bandwidth_pdf", r.bandwidth_pdf},
         {"width_attempts", r.width_attempts},
         {"width_failures", r.width_failures},
         {"plr_bin_ms", r.plr_bin_ms},
         {"plr_series", r.plr_series},
         {"convergence_ms", r.convergence_ms ? json(*r.convergence_ms) : json(nullptr)}};
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return json::parse(in);
}

}  // namespace ibac::io
