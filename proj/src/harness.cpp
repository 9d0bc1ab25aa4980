#include "ibac/harness.hpp"

#include "ibac/config_io.hpp"
#include "ibac/dbca_solver.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace ibac::xp {

void ScenarioSpec::validate() const {
  if (policies.empty() || stations.empty() || daps.empty() || seeds.empty())
    throw std::invalid_argument("scenario cross-product is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw std::invalid_argument("scenario seeds must be distinct");
  for (int n : stations)
    if (n < 1) throw std::invalid_argument("scenario station counts must be >= 1");
  if (workers < 1) throw std::invalid_argument("scenario workers must be >= 1");
  for (const auto& p : policies) p.validate(base.mac.u);
}

ScenarioSpec default_scenario() {
  ScenarioSpec spec;
  spec.policies = {baselines::PolicySpec::ibac(), baselines::PolicySpec::general(),
                   baselines::PolicySpec::threshold(baselines::default_thresholds()),
                   baselines::PolicySpec::widest_common(baselines::default_thresholds())};
  spec.stations = {2, 5, 10, 15, 20, 30};
  spec.daps = {80, 100, 120, 140, 160};
  for (std::uint64_t s = 1; s <= 10; ++s) spec.seeds.push_back(s);
  return spec;
}

sim::SimConfig cell_config(const ScenarioSpec& spec, const CellKey& key) {
  sim::SimConfig config = spec.base;
  config.policy = spec.policies.at(key.policy_index);
  config.topology.stations = key.stations;
  config.dap = key.dap;
  config.seed = key.seed;
  config.nodes.clear();
  return config;
}

namespace {
std::vector<CellKey> enumerate(const ScenarioSpec& spec) {
  std::vector<CellKey> keys;
  for (std::size_t p = 0; p < spec.policies.size(); ++p)
    for (int n : spec.stations)
      for (double d : spec.daps)
        for (std::uint64_t s : spec.seeds)
          keys.push_back({static_cast<int>(p), spec.policies[p].label(), n, d, s});
  return keys;
}
}  // namespace

RunSet sweep(const ScenarioSpec& spec) {
  spec.validate();
  const auto keys = enumerate(spec);
  RunSet runs;
  runs.cells.resize(keys.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) {
      CellResult& cell = runs.cells[i];
      cell.key = keys[i];
      try {
        cell.record = sim::run(cell_config(spec, keys[i]));
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  const int threads = std::min<int>(spec.workers, static_cast<int>(keys.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& cell : runs.cells)
    if (!cell.record) ++runs.failures;
  if (!spec.out_dir.empty()) write_outputs(spec, runs, spec.out_dir);
  return runs;
}

MeanSd mean_sd(std::vector<double> values) {
  // Sorted so the result does not depend on cell completion order.
  std::sort(values.begin(), values.end());
  MeanSd out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

namespace {

template <typename XOf, typename YOf>
std::vector<SeriesPoint> series(const RunSet& runs, XOf x_of, YOf y_of) {
  std::map<std::pair<int, double>, std::pair<std::string, std::vector<double>>> groups;
  for (const auto& cell : runs.cells) {
    if (!cell.record) continue;
    const auto y = y_of(*cell.record);
    if (!y) continue;
    auto& g = groups[{cell.key.policy_index, x_of(cell.key)}];
    g.first = cell.key.policy;
    g.second.push_back(*y);
  }
  std::vector<SeriesPoint> out;
  for (const auto& [key, g] : groups) out.push_back({g.first, key.second, mean_sd(g.second)});
  return out;
}

double stations_of(const CellKey& k) { return k.stations; }
double dap_of(const CellKey& k) { return k.dap; }

}  // namespace

std::vector<SeriesPoint> throughput_vs_stations(const RunSet& runs) {
  return series(runs, stations_of, [](const MetricsRecord& r) { return std::optional(r.avg_throughput_mbps); });
}
std::vector<SeriesPoint> plr_vs_dap(const RunSet& runs) {
  return series(runs, dap_of, [](const MetricsRecord& r) { return std::optional(r.plr); });
}
std::vector<SeriesPoint> plr_vs_stations(const RunSet& runs) {
  return series(runs, stations_of, [](const MetricsRecord& r) { return std::optional(r.plr); });
}
std::vector<SeriesPoint> fairness_vs_stations(const RunSet& runs) {
  return series(runs, stations_of, [](const MetricsRecord& r) { return r.jain; });
}
std::vector<SeriesPoint> delay_vs_stations(const RunSet& runs) {
  return series(runs, stations_of, [](const MetricsRecord& r) { return std::optional(r.delay_us); });
}

std::vector<PolicyLevelRow> bandwidth_pdf(const RunSet& runs) {
  std::map<std::pair<int, int>, std::pair<std::string, std::vector<double>>> groups;
  for (const auto& cell : runs.cells) {
    if (!cell.record || cell.record->attempts == 0) continue;
    for (std::size_t l = 0; l < cell.record->bandwidth_pdf.size(); ++l) {
      auto& g = groups[{cell.key.policy_index, static_cast<int>(l) + 1}];
      g.first = cell.key.policy;
      g.second.push_back(cell.record->bandwidth_pdf[l]);
    }
  }
  std::vector<PolicyLevelRow> out;
  for (const auto& [key, g] : groups) out.push_back({g.first, key.second, mean_sd(g.second).mean, 0, 0});
  return out;
}

std::vector<PolicyLevelRow> per_width_plr(const RunSet& runs) {
  std::map<std::pair<int, int>, PolicyLevelRow> groups;
  for (const auto& cell : runs.cells) {
    if (!cell.record) continue;
    for (std::size_t l = 0; l < cell.record->width_attempts.size(); ++l) {
      auto& row = groups[{cell.key.policy_index, static_cast<int>(l) + 1}];
      row.policy = cell.key.policy;
      row.level = static_cast<int>(l) + 1;
      row.attempts += cell.record->width_attempts[l];
      row.failures += cell.record->width_failures[l];
    }
  }
  std::vector<PolicyLevelRow> out;
  for (auto& [key, row] : groups) {
    row.value = packet_loss_rate(row.attempts, row.attempts - row.failures);
    out.push_back(row);
  }
  return out;
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values, int points) {
  std::vector<std::pair<double, double>> out;
  if (values.empty() || points < 1) return out;
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  for (int i = 1; i <= points; ++i) {
    const double prob = static_cast<double>(i) / points;
    // Smallest sample whose empirical CDF reaches prob.
    auto idx = static_cast<std::size_t>(std::ceil(prob * static_cast<double>(n)));
    idx = std::clamp<std::size_t>(idx, 1, n);
    out.emplace_back(prob, values[idx - 1]);
  }
  return out;
}

namespace {
template <typename ValuesOf>
std::vector<CdfRow> cdf_rows(const RunSet& runs, ValuesOf values_of) {
  std::map<int, std::pair<std::string, std::vector<double>>> groups;
  for (const auto& cell : runs.cells) {
    if (!cell.record) continue;
    auto& g = groups[cell.key.policy_index];
    g.first = cell.key.policy;
    values_of(*cell.record, g.second);
  }
  std::vector<CdfRow> out;
  for (auto& [p, g] : groups)
    for (const auto& [prob, value] : empirical_cdf(g.second)) out.push_back({g.first, prob, value});
  return out;
}
}  // namespace

std::vector<CdfRow> throughput_cdf(const RunSet& runs) {
  return cdf_rows(runs, [](const MetricsRecord& r, std::vector<double>& v) {
    for (const auto& s : r.per_station) v.push_back(s.throughput_mbps);
  });
}
std::vector<CdfRow> plr_cdf(const RunSet& runs) {
  return cdf_rows(runs, [](const MetricsRecord& r, std::vector<double>& v) { v.push_back(r.plr); });
}
std::vector<CdfRow> convergence_cdf(const RunSet& runs) {
  return cdf_rows(runs, [](const MetricsRecord& r, std::vector<double>& v) {
    if (r.convergence_ms) v.push_back(*r.convergence_ms);
  });
}

// ---- persistence ----

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::invalid_argument("not a number: '" + text + "'");
  return v;
}

namespace {
bool needs_quotes(const std::string& s) { return s.find_first_of(",\"\r\n") != std::string::npos; }

std::string quote(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Splits the whole text into rows; quoted fields may hold commas, quotes and newlines.
std::vector<std::vector<std::string>> parse_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cur;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      row.push_back(std::move(cur));
      cur.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quoted CSV field");
  if (any) {
    row.push_back(std::move(cur));
    rows.push_back(std::move(row));
  }
  return rows;
}
}  // namespace

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << quote(row[i]);
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  auto rows = parse_rows(text.str());
  CsvTable table;
  if (rows.empty()) return table;
  table.header = std::move(rows.front());
  table.rows.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  return table;
}

namespace {
std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }
std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_double(s);
}
}  // namespace

CsvTable records_table(const RunSet& runs, int u) {
  CsvTable t;
  t.header = {"policy", "stations", "dap", "seed", "status", "attempts", "successes", "collisions",
              "owrp", "simultaneous", "out_of_range", "fallbacks", "drops", "aggregate_mbps",
              "avg_throughput_mbps", "norm_throughput", "plr", "delay_us", "jain", "convergence_ms"};
  for (int l = 1; l <= u; ++l) t.header.push_back("pdf_" + std::to_string(l));
  for (int l = 1; l <= u; ++l) t.header.push_back("attempts_" + std::to_string(l));
  for (int l = 1; l <= u; ++l) t.header.push_back("failures_" + std::to_string(l));
  t.header.push_back("error");
  for (const auto& cell : runs.cells) {
    std::vector<std::string> row{cell.key.policy, std::to_string(cell.key.stations),
                                 format_double(cell.key.dap), std::to_string(cell.key.seed)};
    if (!cell.record) {
      row.push_back("failed");
      row.resize(t.header.size() - 1);
      row.push_back(cell.error);
      t.rows.push_back(std::move(row));
      continue;
    }
    const auto& r = *cell.record;
    row.push_back("ok");
    for (auto v : {r.attempts, r.successes, r.collisions, r.owrp_count, r.simultaneous_count,
                   r.out_of_range, r.fallbacks, r.drops})
      row.push_back(std::to_string(v));
    for (double v : {r.aggregate_mbps, r.avg_throughput_mbps, r.norm_throughput, r.plr, r.delay_us})
      row.push_back(format_double(v));
    row.push_back(opt(r.jain));
    row.push_back(opt(r.convergence_ms));
    for (int l = 0; l < u; ++l) row.push_back(format_double(l < static_cast<int>(r.bandwidth_pdf.size()) ? r.bandwidth_pdf[l] : 0.0));
    for (int l = 0; l < u; ++l) row.push_back(std::to_string(l < static_cast<int>(r.width_attempts.size()) ? r.width_attempts[l] : 0));
    for (int l = 0; l < u; ++l) row.push_back(std::to_string(l < static_cast<int>(r.width_failures.size()) ? r.width_failures[l] : 0));
    row.push_back("");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<CellResult> parse_records_table(const CsvTable& table, int u) {
  std::vector<CellResult> out;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::runtime_error("records row has the wrong width");
    CellResult cell;
    cell.key.policy = row[0];
    cell.key.stations = std::stoi(row[1]);
    cell.key.dap = parse_double(row[2]);
    cell.key.seed = std::stoull(row[3]);
    if (row[4] != "ok") {
      cell.error = row.back();
      out.push_back(std::move(cell));
      continue;
    }
    MetricsRecord r;
    r.policy = cell.key.policy;
    r.stations = cell.key.stations;
    r.dap = cell.key.dap;
    r.seed = cell.key.seed;
    std::size_t i = 5;
    for (auto* v : {&r.attempts, &r.successes, &r.collisions, &r.owrp_count, &r.simultaneous_count,
                    &r.out_of_range, &r.fallbacks, &r.drops})
      *v = std::stoull(row[i++]);
    for (auto* v : {&r.aggregate_mbps, &r.avg_throughput_mbps, &r.norm_throughput, &r.plr, &r.delay_us})
      *v = parse_double(row[i++]);
    r.jain = parse_opt(row[i++]);
    r.convergence_ms = parse_opt(row[i++]);
    for (int l = 0; l < u; ++l) r.bandwidth_pdf.push_back(parse_double(row[i++]));
    for (int l = 0; l < u; ++l) r.width_attempts.push_back(std::stoull(row[i++]));
    for (int l = 0; l < u; ++l) r.width_failures.push_back(std::stoull(row[i++]));
    cell.record = std::move(r);
    out.push_back(std::move(cell));
  }
  return out;
}

std::string config_hash(const ScenarioSpec& spec) {
  const std::string canonical = io::to_json(spec).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

namespace {

CsvTable series_table(const std::vector<SeriesPoint>& points, const std::string& x_name) {
  CsvTable t{{"policy", x_name, "mean", "sd", "count"}, {}};
  for (const auto& p : points)
    t.rows.push_back({p.policy, format_double(p.x), format_double(p.y.mean), format_double(p.y.sd),
                      std::to_string(p.y.count)});
  return t;
}

CsvTable cdf_table(const std::vector<CdfRow>& rows) {
  CsvTable t{{"policy", "probability", "value"}, {}};
  for (const auto& r : rows) t.rows.push_back({r.policy, format_double(r.probability), format_double(r.value)});
  return t;
}

void write_with_manifest(const std::filesystem::path& dir, const std::string& name, const CsvTable& table,
                         const ScenarioSpec& spec, const std::string& hash) {
  write_csv(dir / name, table);
  io::json manifest{{"file", name},
                    {"config_hash", hash},
                    {"seeds", spec.seeds},
                    {"artifact_version", kArtifactVersion}};
  std::ofstream(dir / (name + ".manifest.json")) << manifest.dump(2) << '\n';
}

}  // namespace

void write_outputs(const ScenarioSpec& spec, const RunSet& runs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string hash = config_hash(spec);
  const int u = spec.base.mac.u;
  write_with_manifest(dir, "records.csv", records_table(runs, u), spec, hash);
  write_with_manifest(dir, "throughput_vs_stations.csv", series_table(throughput_vs_stations(runs), "stations"), spec, hash);
  write_with_manifest(dir, "plr_vs_dap.csv", series_table(plr_vs_dap(runs), "dap"), spec, hash);
  write_with_manifest(dir, "plr_vs_stations.csv", series_table(plr_vs_stations(runs), "stations"), spec, hash);
  write_with_manifest(dir, "fairness_vs_stations.csv", series_table(fairness_vs_stations(runs), "stations"), spec, hash);
  write_with_manifest(dir, "delay_vs_stations.csv", series_table(delay_vs_stations(runs), "stations"), spec, hash);

  CsvTable pdf{{"policy", "level", "width_mhz", "fraction"}, {}};
  for (const auto& r : bandwidth_pdf(runs))
    pdf.rows.push_back({r.policy, std::to_string(r.level), std::to_string(20 << (r.level - 1)), format_double(r.value)});
  write_with_manifest(dir, "bandwidth_pdf.csv", pdf, spec, hash);

  CsvTable pw{{"policy", "level", "width_mhz", "attempts", "failures", "plr"}, {}};
  for (const auto& r : per_width_plr(runs))
    pw.rows.push_back({r.policy, std::to_string(r.level), std::to_string(20 << (r.level - 1)),
                       std::to_string(r.attempts), std::to_string(r.failures), format_double(r.value)});
  write_with_manifest(dir, "per_width_plr.csv", pw, spec, hash);

  write_with_manifest(dir, "throughput_cdf.csv", cdf_table(throughput_cdf(runs)), spec, hash);
  write_with_manifest(dir, "plr_cdf.csv", cdf_table(plr_cdf(runs)), spec, hash);
  write_with_manifest(dir, "convergence_cdf.csv", cdf_table(convergence_cdf(runs)), spec, hash);
}

// ---- model cross-check ----

CrossCheck model_vs_sim(int stations, const sim::SimConfig& base) {
  sim::SimConfig config = base;
  config.policy = baselines::PolicySpec::fixed(1);
  config.geometry.ir_grow = 1.0;
  config.geometry.tr_shrink = 1.0;
  config.snr_process.enabled = false;
  config.nodes.clear();
  config.nodes.push_back({0, sim::NodeKind::Ap, sim::Position(0, 0), 0, {}, {}});
  // Every station sits on a small circle around the AP, well inside every range.
  const double radius = std::min({1.0, config.geometry.tr_base, config.geometry.cr}) / 2.0;
  for (int k = 0; k < stations; ++k) {
    const double a = 2.0 * 3.14159265358979323846 * k / stations;
    config.nodes.push_back({k + 1, sim::NodeKind::Sta, sim::Position(radius * std::cos(a), radius * std::sin(a)), 0, {}, {}});
  }
  const MetricsRecord rec = sim::run(config);

  CrossCheck out;
  out.stations = stations;
  out.observed_collision = rec.attempts == 0 ? 0.0 : static_cast<double>(rec.collisions) / rec.attempts;
  model::ModelParams<double> params;
  params.n = stations;
  params.W = config.mac.W;
  params.m = config.mac.m;
  params.u = config.mac.u;
  out.kappa = model::calibrate_kappa(params, config.mac.timing, out.observed_collision);
  params.kappa = out.kappa;
  out.analytic = model::solve_fixed_point(params, config.mac.timing).throughput;
  out.simulated = rec.norm_throughput;
  out.relative_error = std::abs(out.analytic - out.simulated) / out.simulated;
  const double nu = model::transmission_prob(std::min(out.observed_collision, 1.0), params.W, params.m);
  out.chain_only = model::normalized_throughput(model::success_probs(nu, stations), config.mac.timing);
  out.chain_only_error = std::abs(out.chain_only - out.simulated) / out.simulated;
  return out;
}

}  // namespace ibac::xp
