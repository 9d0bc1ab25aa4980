// Acceptance report: one PASS/FAIL line per criterion, nonzero exit if any fails.

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "ibac/dbca_solver.hpp"
#include "ibac/harness.hpp"
#include "ibac/metrics.hpp"
#include "ibac/owrp_sim.hpp"
#include "ibac/ts_policy.hpp"
#include "mc_oracle.hpp"
#include "scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace ibac;

namespace {

struct Verdict {
  bool pass = false;
  std::string details;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void criterion(int k, const char* name, const std::function<Verdict()>& body, double budget_s = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0.0 && secs > budget_s) {
    v.pass = false;
    v.details += fmt("; over the %.0f s budget", budget_s);
  }
  if (!v.pass) ++failures;
  std::printf("CRITERION %d %s %s: %s (t=%.2fs)\n", k, v.pass ? "PASS" : "FAIL", name, v.details.c_str(), secs);
  std::fflush(stdout);
}

Verdict golden_suite() {
  doctest::Context ctx;
  ctx.setOption("test-case", "*example*,*oracle*,*legacy*,*Monte-Carlo*,*state by state*,*level shift*");
  ctx.setOption("minimal", true);
  ctx.setOption("no-breaks", true);
  const int rc = ctx.run();
  return {rc == 0, rc == 0 ? "all oracle-checked golden cases agree" : "golden cases failed, see doctest output"};
}

Verdict bianchi() {
  double worst = 0.0;
  int cases = 0;
  for (int W : {8, 16, 32, 64, 128})
    for (int m = 0; m <= 6; ++m)
      for (int n : {1, 2, 5, 10, 30}) {
        model::ModelParams<double> p;
        p.n = n;
        p.W = W;
        p.m = m;
        p.kappa = 0.0;
        const auto s = model::solve_fixed_point(p, model::MacTiming<double>{});
        worst = std::max(worst, std::abs(s.nu - 2.0 / (W + 1.0)));
        ++cases;
      }
  return {worst <= 1e-12, fmt("%d cases, max |nu - 2/(W+1)| = %.3g", cases, worst)};
}

Verdict normalization() {
  double worst = 0.0;
  int cases = 0;
  for (int k = 1; k <= 19; ++k) {
    if (k == 10) continue;
    const double upsilon = k * 0.05;
    for (int W : {8, 16, 32, 64})
      for (int m = 0; m <= 6; ++m) {
        const double b00 = model::stationary_b00(upsilon, W, m);
        worst = std::max(worst, std::abs(model::stationary_vector(upsilon, W, m, b00).sum() - 1.0));
        ++cases;
      }
  }
  return {worst <= 1e-10, fmt("%d grid points, max |sum - 1| = %.3g", cases, worst)};
}

Verdict monte_carlo() {
  double worst = 0.0;
  std::string detail;
  std::uint64_t seed = 1;
  for (int n : {2, 5, 10})
    for (double kappa : {0.0, 0.3, 0.6}) {
      model::ModelParams<double> p;
      p.n = n;
      p.kappa = kappa;
      const model::MacTiming<double> t;
      const auto s = model::solve_fixed_point(p, t);
      const auto mc = oracle::chain_monte_carlo(n, p.W, p.m, s.upsilon_c, 10'000'000, t, seed++);
      const double err = std::abs(mc.throughput - s.throughput) / s.throughput;
      worst = std::max(worst, err);
      detail += fmt(" n=%d k=%.1f %.2f%%", n, kappa, 100 * err);
    }
  return {worst <= 0.02, fmt("1e7 slots each, max rel err %.3f%%;", 100 * worst) + detail};
}

Verdict model_vs_sim() {
  bool ok = true;
  std::string detail;
  for (int n : {2, 5, 10}) {
    sim::SimConfig base;
    base.duration_us = 5e6;
    const auto c = xp::model_vs_sim(n, base);
    ok = ok && c.relative_error <= 0.05;
    detail += fmt(" n=%d: coll=%.3f kappa=%.3f model=%.4f sim=%.4f err=%.1f%% (chain at observed coll: %.2f%%);", n,
                  c.observed_collision, c.kappa, c.analytic, c.simulated, 100 * c.relative_error,
                  100 * c.chain_only_error);
  }
  return {ok, "fixed-point model within 5%?" + detail};
}

Verdict ts_regret() {
  constexpr int kInit = 50;
  constexpr int kRounds = 1000;
  constexpr int kDominant = 3;
  const double mean[5] = {0.0, 0.2, 0.4, 0.8, 0.6};
  double total = 0.0;
  int below = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    policy::PolicyState s(policy::BucketConfig{}, 4, seed, kInit);
    std::mt19937_64 env(seed * 7919 + 1);
    std::uniform_real_distribution<double> noise(-0.1, 0.1);
    int hits = 0;
    for (int r = 0; r < kInit + kRounds; ++r) {
      const int level = policy::decide(s, 40.0);
      if (r >= kInit && level == kDominant) ++hits;
      policy::update(s, 40.0, level, std::clamp(mean[level] + noise(env), 0.0, 1.0));
    }
    const double f = static_cast<double>(hits) / kRounds;
    total += f;
    if (f <= 0.9) ++below;
  }
  const double freq = total / 20.0;
  return {freq > 0.9, fmt("dominant-level frequency %.1f%% over 20 seeds (%d seeds at or below 90%%)", 100 * freq, below)};
}

Verdict owrp_ablation() {
  int positive = 0;
  int zero_ablated = 0;
  std::uint64_t total = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = sim::run(scenario::fig2(seed, baselines::PolicySpec::fixed(3)));
    if (r.owrp_count > 0) ++positive;
    total += r.owrp_count;
    auto ablated = scenario::fig2(seed, baselines::PolicySpec::fixed(3));
    ablated.geometry.ir_grow = 1.0;
    if (sim::run(ablated).owrp_count == 0) ++zero_ablated;
  }
  return {positive == 10 && zero_ablated == 10,
          fmt("Static(3): %d/10 seeds with owrp > 0 (%llu total); ir_grow=1: %d/10 seeds with 0", positive,
              static_cast<unsigned long long>(total), zero_ablated)};
}

struct TrendCheck {
  bool i = false, ii = false, iii = false, iv = false;
  std::string detail;
};

TrendCheck trends(const xp::RunSet& runs) {
  TrendCheck out;
  const std::string ibac = baselines::PolicySpec::ibac().label();
  const std::string general = baselines::PolicySpec::general().label();

  out.i = true;
  std::map<std::string, double> last;
  std::string bumps;
  for (const auto& p : xp::plr_vs_dap(runs)) {
    auto it = last.find(p.policy);
    if (it != last.end() && p.y.mean > it->second) {
      out.i = false;
      bumps += fmt(" %s %.2f->%.2f at dap=%.0f", p.policy.c_str(), it->second, p.y.mean, p.x);
    }
    last[p.policy] = p.y.mean;
  }

  std::map<double, double> thr_ibac, thr_general;
  for (const auto& p : xp::throughput_vs_stations(runs)) {
    if (p.policy == ibac) thr_ibac[p.x] = p.y.mean;
    if (p.policy == general) thr_general[p.x] = p.y.mean;
  }
  int ge = 0, strict = 0;
  std::string thr;
  for (const auto& [n, v] : thr_ibac) {
    const double g = thr_general.at(n);
    if (v >= g) ++ge;
    if (v > g) ++strict;
    thr += fmt(" n=%.0f %.1f/%.1f", n, v, g);
  }
  out.ii = ge == static_cast<int>(thr_ibac.size()) && strict >= 4;

  double plr_ibac = 0.0, plr_general = 0.0;
  int c_ibac = 0, c_general = 0;
  for (const auto& cell : runs.cells) {
    if (!cell.record) continue;
    if (cell.key.policy == ibac) plr_ibac += cell.record->plr, ++c_ibac;
    if (cell.key.policy == general) plr_general += cell.record->plr, ++c_general;
  }
  plr_ibac /= std::max(c_ibac, 1);
  plr_general /= std::max(c_general, 1);
  out.iii = plr_ibac < plr_general;

  double wide_ibac = 0.0, wide_general = 0.0;
  for (const auto& r : xp::bandwidth_pdf(runs)) {
    if (r.level < 3) continue;
    if (r.policy == ibac) wide_ibac += r.value;
    if (r.policy == general) wide_general += r.value;
  }
  out.iv = wide_ibac >= 1.5 * wide_general;

  out.detail = fmt("(i) %s%s; (ii) %s, IBAC/General Mbps%s; (iii) %s, PLR %.2f vs %.2f; (iv) %s, widest-two %.3f vs %.3f",
                   out.i ? "PASS" : "FAIL", bumps.c_str(), out.ii ? "PASS" : "FAIL", thr.c_str(),
                   out.iii ? "PASS" : "FAIL", plr_ibac, plr_general, out.iv ? "PASS" : "FAIL", wide_ibac,
                   wide_general);
  return out;
}

Verdict trend_reproduction() {
  auto spec = xp::default_scenario();
  spec.workers = 8;
  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = xp::sweep(spec);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto main = trends(runs);
  std::string detail = fmt("%zu cells, %zu failed, sweep %.1f s; ", runs.cells.size(), runs.failures, secs) + main.detail;

  // Informational: the same checks with each geometry factor moved by 20%.
  for (const auto& [knob, value] : std::vector<std::pair<std::string, double>>{
           {"tr_shrink", 0.64}, {"tr_shrink", 0.96}, {"ir_grow", 1.0}, {"ir_grow", 1.5}}) {
    auto varied = spec;
    (knob == "tr_shrink" ? varied.base.geometry.tr_shrink : varied.base.geometry.ir_grow) = value;
    const auto t = trends(xp::sweep(varied));
    detail += fmt(" | %s=%.2f: i=%d ii=%d iii=%d iv=%d", knob.c_str(), value, t.i, t.ii, t.iii, t.iv);
  }
  const bool ok = runs.failures == 0 && main.i && main.ii && main.iii && main.iv && secs < 1200.0;
  return {ok, detail};
}

Verdict determinism() {
  sim::SimConfig c;
  c.policy = baselines::PolicySpec::ibac();
  c.seed = 42;
  c.topology.stations = 10;
  const bool repeat = sim::run(c) == sim::run(c);

  xp::ScenarioSpec spec = xp::default_scenario();
  spec.stations = {5, 15};
  spec.daps = {80, 140};
  spec.seeds = {1, 2, 3};
  spec.workers = 1;
  const auto one = xp::sweep(spec);
  spec.workers = 8;
  const auto eight = xp::sweep(spec);
  bool same = one.cells.size() == eight.cells.size();
  for (std::size_t i = 0; same && i < one.cells.size(); ++i)
    same = one.cells[i].record == eight.cells[i].record && one.cells[i].key.seed == eight.cells[i].key.seed;
  return {repeat && same, fmt("repeat run identical: %s; %zu cells identical across 1 and 8 workers: %s",
                              repeat ? "yes" : "no", one.cells.size(), same ? "yes" : "no")};
}

Verdict convergence() {
  const xp::ConvergenceParams params;
  std::vector<double> step(50);
  for (std::size_t i = 0; i < step.size(); ++i) step[i] = i < 4 ? 50.0 : 10.0;
  const auto t = xp::convergence_latency(step, params);
  const bool synthetic = t && std::abs(*t - 80.0) <= params.step_ms;

  int finite = 0;
  double lo = 1e300, hi = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    sim::SimConfig c;
    c.policy = baselines::PolicySpec::ibac();
    c.seed = seed;
    c.topology.stations = 60;
    c.dap = 100.0;
    const auto r = sim::run(c);
    if (r.convergence_ms) {
      ++finite;
      lo = std::min(lo, *r.convergence_ms);
      hi = std::max(hi, *r.convergence_ms);
    }
  }
  return {synthetic && finite >= 18,
          fmt("synthetic step at 80 ms found at %s ms; live IBAC n=60: %d/20 finite, range %.0f to %.0f ms",
              t ? fmt("%.0f", *t).c_str() : "none", finite, finite ? lo : 0.0, hi)};
}

}  // namespace

int main() {
  criterion(1, "golden suite", golden_suite, 10);
  criterion(2, "Bianchi reduction", bianchi);
  criterion(3, "stationary normalization", normalization, 5);
  criterion(4, "analytic vs Monte-Carlo", monte_carlo, 120);
  criterion(5, "model vs simulator", model_vs_sim, 120);
  criterion(6, "TS regret sanity", ts_regret, 30);
  criterion(7, "OWRP existence and ablation", owrp_ablation);
  criterion(8, "trend reproduction", trend_reproduction);
  criterion(9, "determinism", determinism);
  criterion(10, "convergence harness", convergence);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
