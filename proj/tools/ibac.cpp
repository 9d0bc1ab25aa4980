// Command-line front end: model, run, sweep, trace.

#include "ibac/config_io.hpp"
#include "ibac/dbca_solver.hpp"
#include "ibac/harness.hpp"
#include "ibac/owrp_sim.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using ibac::io::json;

namespace {

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream file(out);
  if (!file) throw std::runtime_error("cannot write " + out);
  file << text << '\n';
}

ibac::sim::SimConfig load_sim(const std::string& path, const std::optional<std::uint64_t>& seed) {
  auto config = path.empty() ? ibac::sim::SimConfig{} : ibac::io::sim_config_from_json(ibac::io::read_json_file(path));
  if (seed) config.seed = *seed;
  if (auto problems = ibac::sim::validate(config); !problems.empty()) throw ibac::sim::ConfigError(problems);
  return config;
}

json solution_json(const ibac::model::ModelSolution& s) {
  return {{"upsilon_c", s.upsilon_c}, {"nu", s.nu},
          {"b00", s.b00},             {"p_one", s.p_one},
          {"p_s", s.p_s},             {"throughput", s.throughput},
          {"p", s.p},                 {"gamma", s.gamma},
          {"iterations", s.iterations}, {"residual", s.residual},
          {"upsilon_clamped", s.upsilon_clamped}, {"used_bisection", s.used_bisection}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic bandwidth channel access: analytic model, simulator and experiment sweeps"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string out;
  int workers = 1;
  std::string config_path;

  auto* model = app.add_subcommand("model", "Solve the analytic model and print the solution");
  ibac::model::ModelParams<double> params;
  params.n = 10;
  params.W = 16;
  params.m = 6;
  params.u = 4;
  params.kappa = 0.0;
  model->add_option("--config", config_path, "JSON file with n, W, m, u, kappa");
  model->add_option("--n", params.n, "contending stations");
  model->add_option("--W", params.W, "minimum contention window");
  model->add_option("--m", params.m, "maximum backoff stage");
  model->add_option("--u", params.u, "maximum bonding level");
  model->add_option("--kappa", params.kappa, "secondary-channel busy factor");
  model->add_option("--out", out, "output file (default stdout)");

  auto* run = app.add_subcommand("run", "Run one simulation and print its metrics record");
  run->add_option("config", config_path, "SimConfig JSON file")->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out, "output file (default stdout)");

  auto* trace = app.add_subcommand("trace", "Run one simulation and print one line per attempt");
  trace->add_option("config", config_path, "SimConfig JSON file")->check(CLI::ExistingFile);
  trace->add_option("--seed", seed, "override the config seed");
  trace->add_option("--out", out, "output file (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Run a scenario sweep and write CSV tables");
  sweep->add_option("config", config_path, "ScenarioSpec JSON file (default scenario when omitted)")
      ->check(CLI::ExistingFile);
  sweep->add_option("--seed", seed, "run a single seed instead of the scenario's list");
  sweep->add_option("--out", out, "output directory")->required();
  sweep->add_option("--workers", workers, "parallel cells")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*model) {
      if (!config_path.empty()) {
        const auto j = ibac::io::read_json_file(config_path);
        params.n = j.value("n", params.n);
        params.W = j.value("W", params.W);
        params.m = j.value("m", params.m);
        params.u = j.value("u", params.u);
        params.kappa = j.value("kappa", params.kappa);
      }
      const auto solution = ibac::model::solve_fixed_point(params, ibac::model::MacTiming<double>{});
      emit(solution_json(solution).dump(2), out);
      return 0;
    }
    if (*run) {
      const auto record = ibac::sim::run(load_sim(config_path, seed));
      emit(ibac::io::to_json(record).dump(2), out);
      return 0;
    }
    if (*trace) {
      std::vector<ibac::sim::TxAttempt> attempts;
      ibac::sim::run(load_sim(config_path, seed), &attempts);
      std::ostringstream text;
      for (const auto& a : attempts) ibac::sim::write_trace_line(text, a);
      std::string body = text.str();
      if (!body.empty() && body.back() == '\n') body.pop_back();
      emit(body, out);
      return 0;
    }
    if (*sweep) {
      auto spec = config_path.empty() ? ibac::xp::default_scenario()
                                      : ibac::io::scenario_from_json(ibac::io::read_json_file(config_path));
      if (seed) spec.seeds = {*seed};
      spec.out_dir = out;
      spec.workers = workers;
      const auto runs = ibac::xp::sweep(spec);
      std::cerr << runs.cells.size() << " cells, " << runs.failures << " failed\n";
      for (const auto& cell : runs.cells)
        if (!cell.record)
          std::cerr << "  " << cell.key.policy << " n=" << cell.key.stations << " dap=" << cell.key.dap
                    << " seed=" << cell.key.seed << ": " << cell.error << '\n';
      return runs.failures == 0 ? 0 : 1;
    }
  } catch (const ibac::sim::ConfigError& e) {
    for (const auto& p : e.problems()) std::cerr << "config: " << p << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
