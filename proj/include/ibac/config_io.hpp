#pragma once

// JSON mapping of the simulator and sweep configuration and of the per-run
// metrics. Field names follow the C++ member names.

#include "ibac/harness.hpp"
#include "ibac/metrics.hpp"
#include "ibac/owrp_sim.hpp"

#include <json.hpp>

#include <string>

namespace ibac::io {

using nlohmann::json;

sim::SimConfig sim_config_from_json(const json& j);
json to_json(const sim::SimConfig& config);

xp::ScenarioSpec scenario_from_json(const json& j);
json to_json(const xp::ScenarioSpec& spec);

json to_json(const xp::MetricsRecord& record);

json read_json_file(const std::string& path);

}  // namespace ibac::io
