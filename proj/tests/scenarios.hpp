#pragma once

// Hand-built topologies shared by the unit and acceptance tests.

#include "ibac/owrp_sim.hpp"

namespace scenario {

// Two downlink pairs mirroring the hidden-interferer picture: AP1 serves STA1
// 10 m away, AP2 sits 85 m from STA1, beyond CR of AP1 (no carrier sense
// between the APs) and between ir(1) and ir(4) of STA1, so only a widened
// interference range reaches it.
inline ibac::sim::SimConfig fig2(std::uint64_t seed, const ibac::baselines::PolicySpec& policy) {
  using namespace ibac::sim;
  SimConfig c;
  c.seed = seed;
  c.policy = policy;
  c.duration_us = 200'000;
  c.snr_process.enabled = false;
  c.nodes = {
      {0, NodeKind::Ap, Position(0, 0), 0, true, 2},
      {1, NodeKind::Ap, Position(95, 0), 1, true, 3},
      {2, NodeKind::Sta, Position(10, 0), 0, false, {}},
      {3, NodeKind::Sta, Position(105, 0), 1, false, {}},
  };
  return c;
}

}  // namespace scenario
