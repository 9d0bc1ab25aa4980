#include "ibac/baselines.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace ibac::baselines {

void PolicySpec::validate(int u) const {
  switch (kind) {
    case PolicyKind::Static:
      if (level < 1 || level > u) throw std::invalid_argument("Static level outside [1, u]");
      break;
    case PolicyKind::Threshold:
    case PolicyKind::WidestCommon:
      if (thresholds.size() != static_cast<std::size_t>(u - 1))
        throw std::invalid_argument("threshold list must hold u - 1 values");
      for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (!(thresholds[i] > thresholds[i - 1]))
          throw std::invalid_argument("threshold list must be strictly increasing");
      break;
    case PolicyKind::Ibac:
    case PolicyKind::General:
      break;
  }
}

namespace {
std::string join(const std::vector<double>& xs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? "," : "") << xs[i];
  return out.str();
}

std::vector<double> parse_list(const std::string& body) {
  std::vector<double> out;
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stod(item));
  return out;
}
}  // namespace

std::string PolicySpec::label() const {
  switch (kind) {
    case PolicyKind::Ibac: return "IBAC";
    case PolicyKind::General: return "General";
    case PolicyKind::Static: return "Static(" + std::to_string(level) + ")";
    case PolicyKind::Threshold: return "DBS-proxy(" + join(thresholds) + ")";
    case PolicyKind::WidestCommon: return "WiderCast-proxy(" + join(thresholds) + ")";
  }
  return "?";
}

PolicySpec parse_policy(const std::string& label) {
  const auto open = label.find('(');
  const std::string head = label.substr(0, open);
  std::string body;
  if (open != std::string::npos) {
    const auto close = label.rfind(')');
    if (close == std::string::npos || close < open) throw std::invalid_argument("bad policy label: " + label);
    body = label.substr(open + 1, close - open - 1);
  }
  if (head == "IBAC") return PolicySpec::ibac();
  if (head == "General") return PolicySpec::general();
  if (head == "Static") return PolicySpec::fixed(std::stoi(body));
  if (head == "DBS-proxy" || head == "Threshold")
    return PolicySpec::threshold(body.empty() ? default_thresholds() : parse_list(body));
  if (head == "WiderCast-proxy" || head == "WidestCommon")
    return PolicySpec::widest_common(body.empty() ? default_thresholds() : parse_list(body));
  throw std::invalid_argument("unknown policy: " + label);
}

int general_decide(std::span<const bool> idle, int primary, int u) {
  const int channels = 1 << (u - 1);
  if (static_cast<int>(idle.size()) != channels || primary < 0 || primary >= channels)
    throw std::invalid_argument("channel view does not match u");
  int best = 1;
  for (int level = 2; level <= u; ++level) {
    const int width = 1 << (level - 1);
    const int lo = primary / width * width;
    bool free = true;
    for (int ch = lo; ch < lo + width && free; ++ch) free = ch == primary || idle[ch];
    if (!free) break;
    best = level;
  }
  return best;
}

int threshold_decide(double snr, std::span<const double> thresholds, int u) {
  int level = 1;
  for (double cut : thresholds)
    if (cut <= snr) ++level;
  return std::min(level, u);
}

int widest_common_decide(std::span<const int> capabilities) {
  if (capabilities.empty()) throw std::domain_error("widest-common decision over an empty group");
  return *std::min_element(capabilities.begin(), capabilities.end());
}

}  // namespace ibac::baselines
