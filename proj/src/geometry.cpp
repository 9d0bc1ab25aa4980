#include "ibac/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace ibac::sim {

void GeometryParams::validate() const {
  if (!(tr_base > 0.0) || !(ir_base > 0.0) || !(cr >= 0.0))
    throw std::invalid_argument("geometry.tr_base, ir_base must be positive and cr non-negative");
  if (!(tr_shrink > 0.0 && tr_shrink <= 1.0))
    throw std::invalid_argument("geometry.tr_shrink must lie in (0, 1]");
  if (!(ir_grow >= 1.0)) throw std::invalid_argument("geometry.ir_grow must be >= 1");
  if (!(pathloss_exponent > 0.0)) throw std::invalid_argument("geometry.pathloss_exponent must be positive");
}

Ranges ranges_for_level(const GeometryParams& geometry, int level) {
  if (level < 1) throw std::domain_error("bonding level must be >= 1");
  return {geometry.tr_base * std::pow(geometry.tr_shrink, level - 1),
          geometry.ir_base * std::pow(geometry.ir_grow, level - 1)};
}

double snr_at(const GeometryParams& geometry, double d) {
  return geometry.snr_ref - 10.0 * geometry.pathloss_exponent * std::log10(std::max(d, 1.0)) -
         geometry.noise_per_20mhz;
}

}  // namespace ibac::sim
