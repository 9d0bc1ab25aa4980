#include "ibac/dbca_solver.hpp"

#include <algorithm>
#include <cmath>

namespace ibac::model {

ClosureStep closure_step(const ModelParams<double>& params, double nu) {
  ModelParams<double> at = params;
  at.gamma = nu;
  at.p = 1.0 - std::pow(1.0 - nu, at.n);
  double upsilon = 0.0;
  bool clamped = false;
  // No other station can become active: no bonded collision either.
  if (at.n > 1) {
    try {
      const auto owrp = owrp_collision(at);
      upsilon = owrp.value;
      clamped = owrp.clamped;
    } catch (const DegenerateDenominator&) {
      upsilon = 0.0;
    }
  }
  return {transmission_prob(upsilon, at.W, at.m), upsilon, clamped};
}

namespace {

ModelSolution finish(const ModelParams<double>& params, const MacTiming<double>& timing, double nu,
                     int iterations, bool bisected) {
  const ClosureStep step = closure_step(params, nu);
  ModelSolution s;
  s.nu = nu;
  s.upsilon_c = step.upsilon_c;
  s.upsilon_clamped = step.clamped;
  s.b00 = nu * (1.0 - step.upsilon_c);
  s.p = 1.0 - std::pow(1.0 - nu, params.n);
  s.gamma = nu;
  const auto probs = success_probs(nu, params.n);
  s.p_one = probs.p_one;
  s.p_s = probs.p_s;
  s.throughput = normalized_throughput(probs, timing);
  s.iterations = iterations;
  s.residual = std::abs(step.nu_next - nu);
  s.used_bisection = bisected;
  return s;
}

}  // namespace

ModelSolution solve_fixed_point(const ModelParams<double>& params, const MacTiming<double>& timing,
                                const SolverOptions& options) {
  validate(params);
  validate(timing);
  if (!(options.damping > 0.0 && options.damping <= 1.0))
    throw std::invalid_argument("SolverOptions.damping must lie in (0, 1]");

  double nu = 2.0 / (params.W + 1.0);
  double residual = 0.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const double next = closure_step(params, nu).nu_next;
    residual = std::abs(next - nu);
    if (residual < options.tolerance) return finish(params, timing, nu, it, false);
    nu = (1.0 - options.damping) * nu + options.damping * next;
  }

  // Every root lies below 2/(W+1), where f peaks. Bracket the largest one by
  // scanning down from there, then bisect.
  auto g = [&](double nu) { return closure_step(params, nu).nu_next - nu; };
  constexpr int kScanSteps = 4096;
  const double top = 2.0 / (params.W + 1.0);
  double hi = top;
  double lo = 0.0;
  for (int k = kScanSteps - 1; k >= 0; --k) {
    const double x = top * k / kScanSteps;
    if (k == 0 || g(x) > 0.0) {
      lo = x;
      break;
    }
    hi = x;
  }
  int it = options.max_iterations;
  while (hi - lo > 1e-17 && it < options.max_iterations + 200) {
    ++it;
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    residual = std::abs(gm);
    if (residual < options.tolerance) return finish(params, timing, mid, it, true);
    if (gm > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  throw SolverError("fixed point did not converge", residual);
}

double calibrate_kappa(ModelParams<double> params, const MacTiming<double>& timing,
                       double target_upsilon, const SolverOptions& options) {
  auto upsilon_at = [&](double kappa) {
    params.kappa = kappa;
    return solve_fixed_point(params, timing, options).upsilon_c;
  };
  if (target_upsilon <= upsilon_at(0.0)) return 0.0;
  if (target_upsilon >= upsilon_at(1.0)) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (upsilon_at(mid) < target_upsilon)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double kappa_from_level1_collisions(double collision_fraction, int u) {
  return std::clamp(collision_fraction * static_cast<double>(1 << (u - 1)), 0.0, 1.0);
}

}  // namespace ibac::model
