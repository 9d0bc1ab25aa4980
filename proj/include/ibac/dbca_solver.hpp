#pragma once

#include "ibac/dbca_markov.hpp"

#include <stdexcept>
#include <string>

namespace ibac::model {

struct SolverOptions {
  double tolerance = 1e-10;
  double damping = 0.5;  // lambda in nu <- (1 - lambda) nu + lambda f(nu)
  int max_iterations = 500;
};

struct ModelSolution {
  double upsilon_c = 0.0;
  double nu = 0.0;
  double b00 = 0.0;
  double p_one = 0.0;
  double p_s = 0.0;
  double throughput = 0.0;
  double p = 0.0;      // closed-loop channel busy probability
  double gamma = 0.0;  // closed-loop access probability
  int iterations = 0;
  double residual = 0.0;
  bool upsilon_clamped = false;
  bool used_bisection = false;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// One evaluation of the closed loop: given nu, set p = 1 - (1 - nu)^n and
/// gamma = nu, evaluate the bonded collision probability, and map it back to
/// a transmission probability.
struct ClosureStep {
  double nu_next;
  double upsilon_c;
  bool clamped;
};
ClosureStep closure_step(const ModelParams<double>& params, double nu);

/// Self-consistent (p, gamma, upsilon_c, nu) for the given station count,
/// backoff parameters and kappa. params.p and params.gamma are ignored.
/// The closure can have several roots; this returns the largest, the branch
/// that meets the collision-free solution 2/(W+1) at kappa = 0.
ModelSolution solve_fixed_point(const ModelParams<double>& params, const MacTiming<double>& timing,
                                const SolverOptions& options = {});

/// Smallest kappa in [0, 1] whose fixed point reaches the target conditional
/// collision probability; 1 when the target is beyond reach.
double calibrate_kappa(ModelParams<double> params, const MacTiming<double>& timing,
                       double target_upsilon, const SolverOptions& options = {});

/// Per-channel collision fraction observed at level 1 rescaled to kappa.
double kappa_from_level1_collisions(double collision_fraction, int u);

}  // namespace ibac::model
