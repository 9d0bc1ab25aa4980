#include "ibac/dbca_solver.hpp"

#include "mc_oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace ibac::model;

namespace {

ModelParams<double> make(int n, int W, int m, int u, double kappa) {
  ModelParams<double> p;
  p.n = n;
  p.W = W;
  p.m = m;
  p.u = u;
  p.kappa = kappa;
  return p;
}

// Largest root of g(nu) = f(nu) - nu: a fine downward scan from 2/(W+1)
// brackets it, plain bisection refines it.
double bisection_oracle(const ModelParams<double>& base) {
  auto f = [&](double nu) {
    ModelParams<double> q = base;
    q.gamma = nu;
    q.p = 1.0 - std::pow(1.0 - nu, q.n);
    double upsilon = 0.0;
    if (q.n > 1 && idle_then_busy_prob(q) > 0.0) upsilon = owrp_collision_prob(q);
    return transmission_prob(upsilon, q.W, q.m);
  };
  const double top = 2.0 / (base.W + 1.0);
  double lo = 0.0, hi = top;
  for (int k = 99'999; k > 0; --k) {
    const double x = top * k / 100'000.0;
    if (f(x) - x > 0.0) {
      lo = x;
      break;
    }
    hi = x;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) - mid > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double throughput_at(const ModelParams<double>& p, double nu) {
  return normalized_throughput(success_probs(nu, p.n), MacTiming<double>{});
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("single station reduces to the collision-free window") {
  const auto s = solve_fixed_point(make(1, 16, 3, 4, 0.0), MacTiming<double>{});
  CHECK(std::abs(s.nu - 2.0 / 17.0) < 1e-12);
  CHECK(s.upsilon_c == 0.0);
  CHECK(std::abs(s.p_s - 1.0) < 1e-15);
}

TEST_CASE("Bianchi reduction at kappa = 0") {
  for (int W : {8, 16, 32, 64, 128})
    for (int m = 0; m <= 6; ++m)
      for (int n : {1, 2, 5, 10, 30}) {
        const auto s = solve_fixed_point(make(n, W, m, 4, 0.0), MacTiming<double>{});
        CHECK(std::abs(s.nu - 2.0 / (W + 1.0)) < 1e-12);
      }
}

TEST_CASE("fixed point matches the bisection oracle") {
  const auto p5 = make(5, 16, 3, 4, 0.5);
  const auto s5 = solve_fixed_point(p5, MacTiming<double>{});
  CHECK(std::abs(closure_step(p5, s5.nu).nu_next - s5.nu) < 1e-10);
  CHECK(s5.residual < 1e-10);
  CHECK(std::abs(s5.nu - bisection_oracle(p5)) < 1e-9);
  // Frozen from the oracle: the only root is the saturated branch, 2/(1 + W 2^m).
  CHECK(std::abs(bisection_oracle(p5) - 2.0 / 129.0) < 1e-12);
  CHECK(s5.upsilon_c == 1.0);
  CHECK(s5.upsilon_clamped);

  const auto p30 = make(30, 16, 6, 4, 0.8);
  const auto s30 = solve_fixed_point(p30, MacTiming<double>{});
  CHECK(std::abs(s30.nu - bisection_oracle(p30)) < 1e-9);
  CHECK(std::abs(bisection_oracle(p30) - 0.11737711182113725) < 1e-10);
  // With many stations r grows and the collision term shrinks, so this
  // solution sits above the n = 5 one rather than below it.
  CHECK(s30.nu > s5.nu);
}

TEST_CASE("throughput against kappa") {
  for (int n : {2, 5, 10, 20})
    for (int m : {3, 6})
      for (int k = 0; k <= 20; ++k) {
        const auto p = make(n, 16, m, 4, k / 20.0);
        CHECK(std::abs(solve_fixed_point(p, MacTiming<double>{}).nu - bisection_oracle(p)) < 1e-9);
      }
  // Two stations: the jump to the saturated branch only lowers throughput.
  double last = 2.0;
  for (int k = 0; k <= 100; ++k) {
    const double t = solve_fixed_point(make(2, 16, 6, 4, k / 100.0), MacTiming<double>{}).throughput;
    CHECK(t <= last + 1e-8);
    last = t;
  }
  // With many stations nu starts above the throughput optimum, so the extra
  // backoff from bonded collisions raises throughput. Frozen from the oracle.
  const auto at = [](double kappa) {
    const auto p = make(10, 16, 6, 4, kappa);
    return throughput_at(p, bisection_oracle(p));
  };
  CHECK(at(1.0) > at(0.0));
  CHECK(std::abs(at(0.0) - solve_fixed_point(make(10, 16, 6, 4, 0.0), MacTiming<double>{}).throughput) < 1e-9);
  CHECK(std::abs(at(1.0) - solve_fixed_point(make(10, 16, 6, 4, 1.0), MacTiming<double>{}).throughput) < 1e-9);
}

TEST_CASE("solution fields are probabilities") {
  for (int n : {1, 2, 10, 30})
    for (double kappa : {0.0, 0.3, 0.9}) {
      const auto s = solve_fixed_point(make(n, 16, 6, 4, kappa), MacTiming<double>{});
      for (double v : {s.upsilon_c, s.nu, s.b00, s.p_one, s.p_s, s.throughput, s.p, s.gamma}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      CHECK(std::abs(s.b00 - s.nu * (1.0 - s.upsilon_c)) < 1e-12);
    }
}

TEST_CASE("bisection fallback and solver error") {
  SolverOptions no_iteration;
  no_iteration.max_iterations = 0;
  const auto p = make(5, 16, 3, 4, 0.5);
  const auto s = solve_fixed_point(p, MacTiming<double>{}, no_iteration);
  CHECK(s.used_bisection);
  CHECK(std::abs(s.nu - bisection_oracle(p)) < 1e-9);

  SolverOptions impossible;
  impossible.tolerance = 0.0;
  impossible.max_iterations = 3;
  try {
    solve_fixed_point(p, MacTiming<double>{}, impossible);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.last_residual() >= 0.0);
  }
  SolverOptions bad;
  bad.damping = 0.0;
  CHECK_THROWS_AS(solve_fixed_point(p, MacTiming<double>{}, bad), std::invalid_argument);
}

TEST_CASE("calibrate_kappa inverts the collision probability") {
  const auto base = make(5, 16, 6, 4, 0.0);
  for (double kappa : {0.1, 0.25, 0.4}) {
    auto p = base;
    p.kappa = kappa;
    const double target = solve_fixed_point(p, MacTiming<double>{}).upsilon_c;
    if (target >= 1.0) continue;
    const double fitted = calibrate_kappa(base, MacTiming<double>{}, target);
    CHECK(std::abs(fitted - kappa) < 1e-6);
  }
  CHECK(calibrate_kappa(base, MacTiming<double>{}, 0.0) == 0.0);
  CHECK(calibrate_kappa(base, MacTiming<double>{}, 2.0) == 1.0);
}

TEST_CASE("kappa_from_level1_collisions") {
  CHECK(kappa_from_level1_collisions(0.05, 4) == doctest::Approx(0.4));
  CHECK(kappa_from_level1_collisions(0.5, 4) == 1.0);
  CHECK(kappa_from_level1_collisions(0.0, 4) == 0.0);
}

TEST_CASE("normalized throughput agrees with the chain Monte-Carlo") {
  const auto p = make(5, 16, 3, 4, 0.5);
  const auto s = solve_fixed_point(p, MacTiming<double>{});
  const auto mc = oracle::chain_monte_carlo(5, 16, 3, s.upsilon_c, 2'000'000, MacTiming<double>{}, 7);
  CHECK(std::abs(mc.throughput - s.throughput) / s.throughput < 0.02);
  CHECK(std::abs(mc.tx_per_slot - s.nu) / s.nu < 0.02);
}

}  // TEST_SUITE
