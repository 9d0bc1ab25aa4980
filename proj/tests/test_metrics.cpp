#include "ibac/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace ibac::xp;

TEST_SUITE("metrics") {

TEST_CASE("jain index examples") {
  CHECK(*jain_index(std::vector<double>{3, 3, 3, 3}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(*jain_index(std::vector<double>{0, 0, 5, 0}) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(*jain_index(std::vector<double>{1, 2, 3}) == doctest::Approx(6.0 / 7.0).epsilon(1e-15));
  CHECK_FALSE(jain_index(std::vector<double>{0, 0}).has_value());
  CHECK_THROWS_AS(jain_index(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(jain_index(std::vector<double>{1, -1}), std::invalid_argument);
}

TEST_CASE("jain index bounds on random inputs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> xs(1 + rng() % 30);
    for (auto& x : xs) x = u(rng);
    const double j = *jain_index(xs);
    CHECK(j >= 1.0 / xs.size() - 1e-12);
    CHECK(j <= 1.0 + 1e-12);
  }
}

TEST_CASE("packet loss rate") {
  CHECK(packet_loss_rate(0, 0) == 0.0);
  CHECK(packet_loss_rate(10, 10) == 0.0);
  CHECK(packet_loss_rate(8, 6) == 25.0);
  CHECK(packet_loss_rate(3, 0) == 100.0);
}

TEST_CASE("convergence of a constant series is immediate") {
  const std::vector<double> flat(40, 12.0);
  CHECK(*convergence_latency(flat, ConvergenceParams{5, 20, 25}) == 0.0);
}

TEST_CASE("convergence detects a level shift") {
  std::vector<double> s(60);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i < 16 ? 50.0 : 10.0;  // step at 80 ms
  const auto t = convergence_latency(s, ConvergenceParams{5, 20, 25});
  REQUIRE(t.has_value());
  CHECK(std::abs(*t - 80.0) <= 5.0);
}

TEST_CASE("default parameters resolve a level shift on the default bin spacing") {
  const ConvergenceParams params;
  std::vector<double> s(50);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i < 4 ? 50.0 : 10.0;  // 20 ms bins, step at 80 ms
  const auto t = convergence_latency(s, params);
  REQUIRE(t.has_value());
  CHECK(std::abs(*t - 80.0) <= params.step_ms);
}

TEST_CASE("a noisy tail never converges") {
  std::vector<double> s(60);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i % 2 ? 80.0 : 0.0;
  CHECK_FALSE(convergence_latency(s, ConvergenceParams{5, 20, 25}).has_value());
  // Calm start, noisy end: still absent.
  for (std::size_t i = 0; i < 40; ++i) s[i] = 5.0;
  CHECK_FALSE(convergence_latency(s, ConvergenceParams{5, 20, 25}).has_value());
}

TEST_CASE("convergence input checks") {
  CHECK_THROWS_AS(convergence_latency(std::vector<double>(7, 1.0), ConvergenceParams{5, 20, 25}),
                  InsufficientData);
  CHECK_NOTHROW(convergence_latency(std::vector<double>(8, 1.0), ConvergenceParams{5, 20, 25}));
  CHECK_THROWS_AS(convergence_latency(std::vector<double>(8, 1.0), ConvergenceParams{5, 2, 25}),
                  std::invalid_argument);
}

}  // TEST_SUITE
