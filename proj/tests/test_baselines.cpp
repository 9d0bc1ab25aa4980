#include "ibac/baselines.hpp"

#include <doctest.h>

#include <array>
#include <vector>

using namespace ibac::baselines;

TEST_SUITE("baselines") {

TEST_CASE("general_decide examples") {
  std::array<bool, 8> idle;
  idle.fill(true);
  CHECK(general_decide(idle, 0, 4) == 4);

  idle[1] = false;  // secondary 20 MHz busy
  CHECK(general_decide(idle, 0, 4) == 1);

  idle.fill(true);
  idle[6] = false;  // upper 80 MHz partly busy
  CHECK(general_decide(idle, 0, 4) == 3);
  CHECK(general_decide(idle, 5, 4) == 2);

  const std::array<bool, 1> one{false};  // the primary itself is taken as won
  CHECK(general_decide(one, 0, 1) == 1);

  CHECK_THROWS_AS(general_decide(std::span<const bool>(idle.data(), 4), 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(general_decide(idle, 8, 4), std::invalid_argument);
}

TEST_CASE("threshold_decide examples") {
  const auto& cuts = default_thresholds();
  CHECK(threshold_decide(25.0, cuts, 4) == 1);
  CHECK(threshold_decide(40.0, cuts, 4) == 3);
  CHECK(threshold_decide(60.0, cuts, 4) == 4);
  CHECK(threshold_decide(30.0, cuts, 4) == 2);
  CHECK(threshold_decide(60.0, cuts, 2) == 2);
}

TEST_CASE("threshold_decide is monotone in snr") {
  int last = 0;
  for (double snr = 0.0; snr <= 70.0; snr += 0.25) {
    const int level = threshold_decide(snr, default_thresholds(), 4);
    CHECK(level >= last);
    last = level;
  }
}

TEST_CASE("widest_common_decide examples") {
  CHECK(widest_common_decide(std::vector<int>{4, 4, 4}) == 4);
  CHECK(widest_common_decide(std::vector<int>{4, 2, 3}) == 2);
  CHECK(widest_common_decide(std::vector<int>{1}) == 1);
  CHECK_THROWS_AS(widest_common_decide(std::vector<int>{}), std::domain_error);
}

TEST_CASE("policy spec validation") {
  CHECK_NOTHROW(PolicySpec::threshold({30, 38, 45}).validate(4));
  CHECK_THROWS_AS(PolicySpec::threshold({30, 38}).validate(4), std::invalid_argument);
  CHECK_THROWS_AS(PolicySpec::threshold({30, 30, 45}).validate(4), std::invalid_argument);
  CHECK_THROWS_AS(PolicySpec::widest_common({45, 38, 30}).validate(4), std::invalid_argument);
  CHECK_THROWS_AS(PolicySpec::fixed(0).validate(4), std::invalid_argument);
  CHECK_THROWS_AS(PolicySpec::fixed(5).validate(4), std::invalid_argument);
  CHECK_NOTHROW(PolicySpec::fixed(4).validate(4));
}

TEST_CASE("labels mark proxies and round-trip") {
  for (const auto& spec : {PolicySpec::ibac(), PolicySpec::general(), PolicySpec::fixed(3),
                           PolicySpec::threshold({30, 38, 45}), PolicySpec::widest_common({28, 36.5, 44})}) {
    const auto back = parse_policy(spec.label());
    CHECK(back.kind == spec.kind);
    CHECK(back.thresholds == spec.thresholds);
    CHECK(back.label() == spec.label());
  }
  CHECK(PolicySpec::threshold({30, 38, 45}).label().find("proxy") != std::string::npos);
  CHECK(PolicySpec::widest_common({30, 38, 45}).label().find("proxy") != std::string::npos);
  CHECK_THROWS_AS(parse_policy("Magic"), std::invalid_argument);
}

TEST_CASE("baselines are pure") {
  const std::vector<int> caps{3, 2, 4};
  for (int i = 0; i < 3; ++i) {
    CHECK(widest_common_decide(caps) == 2);
    CHECK(threshold_decide(39.0, default_thresholds(), 4) == 3);
  }
}

}  // TEST_SUITE
