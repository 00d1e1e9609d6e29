#include <array>
#include <random>

#include "eaf/heuristic.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace eaf;

namespace {

HeuristicState state_of(const std::array<double, 5>& d) {
  return HeuristicState::from_derivations({d[0], d[1], d[2], d[3], d[4]});
}

}  // namespace

TEST_CASE("heuristic examples") {
  const ProtectionConfig cfg;
  CHECK_FALSE(heuristic_alert(state_of({3600, 3500, 400, 400, 400}), cfg));
  const auto hit = heuristic_alert(state_of({4000, 3800, 500, 400, 350}), cfg);
  REQUIRE(hit);
  CHECK(hit->velocity == doctest::Approx(0.3));
  CHECK(hit->source == CommandSource::HeuristicCollapse);
  CHECK_FALSE(heuristic_alert(state_of({4000, 3800, 500, 400, 200}), cfg));
}

TEST_CASE("heuristic needs five derivations") {
  const ProtectionConfig cfg;
  CHECK_FALSE(heuristic_alert(HeuristicState::from_derivations({9000, 9000, 301, 301}), cfg));
  CHECK_FALSE(heuristic_alert(HeuristicState{}, cfg));
  CHECK_ERROR_KIND(HeuristicState::from_derivations({1, 2, 3, 4, 5, 6}), ErrorKind::InvalidCount);
}

TEST_CASE("observe keeps the newest derivations first") {
  HeuristicState s;
  s.observe(40'000.0);
  CHECK(s.size() == 0);
  const double currents[] = {40'400.0, 40'900.0, 41'500.0, 45'000.0, 49'500.0, 54'000.0};
  for (double ia : currents) s.observe(ia);
  REQUIRE(s.size() == 5);
  CHECK(s[0] == 4'500.0);
  CHECK(s[1] == 4'500.0);
  CHECK(s[2] == 3'500.0);
  CHECK(s[3] == 600.0);
  CHECK(s[4] == 500.0);
  // 9000 - 4600 = 4400: below the gap.
  CHECK_FALSE(heuristic_alert(s, ProtectionConfig{}));
  s.observe(60'000.0);
  // derivations 6000, 4500, 4500, 3500, 600: 10500 - 8600
  CHECK_FALSE(heuristic_alert(s, ProtectionConfig{}));
}

TEST_CASE("heuristic matches the step transcription on the exhaustive grid") {
  const ProtectionConfig cfg;
  const std::array<double, 6> values{0, 200, 301, 1000, 3000, 4000};
  std::size_t cases = 0;
  std::size_t alerts = 0;
  std::array<std::size_t, 5> idx{};
  for (std::size_t code = 0; code < 7776; ++code) {
    std::size_t c = code;
    std::array<double, 5> d{};
    for (std::size_t i = 0; i < 5; ++i) {
      idx[i] = c % 6;
      c /= 6;
      d[i] = values[idx[i]];
    }
    const bool got = heuristic_alert(state_of(d), cfg).has_value();
    CHECK(got == oracle::heuristic_steps(d));
    alerts += got ? 1 : 0;
    ++cases;
  }
  CHECK(cases == 7776);
  CHECK(alerts > 0);
}

TEST_CASE("property: raising the two newest derivations never clears an alert") {
  const ProtectionConfig cfg;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 6000.0);
  std::uniform_real_distribution<double> bump(0.0, 3000.0);
  int fired = 0;
  for (int i = 0; i < 20'000; ++i) {
    std::array<double, 5> d{u(rng) + 2000.0, u(rng) + 2000.0, u(rng) / 4.0, u(rng) / 4.0, u(rng) / 4.0};
    if (!heuristic_alert(state_of(d), cfg)) continue;
    ++fired;
    d[0] += bump(rng);
    d[1] += bump(rng);
    CHECK(heuristic_alert(state_of(d), cfg));
  }
  CHECK(fired > 100);
}

TEST_CASE("predictive alert examples") {
  const ProtectionConfig cfg;
  const auto hit = predictive_alert({0.0, 0.5, 0.7, -1.0}, cfg);
  REQUIRE(hit);
  CHECK(hit->velocity == doctest::Approx(0.3));
  CHECK(hit->source == CommandSource::PredictedCollapse);
  CHECK_FALSE(predictive_alert({0.0, 0.5, 0.7, 1.0}, cfg));
  CHECK_FALSE(predictive_alert({0.0, 0.5, 0.6, -1.0}, cfg));
  CHECK_FALSE(predictive_alert({0.0, 0.5, 0.9, -0.5}, cfg));
}
