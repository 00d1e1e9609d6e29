#include <cmath>
#include <sstream>

#include "eaf/engine.hpp"
#include "eaf/report.hpp"
#include "eaf/simulation.hpp"
#include "test_support.hpp"

using namespace eaf;

namespace {

TelemetrySample nominal(double t, double ia = 40'000.0) {
  TelemetrySample s;
  s.t = t;
  for (std::size_t k = 0; k < kPhases; ++k) {
    s.ia[k] = ia;
    s.e2[k] = 340.0;
    s.pressure[k] = 1.0;
  }
  return s;
}

std::array<ElectrodeCommand, kPhases> idle() { return {}; }

// One wide rule that always predicts a rising deviation with full confidence.
RbfNetwork alarmist(std::size_t n) {
  RbfRule r;
  r.theta1.assign(n, 0.0);
  r.sigma1.assign(n, 1e3);
  r.theta2.assign(n, 0.0);
  r.sigma2.assign(n, 1e3);
  r.a = {1.0, 1.0, -1.0};
  RbfNetwork net;
  net.n = n;
  net.rules = {r};
  return net;
}

std::string replay_bytes(const ReplayResult& r) {
  std::ostringstream out;
  write_events_csv(out, r.events);
  write_curve_csv(out, r.curve);
  out << summary_json(r.summary).dump();
  return out.str();
}

EventScript script_of(const std::string& text) {
  std::istringstream in(text);
  return parse_event_script(in);
}

}  // namespace

TEST_CASE("nominal sample without a model defers to the regulator") {
  Engine engine(EngineConfig{});
  std::array<ElectrodeCommand, kPhases> reg{};
  reg[1].velocity = 0.25;
  const auto recs = engine.tick(nominal(0.0), reg);
  for (std::size_t k = 0; k < kPhases; ++k) {
    CHECK(recs[k].phase == k);
    CHECK(recs[k].command.source == CommandSource::Regulator);
    CHECK(recs[k].fired.empty());
    CHECK_FALSE(recs[k].assessment);
  }
  CHECK(recs[1].command.velocity == 0.25);
}

TEST_CASE("dangerous current wins arbitration on every phase") {
  Engine engine(EngineConfig{});
  auto s = nominal(0.0, 40'000.0 + 16'000.0);
  s.pressure = {0.5, 0.5, 0.5};
  std::array<ElectrodeCommand, kPhases> reg{};
  reg.fill({-1.0, CommandSource::Regulator, {}});
  const auto recs = engine.tick(s, reg);
  for (const auto& r : recs) {
    CHECK(r.command.source == CommandSource::DangerLoop);
    CHECK(r.command.velocity == 1.0);
    CHECK(r.fired_source(CommandSource::OverLoop));
  }
}

TEST_CASE("sample validation errors propagate") {
  Engine engine(EngineConfig{});
  (void)engine.tick(nominal(1.0), idle());
  CHECK_ERROR_KIND(engine.tick(nominal(0.5), idle()), ErrorKind::TimeRegression);
  auto bad = nominal(2.0);
  bad.pressure[2] = -1.0;
  CHECK_THROWS_AS(engine.tick(bad, idle()), Error);
}

TEST_CASE("engine config consistency") {
  EngineConfig cfg;
  cfg.predictor.lags = 3;
  CHECK_ERROR_KIND(cfg.validate(), ErrorKind::DimensionMismatch);
  cfg = EngineConfig{};
  cfg.model = alarmist(3);
  CHECK_ERROR_KIND(cfg.validate(), ErrorKind::DimensionMismatch);
  cfg.model = alarmist(5);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("every mechanism fires when its condition is forced") {
  EngineConfig cfg;
  cfg.model = alarmist(5);
  Engine engine(cfg);
  std::array<bool, kSourceCount> seen{};
  // A geometrically accelerating current trips the heuristic and the predictor;
  // the pressure stays low long enough for the non-metal hold; the last
  // samples carry both a dangerous current and a collapsed voltage.
  for (int i = 0; i < 20; ++i) {
    auto s = nominal(0.1 * i, 30'000.0 + 500.0 * std::pow(1.6, i));
    s.pressure = {0.5, 0.5, 0.5};
    for (std::size_t k = 0; k < kPhases; ++k) s.e2[k] = 1.1 * s.ia[k] * cfg.protection.reactance_x;
    for (const auto& r : engine.tick(s, idle())) {
      for (auto src : r.fired) seen[static_cast<std::size_t>(src)] = true;
    }
  }
  for (auto src : {CommandSource::DangerLoop, CommandSource::OverLoop,
                   CommandSource::OverSustained, CommandSource::NonMetal,
                   CommandSource::LowVoltCollapse, CommandSource::PredictedCollapse,
                   CommandSource::HeuristicCollapse}) {
    CHECK_MESSAGE(seen[static_cast<std::size_t>(src)], to_string(src));
  }
}

TEST_CASE("predictor waits for n+1 samples and no model means no assessment") {
  EngineConfig with;
  with.model = alarmist(5);
  Engine a(with);
  Engine b(EngineConfig{});
  for (int i = 0; i < 10; ++i) {
    const auto s = nominal(0.1 * i, 40'000.0 + 100.0 * i);
    const auto ra = a.tick(s, idle());
    const auto rb = b.tick(s, idle());
    CHECK(ra[0].assessment.has_value() == (i >= 5));
    CHECK_FALSE(rb[0].assessment);
  }
}

TEST_CASE("low-voltage loop fires within one tick on a simulated collapse") {
  SimulationConfig cfg;
  const auto script = script_of("20 Collapse 1 1.5 1\n45 Collapse 0.9 1 3\n");
  const auto sim = generate_dataset(cfg, script, 60.0);
  const auto& pc = cfg.engine.protection;

  Engine engine(cfg.engine);
  std::array<PiState, kPhases> pi{};
  std::size_t crossings = 0;
  std::array<bool, kPhases> prev_below{};
  std::array<int, kPhases> pending{-1, -1, -1};
  for (std::size_t i = 0; i < sim.telemetry.size(); ++i) {
    const auto& s = sim.telemetry[i];
    std::array<ElectrodeCommand, kPhases> reg;
    for (std::size_t k = 0; k < kPhases; ++k) {
      reg[k] = pi_regulator(s.ia[k] - pc.i_set, pi[k], cfg.regulator, pc.dt_s);
    }
    const auto recs = engine.tick(s, reg);
    for (std::size_t k = 0; k < kPhases; ++k) {
      const bool below = s.ia[k] >= pc.arc_on_min &&
                         s.e2[k] <= pc.lowvolt_factor * s.ia[k] * pc.reactance_x;
      if (below && !prev_below[k]) {
        ++crossings;
        pending[k] = static_cast<int>(i);
      }
      prev_below[k] = below;
      if (pending[k] >= 0 && recs[k].fired_source(CommandSource::LowVoltCollapse)) {
        CHECK(static_cast<int>(i) - pending[k] <= 1);
        pending[k] = -1;
      }
    }
  }
  CHECK(crossings >= 2);
  for (int p : pending) CHECK(p == -1);
}

TEST_CASE("replay of an empty stream is empty") {
  Engine engine(EngineConfig{});
  const auto r = run_replay(engine, {}, PiGains{});
  CHECK(r.events.empty());
  CHECK(r.curve.empty());
  CHECK(r.summary.ticks == 0);
  CHECK(r.summary.total_alerts == 0);
  for (auto c : r.summary.fired) CHECK(c == 0);
}

TEST_CASE("replay is deterministic and commands stay bounded") {
  SimulationConfig cfg;
  const auto script = script_of(
      "15 Collapse 1 1.5 2\n25 OverTransient 9000 1.5 1\n35 NonMetal 0.85 2 3\n");
  const auto sim = generate_dataset(cfg, script, 50.0);
  EngineConfig ec;
  ec.model = alarmist(5);
  Engine a(ec);
  Engine b(ec);
  const auto ra = run_replay(a, sim.telemetry, cfg.regulator);
  const auto rb = run_replay(b, sim.telemetry, cfg.regulator);
  CHECK(replay_bytes(ra) == replay_bytes(rb));
  CHECK(ra.summary.ticks == sim.telemetry.size());
  CHECK(ra.curve.size() == 3 * (sim.telemetry.size() - 5));
  for (const auto& e : ra.events) CHECK(std::abs(e.velocity) <= 1.0);
  for (const auto& c : ra.curve) {
    CHECK(c.cf >= 0.0);
    CHECK(c.cf <= 1.0);
  }
  std::size_t arbitrated = 0;
  for (auto c : ra.summary.arbitrated) arbitrated += c;
  CHECK(arbitrated == 3 * ra.summary.ticks);
}

TEST_CASE("sustained over-current escalates during replay") {
  SimulationConfig cfg;
  const auto sim = generate_dataset(cfg, script_of("10 OverTransient 15000 3 1\n"), 20.0);
  Engine engine(cfg.engine);
  const auto r = run_replay(engine, sim.telemetry, cfg.regulator);
  CHECK(r.summary.fired[static_cast<std::size_t>(CommandSource::OverSustained)] >= 1);
  CHECK(r.summary.fired[static_cast<std::size_t>(CommandSource::PredictedCollapse)] == 0);
}

TEST_CASE("cluster_alerts") {
  CHECK(cluster_alerts({}, 2.0).empty());
  const auto c = cluster_alerts({10.0, 10.1, 11.5, 30.0, 5.0, 32.5}, 2.0);
  REQUIRE(c.size() == 4);
  CHECK(c[0] == 5.0);
  CHECK(c[1] == 10.0);
  CHECK(c[2] == 30.0);
  CHECK(c[3] == 32.5);
}
