#include <cmath>
#include <sstream>

#include "eaf/furnace_sim.hpp"
#include "eaf/regulator.hpp"
#include "eaf/simulation.hpp"
#include "test_support.hpp"

using namespace eaf;

namespace {

PlantConfig quiet_plant() {
  PlantConfig p;
  p.noise_sigma = 0.0;
  p.pressure_noise = 0.0;
  p.melt_rate = 0.0;
  return p;
}

EventScript script_of(const std::string& text) {
  std::istringstream in(text);
  return parse_event_script(in);
}

std::string telemetry_bytes(const std::vector<TelemetrySample>& rows) {
  std::ostringstream out;
  write_telemetry_header(out);
  for (const auto& r : rows) write_telemetry_row(out, r);
  return out.str();
}

}  // namespace

TEST_CASE("source EMF puts the nominal current at the setpoint") {
  const auto p = quiet_plant();
  PhasePlant plant(p, {}, 1);
  const auto r = plant.measure();
  CHECK(r.ia == doctest::Approx(p.i_set).epsilon(1e-12));
  CHECK(r.e2 > 300.0);
  CHECK(r.e2 < 400.0);
}

TEST_CASE("zero command without events or noise is an equilibrium") {
  PhasePlant plant(quiet_plant(), {}, 1);
  const double first = plant.measure().ia;
  for (int i = 0; i < 100; ++i) CHECK(plant.step(0.0, 0.1).ia == first);
}

TEST_CASE("lifting the electrode lowers the current") {
  PhasePlant plant(quiet_plant(), {}, 1);
  const double before = plant.measure().ia;
  const double after = plant.step(1.0, 0.1).ia;
  CHECK(after < before);
  CHECK(plant.electrode_position() == doctest::Approx(1.05));
}

TEST_CASE("collapse to zero arc resistance drops E2 to the reactive bound") {
  const auto p = quiet_plant();
  const auto script = script_of("1.0 Collapse 1.0 0.5\n");
  PhasePlant plant(p, script.events, 1);
  PhaseReading r = plant.measure();
  double before_ratio = r.e2 / (r.ia * p.reactance_x);
  CHECK(before_ratio > 1.2);
  for (int i = 0; i < 10; ++i) r = plant.step(0.0, 0.1);
  CHECK(plant.now() == doctest::Approx(1.0));
  CHECK(r.r_arc == 0.0);
  CHECK(r.e2 == doctest::Approx(r.ia * std::hypot(p.reactance_x, p.r_furnace)).epsilon(1e-12));
  CHECK(r.e2 <= 1.2 * r.ia * p.reactance_x);
  CHECK(r.e2 >= r.ia * p.reactance_x);
  CHECK(r.ia > 1.5 * p.i_set);
}

TEST_CASE("collapse precursor raises the current before the strike") {
  const auto p = quiet_plant();
  const auto script = script_of("3.0 Collapse 1.0 1.5\n");
  PhasePlant plant(p, script.events, 1);
  double last = plant.measure().ia;
  for (int i = 1; i <= 29; ++i) {
    const double ia = plant.step(0.0, 0.1).ia;
    if (plant.now() > 1.5 + 1e-9) CHECK(ia > last);
    else CHECK(ia == last);
    last = ia;
  }
  CHECK(last > p.i_set * 1.1);
}

TEST_CASE("non-metal event holds pressure low for its duration") {
  const auto script = script_of("2.0 NonMetal 0.85 2.0\n");
  PhasePlant plant(quiet_plant(), script.events, 1);
  int low = 0;
  double first_low = -1.0;
  (void)plant.measure();
  for (int i = 0; i < 60; ++i) {
    const auto r = plant.step(0.0, 0.1);
    if (r.pressure < 0.9) {
      if (first_low < 0.0) first_low = plant.now();
      CHECK(r.pressure == 0.85);
      ++low;
    }
  }
  CHECK(low == 20);
  CHECK(first_low == doctest::Approx(2.0));
}

TEST_CASE("over-current transient adds its surge") {
  const auto p = quiet_plant();
  const auto script = script_of("0.5 OverTransient 9000 1.0\n");
  PhasePlant plant(p, script.events, 1);
  (void)plant.measure();
  for (int i = 0; i < 5; ++i) plant.step(0.0, 0.1);
  CHECK(plant.measure().ia == doctest::Approx(p.i_set + 9000.0));
  for (int i = 0; i < 10; ++i) plant.step(0.0, 0.1);
  CHECK(plant.measure().ia == doctest::Approx(p.i_set));
}

TEST_CASE("event script parsing") {
  const auto s = script_of("# heat 7\n10 Collapse 1 1.5 2\n\n20.5 NonMetal 0.85 2 # phase all\n");
  REQUIRE(s.events.size() == 2);
  CHECK(s.events[0].phase == std::optional<std::size_t>{1});  // 0-based
  CHECK_FALSE(s.events[1].phase);
  CHECK(s.events[1].kind == EventKind::NonMetal);

  std::ostringstream out;
  write_event_script(out, s);
  const auto back = script_of(out.str());
  CHECK(back.events.size() == 2);
  CHECK(back.events[1].time == 20.5);

  CHECK_ERROR_KIND(script_of("1 Meltdown 1 1\n"), ErrorKind::Parse);
  CHECK_ERROR_KIND(script_of("1 Collapse 1\n"), ErrorKind::Parse);
  CHECK_ERROR_KIND(script_of("1 Collapse 1 0\n"), ErrorKind::Parse);
  CHECK_ERROR_KIND(script_of("5 Collapse 1 1\n4 Collapse 1 1\n"), ErrorKind::Parse);
  CHECK_ERROR_KIND(script_of("5 Collapse 1 1 4\n"), ErrorKind::Parse);
  try {
    script_of("1 Collapse 1 1\n\n2 Collapse x 1\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("pi_regulator examples") {
  const PiGains g;
  PiState s;
  CHECK(pi_regulator(0.0, s, g, 0.1).velocity == 0.0);
  PiState big;
  const auto lift = pi_regulator(50'000.0, big, g, 0.1);
  CHECK(lift.velocity == 1.0);
  CHECK(lift.source == CommandSource::Regulator);
  PiState a;
  PiState b;
  for (double e : {500.0, 1200.0, -300.0, 800.0}) {
    const double up = pi_regulator(e, a, g, 0.1).velocity;
    const double down = pi_regulator(-e, b, g, 0.1).velocity;
    CHECK(up == -down);
  }
}

TEST_CASE("closed loop settles within 5 percent of the setpoint") {
  SimulationConfig cfg;
  const auto result = generate_dataset(cfg, EventScript{}, 300.0);
  REQUIRE(result.telemetry.size() == 3000);
  double worst = 0.0;
  for (const auto& s : result.telemetry) {
    if (s.t < 10.0) continue;
    for (double ia : s.ia) worst = std::max(worst, std::abs(ia - cfg.plant.i_set));
  }
  CHECK(worst < 0.05 * cfg.plant.i_set);
}

TEST_CASE("every emitted sample is electrically consistent") {
  SimulationConfig cfg;
  const auto script = script_of(
      "20 Collapse 1 1.5 1\n40 NonMetal 0.85 2 2\n50 OverTransient 9000 1.5 3\n70 Collapse 0.6 1 2\n");
  const auto result = generate_dataset(cfg, script, 90.0);
  const auto& p = cfg.plant;
  for (std::size_t i = 0; i < result.telemetry.size(); ++i) {
    for (std::size_t k = 0; k < kPhases; ++k) {
      const auto& s = result.telemetry[i];
      const auto& truth = result.truth[i][k];
      const double z = std::hypot(p.reactance_x, truth.r_arc + p.r_furnace);
      CHECK(std::abs(s.e2[k] - s.ia[k] * z) <= 1e-9 * s.e2[k]);
      CHECK(s.e2[k] >= s.ia[k] * p.reactance_x);
    }
  }
}

TEST_CASE("generate_dataset row count and determinism") {
  SimulationConfig cfg;
  const auto script = script_of("30 Collapse 1 1.5 1\n");
  const auto a = generate_dataset(cfg, script, 60.0);
  const auto b = generate_dataset(cfg, script, 60.0);
  CHECK(a.telemetry.size() == 600);
  CHECK(a.labels.size() == 1800);
  CHECK(telemetry_bytes(a.telemetry) == telemetry_bytes(b.telemetry));
  CHECK(a.labels == b.labels);
  cfg.plant.seed = 2;
  const auto c = generate_dataset(cfg, script, 60.0);
  CHECK(telemetry_bytes(a.telemetry) != telemetry_bytes(c.telemetry));
  CHECK(generate_dataset(cfg, script, 0.0).telemetry.empty());
  CHECK_ERROR_KIND(generate_dataset(cfg, script, -1.0), ErrorKind::OutOfRange);
}

TEST_CASE("labels without events are all negative") {
  SimulationConfig cfg;
  const auto r = generate_dataset(cfg, EventScript{}, 30.0);
  for (const auto& l : r.labels) {
    CHECK_FALSE(l.collapse);
    CHECK_FALSE(l.event);
    CHECK(l.cf <= 1.0 / 3.0 + 1e-12);
  }
}

TEST_CASE("collapse at 60 s with a 5 s horizon labels exactly [55, 60]") {
  SimulationConfig cfg;
  cfg.label_horizon_s = 5.0;
  const auto script = script_of("60 Collapse 1 1.5 1\n");
  const auto r = generate_dataset(cfg, script, 90.0);
  double first = -1.0;
  double last = -1.0;
  for (const auto& l : r.labels) {
    if (l.phase != 0) {
      CHECK_FALSE(l.collapse);
      continue;
    }
    if (!l.collapse) continue;
    if (first < 0.0) first = l.t;
    last = l.t;
    if (l.ready) CHECK(l.cf >= 2.0 / 3.0 - 1e-12);
  }
  CHECK(first == doctest::Approx(55.0));
  CHECK(last == doctest::Approx(60.0));
  const auto events = labeled_collapses(r.labels);
  REQUIRE(events.size() == 1);
  CHECK(events[0].t == doctest::Approx(60.0));
  CHECK(events[0].phase == 0);
}

TEST_CASE("every scripted event appears in the label stream") {
  SimulationConfig cfg;
  const auto script = script_of(
      "10 Collapse 1 1.5 1\n20 NonMetal 0.85 2 2\n30 OverTransient 9000 1.5 3\n40 Collapse 0.8 1\n");
  const auto r = generate_dataset(cfg, script, 50.0);
  for (const auto& e : script.events) {
    bool seen = false;
    for (const auto& l : r.labels) {
      if (l.event == e.kind && e.applies_to(l.phase) && std::abs(l.t - e.time) < 1e-6) seen = true;
    }
    CHECK_MESSAGE(seen, to_string(e.kind) << " at " << e.time);
  }
}
