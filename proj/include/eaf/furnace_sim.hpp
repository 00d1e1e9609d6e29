#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "eaf/protection.hpp"
#include "eaf/telemetry.hpp"

namespace eaf {

// Synthetic single-phase furnace circuit. The source EMF drives the current
// through the source reactance in series with the furnace branch
// (X, R_f, R_a); E_2 is measured across the furnace branch. All values are
// synthetic; they give hundreds of volts at 40 kA.
struct PlantConfig {
  double i_set = 40'000.0;         // A, current at nominal arc length
  double reactance_x = 0.004;      // ohm
  double x_source = 0.001;         // ohm, transformer/network reactance
  double r_furnace = 0.0005;       // ohm
  double arc_gain = 0.007;         // ohm per unit arc length
  double nominal_length = 1.0;     // arc length units
  double noise_sigma = 400.0;      // A, arc-current fluctuation
  double pressure_noise = 0.005;   // fraction of normal pressure
  double max_lift_v = 0.5;         // arc length units per second at |velocity| = 1
  double melt_rate = 0.002;        // charge surface drop, units per second
  double collapse_slide_frac = 0.5;  // precursor slide as a fraction of magnitude
  std::uint64_t seed = 1;

  void validate() const;
  double source_emf() const;
};

enum class EventKind { Collapse, NonMetal, OverTransient };

std::string_view to_string(EventKind kind);

// Collapse: `time` is the instant the charge strikes; arc length then drops
// by the fraction `magnitude`. The charge slides in during the preceding
// `duration` seconds.
// NonMetal: pressure held at `magnitude` (fraction of normal) on [time, time+duration).
// OverTransient: `magnitude` amperes added to the arc current on [time, time+duration).
struct ScriptedEvent {
  double time = 0.0;
  EventKind kind = EventKind::Collapse;
  double magnitude = 0.0;
  double duration = 0.0;
  std::optional<std::size_t> phase;  // 0-based; none = all phases

  bool applies_to(std::size_t k) const { return !phase || *phase == k; }
};

struct EventScript {
  std::vector<ScriptedEvent> events;

  void validate() const;
};

// Lines: `time kind magnitude duration [phase]`, phase 1-based. '#' starts a
// comment. Errors name the offending line.
EventScript parse_event_script(std::istream& in);
void write_event_script(std::ostream& out, const EventScript& script);

struct PhaseReading {
  double ia = 0.0;
  double e2 = 0.0;
  double pressure = 1.0;
  double r_arc = 0.0;  // ground truth, not part of telemetry
  double arc_length = 0.0;
};

class PhasePlant {
 public:
  PhasePlant(const PlantConfig& cfg, std::vector<ScriptedEvent> events, std::uint64_t seed);

  // Moves the electrode for dt at the commanded velocity, then measures at now + dt.
  PhaseReading step(double velocity, double dt);
  PhaseReading measure();

  double now() const { return now_; }
  double electrode_position() const { return position_; }
  double charge_level() const { return charge_; }

 private:
  void apply_discrete_events();
  double slide_offset() const;

  PlantConfig cfg_;
  std::vector<ScriptedEvent> events_;
  std::vector<bool> struck_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> unit_noise_{0.0, 1.0};
  double emf_;
  double now_ = 0.0;
  std::int64_t ticks_ = 0;
  double position_;
  double charge_ = 0.0;
};

// Three independent phase plants.
class Furnace {
 public:
  Furnace(const PlantConfig& cfg, const EventScript& script);

  TelemetrySample measure();
  TelemetrySample step(const std::array<double, kPhases>& velocity, double dt);

  const PhasePlant& phase(std::size_t k) const { return plants_.at(k); }
  const std::array<PhaseReading, kPhases>& last_readings() const { return last_; }

 private:
  TelemetrySample pack(double t);

  std::vector<PhasePlant> plants_;
  std::array<PhaseReading, kPhases> last_{};
};

}  // namespace eaf
