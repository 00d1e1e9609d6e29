#include "eaf/furnace_sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "eaf/csv.hpp"
#include "eaf/error.hpp"

namespace eaf {

namespace {

constexpr double kTimeEps = 1e-9;

}  // namespace

void PlantConfig::validate() const {
  const double positive[] = {i_set,      reactance_x, x_source,       r_furnace,
                             arc_gain,   nominal_length, max_lift_v};
  for (double v : positive) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidConfig, "plant: physical parameters must be finite and > 0");
    }
  }
  for (double v : {noise_sigma, pressure_noise, melt_rate, collapse_slide_frac}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidConfig, "plant: noise, melt and slide terms must be >= 0");
    }
  }
}

double PlantConfig::source_emf() const {
  const double r = arc_gain * nominal_length + r_furnace;
  return i_set * std::hypot(reactance_x + x_source, r);
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Collapse: return "Collapse";
    case EventKind::NonMetal: return "NonMetal";
    case EventKind::OverTransient: return "OverTransient";
  }
  return "?";
}

void EventScript::validate() const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (!std::isfinite(e.time) || !std::isfinite(e.magnitude) || !std::isfinite(e.duration)) {
      throw Error(ErrorKind::NonFinite, fmt::format("event {}: non-finite field", i));
    }
    if (!(e.duration > 0.0)) {
      throw Error(ErrorKind::InvalidConfig, fmt::format("event {}: duration must be > 0", i));
    }
    if (i > 0 && e.time < events[i - 1].time) {
      throw Error(ErrorKind::InvalidConfig, fmt::format("event {}: times must not decrease", i));
    }
    if (e.phase && *e.phase >= kPhases) {
      throw Error(ErrorKind::InvalidConfig, fmt::format("event {}: phase out of range", i));
    }
  }
}

EventScript parse_event_script(std::istream& in) {
  EventScript script;
  std::string line;
  std::size_t line_no = 0;
  while (csv::next_line(in, line, line_no)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::vector<std::string_view> tok;
    for (auto t : csv::split(line, ' ')) {
      if (!t.empty()) tok.push_back(t);
    }
    if (tok.empty()) continue;
    if (tok.size() != 4 && tok.size() != 5) {
      throw Error(ErrorKind::Parse,
                  fmt::format("line {}: expected 'time kind magnitude duration [phase]'", line_no));
    }
    ScriptedEvent e;
    const auto time = csv::parse_double(tok[0]);
    const auto mag = csv::parse_double(tok[2]);
    const auto dur = csv::parse_double(tok[3]);
    if (!time || !mag || !dur) {
      throw Error(ErrorKind::Parse, fmt::format("line {}: malformed number", line_no));
    }
    if (tok[1] == "Collapse") {
      e.kind = EventKind::Collapse;
    } else if (tok[1] == "NonMetal") {
      e.kind = EventKind::NonMetal;
    } else if (tok[1] == "OverTransient") {
      e.kind = EventKind::OverTransient;
    } else {
      throw Error(ErrorKind::Parse, fmt::format("line {}: unknown event kind '{}'", line_no, tok[1]));
    }
    e.time = *time;
    e.magnitude = *mag;
    e.duration = *dur;
    if (tok.size() == 5) {
      const auto phase = csv::parse_int(tok[4]);
      if (!phase || *phase < 1 || *phase > static_cast<long long>(kPhases)) {
        throw Error(ErrorKind::Parse, fmt::format("line {}: phase must be 1..3", line_no));
      }
      e.phase = static_cast<std::size_t>(*phase - 1);
    }
    script.events.push_back(e);
    try {
      script.validate();
    } catch (const Error& err) {
      throw Error(ErrorKind::Parse, fmt::format("line {}: {}", line_no, err.what()));
    }
  }
  return script;
}

void write_event_script(std::ostream& out, const EventScript& script) {
  for (const auto& e : script.events) {
    out << csv::num(e.time) << ' ' << to_string(e.kind) << ' ' << csv::num(e.magnitude) << ' '
        << csv::num(e.duration);
    if (e.phase) out << ' ' << (*e.phase + 1);
    out << '\n';
  }
}

PhasePlant::PhasePlant(const PlantConfig& cfg, std::vector<ScriptedEvent> events,
                       std::uint64_t seed)
    : cfg_(cfg),
      events_(std::move(events)),
      struck_(events_.size(), false),
      rng_(seed),
      emf_(cfg.source_emf()),
      position_(cfg.nominal_length) {
  cfg_.validate();
}

double PhasePlant::slide_offset() const {
  double offset = 0.0;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto& e = events_[i];
    if (e.kind != EventKind::Collapse || struck_[i]) continue;
    const double start = e.time - e.duration;
    if (now_ + kTimeEps < start) continue;
    const double s = std::clamp((now_ - start) / e.duration, 0.0, 1.0);
    offset += cfg_.collapse_slide_frac * e.magnitude * cfg_.nominal_length * s * s;
  }
  return offset;
}

void PhasePlant::apply_discrete_events() {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto& e = events_[i];
    if (e.kind != EventKind::Collapse || struck_[i] || now_ + kTimeEps < e.time) continue;
    charge_ += cfg_.collapse_slide_frac * e.magnitude * cfg_.nominal_length;
    const double gap = std::max(position_ - charge_, 0.0);
    charge_ += std::clamp(e.magnitude, 0.0, 1.0) * gap;
    struck_[i] = true;
  }
}

PhaseReading PhasePlant::measure() {
  apply_discrete_events();

  PhaseReading r;
  r.arc_length = std::max(position_ - (charge_ + slide_offset()), 0.0);
  r.r_arc = cfg_.arc_gain * r.arc_length;
  const double r_total = r.r_arc + cfg_.r_furnace;

  double surge = 0.0;
  bool nonmetal = false;
  double nonmetal_level = 1.0;
  for (const auto& e : events_) {
    const bool active = now_ + kTimeEps >= e.time && now_ + kTimeEps < e.time + e.duration;
    if (!active) continue;
    if (e.kind == EventKind::OverTransient) surge += e.magnitude;
    if (e.kind == EventKind::NonMetal) {
      nonmetal = true;
      nonmetal_level = std::min(nonmetal_level, e.magnitude);
    }
  }

  // Draw both noise terms every tick so the stream stays aligned.
  const double i_noise = cfg_.noise_sigma * unit_noise_(rng_);
  const double p_noise = cfg_.pressure_noise * unit_noise_(rng_);

  const double i_circuit = emf_ / std::hypot(cfg_.reactance_x + cfg_.x_source, r_total);
  r.ia = std::max(0.0, i_circuit + surge + i_noise);
  r.e2 = r.ia * std::hypot(cfg_.reactance_x, r_total);
  r.pressure = std::max(0.0, nonmetal ? nonmetal_level : 1.0 + p_noise);
  return r;
}

PhaseReading PhasePlant::step(double velocity, double dt) {
  position_ += std::clamp(velocity, -1.0, 1.0) * cfg_.max_lift_v * dt;
  charge_ -= cfg_.melt_rate * dt;
  ++ticks_;
  now_ = std::round(static_cast<double>(ticks_) * dt * 1e9) / 1e9;
  return measure();
}

Furnace::Furnace(const PlantConfig& cfg, const EventScript& script) {
  script.validate();
  for (std::size_t k = 0; k < kPhases; ++k) {
    std::vector<ScriptedEvent> mine;
    for (const auto& e : script.events) {
      if (e.applies_to(k)) mine.push_back(e);
    }
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(cfg.seed >> 32), static_cast<std::uint32_t>(k)};
    std::uint32_t words[2];
    seq.generate(std::begin(words), std::end(words));
    const auto phase_seed = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    plants_.emplace_back(cfg, std::move(mine), phase_seed);
  }
}

TelemetrySample Furnace::pack(double t) {
  TelemetrySample s;
  s.t = t;
  for (std::size_t k = 0; k < kPhases; ++k) {
    s.ia[k] = last_[k].ia;
    s.e2[k] = last_[k].e2;
    s.pressure[k] = last_[k].pressure;
  }
  return s;
}

TelemetrySample Furnace::measure() {
  for (std::size_t k = 0; k < kPhases; ++k) last_[k] = plants_[k].measure();
  return pack(plants_[0].now());
}

TelemetrySample Furnace::step(const std::array<double, kPhases>& velocity, double dt) {
  for (std::size_t k = 0; k < kPhases; ++k) last_[k] = plants_[k].step(velocity[k], dt);
  return pack(plants_[0].now());
}

}  // namespace eaf
