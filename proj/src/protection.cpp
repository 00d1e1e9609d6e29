#include "eaf/protection.hpp"

#include <array>

namespace eaf {

namespace {

constexpr std::array<std::string_view, kSourceCount> kSourceNames = {
    "DangerLoop",        "OverLoop",          "OverSustained", "NonMetal",
    "LowVoltCollapse",   "PredictedCollapse", "HeuristicCollapse", "Regulator",
};

}  // namespace

std::string_view to_string(CommandSource source) {
  return kSourceNames[static_cast<std::size_t>(source)];
}

std::optional<CommandSource> parse_source(std::string_view name) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i) {
    if (kSourceNames[i] == name) return static_cast<CommandSource>(i);
  }
  return std::nullopt;
}

int priority(CommandSource source) {
  switch (source) {
    case CommandSource::DangerLoop: return 7;
    case CommandSource::OverSustained: return 6;
    case CommandSource::LowVoltCollapse: return 5;
    case CommandSource::HeuristicCollapse: return 4;
    case CommandSource::PredictedCollapse: return 3;
    case CommandSource::OverLoop: return 2;
    case CommandSource::NonMetal: return 1;
    case CommandSource::Regulator: return 0;
  }
  return 0;
}

std::optional<ElectrodeCommand> eval_danger(double ia, const ProtectionConfig& cfg) {
  if (ia >= cfg.i_danger()) return ElectrodeCommand{1.0, CommandSource::DangerLoop, {}};
  return std::nullopt;
}

Evaluated<LoopState> eval_over(double ia, LoopState state, const ProtectionConfig& cfg) {
  if (ia < cfg.i_over()) {
    state.over_timer_s = 0.0;
    return {std::nullopt, state};
  }
  state.over_timer_s += cfg.dt_s;
  if (state.over_timer_s > cfg.over_hold_s + kHoldEpsilonS) {
    return {ElectrodeCommand{1.0, CommandSource::OverSustained, {}}, state};
  }
  return {ElectrodeCommand{0.5, CommandSource::OverLoop, {}}, state};
}

Evaluated<LoopState> eval_nonmetal(double pressure, LoopState state,
                                   const ProtectionConfig& cfg) {
  if (!(pressure < cfg.pressure_factor)) {
    state.pressure_timer_s = 0.0;
    return {std::nullopt, state};
  }
  state.pressure_timer_s += cfg.dt_s;
  if (state.pressure_timer_s > cfg.pressure_hold_s + kHoldEpsilonS) {
    return {ElectrodeCommand{0.5, CommandSource::NonMetal, {}}, state};
  }
  return {std::nullopt, state};
}

Evaluated<LoopState> eval_lowvolt(double e2, double ia, double now, LoopState state,
                                  const ProtectionConfig& cfg) {
  // Below the arc-on minimum the rule degenerates (0 <= 0 at arc-off).
  const bool armed = ia >= cfg.arc_on_min;
  if (armed && e2 <= cfg.lowvolt_factor * ia * cfg.reactance_x) {
    state.collapse_latch_until = now + cfg.collapse_lift_s;
  }
  if (state.collapse_latch_until) {
    if (now <= *state.collapse_latch_until + kHoldEpsilonS) {
      return {ElectrodeCommand{1.0, CommandSource::LowVoltCollapse, state.collapse_latch_until},
              state};
    }
    state.collapse_latch_until.reset();
  }
  return {std::nullopt, state};
}

ElectrodeCommand arbitrate(std::span<const ElectrodeCommand> commands,
                           const ElectrodeCommand& regulator) {
  ElectrodeCommand best = regulator;
  for (const auto& c : commands) {
    const int pc = priority(c.source);
    const int pb = priority(best.source);
    if (pc > pb || (pc == pb && c.velocity > best.velocity)) best = c;
  }
  return best;
}

}  // namespace eaf
