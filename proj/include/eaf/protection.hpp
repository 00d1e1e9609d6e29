#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "eaf/protection_config.hpp"

namespace eaf {

enum class CommandSource {
  DangerLoop,
  OverLoop,
  OverSustained,
  NonMetal,
  LowVoltCollapse,
  PredictedCollapse,
  HeuristicCollapse,
  Regulator,
};

inline constexpr std::size_t kSourceCount = 8;

std::string_view to_string(CommandSource source);
std::optional<CommandSource> parse_source(std::string_view name);

// Arbitration rank; larger wins.
int priority(CommandSource source);

// Electrode lift velocity as a fraction of maximum: +1 lifts fastest, -1
// lowers fastest.
struct ElectrodeCommand {
  double velocity = 0.0;
  CommandSource source = CommandSource::Regulator;
  std::optional<double> latch_until;

  bool operator==(const ElectrodeCommand&) const = default;
};

// Hold-time state carried between steps by one phase's loops.
struct LoopState {
  double over_timer_s = 0.0;
  double pressure_timer_s = 0.0;
  std::optional<double> collapse_latch_until;

  bool operator==(const LoopState&) const = default;
};

// Absorbs the rounding of summed sample periods when comparing against a
// hold time (15 x 0.1 s must not exceed 1.5 s).
inline constexpr double kHoldEpsilonS = 1e-9;

template <typename T>
struct Evaluated {
  std::optional<ElectrodeCommand> command;
  T state;
};

// Loop 1: dangerous current.
std::optional<ElectrodeCommand> eval_danger(double ia, const ProtectionConfig& cfg);

// Loop 2: over current, escalating to full lift once sustained.
Evaluated<LoopState> eval_over(double ia, LoopState state, const ProtectionConfig& cfg);

// Loop 3: non-metal contact detected by low cylinder pressure.
Evaluated<LoopState> eval_nonmetal(double pressure, LoopState state, const ProtectionConfig& cfg);

// Loop 4: charge collapse detected by secondary voltage falling toward the
// reactance drop. Latches a full-speed lift for collapse_lift_s.
Evaluated<LoopState> eval_lowvolt(double e2, double ia, double now, LoopState state,
                                  const ProtectionConfig& cfg);

ElectrodeCommand arbitrate(std::span<const ElectrodeCommand> commands,
                           const ElectrodeCommand& regulator);

}  // namespace eaf
