#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "eaf/assessment.hpp"
#include "eaf/heuristic.hpp"
#include "eaf/protection.hpp"
#include "eaf/rbf.hpp"
#include "eaf/regulator.hpp"
#include "eaf/telemetry.hpp"

namespace eaf {

// How error lags map onto network inputs.
struct PredictorConfig {
  std::size_t lags = 5;
  double feature_scale = 1000.0;  // amperes per network input unit
};

struct EngineConfig {
  ProtectionConfig protection;
  LyapunovConfig lyapunov{5};
  PredictorConfig predictor;
  std::optional<RbfNetwork> model;

  // Throws InvalidConfig/DimensionMismatch when sub-configs disagree.
  void validate() const;
};

struct Prediction {
  Outputs y{};
  double mu1_bar = 0.0;
  double mu2_bar = 0.0;
};

struct TickRecord {
  double t = 0.0;
  std::size_t phase = 0;
  ElectrodeCommand command;
  std::optional<Assessment> assessment;
  std::optional<Prediction> prediction;
  bool no_rule_fired = false;  // model loaded but the input fell outside every rule
  std::vector<CommandSource> fired;  // every mechanism that produced a command

  bool fired_source(CommandSource s) const;
};

using TickRecords = std::array<TickRecord, kPhases>;

// Per-phase protection pipeline: histories, the four threshold loops, the
// derivation heuristic and, with a model loaded, the predictive alert.
class Engine {
 public:
  explicit Engine(EngineConfig cfg);

  // `sample` is validated here (stream order included). `regulator` holds the
  // baseline command for each phase.
  TickRecords tick(const TelemetrySample& sample,
                   const std::array<ElectrodeCommand, kPhases>& regulator);

  const EngineConfig& config() const { return cfg_; }
  const PhaseHistory& history(std::size_t phase) const { return phases_.at(phase).history; }
  const LoopState& loop_state(std::size_t phase) const { return phases_.at(phase).loops; }

 private:
  struct PhaseState {
    PhaseHistory history;
    LoopState loops;
    HeuristicState heuristic;
    LyapunovConfig lyapunov;
  };

  TickRecord tick_phase(std::size_t k, const TelemetrySample& sample,
                        const ElectrodeCommand& regulator);

  EngineConfig cfg_;
  TelemetryValidator validator_;
  std::vector<PhaseState> phases_;
};

struct EventRow {
  double t = 0.0;
  std::size_t phase = 0;
  CommandSource source = CommandSource::Regulator;
  double velocity = 0.0;
  double ia = 0.0;
  double e2 = 0.0;
  double pressure = 0.0;
};

struct CurveRow {
  double t = 0.0;
  std::size_t phase = 0;
  double cf = 0.0;
  double a3 = 0.0;
  bool alert = false;
};

struct ReplaySummary {
  std::array<std::size_t, kSourceCount> fired{};       // per mechanism
  std::array<std::size_t, kSourceCount> arbitrated{};  // per winning source
  std::size_t ticks = 0;
  std::size_t assessed = 0;
  std::size_t no_rule_fired = 0;
  double cf_min = 0.0;
  double cf_max = 0.0;
  double cf_mean = 0.0;
  std::size_t total_alerts = 0;
  std::size_t alert_clusters = 0;
};

struct ReplayResult {
  std::vector<EventRow> events;
  std::vector<CurveRow> curve;
  ReplaySummary summary;
};

// Alert instants closer than this belong to one cluster.
inline constexpr double kAlertClusterGapS = 2.0;

// Replays a recorded stream. The baseline command comes from a PI regulator
// per phase acting on the recorded current.
ReplayResult run_replay(Engine& engine, std::span<const TelemetrySample> stream,
                        const PiGains& gains);

// Groups sorted alert times; returns the first instant of each cluster.
std::vector<double> cluster_alerts(std::vector<double> times, double gap_s);

}  // namespace eaf
