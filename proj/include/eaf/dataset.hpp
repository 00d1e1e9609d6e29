#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "eaf/assessment.hpp"
#include "eaf/engine.hpp"
#include "eaf/furnace_sim.hpp"
#include "eaf/rbf.hpp"
#include "eaf/telemetry.hpp"

namespace eaf {

// Per-phase training targets for one telemetry row.
struct LabelRow {
  double t = 0.0;
  std::size_t phase = 0;  // 0-based; 1-based on disk
  bool ready = false;     // enough history for the Lyapunov targets
  double a1 = 0.0;
  double cf = 0.0;
  double a3 = 0.0;
  bool collapse = false;  // within the label horizon before a scripted collapse
  // Scripted event acting on this phase at t: a collapse on its strike
  // instant, the other kinds over [time, time + duration).
  std::optional<EventKind> event;

  bool operator==(const LabelRow&) const = default;
};

inline constexpr std::string_view kLabelHeader = "t,phase,ready,a1,cf,a3,collapse,event";

struct LabelConfig {
  double i_set = 40'000.0;
  double dt_s = 0.1;
  double horizon_s = 5.0;
};

// Targets from the recorded trace: a1 is the realized next-moment Lyapunov
// deviation, a3 its orientation, and cf the confidence with crisp collapse
// membership (1 inside a positive window, 0 outside).
std::vector<LabelRow> label_trace(std::span<const TelemetrySample> telemetry,
                                  const EventScript& script, const LabelConfig& cfg,
                                  LyapunovConfig lyapunov);

void write_labels_csv(std::ostream& out, std::span<const LabelRow> labels);
std::vector<LabelRow> read_labels_csv(std::istream& in);

// Collapse instants recovered from labels: the last positive row of each run,
// per phase.
struct LabeledEvent {
  double t = 0.0;
  std::size_t phase = 0;
};
std::vector<LabeledEvent> labeled_collapses(std::span<const LabelRow> labels);

// Rebuilds per-phase histories from telemetry and pairs features with label
// targets. Throws DimensionMismatch when labels do not cover the telemetry
// row for row.
std::vector<TrainingSample> make_training_samples(std::span<const TelemetrySample> telemetry,
                                                  std::span<const LabelRow> labels,
                                                  double i_set, const PredictorConfig& predictor);

// Rule seeds for init_network split by class: samples whose cf target exceeds
// `positive_cf` get floor(k/2) k-means centers, the rest get the remainder.
// Conclusions start at each cluster's mean target. With no positive samples
// every rule goes to the negative class. Deterministic given the seed.
std::vector<RuleSeed> class_seeds(std::span<const TrainingSample> dataset, std::size_t k,
                                  std::uint64_t seed, double positive_cf = 0.5);

// Per-feature robust spread (scaled median absolute deviation), so rare
// spikes do not inflate it.
std::vector<double> feature_spread(std::span<const TrainingSample> dataset);

// Raises every rule width to at least the matching floor entry, so that a
// rule base seeded on a few centers still covers the bulk of the data.
void widen_rules(RbfNetwork& net, std::span<const double> floor);

}  // namespace eaf
