#pragma once

#include <vector>

#include "eaf/dataset.hpp"
#include "eaf/engine.hpp"
#include "eaf/furnace_sim.hpp"
#include "eaf/regulator.hpp"

namespace eaf {

struct SimulationConfig {
  PlantConfig plant;
  PiGains regulator;
  EngineConfig engine;       // protection in the loop; model normally absent
  double label_horizon_s = 5.0;
};

struct SimulationResult {
  std::vector<TelemetrySample> telemetry;
  std::vector<LabelRow> labels;
  std::vector<std::array<PhaseReading, kPhases>> truth;  // plant state behind each row
};

// Closed loop: plant -> engine (PI baseline plus protection) -> plant, for
// round(duration / dt) samples starting at t = 0, followed by labeling.
SimulationResult generate_dataset(const SimulationConfig& cfg, const EventScript& script,
                                  double duration_s);

}  // namespace eaf
