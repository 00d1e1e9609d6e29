#include "eaf/simulation.hpp"

#include <cmath>

#include "eaf/error.hpp"

namespace eaf {

SimulationResult generate_dataset(const SimulationConfig& cfg, const EventScript& script,
                                  double duration_s) {
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
    throw Error(ErrorKind::OutOfRange, "duration must be finite and >= 0");
  }
  const auto& pc = cfg.engine.protection;
  const auto rows = static_cast<std::size_t>(std::llround(duration_s / pc.dt_s));

  SimulationResult out;
  out.telemetry.reserve(rows);
  Furnace furnace(cfg.plant, script);
  Engine engine(cfg.engine);
  std::array<PiState, kPhases> pi{};

  TelemetrySample sample = furnace.measure();
  for (std::size_t i = 0; i < rows; ++i) {
    out.telemetry.push_back(sample);
    out.truth.push_back(furnace.last_readings());

    std::array<ElectrodeCommand, kPhases> reg;
    for (std::size_t k = 0; k < kPhases; ++k) {
      reg[k] = pi_regulator(sample.ia[k] - pc.i_set, pi[k], cfg.regulator, pc.dt_s);
    }
    const auto records = engine.tick(sample, reg);
    std::array<double, kPhases> velocity{};
    for (std::size_t k = 0; k < kPhases; ++k) velocity[k] = records[k].command.velocity;
    if (i + 1 < rows) sample = furnace.step(velocity, pc.dt_s);
  }

  LabelConfig lc{pc.i_set, pc.dt_s, cfg.label_horizon_s};
  out.labels = label_trace(out.telemetry, script, lc, cfg.engine.lyapunov);
  return out;
}

}  // namespace eaf
