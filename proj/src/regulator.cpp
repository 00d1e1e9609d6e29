#include "eaf/regulator.hpp"

#include <algorithm>

namespace eaf {

ElectrodeCommand pi_regulator(double error, PiState& state, const PiGains& gains, double dt) {
  const double unclamped = gains.kp * error + gains.ki * state.integral;
  const double velocity = std::clamp(unclamped, -1.0, 1.0);
  // Conditional integration: stop winding up while saturated in the same direction.
  const bool saturated = unclamped != velocity && (error > 0.0) == (unclamped > 0.0);
  if (!saturated) {
    state.integral = std::clamp(state.integral + error * dt, -gains.integral_limit,
                                gains.integral_limit);
  }
  return {velocity, CommandSource::Regulator, {}};
}

}  // namespace eaf
