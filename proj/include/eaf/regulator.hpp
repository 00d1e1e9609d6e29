#pragma once

#include "eaf/protection.hpp"

namespace eaf {

// Baseline electrode-lift regulator. Positive current error (too much
// current) lifts the electrode.
struct PiGains {
  double kp = 1.5e-4;        // 1/A
  double ki = 2.0e-5;        // 1/(A s)
  double integral_limit = 2.5e4;  // A s
};

struct PiState {
  double integral = 0.0;  // A s
};

ElectrodeCommand pi_regulator(double error, PiState& state, const PiGains& gains, double dt);

}  // namespace eaf
