#pragma once

#include <string>
#include <vector>

namespace eaf {

// Setpoints, thresholds and hold times of the protection system.
struct ProtectionConfig {
  double i_set = 40'000.0;            // A
  double danger_bias = 15'000.0;      // A
  double over_bias = 7'500.0;         // A
  double over_hold_s = 1.0;
  double pressure_factor = 0.9;       // fraction of normal pressure
  double pressure_hold_s = 1.5;
  double lowvolt_factor = 1.2;
  double reactance_x = 0.004;         // ohm
  double collapse_lift_s = 2.0;
  double heuristic_deriv_min = 300.0; // A
  double heuristic_sum_gap = 6'000.0; // A
  double cf_alert = 0.6;
  double predict_lift_frac = 0.3;
  double arc_on_min = 5'000.0;        // A
  double dt_s = 0.1;

  double i_danger() const { return i_set + danger_bias; }
  double i_over() const { return i_set + over_bias; }

  // Throws Error(InvalidConfig) on a hard violation. Soft issues (setpoint
  // outside the 35-45 kA band) come back as warnings.
  std::vector<std::string> validate() const;
};

}  // namespace eaf
