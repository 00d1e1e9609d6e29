#include "eaf/protection_config.hpp"

#include <cmath>

#include "eaf/error.hpp"

namespace eaf {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::InvalidConfig, std::string("protection: ") + what);
}

}  // namespace

std::vector<std::string> ProtectionConfig::validate() const {
  const double all[] = {i_set, danger_bias, over_bias, over_hold_s, pressure_factor,
                        pressure_hold_s, lowvolt_factor, reactance_x, collapse_lift_s,
                        heuristic_deriv_min, heuristic_sum_gap, cf_alert,
                        predict_lift_frac, arc_on_min, dt_s};
  for (double v : all) require(std::isfinite(v), "all fields must be finite");

  require(i_set > 0.0, "i_set must be > 0");
  require(danger_bias > 0.0 && over_bias > 0.0, "biases must be > 0");
  require(over_hold_s > 0.0 && pressure_hold_s > 0.0 && collapse_lift_s > 0.0,
          "hold times must be > 0");
  require(pressure_factor > 0.0 && pressure_factor < 1.0, "pressure_factor must be in (0,1)");
  require(lowvolt_factor > 1.0, "lowvolt_factor must be > 1");
  require(reactance_x > 0.0, "reactance_x must be > 0");
  require(heuristic_deriv_min > 0.0 && heuristic_sum_gap > 0.0,
          "heuristic thresholds must be > 0");
  require(cf_alert > 0.0 && cf_alert < 1.0, "cf_alert must be in (0,1)");
  require(predict_lift_frac > 0.0 && predict_lift_frac <= 1.0,
          "predict_lift_frac must be in (0,1]");
  require(arc_on_min > 0.0, "arc_on_min must be > 0");
  require(dt_s > 0.0, "dt_s must be > 0");

  std::vector<std::string> warnings;
  if (i_set < 35'000.0 || i_set > 45'000.0) {
    warnings.emplace_back("i_set outside the 35-45 kA operating band");
  }
  return warnings;
}

}  // namespace eaf
