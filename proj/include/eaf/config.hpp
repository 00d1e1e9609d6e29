#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "eaf/simulation.hpp"

namespace eaf {

struct TrainConfig {
  std::size_t rules = 8;
  std::size_t epochs = 30;
  double eta = 0.001;
};

struct ReportConfig {
  double window_s = 5.0;
};

// Everything a run can be configured with. Loaded from a flat key-value file:
//
//   # comment
//   protection.i_set = 40000
//   lyapunov.vdot_max = running      (or a positive number)
//   lyapunov.p = identity            (or n*n row-major numbers)
//
// Unknown keys are errors.
struct AppConfig {
  SimulationConfig sim;
  TrainConfig train;
  ReportConfig report;
  std::vector<std::string> warnings;
};

AppConfig default_config();

// Throws Error(Parse) naming the line and key on malformed input, and
// Error(InvalidConfig) when the assembled config violates an invariant.
AppConfig parse_config(std::istream& in);

// Every key with its effective value, in the same syntax parse_config reads.
void write_config(std::ostream& out, const AppConfig& cfg);

}  // namespace eaf
