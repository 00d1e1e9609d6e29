#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "eaf/assessment.hpp"
#include "eaf/protection.hpp"

namespace eaf {

inline constexpr std::size_t kHeuristicWindow = 5;

// Last five arc-current derivations, newest first.
class HeuristicState {
 public:
  HeuristicState() = default;

  // Builds a state from explicit derivations (newest first, at most 5).
  static HeuristicState from_derivations(std::initializer_list<double> newest_first);

  // Records a new arc-current measurement; the first one yields no derivation.
  void observe(double ia);

  std::size_t size() const { return count_; }
  double operator[](std::size_t age) const { return derivs_.at(age); }

 private:
  std::array<double, kHeuristicWindow> derivs_{};
  std::size_t count_ = 0;
  std::optional<double> last_ia_;
};

// Fires when all five derivations exceed heuristic_deriv_min and the two
// newest outweigh the three older ones by more than heuristic_sum_gap.
std::optional<ElectrodeCommand> heuristic_alert(const HeuristicState& state,
                                                const ProtectionConfig& cfg);

// Fires when the orientation points toward "bad" (a3 == -1) with confidence
// strictly above cf_alert.
std::optional<ElectrodeCommand> predictive_alert(const Assessment& assessment,
                                                 const ProtectionConfig& cfg);

}  // namespace eaf
