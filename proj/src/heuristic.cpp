#include "eaf/heuristic.hpp"

#include <algorithm>

#include "eaf/error.hpp"

namespace eaf {

HeuristicState HeuristicState::from_derivations(std::initializer_list<double> newest_first) {
  if (newest_first.size() > kHeuristicWindow) {
    throw Error(ErrorKind::InvalidCount, "at most five derivations are kept");
  }
  HeuristicState s;
  std::copy(newest_first.begin(), newest_first.end(), s.derivs_.begin());
  s.count_ = newest_first.size();
  return s;
}

void HeuristicState::observe(double ia) {
  if (last_ia_) {
    std::shift_right(derivs_.begin(), derivs_.end(), 1);
    derivs_[0] = ia - *last_ia_;
    count_ = std::min(count_ + 1, kHeuristicWindow);
  }
  last_ia_ = ia;
}

std::optional<ElectrodeCommand> heuristic_alert(const HeuristicState& state,
                                                const ProtectionConfig& cfg) {
  if (state.size() < kHeuristicWindow) return std::nullopt;
  for (std::size_t i = 0; i < kHeuristicWindow; ++i) {
    if (!(state[i] > cfg.heuristic_deriv_min)) return std::nullopt;
  }
  const double recent = state[0] + state[1];
  const double older = state[2] + state[3] + state[4];
  if (recent - older > cfg.heuristic_sum_gap) {
    return ElectrodeCommand{cfg.predict_lift_frac, CommandSource::HeuristicCollapse, {}};
  }
  return std::nullopt;
}

std::optional<ElectrodeCommand> predictive_alert(const Assessment& assessment,
                                                 const ProtectionConfig& cfg) {
  if (assessment.cf > cfg.cf_alert && assessment.a3 == -1.0) {
    return ElectrodeCommand{cfg.predict_lift_frac, CommandSource::PredictedCollapse, {}};
  }
  return std::nullopt;
}

}  // namespace eaf
