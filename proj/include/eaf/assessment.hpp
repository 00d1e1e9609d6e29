#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "eaf/telemetry.hpp"

namespace eaf {

// Quadratic-form weight P and the normalizer for Lyapunov deviations.
//
// The normalizer is either fixed or "running": the largest |dV/dt| observed
// so far, floored so early samples never divide by zero. Running mode makes
// the config stateful; callers serialize access per instance.
class LyapunovConfig {
 public:
  static constexpr double kRunningFloor = 1e-9;

  // Identity P of dimension n in running mode.
  explicit LyapunovConfig(std::size_t n);

  // Throws DimensionMismatch for a non-square P, InvalidConfig when P is not
  // symmetric (1e-12) or not positive-definite.
  explicit LyapunovConfig(Eigen::MatrixXd p, std::optional<double> fixed_vdot_max = {});

  static LyapunovConfig identity(std::size_t n, std::optional<double> fixed_vdot_max = {});

  const Eigen::MatrixXd& p() const { return p_; }
  std::size_t dim() const { return static_cast<std::size_t>(p_.rows()); }

  bool running() const { return !fixed_; }
  std::optional<double> fixed_vdot_max() const { return fixed_; }
  double running_max() const { return running_max_; }

  // Normalizer to use after observing the given |dV/dt| magnitudes.
  double resolve_vdot_max(std::initializer_list<double> observed);
  double current_vdot_max() const;

 private:
  Eigen::MatrixXd p_;
  std::optional<double> fixed_;
  double running_max_ = 0.0;
};

struct Assessment {
  double a0 = 0.0;  // last-moment Lyapunov deviation, normalized
  double a1 = 0.0;  // predicted deviation, normalized
  double cf = 0.0;  // confidence of the orientation change
  double a3 = 0.0;  // orientation code: 1, -1, 0, -0.5, 0.5
};

double lyapunov(std::span<const double> x1, const LyapunovConfig& cfg);

struct NormalizedDeltas {
  double a0 = 0.0;
  double a1 = 0.0;
};

NormalizedDeltas normalized_deltas(double v_now, double v_prev, double v_pred, double dt,
                                   LyapunovConfig& cfg);

double orientation(double a0, double a1);

double confidence(double a1, double mu1_bar, double mu2_bar);

// Error lags (e(t-1-shift), ..., e(t-n-shift)) from a history whose newest
// entry is e(t). shift = -1 gives the lag vector one moment ahead. The entry
// one past the stored window is reconstructed from the oldest derivation.
std::vector<double> error_lags(const PhaseHistory& history, std::size_t n, int shift);

// Lyapunov values around the current moment t of a history.
struct LyapunovTriple {
  double prev = 0.0;  // V(t-1)
  double now = 0.0;   // V(t), lags e(t-1)..e(t-n)
  double next = 0.0;  // V(t+1), lags e(t)..e(t-n+1); known once e(t) is stored
};

LyapunovTriple lyapunov_triple(const PhaseHistory& history, const LyapunovConfig& cfg);

// Needs n+1 stored entries. mu1_bar/mu2_bar come from the fired rule.
Assessment assess(const PhaseHistory& history, double v_pred, double mu1_bar, double mu2_bar,
                  LyapunovConfig& cfg);

}  // namespace eaf
