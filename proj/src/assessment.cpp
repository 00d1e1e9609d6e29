#include "eaf/assessment.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "eaf/error.hpp"

namespace eaf {

LyapunovConfig::LyapunovConfig(std::size_t n) : LyapunovConfig(Eigen::MatrixXd::Identity(
                                                    static_cast<Eigen::Index>(n),
                                                    static_cast<Eigen::Index>(n))) {}

LyapunovConfig::LyapunovConfig(Eigen::MatrixXd p, std::optional<double> fixed_vdot_max)
    : p_(std::move(p)), fixed_(fixed_vdot_max) {
  if (p_.rows() != p_.cols() || p_.rows() == 0) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("P must be square and non-empty, got {}x{}", p_.rows(), p_.cols()));
  }
  if (!p_.allFinite()) throw Error(ErrorKind::NonFinite, "P has non-finite entries");
  if ((p_ - p_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorKind::InvalidConfig, "P is not symmetric");
  }
  // Cholesky succeeds iff every leading principal minor is positive.
  if (Eigen::LLT<Eigen::MatrixXd>(p_).info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidConfig, "P is not positive-definite");
  }
  if (fixed_ && !(*fixed_ > 0.0 && std::isfinite(*fixed_))) {
    throw Error(ErrorKind::InvalidConfig, "fixed vdot_max must be finite and > 0");
  }
}

LyapunovConfig LyapunovConfig::identity(std::size_t n, std::optional<double> fixed_vdot_max) {
  const auto dim = static_cast<Eigen::Index>(n);
  return LyapunovConfig(Eigen::MatrixXd::Identity(dim, dim), fixed_vdot_max);
}

double LyapunovConfig::resolve_vdot_max(std::initializer_list<double> observed) {
  if (fixed_) return *fixed_;
  for (double v : observed) running_max_ = std::max(running_max_, std::abs(v));
  return current_vdot_max();
}

double LyapunovConfig::current_vdot_max() const {
  return fixed_ ? *fixed_ : std::max(running_max_, kRunningFloor);
}

double lyapunov(std::span<const double> x1, const LyapunovConfig& cfg) {
  if (x1.size() != cfg.dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("lag vector has {} entries, P is {}x{}", x1.size(), cfg.dim(),
                            cfg.dim()));
  }
  const Eigen::Map<const Eigen::VectorXd> x(x1.data(), static_cast<Eigen::Index>(x1.size()));
  if (!x.allFinite()) throw Error(ErrorKind::NonFinite, "lag vector has non-finite entries");
  // Rounding can only push a PD form below zero by a few ulps.
  return std::max(0.0, x.dot(cfg.p() * x));
}

NormalizedDeltas normalized_deltas(double v_now, double v_prev, double v_pred, double dt,
                                   LyapunovConfig& cfg) {
  if (!(dt > 0.0)) throw Error(ErrorKind::OutOfRange, "dt must be > 0");
  const double vdot_last = (v_now - v_prev) / dt;
  const double vdot_pred = (v_pred - v_now) / dt;
  if (!std::isfinite(vdot_last) || !std::isfinite(vdot_pred)) {
    throw Error(ErrorKind::NonFinite, "Lyapunov deviation is not finite");
  }
  const double vmax = cfg.resolve_vdot_max({vdot_last, vdot_pred});
  return {std::clamp(vdot_last / vmax, -1.0, 1.0), std::clamp(vdot_pred / vmax, -1.0, 1.0)};
}

double orientation(double a0, double a1) {
  if (a0 <= 0.0 && a1 < 0.0) return 1.0;
  if (a0 >= 0.0 && a1 > 0.0) return -1.0;
  if (a0 == 0.0 && a1 == 0.0) return 0.0;
  if (a0 <= 0.0 && a1 > 0.0) return -0.5;
  if (a0 >= 0.0 && a1 < 0.0) return 0.5;
  // a1 == 0 with a0 != 0: no predicted change.
  return 0.0;
}

double confidence(double a1, double mu1_bar, double mu2_bar) {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(std::abs(a1) <= 1.0) || !unit(mu1_bar) || !unit(mu2_bar)) {
    throw Error(ErrorKind::OutOfRange,
                fmt::format("confidence inputs out of range: a1={}, mu1={}, mu2={}", a1,
                            mu1_bar, mu2_bar));
  }
  return (std::abs(a1) + mu1_bar + mu2_bar) / 3.0;
}

std::vector<double> error_lags(const PhaseHistory& history, std::size_t n, int shift) {
  std::vector<double> lags(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long age = static_cast<long>(i) + 1 + shift;
    if (age < 0) throw Error(ErrorKind::OutOfRange, "negative history age");
    const auto a = static_cast<std::size_t>(age);
    if (a < history.size()) {
      lags[i] = history.e(a);
    } else if (a == history.size() && a > 0) {
      lags[i] = history.e(a - 1) - history.de(a - 1);
    } else {
      throw Error(ErrorKind::InsufficientHistory,
                  fmt::format("need history age {}, {} stored", a, history.size()));
    }
  }
  return lags;
}

LyapunovTriple lyapunov_triple(const PhaseHistory& history, const LyapunovConfig& cfg) {
  const std::size_t n = cfg.dim();
  if (history.size() < n + 1) {
    throw Error(ErrorKind::InsufficientHistory,
                fmt::format("assessment needs {} entries, {} stored", n + 1, history.size()));
  }
  return {lyapunov(error_lags(history, n, 1), cfg), lyapunov(error_lags(history, n, 0), cfg),
          lyapunov(error_lags(history, n, -1), cfg)};
}

Assessment assess(const PhaseHistory& history, double v_pred, double mu1_bar, double mu2_bar,
                  LyapunovConfig& cfg) {
  const auto v = lyapunov_triple(history, cfg);
  const auto d = normalized_deltas(v.now, v.prev, v_pred, history.period(), cfg);
  return {d.a0, d.a1, confidence(d.a1, mu1_bar, mu2_bar), orientation(d.a0, d.a1)};
}

}  // namespace eaf
