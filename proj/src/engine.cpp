#include "eaf/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "eaf/error.hpp"

namespace eaf {

void EngineConfig::validate() const {
  protection.validate();
  if (predictor.lags == 0) throw Error(ErrorKind::InvalidConfig, "predictor lags must be >= 1");
  if (!(predictor.feature_scale > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "predictor feature_scale must be > 0");
  }
  if (lyapunov.dim() != predictor.lags) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("P is {}x{} but the predictor uses {} lags", lyapunov.dim(),
                            lyapunov.dim(), predictor.lags));
  }
  if (model) {
    model->validate();
    if (model->n != predictor.lags) {
      throw Error(ErrorKind::DimensionMismatch,
                  fmt::format("model has n={} but the predictor uses {} lags", model->n,
                              predictor.lags));
    }
  }
}

bool TickRecord::fired_source(CommandSource s) const {
  return std::find(fired.begin(), fired.end(), s) != fired.end();
}

Engine::Engine(EngineConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto capacity = PhaseHistory::default_capacity(cfg_.predictor.lags);
  for (std::size_t k = 0; k < kPhases; ++k) {
    phases_.push_back({PhaseHistory(capacity, cfg_.protection.dt_s), {}, {}, cfg_.lyapunov});
  }
}

TickRecords Engine::tick(const TelemetrySample& sample,
                         const std::array<ElectrodeCommand, kPhases>& regulator) {
  validator_.validate(sample);
  TickRecords out;
  for (std::size_t k = 0; k < kPhases; ++k) out[k] = tick_phase(k, sample, regulator[k]);
  return out;
}

TickRecord Engine::tick_phase(std::size_t k, const TelemetrySample& sample,
                              const ElectrodeCommand& regulator) {
  const auto& pc = cfg_.protection;
  auto& ph = phases_[k];
  const double ia = sample.ia[k];

  ph.history.push(ia - pc.i_set);
  ph.heuristic.observe(ia);

  TickRecord rec;
  rec.t = sample.t;
  rec.phase = k;
  std::vector<ElectrodeCommand> commands;
  auto take = [&](const std::optional<ElectrodeCommand>& c) {
    if (!c) return;
    commands.push_back(*c);
    rec.fired.push_back(c->source);
  };

  take(eval_danger(ia, pc));
  auto over = eval_over(ia, ph.loops, pc);
  ph.loops = over.state;
  take(over.command);
  auto nonmetal = eval_nonmetal(sample.pressure[k], ph.loops, pc);
  ph.loops = nonmetal.state;
  take(nonmetal.command);
  auto lowvolt = eval_lowvolt(sample.e2[k], ia, sample.t, ph.loops, pc);
  ph.loops = lowvolt.state;
  take(lowvolt.command);
  take(heuristic_alert(ph.heuristic, pc));

  const std::size_t n = cfg_.predictor.lags;
  if (cfg_.model && ph.history.size() >= n + 1) {
    auto x = build_features(ph.history, n);
    for (double& v : x) v /= cfg_.predictor.feature_scale;
    try {
      const auto inf = infer(*cfg_.model, x);
      // The network predicts the normalized deviation; map it back to a
      // Lyapunov value one moment ahead.
      const double vmax = ph.lyapunov.current_vdot_max();
      const double v_now = lyapunov(error_lags(ph.history, n, 0), ph.lyapunov);
      const double v_pred = v_now + inf.y[0] * vmax * pc.dt_s;
      auto assessment = assess(ph.history, v_pred, inf.mu1_bar, inf.mu2_bar, ph.lyapunov);
      // CF is read from the network's trained confidence output.
      assessment.cf = std::clamp(inf.y[1], 0.0, 1.0);
      rec.assessment = assessment;
      rec.prediction = Prediction{inf.y, inf.mu1_bar, inf.mu2_bar};
      take(predictive_alert(assessment, pc));
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::NoRuleFires) throw;
      rec.no_rule_fired = true;
    }
  }

  rec.command = arbitrate(commands, regulator);
  return rec;
}

std::vector<double> cluster_alerts(std::vector<double> times, double gap_s) {
  std::sort(times.begin(), times.end());
  std::vector<double> starts;
  double last = -std::numeric_limits<double>::infinity();
  for (double t : times) {
    if (starts.empty() || t - last > gap_s) starts.push_back(t);
    last = t;
  }
  return starts;
}

ReplayResult run_replay(Engine& engine, std::span<const TelemetrySample> stream,
                        const PiGains& gains) {
  ReplayResult out;
  auto& sum = out.summary;
  const auto& pc = engine.config().protection;
  std::array<PiState, kPhases> pi{};
  std::vector<double> alert_times;
  double cf_acc = 0.0;

  for (const auto& sample : stream) {
    std::array<ElectrodeCommand, kPhases> reg;
    for (std::size_t k = 0; k < kPhases; ++k) {
      reg[k] = pi_regulator(sample.ia[k] - pc.i_set, pi[k], gains, pc.dt_s);
    }
    const auto records = engine.tick(sample, reg);
    ++sum.ticks;
    for (const auto& rec : records) {
      for (auto s : rec.fired) ++sum.fired[static_cast<std::size_t>(s)];
      ++sum.arbitrated[static_cast<std::size_t>(rec.command.source)];
      if (rec.no_rule_fired) ++sum.no_rule_fired;
      if (rec.command.source != CommandSource::Regulator) {
        const auto k = rec.phase;
        out.events.push_back({rec.t, k, rec.command.source, rec.command.velocity, sample.ia[k],
                              sample.e2[k], sample.pressure[k]});
      }
      if (rec.assessment) {
        const bool alert = rec.fired_source(CommandSource::PredictedCollapse);
        out.curve.push_back({rec.t, rec.phase, rec.assessment->cf, rec.assessment->a3, alert});
        const double cf = rec.assessment->cf;
        if (sum.assessed == 0) {
          sum.cf_min = sum.cf_max = cf;
        } else {
          sum.cf_min = std::min(sum.cf_min, cf);
          sum.cf_max = std::max(sum.cf_max, cf);
        }
        cf_acc += cf;
        ++sum.assessed;
        if (alert) {
          ++sum.total_alerts;
          alert_times.push_back(rec.t);
        }
      }
    }
  }
  if (sum.assessed > 0) sum.cf_mean = cf_acc / static_cast<double>(sum.assessed);
  sum.alert_clusters = cluster_alerts(std::move(alert_times), kAlertClusterGapS).size();
  return out;
}

}  // namespace eaf
