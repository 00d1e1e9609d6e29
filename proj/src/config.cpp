#include "eaf/config.hpp"

#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "eaf/csv.hpp"
#include "eaf/error.hpp"

namespace eaf {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Raw settings that need post-processing once every line is read.
struct Pending {
  std::optional<std::string> vdot_max;
  std::optional<std::string> p_matrix;
  bool plant_i_set = false;
};

using Setter = std::function<void(std::string_view)>;

double to_double(std::string_view v) {
  const auto d = csv::parse_double(v);
  if (!d || !std::isfinite(*d)) throw Error(ErrorKind::Parse, fmt::format("'{}' is not a number", v));
  return *d;
}

std::size_t to_count(std::string_view v) {
  const auto i = csv::parse_int(v);
  if (!i || *i < 0) throw Error(ErrorKind::Parse, fmt::format("'{}' is not a count", v));
  return static_cast<std::size_t>(*i);
}

std::map<std::string, Setter, std::less<>> setters(AppConfig& c, Pending& pending) {
  auto& pc = c.sim.engine.protection;
  auto& pl = c.sim.plant;
  auto& rg = c.sim.regulator;
  auto& pr = c.sim.engine.predictor;
  auto num = [](double& field) { return [&field](std::string_view v) { field = to_double(v); }; };
  auto cnt = [](std::size_t& field) { return [&field](std::string_view v) { field = to_count(v); }; };

  std::map<std::string, Setter, std::less<>> m;
  m["protection.i_set"] = num(pc.i_set);
  m["protection.danger_bias"] = num(pc.danger_bias);
  m["protection.over_bias"] = num(pc.over_bias);
  m["protection.over_hold_s"] = num(pc.over_hold_s);
  m["protection.pressure_factor"] = num(pc.pressure_factor);
  m["protection.pressure_hold_s"] = num(pc.pressure_hold_s);
  m["protection.lowvolt_factor"] = num(pc.lowvolt_factor);
  m["protection.reactance_x"] = num(pc.reactance_x);
  m["protection.collapse_lift_s"] = num(pc.collapse_lift_s);
  m["protection.heuristic_deriv_min"] = num(pc.heuristic_deriv_min);
  m["protection.heuristic_sum_gap"] = num(pc.heuristic_sum_gap);
  m["protection.cf_alert"] = num(pc.cf_alert);
  m["protection.predict_lift_frac"] = num(pc.predict_lift_frac);
  m["protection.arc_on_min"] = num(pc.arc_on_min);
  m["protection.dt_s"] = num(pc.dt_s);

  m["lyapunov.vdot_max"] = [&pending](std::string_view v) { pending.vdot_max = std::string(v); };
  m["lyapunov.p"] = [&pending](std::string_view v) { pending.p_matrix = std::string(v); };

  m["predictor.lags"] = cnt(pr.lags);
  m["predictor.feature_scale"] = num(pr.feature_scale);

  m["plant.i_set"] = [&pl, &pending](std::string_view v) {
    pl.i_set = to_double(v);
    pending.plant_i_set = true;
  };
  m["plant.reactance_x"] = num(pl.reactance_x);
  m["plant.x_source"] = num(pl.x_source);
  m["plant.r_furnace"] = num(pl.r_furnace);
  m["plant.arc_gain"] = num(pl.arc_gain);
  m["plant.nominal_length"] = num(pl.nominal_length);
  m["plant.noise_sigma"] = num(pl.noise_sigma);
  m["plant.pressure_noise"] = num(pl.pressure_noise);
  m["plant.max_lift_v"] = num(pl.max_lift_v);
  m["plant.melt_rate"] = num(pl.melt_rate);
  m["plant.collapse_slide_frac"] = num(pl.collapse_slide_frac);
  m["plant.seed"] = [&pl](std::string_view v) { pl.seed = to_count(v); };

  m["regulator.kp"] = num(rg.kp);
  m["regulator.ki"] = num(rg.ki);
  m["regulator.integral_limit"] = num(rg.integral_limit);

  m["sim.label_horizon_s"] = num(c.sim.label_horizon_s);

  m["train.rules"] = cnt(c.train.rules);
  m["train.epochs"] = cnt(c.train.epochs);
  m["train.eta"] = num(c.train.eta);

  m["report.window_s"] = num(c.report.window_s);
  return m;
}

void finalize(AppConfig& c, const Pending& pending) {
  const std::size_t n = c.sim.engine.predictor.lags;
  if (n == 0) throw Error(ErrorKind::InvalidConfig, "predictor.lags must be >= 1");

  std::optional<double> fixed;
  if (pending.vdot_max && *pending.vdot_max != "running") {
    fixed = to_double(*pending.vdot_max);
  }
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));
  if (pending.p_matrix && *pending.p_matrix != "identity") {
    std::vector<double> values;
    for (auto tok : csv::split(*pending.p_matrix, ' ')) {
      if (!tok.empty()) values.push_back(to_double(tok));
    }
    if (values.size() != n * n) {
      throw Error(ErrorKind::InvalidConfig,
                  fmt::format("lyapunov.p needs {} values for {} lags, got {}", n * n, n,
                              values.size()));
    }
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t col = 0; col < n; ++col) {
        p(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = values[r * n + col];
      }
    }
  }
  c.sim.engine.lyapunov = LyapunovConfig(p, fixed);
  if (!pending.plant_i_set) c.sim.plant.i_set = c.sim.engine.protection.i_set;

  c.warnings = c.sim.engine.protection.validate();
  c.sim.engine.validate();
  c.sim.plant.validate();
  if (!(c.sim.label_horizon_s > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "sim.label_horizon_s must be > 0");
  }
  if (c.train.rules == 0) throw Error(ErrorKind::InvalidConfig, "train.rules must be >= 1");
  if (!(c.train.eta > 0.0)) throw Error(ErrorKind::InvalidConfig, "train.eta must be > 0");
  if (!(c.report.window_s > 0.0)) throw Error(ErrorKind::InvalidConfig, "report.window_s must be > 0");
}

}  // namespace

AppConfig default_config() {
  std::istringstream empty;
  return parse_config(empty);
}

AppConfig parse_config(std::istream& in) {
  AppConfig c;
  Pending pending;
  const auto table = setters(c, pending);

  std::string line;
  std::size_t line_no = 0;
  while (csv::next_line(in, line, line_no)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::Parse, fmt::format("line {}: expected 'section.key = value'", line_no));
    }
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) {
      throw Error(ErrorKind::Parse, fmt::format("line {}: unknown key '{}'", line_no, key));
    }
    try {
      it->second(value);
    } catch (const Error& err) {
      throw Error(ErrorKind::Parse, fmt::format("line {}: {}: {}", line_no, key, err.what()));
    }
  }
  finalize(c, pending);
  return c;
}

void write_config(std::ostream& out, const AppConfig& c) {
  const auto& pc = c.sim.engine.protection;
  const auto& pl = c.sim.plant;
  const auto& rg = c.sim.regulator;
  const auto& pr = c.sim.engine.predictor;
  const auto& ly = c.sim.engine.lyapunov;
  auto kv = [&out](std::string_view key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  using csv::num;
  kv("protection.i_set", num(pc.i_set));
  kv("protection.danger_bias", num(pc.danger_bias));
  kv("protection.over_bias", num(pc.over_bias));
  kv("protection.over_hold_s", num(pc.over_hold_s));
  kv("protection.pressure_factor", num(pc.pressure_factor));
  kv("protection.pressure_hold_s", num(pc.pressure_hold_s));
  kv("protection.lowvolt_factor", num(pc.lowvolt_factor));
  kv("protection.reactance_x", num(pc.reactance_x));
  kv("protection.collapse_lift_s", num(pc.collapse_lift_s));
  kv("protection.heuristic_deriv_min", num(pc.heuristic_deriv_min));
  kv("protection.heuristic_sum_gap", num(pc.heuristic_sum_gap));
  kv("protection.cf_alert", num(pc.cf_alert));
  kv("protection.predict_lift_frac", num(pc.predict_lift_frac));
  kv("protection.arc_on_min", num(pc.arc_on_min));
  kv("protection.dt_s", num(pc.dt_s));
  kv("lyapunov.vdot_max", ly.fixed_vdot_max() ? num(*ly.fixed_vdot_max()) : "running");
  {
    std::string p;
    for (Eigen::Index r = 0; r < ly.p().rows(); ++r) {
      for (Eigen::Index col = 0; col < ly.p().cols(); ++col) {
        if (!p.empty()) p += ' ';
        p += num(ly.p()(r, col));
      }
    }
    kv("lyapunov.p", p);
  }
  kv("predictor.lags", std::to_string(pr.lags));
  kv("predictor.feature_scale", num(pr.feature_scale));
  kv("plant.i_set", num(pl.i_set));
  kv("plant.reactance_x", num(pl.reactance_x));
  kv("plant.x_source", num(pl.x_source));
  kv("plant.r_furnace", num(pl.r_furnace));
  kv("plant.arc_gain", num(pl.arc_gain));
  kv("plant.nominal_length", num(pl.nominal_length));
  kv("plant.noise_sigma", num(pl.noise_sigma));
  kv("plant.pressure_noise", num(pl.pressure_noise));
  kv("plant.max_lift_v", num(pl.max_lift_v));
  kv("plant.melt_rate", num(pl.melt_rate));
  kv("plant.collapse_slide_frac", num(pl.collapse_slide_frac));
  kv("plant.seed", std::to_string(pl.seed));
  kv("regulator.kp", num(rg.kp));
  kv("regulator.ki", num(rg.ki));
  kv("regulator.integral_limit", num(rg.integral_limit));
  kv("sim.label_horizon_s", num(c.sim.label_horizon_s));
  kv("train.rules", std::to_string(c.train.rules));
  kv("train.epochs", std::to_string(c.train.epochs));
  kv("train.eta", num(c.train.eta));
  kv("report.window_s", num(c.report.window_s));
}

}  // namespace eaf
