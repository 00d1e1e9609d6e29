#include "eaf/report.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "eaf/csv.hpp"
#include "eaf/error.hpp"

namespace eaf {

namespace {

constexpr double kTimeEps = 1e-9;

}  // namespace

void write_events_csv(std::ostream& out, std::span<const EventRow> events) {
  out << kEventHeader << '\n';
  for (const auto& e : events) {
    out << csv::num(e.t) << ',' << (e.phase + 1) << ',' << to_string(e.source) << ','
        << csv::num(e.velocity) << ',' << csv::num(e.ia) << ',' << csv::num(e.e2) << ','
        << csv::num(e.pressure) << '\n';
  }
}

void write_curve_csv(std::ostream& out, std::span<const CurveRow> curve) {
  out << kCurveHeader << '\n';
  for (const auto& r : curve) {
    out << csv::num(r.t) << ',' << (r.phase + 1) << ',' << csv::num(r.cf) << ','
        << csv::num(r.a3) << ',' << (r.alert ? 1 : 0) << '\n';
  }
}

std::vector<CurveRow> read_curve_csv(std::istream& in) {
  std::vector<CurveRow> out;
  std::string line;
  std::size_t line_no = 0;
  if (!csv::next_line(in, line, line_no)) return out;
  if (line != kCurveHeader) {
    throw Error(ErrorKind::Parse, fmt::format("line 1: expected header '{}'", kCurveHeader));
  }
  while (csv::next_line(in, line, line_no)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 5) throw Error(ErrorKind::Parse, fmt::format("line {}: expected 5 fields", line_no));
    const auto t = csv::parse_double(f[0]);
    const auto phase = csv::parse_int(f[1]);
    const auto cf = csv::parse_double(f[2]);
    const auto a3 = csv::parse_double(f[3]);
    const auto alert = csv::parse_int(f[4]);
    if (!t || !phase || !cf || !a3 || !alert || *phase < 1 ||
        *phase > static_cast<long long>(kPhases)) {
      throw Error(ErrorKind::Parse, fmt::format("line {}: malformed curve row", line_no));
    }
    out.push_back({*t, static_cast<std::size_t>(*phase - 1), *cf, *a3, *alert != 0});
  }
  return out;
}

nlohmann::ordered_json summary_json(const ReplaySummary& s) {
  nlohmann::ordered_json fired = nlohmann::ordered_json::object();
  nlohmann::ordered_json arbitrated = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < kSourceCount; ++i) {
    const auto name = std::string(to_string(static_cast<CommandSource>(i)));
    fired[name] = s.fired[i];
    arbitrated[name] = s.arbitrated[i];
  }
  nlohmann::ordered_json j;
  j["ticks"] = s.ticks;
  j["counts"] = fired;
  j["arbitrated"] = arbitrated;
  j["assessed"] = s.assessed;
  j["no_rule_fired"] = s.no_rule_fired;
  j["cf"] = {{"min", s.cf_min}, {"max", s.cf_max}, {"mean", s.cf_mean}};
  j["total_alerts"] = s.total_alerts;
  j["alert_clusters"] = s.alert_clusters;
  return j;
}

ReportMetrics score(std::span<const ScoredRun> runs, double window_s) {
  if (!(window_s > 0.0)) throw Error(ErrorKind::OutOfRange, "match window must be > 0");
  ReportMetrics m;
  m.window_s = window_s;
  double seconds = 0.0;

  for (const auto& run : runs) {
    if (run.labels.empty()) {
      if (!run.curve.empty()) throw Error(ErrorKind::OutOfRange, "prediction curve without labels");
      continue;
    }
    const auto [lo_it, hi_it] = std::minmax_element(
        run.labels.begin(), run.labels.end(),
        [](const LabelRow& a, const LabelRow& b) { return a.t < b.t; });
    const double t_lo = lo_it->t;
    const double t_hi = hi_it->t;
    for (const auto& r : run.curve) {
      if (r.t < t_lo - kTimeEps || r.t > t_hi + kTimeEps) {
        throw Error(ErrorKind::OutOfRange,
                    fmt::format("curve time {} outside labeled range [{}, {}]", r.t, t_lo, t_hi));
      }
    }
    // Span covered by the labels, counting the last sample's period.
    double step = 0.0;
    for (const auto& r : run.labels) {
      if (r.t > t_lo + kTimeEps) {
        step = r.t - t_lo;
        break;
      }
    }
    seconds += (t_hi - t_lo) + step;

    const auto events = labeled_collapses(run.labels);
    m.events += events.size();

    std::array<std::vector<double>, kPhases> alerts;
    for (const auto& r : run.curve) {
      if (r.alert) alerts[r.phase].push_back(r.t);
    }

    for (const auto& ev : events) {
      const auto& times = alerts[ev.phase];
      std::optional<double> first;
      for (double t : times) {
        if (std::abs(t - ev.t) <= window_s + kTimeEps) {
          first = first ? std::min(*first, t) : t;
        }
      }
      if (first) {
        ++m.detected;
        m.lead_times_s.push_back(std::round((ev.t - *first) * 1e9) / 1e9);
      }
    }

    for (std::size_t k = 0; k < kPhases; ++k) {
      auto times = alerts[k];
      std::sort(times.begin(), times.end());
      std::size_t i = 0;
      while (i < times.size()) {
        std::size_t j = i + 1;
        while (j < times.size() && times[j] - times[j - 1] <= kAlertClusterGapS + kTimeEps) ++j;
        ++m.alert_clusters;
        bool matched = false;
        for (std::size_t a = i; a < j && !matched; ++a) {
          for (const auto& ev : events) {
            if (ev.phase == k && std::abs(times[a] - ev.t) <= window_s + kTimeEps) {
              matched = true;
              break;
            }
          }
        }
        if (!matched) ++m.false_alarms;
        i = j;
      }
    }
  }

  m.hours = seconds / 3600.0;
  m.detection_rate = m.events ? static_cast<double>(m.detected) / static_cast<double>(m.events) : 0.0;
  m.false_alarms_per_hour = m.hours > 0.0 ? static_cast<double>(m.false_alarms) / m.hours : 0.0;
  return m;
}

nlohmann::ordered_json metrics_json(const ReportMetrics& m) {
  nlohmann::ordered_json j;
  j["match_window_s"] = m.window_s;
  j["events"] = m.events;
  j["detected"] = m.detected;
  j["detection_rate"] = m.detection_rate;
  j["alert_clusters"] = m.alert_clusters;
  j["false_alarms"] = m.false_alarms;
  j["hours"] = m.hours;
  j["false_alarms_per_hour"] = m.false_alarms_per_hour;
  nlohmann::ordered_json lead;
  if (m.lead_times_s.empty()) {
    lead = {{"count", 0}};
  } else {
    const auto [mn, mx] = std::minmax_element(m.lead_times_s.begin(), m.lead_times_s.end());
    const double mean = std::accumulate(m.lead_times_s.begin(), m.lead_times_s.end(), 0.0) /
                        static_cast<double>(m.lead_times_s.size());
    lead = {{"count", m.lead_times_s.size()}, {"min", *mn}, {"max", *mx}, {"mean", mean}};
  }
  j["lead_time_s"] = lead;
  return j;
}

void write_plot_csv(std::ostream& out, const ScoredRun& run) {
  std::map<std::pair<long long, std::size_t>, bool> collapse;
  auto key = [](double t, std::size_t phase) {
    return std::make_pair(std::llround(t * 1e6), phase);
  };
  for (const auto& r : run.labels) collapse[key(r.t, r.phase)] = r.collapse;
  out << "t,phase,cf,alert,collapse\n";
  for (const auto& r : run.curve) {
    const auto it = collapse.find(key(r.t, r.phase));
    const bool c = it != collapse.end() && it->second;
    out << csv::num(r.t) << ',' << (r.phase + 1) << ',' << csv::num(r.cf) << ','
        << (r.alert ? 1 : 0) << ',' << (c ? 1 : 0) << '\n';
  }
}

}  // namespace eaf
