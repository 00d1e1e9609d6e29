#pragma once

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "eaf/dataset.hpp"
#include "eaf/engine.hpp"

namespace eaf {

inline constexpr std::string_view kEventHeader = "t,phase,source,velocity,ia,e2,pressure";
inline constexpr std::string_view kCurveHeader = "t,phase,cf,a3,alert";

void write_events_csv(std::ostream& out, std::span<const EventRow> events);
void write_curve_csv(std::ostream& out, std::span<const CurveRow> curve);
std::vector<CurveRow> read_curve_csv(std::istream& in);

nlohmann::ordered_json summary_json(const ReplaySummary& summary);

// One replayed heat: its prediction curve and the labels of the same trace.
struct ScoredRun {
  std::vector<CurveRow> curve;
  std::vector<LabelRow> labels;
};

struct ReportMetrics {
  double window_s = 5.0;
  std::size_t events = 0;
  std::size_t detected = 0;
  double detection_rate = 0.0;  // 0 when there are no events
  std::size_t alert_clusters = 0;
  std::size_t false_alarms = 0;
  double hours = 0.0;
  double false_alarms_per_hour = 0.0;
  std::vector<double> lead_times_s;  // collapse instant minus first matching alert
};

// Alerts and collapses are matched per phase. An alert cluster is a false
// alarm when none of its alerts lies within +-window of a labeled collapse.
// Throws OutOfRange when a curve row falls outside the labeled time range.
ReportMetrics score(std::span<const ScoredRun> runs, double window_s);

nlohmann::ordered_json metrics_json(const ReportMetrics& m);

// Plot data: t, phase, cf, alert and the labeled collapse flag.
void write_plot_csv(std::ostream& out, const ScoredRun& run);

}  // namespace eaf
