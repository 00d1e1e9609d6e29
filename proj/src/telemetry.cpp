#include "eaf/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "eaf/csv.hpp"
#include "eaf/error.hpp"

namespace eaf {

void check_sample_fields(const TelemetrySample& s) {
  auto check = [](const PhaseArray& values, const char* name) {
    for (std::size_t k = 0; k < kPhases; ++k) {
      if (!std::isfinite(values[k])) {
        throw Error(ErrorKind::NonFinite, fmt::format("{}[{}] is not finite", name, k));
      }
      if (values[k] < 0.0) {
        throw Error(ErrorKind::NegativeSignal,
                    fmt::format("{}[{}] = {} is negative", name, k, values[k]));
      }
    }
  };
  if (!std::isfinite(s.t)) throw Error(ErrorKind::NonFinite, "t is not finite");
  check(s.ia, "ia");
  check(s.e2, "e2");
  check(s.pressure, "pressure");
}

const TelemetrySample& TelemetryValidator::validate(const TelemetrySample& sample) {
  check_sample_fields(sample);
  if (last_t_ && sample.t < *last_t_) {
    throw Error(ErrorKind::TimeRegression,
                fmt::format("t = {} precedes previous t = {}", sample.t, *last_t_));
  }
  last_t_ = sample.t;
  return sample;
}

PhaseHistory::PhaseHistory(std::size_t capacity, double period_s)
    : capacity_(capacity), period_(period_s) {
  if (capacity_ == 0) throw Error(ErrorKind::InvalidCount, "history capacity must be >= 1");
  if (!(period_s > 0.0)) throw Error(ErrorKind::InvalidConfig, "history period must be > 0");
}

std::size_t PhaseHistory::default_capacity(std::size_t lags) {
  return std::max<std::size_t>(lags + 1, 6);
}

void PhaseHistory::push(double e) {
  if (!std::isfinite(e)) throw Error(ErrorKind::NonFinite, "history push: e is not finite");
  const double de = last_e_ ? e - *last_e_ : 0.0;
  window_.push_front({e, de});
  if (window_.size() > capacity_) window_.pop_back();
  last_e_ = e;
}

const PhaseHistory::Entry& PhaseHistory::at(std::size_t age) const {
  if (age >= window_.size()) {
    throw Error(ErrorKind::InsufficientHistory,
                fmt::format("history age {} requested, {} stored", age, window_.size()));
  }
  return window_[age];
}

std::string_view to_string(Range range) {
  switch (range) {
    case Range::ArcGenerating: return "ArcGenerating";
    case Range::Normal: return "Normal";
    case Range::OverCurrent: return "OverCurrent";
    case Range::Dangerous: return "Dangerous";
  }
  return "?";
}

Range classify_range(double ia, const ProtectionConfig& cfg) {
  if (ia >= cfg.i_danger()) return Range::Dangerous;
  if (ia >= cfg.i_over()) return Range::OverCurrent;
  if (ia >= cfg.arc_on_min) return Range::Normal;
  return Range::ArcGenerating;
}

std::vector<TelemetrySample> read_telemetry_csv(std::istream& in,
                                                const TelemetryReadOptions& opts) {
  std::vector<TelemetrySample> out;
  std::string line;
  std::size_t line_no = 0;
  if (!csv::next_line(in, line, line_no)) return out;
  if (line != kTelemetryHeader) {
    throw Error(ErrorKind::Parse, fmt::format("line 1: expected header '{}'", kTelemetryHeader));
  }

  TelemetryValidator validator;
  while (csv::next_line(in, line, line_no)) {
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 10) {
      throw Error(ErrorKind::Parse,
                  fmt::format("line {}: expected 10 fields, got {}", line_no, fields.size()));
    }
    double v[10];
    for (std::size_t i = 0; i < 10; ++i) {
      const auto parsed = csv::parse_double(fields[i]);
      if (!parsed) {
        throw Error(ErrorKind::Parse,
                    fmt::format("line {}: field {} '{}' is not a number", line_no, i + 1,
                                fields[i]));
      }
      v[i] = *parsed;
    }
    TelemetrySample s;
    s.t = v[0];
    for (std::size_t k = 0; k < kPhases; ++k) {
      s.ia[k] = v[1 + k];
      s.e2[k] = v[4 + k];
      s.pressure[k] = v[7 + k];
      if (opts.pressure_normal) s.pressure[k] /= (*opts.pressure_normal)[k];
    }
    try {
      validator.validate(s);
    } catch (const Error& err) {
      throw Error(ErrorKind::Parse, fmt::format("line {}: {}: {}", line_no,
                                                to_string(err.kind()), err.what()));
    }
    out.push_back(s);
  }
  return out;
}

void write_telemetry_header(std::ostream& out) { out << kTelemetryHeader << '\n'; }

void write_telemetry_row(std::ostream& out, const TelemetrySample& s) {
  out << csv::num(s.t);
  for (double v : s.ia) out << ',' << csv::num(v);
  for (double v : s.e2) out << ',' << csv::num(v);
  for (double v : s.pressure) out << ',' << csv::num(v);
  out << '\n';
}

}  // namespace eaf
