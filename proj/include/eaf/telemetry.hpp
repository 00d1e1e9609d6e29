#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "eaf/protection_config.hpp"

namespace eaf {

inline constexpr std::size_t kPhases = 3;

using PhaseArray = std::array<double, kPhases>;

// One timestamped reading. Pressure is a fraction of normal cylinder pressure.
struct TelemetrySample {
  double t = 0.0;
  PhaseArray ia{};        // A
  PhaseArray e2{};        // V
  PhaseArray pressure{};  // dimensionless

  bool operator==(const TelemetrySample&) const = default;
};

// Checks sample invariants and enforces non-decreasing time across a stream.
class TelemetryValidator {
 public:
  const TelemetrySample& validate(const TelemetrySample& sample);
  void reset() { last_t_.reset(); }

 private:
  std::optional<double> last_t_;
};

// Stateless part of validation (finite, non-negative).
void check_sample_fields(const TelemetrySample& sample);

// Ring buffer of one phase's current error e(t) = I_a - I_s and its one-step
// difference. Index 0 is the newest entry.
class PhaseHistory {
 public:
  struct Entry {
    double e = 0.0;
    double de = 0.0;
  };

  explicit PhaseHistory(std::size_t capacity, double period_s = 0.1);

  // Capacity that serves both the predictor (n lags) and the 5-derivation
  // heuristic from one buffer.
  static std::size_t default_capacity(std::size_t lags);

  void push(double e);

  std::size_t size() const { return window_.size(); }
  std::size_t capacity() const { return capacity_; }
  double period() const { return period_; }
  bool empty() const { return window_.empty(); }

  const Entry& at(std::size_t age) const;
  double e(std::size_t age) const { return at(age).e; }
  double de(std::size_t age) const { return at(age).de; }

 private:
  std::size_t capacity_;
  double period_;
  std::deque<Entry> window_;  // front = newest
  std::optional<double> last_e_;
};

enum class Range { ArcGenerating, Normal, OverCurrent, Dangerous };

std::string_view to_string(Range range);

Range classify_range(double ia, const ProtectionConfig& cfg);

// Wide telemetry CSV: t,ia1,ia2,ia3,e21,e22,e23,p1,p2,p3
inline constexpr std::string_view kTelemetryHeader = "t,ia1,ia2,ia3,e21,e22,e23,p1,p2,p3";

struct TelemetryReadOptions {
  // When set, pressure columns are absolute and divided by the per-electrode
  // normal pressure on ingest.
  std::optional<PhaseArray> pressure_normal;
};

// Parses and validates every row; failures raise Error(Parse) naming the line.
std::vector<TelemetrySample> read_telemetry_csv(std::istream& in,
                                                const TelemetryReadOptions& opts = {});
void write_telemetry_header(std::ostream& out);
void write_telemetry_row(std::ostream& out, const TelemetrySample& sample);

}  // namespace eaf
