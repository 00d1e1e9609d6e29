#include "eaf/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <iterator>
#include <ostream>
#include <random>
#include <string>

#include <fmt/format.h>

#include "eaf/csv.hpp"
#include "eaf/error.hpp"

namespace eaf {

namespace {

constexpr double kTimeEps = 1e-9;

bool in_collapse_window(const EventScript& script, std::size_t phase, double t, double horizon) {
  for (const auto& e : script.events) {
    if (e.kind != EventKind::Collapse || !e.applies_to(phase)) continue;
    if (t + kTimeEps >= e.time - horizon && t <= e.time + kTimeEps) return true;
  }
  return false;
}

std::optional<EventKind> active_event(const EventScript& script, std::size_t phase, double t,
                                     double dt) {
  for (const auto& e : script.events) {
    if (!e.applies_to(phase)) continue;
    if (e.kind == EventKind::Collapse) {
      // The strike lands on the first sample at or after its instant.
      if (t + kTimeEps >= e.time && t + kTimeEps < e.time + dt) return e.kind;
    } else if (t + kTimeEps >= e.time && t + kTimeEps < e.time + e.duration) {
      return e.kind;
    }
  }
  return std::nullopt;
}

std::optional<EventKind> parse_event_kind(std::string_view name) {
  for (auto k : {EventKind::Collapse, EventKind::NonMetal, EventKind::OverTransient}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

}  // namespace

std::vector<LabelRow> label_trace(std::span<const TelemetrySample> telemetry,
                                  const EventScript& script, const LabelConfig& cfg,
                                  LyapunovConfig lyapunov) {
  const std::size_t n = lyapunov.dim();
  std::vector<PhaseHistory> hist(kPhases, PhaseHistory(PhaseHistory::default_capacity(n), cfg.dt_s));
  std::vector<LyapunovConfig> lyap(kPhases, lyapunov);

  std::vector<LabelRow> out;
  out.reserve(telemetry.size() * kPhases);
  for (const auto& s : telemetry) {
    for (std::size_t k = 0; k < kPhases; ++k) {
      hist[k].push(s.ia[k] - cfg.i_set);
      LabelRow row;
      row.t = s.t;
      row.phase = k;
      row.collapse = in_collapse_window(script, k, s.t, cfg.horizon_s);
      row.event = active_event(script, k, s.t, cfg.dt_s);
      if (hist[k].size() >= n + 1) {
        const auto v = lyapunov_triple(hist[k], lyap[k]);
        const auto d = normalized_deltas(v.now, v.prev, v.next, cfg.dt_s, lyap[k]);
        const double membership = row.collapse ? 1.0 : 0.0;
        row.ready = true;
        row.a1 = d.a1;
        row.cf = confidence(d.a1, membership, membership);
        row.a3 = orientation(d.a0, d.a1);
      }
      out.push_back(row);
    }
  }
  return out;
}

void write_labels_csv(std::ostream& out, std::span<const LabelRow> labels) {
  out << kLabelHeader << '\n';
  for (const auto& r : labels) {
    out << csv::num(r.t) << ',' << (r.phase + 1) << ',' << (r.ready ? 1 : 0) << ','
        << csv::num(r.a1) << ',' << csv::num(r.cf) << ',' << csv::num(r.a3) << ','
        << (r.collapse ? 1 : 0) << ',' << (r.event ? to_string(*r.event) : "-") << '\n';
  }
}

std::vector<LabelRow> read_labels_csv(std::istream& in) {
  std::vector<LabelRow> out;
  std::string line;
  std::size_t line_no = 0;
  if (!csv::next_line(in, line, line_no)) return out;
  if (line != kLabelHeader) {
    throw Error(ErrorKind::Parse, fmt::format("line 1: expected header '{}'", kLabelHeader));
  }
  while (csv::next_line(in, line, line_no)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 8) {
      throw Error(ErrorKind::Parse, fmt::format("line {}: expected 8 fields", line_no));
    }
    const auto t = csv::parse_double(f[0]);
    const auto phase = csv::parse_int(f[1]);
    const auto ready = csv::parse_int(f[2]);
    const auto a1 = csv::parse_double(f[3]);
    const auto cf = csv::parse_double(f[4]);
    const auto a3 = csv::parse_double(f[5]);
    const auto collapse = csv::parse_int(f[6]);
    const auto event = parse_event_kind(f[7]);
    if ((!event && f[7] != "-") || !t || !phase || !ready || !a1 || !cf || !a3 || !collapse || *phase < 1 ||
        *phase > static_cast<long long>(kPhases) || !std::isfinite(*a1) || !std::isfinite(*cf) ||
        !std::isfinite(*a3)) {
      throw Error(ErrorKind::Parse, fmt::format("line {}: malformed label row", line_no));
    }
    out.push_back({*t, static_cast<std::size_t>(*phase - 1), *ready != 0, *a1, *cf, *a3,
                   *collapse != 0, event});
  }
  return out;
}

std::vector<LabeledEvent> labeled_collapses(std::span<const LabelRow> labels) {
  std::vector<LabeledEvent> out;
  std::array<bool, kPhases> in_run{};
  std::array<double, kPhases> last_t{};
  for (const auto& r : labels) {
    const auto k = r.phase;
    if (r.collapse) {
      in_run[k] = true;
      last_t[k] = r.t;
    } else if (in_run[k]) {
      out.push_back({last_t[k], k});
      in_run[k] = false;
    }
  }
  for (std::size_t k = 0; k < kPhases; ++k) {
    if (in_run[k]) out.push_back({last_t[k], k});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const LabeledEvent& a, const LabeledEvent& b) { return a.t < b.t; });
  return out;
}

std::vector<TrainingSample> make_training_samples(std::span<const TelemetrySample> telemetry,
                                                  std::span<const LabelRow> labels,
                                                  double i_set, const PredictorConfig& predictor) {
  if (labels.size() != telemetry.size() * kPhases) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("{} label rows for {} telemetry rows (expected {})", labels.size(),
                            telemetry.size(), telemetry.size() * kPhases));
  }
  const std::size_t n = predictor.lags;
  std::vector<PhaseHistory> hist(kPhases, PhaseHistory(PhaseHistory::default_capacity(n)));
  std::vector<TrainingSample> out;
  for (std::size_t i = 0; i < telemetry.size(); ++i) {
    const auto& s = telemetry[i];
    for (std::size_t k = 0; k < kPhases; ++k) {
      const auto& lab = labels[i * kPhases + k];
      if (lab.phase != k || std::abs(lab.t - s.t) > kTimeEps) {
        throw Error(ErrorKind::DimensionMismatch,
                    fmt::format("label row {} (t={}, phase={}) does not match telemetry t={}",
                                i * kPhases + k, lab.t, lab.phase + 1, s.t));
      }
      hist[k].push(s.ia[k] - i_set);
      if (!lab.ready || hist[k].size() < n + 1) continue;
      TrainingSample ts;
      ts.x = build_features(hist[k], n);
      for (double& v : ts.x) v /= predictor.feature_scale;
      ts.target = {lab.a1, lab.cf, lab.a3};
      out.push_back(std::move(ts));
    }
  }
  return out;
}

namespace {

constexpr std::size_t kMeansIterations = 50;
constexpr double kMadToSigma = 1.4826;
constexpr std::size_t kMeansSampleLimit = 20'000;

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

// k-means++ seeding followed by Lloyd iterations; conclusions are the mean
// targets of each cluster's members.
void cluster_seeds(std::vector<const TrainingSample*> members, std::size_t k, std::mt19937_64& rng,
                   std::vector<RuleSeed>& out) {
  if (k == 0 || members.empty()) return;
  if (members.size() > kMeansSampleLimit) {
    std::vector<const TrainingSample*> picked;
    std::sample(members.begin(), members.end(), std::back_inserter(picked), kMeansSampleLimit, rng);
    members = std::move(picked);
  }
  const std::size_t dim = members.front()->x.size();
  std::vector<std::vector<double>> centers;
  std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
  centers.push_back(members[pick(rng)]->x);
  std::vector<double> d2(members.size());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      double best = sq_dist(members[i]->x, centers.front());
      for (const auto& c : centers) best = std::min(best, sq_dist(members[i]->x, c));
      d2[i] = best;
      total += best;
    }
    if (!(total > 0.0)) {
      centers.push_back(centers.back());
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng);
    std::size_t i = 0;
    for (; i + 1 < members.size() && r >= d2[i]; ++i) r -= d2[i];
    centers.push_back(members[i]->x);
  }

  std::vector<std::size_t> assign(members.size(), 0);
  for (std::size_t it = 0; it < kMeansIterations; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      std::size_t best = 0;
      double best_d = sq_dist(members[i]->x, centers[0]);
      for (std::size_t j = 1; j < k; ++j) {
        const double d = sq_dist(members[i]->x, centers[j]);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
    }
    if (!changed) break;
    std::vector<std::vector<double>> sum(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t d = 0; d < dim; ++d) sum[assign[i]][d] += members[i]->x[d];
      ++count[assign[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (count[j] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) centers[j][d] = sum[j][d] / static_cast<double>(count[j]);
    }
  }

  std::vector<Outputs> mean(k, Outputs{});
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t o = 0; o < kOutputs; ++o) mean[assign[i]][o] += members[i]->target[o];
    ++count[assign[i]];
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (count[j] > 0) {
      for (double& m : mean[j]) m /= static_cast<double>(count[j]);
    }
    mean[j][1] = std::clamp(mean[j][1], 0.0, 1.0);
    mean[j][2] = std::clamp(mean[j][2], -1.0, 1.0);
    out.push_back({centers[j], mean[j]});
  }
}

}  // namespace

std::vector<RuleSeed> class_seeds(std::span<const TrainingSample> dataset, std::size_t k,
                                  std::uint64_t seed, double positive_cf) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "dataset is empty");
  if (k == 0) throw Error(ErrorKind::InvalidCount, "rule count must be >= 1");
  std::vector<const TrainingSample*> pos;
  std::vector<const TrainingSample*> neg;
  for (const auto& s : dataset) (s.target[1] > positive_cf ? pos : neg).push_back(&s);
  std::size_t k_pos = pos.empty() ? 0 : k / 2;
  if (neg.empty()) k_pos = k;
  std::vector<RuleSeed> seeds;
  seeds.reserve(k);
  std::mt19937_64 rng(seed);
  cluster_seeds(std::move(neg), k - k_pos, rng, seeds);
  cluster_seeds(std::move(pos), k_pos, rng, seeds);
  return seeds;
}

std::vector<double> feature_spread(std::span<const TrainingSample> dataset) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "dataset is empty");
  const std::size_t dim = dataset.front().x.size();
  std::vector<double> out(dim);
  std::vector<double> col(dataset.size());
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset[i].x.size() != dim) throw Error(ErrorKind::DimensionMismatch, "ragged feature rows");
      col[i] = dataset[i].x[d];
    }
    const auto mid = col.begin() + static_cast<long>(col.size() / 2);
    std::nth_element(col.begin(), mid, col.end());
    const double median = *mid;
    for (double& v : col) v = std::abs(v - median);
    std::nth_element(col.begin(), mid, col.end());
    out[d] = kMadToSigma * *mid;
  }
  return out;
}

void widen_rules(RbfNetwork& net, std::span<const double> floor) {
  if (floor.size() != net.input_size()) {
    throw Error(ErrorKind::DimensionMismatch, "width floor does not match the network inputs");
  }
  for (auto& r : net.rules) {
    for (std::size_t i = 0; i < net.n; ++i) {
      r.sigma1[i] = std::max(r.sigma1[i], floor[i]);
      r.sigma2[i] = std::max(r.sigma2[i], floor[net.n + i]);
    }
  }
}

}  // namespace eaf
