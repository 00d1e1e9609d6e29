#include "eaf/rbf.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "eaf/csv.hpp"
#include "eaf/error.hpp"

namespace eaf {

void RbfNetwork::validate() const {
  if (rules.empty()) throw Error(ErrorKind::InvalidCount, "network needs at least one rule");
  if (n == 0) throw Error(ErrorKind::InvalidCount, "lag count n must be >= 1");
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw Error(ErrorKind::InvalidConfig, "learning rate must be finite and > 0");
  }
  for (std::size_t j = 0; j < rules.size(); ++j) {
    const auto& r = rules[j];
    if (r.theta1.size() != n || r.sigma1.size() != n || r.theta2.size() != n ||
        r.sigma2.size() != n) {
      throw Error(ErrorKind::DimensionMismatch, fmt::format("rule {} does not have n={}", j, n));
    }
    for (const auto* v : {&r.theta1, &r.sigma1, &r.theta2, &r.sigma2}) {
      for (double p : *v) {
        if (!std::isfinite(p)) {
          throw Error(ErrorKind::NonFinite, fmt::format("rule {} has a non-finite parameter", j));
        }
      }
    }
    for (const auto* v : {&r.sigma1, &r.sigma2}) {
      for (double s : *v) {
        if (!(s > 0.0)) {
          throw Error(ErrorKind::NonPositiveSigma, fmt::format("rule {} has sigma <= 0", j));
        }
      }
    }
    for (double a : r.a) {
      if (!std::isfinite(a)) throw Error(ErrorKind::NonFinite, "non-finite conclusion");
    }
    if (r.a[1] < 0.0 || r.a[1] > 1.0 || r.a[2] < -1.0 || r.a[2] > 1.0) {
      throw Error(ErrorKind::OutOfRange, fmt::format("rule {} conclusions out of range", j));
    }
  }
}

double membership(double x, double theta, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::NonPositiveSigma, "membership: sigma must be > 0");
  const double d = x - theta;
  return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

namespace {

void check_input(std::span<const double> x, std::size_t n) {
  if (x.size() != 2 * n) {
    throw Error(ErrorKind::DimensionMismatch,
                fmt::format("feature vector has {} entries, expected {}", x.size(), 2 * n));
  }
}

// -log of one half of a rule's firing strength.
double neg_log_half(std::span<const double> x, const std::vector<double>& theta,
                    const std::vector<double>& sigma) {
  double acc = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = x[i] - theta[i];
    acc += (d * d) / (2.0 * sigma[i] * sigma[i]);
  }
  return acc;
}

struct Forward {
  std::vector<double> w;
  double total = 0.0;
  Outputs y{};
};

Forward forward(const RbfNetwork& net, std::span<const double> x) {
  check_input(x, net.n);
  const auto x1 = x.first(net.n);
  const auto x2 = x.subspan(net.n);
  Forward f;
  f.w.resize(net.rules.size());
  for (std::size_t j = 0; j < net.rules.size(); ++j) {
    const auto& r = net.rules[j];
    f.w[j] = std::exp(-(neg_log_half(x1, r.theta1, r.sigma1) + neg_log_half(x2, r.theta2, r.sigma2)));
    f.total += f.w[j];
  }
  if (!(f.total >= kFiringEpsilon)) {
    throw Error(ErrorKind::NoRuleFires,
                fmt::format("total firing strength {} below {}", f.total, kFiringEpsilon));
  }
  for (std::size_t j = 0; j < net.rules.size(); ++j) {
    const double wn = f.w[j] / f.total;
    for (std::size_t k = 0; k < kOutputs; ++k) f.y[k] += wn * net.rules[j].a[k];
  }
  return f;
}

double mean_membership(std::span<const double> x, const std::vector<double>& theta,
                       const std::vector<double>& sigma) {
  double acc = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) acc += membership(x[i], theta[i], sigma[i]);
  return acc / static_cast<double>(theta.size());
}

}  // namespace

FiringStrength firing_strength(std::span<const double> x, const RbfRule& rule) {
  const std::size_t n = rule.theta1.size();
  check_input(x, n);
  FiringStrength f{0.0, 1.0, 1.0};
  for (std::size_t i = 0; i < n; ++i) {
    f.w1 *= membership(x[i], rule.theta1[i], rule.sigma1[i]);
    f.w2 *= membership(x[n + i], rule.theta2[i], rule.sigma2[i]);
  }
  f.w = f.w1 * f.w2;
  return f;
}

Inference infer(const RbfNetwork& net, std::span<const double> x) {
  const auto f = forward(net, x);
  Inference out;
  out.y = f.y;
  out.normalized.resize(f.w.size());
  for (std::size_t j = 0; j < f.w.size(); ++j) out.normalized[j] = f.w[j] / f.total;
  out.fired_rule = static_cast<std::size_t>(
      std::distance(f.w.begin(), std::max_element(f.w.begin(), f.w.end())));
  const auto& r = net.rules[out.fired_rule];
  out.mu1_bar = mean_membership(x.first(net.n), r.theta1, r.sigma1);
  out.mu2_bar = mean_membership(x.subspan(net.n), r.theta2, r.sigma2);
  return out;
}

double loss(const RbfNetwork& net, const TrainingSample& sample) {
  const auto f = forward(net, sample.x);
  double e = 0.0;
  for (std::size_t k = 0; k < kOutputs; ++k) {
    const double r = sample.target[k] - f.y[k];
    e += r * r;
  }
  return 0.5 * e;
}

std::size_t parameter_count(const RbfNetwork& net) {
  return net.rules.size() * (4 * net.n + kOutputs);
}

std::vector<double> flatten(const RbfNetwork& net) {
  std::vector<double> p;
  p.reserve(parameter_count(net));
  for (const auto& r : net.rules) {
    for (const auto* v : {&r.theta1, &r.sigma1, &r.theta2, &r.sigma2}) {
      p.insert(p.end(), v->begin(), v->end());
    }
    p.insert(p.end(), r.a.begin(), r.a.end());
  }
  return p;
}

void unflatten(RbfNetwork& net, std::span<const double> params) {
  if (params.size() != parameter_count(net)) {
    throw Error(ErrorKind::DimensionMismatch, "parameter vector size does not match network");
  }
  std::size_t idx = 0;
  for (auto& r : net.rules) {
    for (auto* v : {&r.theta1, &r.sigma1, &r.theta2, &r.sigma2}) {
      for (auto& p : *v) p = params[idx++];
    }
    for (auto& a : r.a) a = params[idx++];
  }
}

// With S = sum_j w_j and y_k = sum_j w_j a_jk / S:
//   dE/da_jk  = -(T_k - y_k) w_j / S
//   dE/dw_j   = -sum_k (T_k - y_k) (a_jk - y_k) / S
//   dw_j/dtheta_ji = w_j (x_i - theta_ji) / sigma_ji^2
//   dw_j/dsigma_ji = w_j (x_i - theta_ji)^2 / sigma_ji^3
std::vector<double> loss_gradient(const RbfNetwork& net, const TrainingSample& sample) {
  const auto f = forward(net, sample.x);
  Outputs residual{};
  for (std::size_t k = 0; k < kOutputs; ++k) residual[k] = sample.target[k] - f.y[k];

  const std::size_t n = net.n;
  std::vector<double> grad;
  grad.reserve(parameter_count(net));
  for (std::size_t j = 0; j < net.rules.size(); ++j) {
    const auto& r = net.rules[j];
    const double wn = f.w[j] / f.total;
    double coupling = 0.0;
    for (std::size_t k = 0; k < kOutputs; ++k) coupling += residual[k] * (r.a[k] - f.y[k]);
    // dE/dw_j * w_j
    const double scale = -coupling * wn;

    auto add_block = [&](std::size_t offset, const std::vector<double>& theta,
                         const std::vector<double>& sigma) {
      for (std::size_t i = 0; i < n; ++i) {
        const double d = sample.x[offset + i] - theta[i];
        grad.push_back(scale * d / (sigma[i] * sigma[i]));
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double d = sample.x[offset + i] - theta[i];
        grad.push_back(scale * d * d / (sigma[i] * sigma[i] * sigma[i]));
      }
    };
    add_block(0, r.theta1, r.sigma1);
    add_block(n, r.theta2, r.sigma2);
    for (std::size_t k = 0; k < kOutputs; ++k) grad.push_back(-residual[k] * wn);
  }
  return grad;
}

void train_step(RbfNetwork& net, const TrainingSample& sample) {
  const auto grad = loss_gradient(net, sample);
  std::size_t idx = 0;
  for (auto& r : net.rules) {
    for (auto* v : {&r.theta1, &r.sigma1, &r.theta2, &r.sigma2}) {
      const bool is_sigma = v == &r.sigma1 || v == &r.sigma2;
      for (auto& p : *v) {
        p -= net.eta * grad[idx++];
        if (is_sigma) p = std::max(p, kSigmaFloor);
      }
    }
    for (auto& a : r.a) a -= net.eta * grad[idx++];
    r.a[1] = std::clamp(r.a[1], 0.0, 1.0);
    r.a[2] = std::clamp(r.a[2], -1.0, 1.0);
  }
}

double mean_loss(const RbfNetwork& net, std::span<const TrainingSample> dataset) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "dataset is empty");
  double acc = 0.0;
  for (const auto& s : dataset) acc += loss(net, s);
  return acc / static_cast<double>(dataset.size());
}

TrainResult train(RbfNetwork net, std::span<const TrainingSample> dataset, std::size_t epochs,
                  std::uint64_t seed) {
  if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "dataset is empty");
  net.validate();
  for (const auto& s : dataset) check_input(s.x, net.n);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);

  TrainResult out{std::move(net), {}, {}};
  out.loss_trace.reserve(epochs);
  out.skipped.reserve(epochs);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t skipped = 0;
    for (std::size_t idx : order) {
      try {
        train_step(out.net, dataset[idx]);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::NoRuleFires) throw;
        ++skipped;
      }
    }
    double acc = 0.0;
    std::size_t covered = 0;
    for (const auto& s : dataset) {
      try {
        acc += loss(out.net, s);
        ++covered;
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::NoRuleFires) throw;
      }
    }
    if (covered == 0) {
      throw Error(ErrorKind::NoRuleFires,
                  fmt::format("epoch {}: no sample is covered by the rules", epoch + 1));
    }
    out.loss_trace.push_back(acc / static_cast<double>(covered));
    out.skipped.push_back(skipped);
  }
  return out;
}

std::vector<double> build_features(const PhaseHistory& history, std::size_t n) {
  if (history.size() < n + 1) {
    throw Error(ErrorKind::InsufficientHistory,
                fmt::format("features need {} entries, {} stored", n + 1, history.size()));
  }
  std::vector<double> x(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = history.e(i + 1);
    x[n + i] = history.de(i + 1);
  }
  return x;
}

namespace {

constexpr std::size_t kQuantileSampleLimit = 50'000;

// Linear-interpolation quantile of sorted values.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Half the mean spacing of k sorted centers; falls back to half the span.
double initial_sigma(double first, double last, std::size_t k, double span) {
  double s = k > 1 ? 0.5 * (last - first) / static_cast<double>(k - 1) : 0.5 * span;
  if (!(s > 0.0)) s = 0.5 * span;
  if (!(s > 0.0)) s = 1.0;
  return s;
}

RbfRule make_rule(const std::vector<double>& center, const std::vector<double>& sigma,
                  std::size_t n, const Outputs& a) {
  RbfRule r;
  r.theta1.assign(center.begin(), center.begin() + static_cast<long>(n));
  r.theta2.assign(center.begin() + static_cast<long>(n), center.end());
  r.sigma1.assign(sigma.begin(), sigma.begin() + static_cast<long>(n));
  r.sigma2.assign(sigma.begin() + static_cast<long>(n), sigma.end());
  r.a = a;
  return r;
}

}  // namespace

RbfNetwork init_network(const InitOptions& opts) {
  const std::size_t n = opts.n;
  const std::size_t dim = 2 * n;
  if (n == 0) throw Error(ErrorKind::InvalidCount, "lag count n must be >= 1");
  if (opts.seeds.empty() && opts.k == 0) {
    throw Error(ErrorKind::InvalidCount, "rule count must be >= 1");
  }
  for (const auto& row : opts.data) {
    if (row.size() != dim) {
      throw Error(ErrorKind::DimensionMismatch,
                  fmt::format("data row has {} entries, expected {}", row.size(), dim));
    }
  }

  // Per-dimension data span, used as the sigma fallback.
  std::vector<double> span(dim, opts.range_hi - opts.range_lo);
  std::vector<std::vector<double>> columns;
  if (!opts.data.empty()) {
    std::vector<std::size_t> rows(opts.data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    if (rows.size() > kQuantileSampleLimit) {
      std::vector<std::size_t> picked;
      std::mt19937_64 rng(opts.seed);
      std::sample(rows.begin(), rows.end(), std::back_inserter(picked), kQuantileSampleLimit, rng);
      rows = std::move(picked);
    }
    columns.assign(dim, {});
    for (std::size_t d = 0; d < dim; ++d) {
      columns[d].reserve(rows.size());
      for (std::size_t r : rows) columns[d].push_back(opts.data[r][d]);
      std::sort(columns[d].begin(), columns[d].end());
      span[d] = columns[d].back() - columns[d].front();
    }
  }

  RbfNetwork net;
  net.n = n;
  net.eta = opts.eta;

  if (!opts.seeds.empty()) {
    const std::size_t k = opts.seeds.size();
    std::vector<double> sigma(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      double lo = opts.seeds.front().center.at(d);
      double hi = lo;
      for (const auto& s : opts.seeds) {
        if (s.center.size() != dim) {
          throw Error(ErrorKind::DimensionMismatch, "rule seed center has wrong length");
        }
        lo = std::min(lo, s.center[d]);
        hi = std::max(hi, s.center[d]);
      }
      sigma[d] = initial_sigma(lo, hi, k, span[d]);
    }
    for (const auto& s : opts.seeds) net.rules.push_back(make_rule(s.center, sigma, n, s.conclusions));
  } else {
    const std::size_t k = opts.k;
    std::vector<std::vector<double>> centers(k, std::vector<double>(dim));
    for (std::size_t d = 0; d < dim; ++d) {
      for (std::size_t j = 0; j < k; ++j) {
        const double q = static_cast<double>(j + 1) / static_cast<double>(k + 1);
        centers[j][d] = columns.empty() ? opts.range_lo + q * (opts.range_hi - opts.range_lo)
                                        : quantile(columns[d], q);
      }
    }
    std::vector<double> sigma(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      sigma[d] = initial_sigma(centers.front()[d], centers.back()[d], k, span[d]);
    }
    for (const auto& c : centers) net.rules.push_back(make_rule(c, sigma, n, {0.0, 0.5, 0.0}));
  }
  net.validate();
  return net;
}

void save_network(std::ostream& out, const RbfNetwork& net) {
  out << "rbfnet v1 n=" << net.n << " M=" << net.rules.size() << " eta=" << csv::num(net.eta)
      << '\n';
  for (const auto& r : net.rules) {
    bool first = true;
    auto put = [&](double v) {
      if (!first) out << ' ';
      out << csv::num(v);
      first = false;
    };
    for (const auto* v : {&r.theta1, &r.sigma1, &r.theta2, &r.sigma2}) {
      for (double p : *v) put(p);
    }
    for (double a : r.a) put(a);
    out << '\n';
  }
}

RbfNetwork load_network(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!csv::next_line(in, line, line_no)) throw Error(ErrorKind::Parse, "model file is empty");

  const auto head = csv::split(line, ' ');
  auto field = [&](std::size_t i, std::string_view key) -> std::string_view {
    if (i >= head.size() || head[i].substr(0, key.size()) != key) {
      throw Error(ErrorKind::Parse, fmt::format("line 1: expected '{}' in model header", key));
    }
    return head[i].substr(key.size());
  };
  if (head.size() != 5 || head[0] != "rbfnet" || head[1] != "v1") {
    throw Error(ErrorKind::Parse, "line 1: expected 'rbfnet v1 n=<n> M=<M> eta=<eta>'");
  }
  const auto n = csv::parse_int(field(2, "n="));
  const auto m = csv::parse_int(field(3, "M="));
  const auto eta = csv::parse_double(field(4, "eta="));
  if (!n || !m || !eta || *n < 1 || *m < 1) {
    throw Error(ErrorKind::Parse, "line 1: malformed model header values");
  }

  RbfNetwork net;
  net.n = static_cast<std::size_t>(*n);
  net.eta = *eta;
  const std::size_t per_rule = 4 * net.n + kOutputs;
  for (long long j = 0; j < *m; ++j) {
    if (!csv::next_line(in, line, line_no)) {
      throw Error(ErrorKind::Parse, fmt::format("model declares {} rules, found {}", *m, j));
    }
    const auto fields = csv::split(line, ' ');
    if (fields.size() != per_rule) {
      throw Error(ErrorKind::Parse, fmt::format("line {}: expected {} values, got {}", line_no,
                                                per_rule, fields.size()));
    }
    std::vector<double> values;
    values.reserve(per_rule);
    for (auto f : fields) {
      const auto v = csv::parse_double(f);
      if (!v) throw Error(ErrorKind::Parse, fmt::format("line {}: bad number '{}'", line_no, f));
      values.push_back(*v);
    }
    RbfRule r;
    auto take = [&](std::size_t offset) {
      return std::vector<double>(values.begin() + static_cast<long>(offset),
                                 values.begin() + static_cast<long>(offset + net.n));
    };
    r.theta1 = take(0);
    r.sigma1 = take(net.n);
    r.theta2 = take(2 * net.n);
    r.sigma2 = take(3 * net.n);
    for (std::size_t k = 0; k < kOutputs; ++k) r.a[k] = values[4 * net.n + k];
    net.rules.push_back(std::move(r));
  }
  net.validate();
  return net;
}

}  // namespace eaf
