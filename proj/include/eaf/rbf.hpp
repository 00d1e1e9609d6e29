#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "eaf/telemetry.hpp"

namespace eaf {

inline constexpr std::size_t kOutputs = 3;
using Outputs = std::array<double, kOutputs>;

// One fuzzy rule as a Gaussian RBF cell. theta1/sigma1 cover the error lags,
// theta2/sigma2 the derivation lags; the conclusion part is constant.
struct RbfRule {
  std::vector<double> theta1;
  std::vector<double> sigma1;
  std::vector<double> theta2;
  std::vector<double> sigma2;
  Outputs a{};  // (a_j1, a_j2, a_j3)

  bool operator==(const RbfRule&) const = default;
};

struct RbfNetwork {
  std::size_t n = 0;
  double eta = 0.01;
  std::vector<RbfRule> rules;

  // Throws on empty rule set, shape mismatch, non-positive sigma, eta <= 0.
  void validate() const;
  std::size_t input_size() const { return 2 * n; }

  bool operator==(const RbfNetwork&) const = default;
};

struct TrainingSample {
  std::vector<double> x;  // (e lags, derivation lags), length 2n
  Outputs target{};
};

// Below this total firing strength inference refuses to answer.
inline constexpr double kFiringEpsilon = 1e-12;
inline constexpr double kSigmaFloor = 1e-9;

double membership(double x, double theta, double sigma);

struct FiringStrength {
  double w = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
};

FiringStrength firing_strength(std::span<const double> x, const RbfRule& rule);

struct Inference {
  Outputs y{};
  double mu1_bar = 0.0;  // mean error-lag membership of the strongest rule
  double mu2_bar = 0.0;  // mean derivation-lag membership of the strongest rule
  std::size_t fired_rule = 0;
  std::vector<double> normalized;  // w_j / sum w
};

Inference infer(const RbfNetwork& net, std::span<const double> x);

double loss(const RbfNetwork& net, const TrainingSample& sample);

// Flat parameter view, rule-major: theta1, sigma1, theta2, sigma2, a.
std::size_t parameter_count(const RbfNetwork& net);
std::vector<double> flatten(const RbfNetwork& net);
void unflatten(RbfNetwork& net, std::span<const double> params);

// dE/dU for every parameter, in flatten() order.
std::vector<double> loss_gradient(const RbfNetwork& net, const TrainingSample& sample);

// U <- U + eta * (-dE/dU), then conclusions projected onto their ranges.
void train_step(RbfNetwork& net, const TrainingSample& sample);

struct TrainResult {
  RbfNetwork net;
  std::vector<double> loss_trace;  // mean loss over the covered samples after each epoch
  std::vector<std::size_t> skipped;  // per epoch: samples no rule covered at their step
};

// Samples that raise NoRuleFires at their turn are skipped for that step and
// left out of that epoch's mean loss. Throws NoRuleFires only if an epoch
// ends with no covered sample at all.

TrainResult train(RbfNetwork net, std::span<const TrainingSample> dataset, std::size_t epochs,
                  std::uint64_t seed);

double mean_loss(const RbfNetwork& net, std::span<const TrainingSample> dataset);

// Network inputs at the current moment: (e(t-1)..e(t-n), de(t-1)..de(t-n)).
std::vector<double> build_features(const PhaseHistory& history, std::size_t n);

struct RuleSeed {
  std::vector<double> center;  // length 2n
  Outputs conclusions{};
};

struct InitOptions {
  std::size_t n = 5;
  double eta = 0.01;
  std::size_t k = 0;                       // rule count when no seeds given
  std::vector<RuleSeed> seeds;             // explicit centers take precedence
  std::span<const std::vector<double>> data;  // optional feature rows
  double range_lo = -1.0;                  // input range used without data
  double range_hi = 1.0;
  std::uint64_t seed = 0;
};

RbfNetwork init_network(const InitOptions& opts);

void save_network(std::ostream& out, const RbfNetwork& net);
RbfNetwork load_network(std::istream& in);

}  // namespace eaf
