#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "eaf/rbf.hpp"
#include "experiments.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace eaf;
using experiment::random_network;
using experiment::random_sample;

namespace {

RbfNetwork single_rule(std::size_t n, Outputs a) {
  RbfNetwork net;
  net.n = n;
  net.rules.push_back({std::vector<double>(n, 0.0), std::vector<double>(n, 1.0),
                       std::vector<double>(n, 0.0), std::vector<double>(n, 1.0), a});
  return net;
}

}  // namespace

TEST_CASE("membership examples") {
  CHECK(membership(2.0, 2.0, 0.5) == 1.0);
  CHECK(membership(1.5, 1.0, 0.5) == doctest::Approx(std::exp(-0.5)));
  CHECK_ERROR_KIND(membership(0.0, 0.0, 0.0), ErrorKind::NonPositiveSigma);
  CHECK_ERROR_KIND(membership(0.0, 0.0, -1.0), ErrorKind::NonPositiveSigma);
}

TEST_CASE("firing strength examples") {
  RbfRule r{{1.0}, {0.5}, {2.0}, {0.3}, {}};
  std::vector<double> at_means{1.0, 2.0};
  const auto peak = firing_strength(at_means, r);
  CHECK(peak.w == 1.0);
  CHECK(peak.w1 == 1.0);
  CHECK(peak.w2 == 1.0);
  std::vector<double> off{1.5, 2.0};
  CHECK(firing_strength(off, r).w == doctest::Approx(std::exp(-0.5)));

  RbfRule r2{{0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0}, {}};
  std::vector<double> x{1.0, 1.0, 0.0, 0.0};
  const auto f = firing_strength(x, r2);
  CHECK(f.w1 == doctest::Approx(std::exp(-1.0)));
  CHECK(f.w2 == 1.0);
  std::vector<double> wrong{1.0, 2.0, 3.0};
  CHECK_ERROR_KIND(firing_strength(wrong, r2), ErrorKind::DimensionMismatch);
}

TEST_CASE("infer examples") {
  const auto one = single_rule(2, {0.3, 0.6, -1.0});
  std::vector<double> anywhere{5.0, -3.0, 2.0, 1.0};
  CHECK(infer(one, anywhere).y == Outputs{0.3, 0.6, -1.0});

  RbfNetwork two = single_rule(1, {0.2, 0.0, 0.0});
  two.rules.push_back(two.rules[0]);
  two.rules[1].a = {0.6, 0.0, 0.0};
  std::vector<double> x{0.4, -0.2};
  CHECK(infer(two, x).y[0] == doctest::Approx(0.4));

  std::vector<double> far{1e6, 1e6, 1e6, 1e6};
  CHECK_ERROR_KIND(infer(one, far), ErrorKind::NoRuleFires);
}

TEST_CASE("infer reports memberships of the strongest rule") {
  RbfNetwork net = single_rule(2, {0.0, 0.5, 0.0});
  net.rules.push_back({{3.0, 3.0}, {1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0}, {0.0, 0.5, 0.0}});
  std::vector<double> x{3.0, 2.0, 0.0, 1.0};
  const auto inf = infer(net, x);
  CHECK(inf.fired_rule == 1);
  CHECK(inf.mu1_bar == doctest::Approx((1.0 + std::exp(-0.5)) / 2.0));
  CHECK(inf.mu2_bar == doctest::Approx((1.0 + std::exp(-0.5)) / 2.0));
}

TEST_CASE("loss examples") {
  const auto zero = single_rule(1, {0.0, 0.0, 0.0});
  TrainingSample s{{0.0, 0.0}, {1.0, 0.0, 0.0}};
  CHECK(loss(zero, s) == doctest::Approx(0.5));
  const auto half = single_rule(1, {0.5, 0.5, 0.5});
  s.target = {1.0, 1.0, 1.0};
  CHECK(loss(half, s) == doctest::Approx(0.375));
  s.target = {0.5, 0.5, 0.5};
  CHECK(loss(half, s) == 0.0);
}

TEST_CASE("train_step at a fixed point leaves the network unchanged") {
  std::mt19937_64 rng(1);
  auto net = random_network(3, 4, rng);
  auto s = random_sample(net, rng);
  s.target = infer(net, s.x).y;
  const auto before = net;
  train_step(net, s);
  CHECK(net == before);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(42);
  int checked = 0;
  for (std::size_t n : {1u, 3u, 5u}) {
    for (std::size_t m : {1u, 2u, 5u}) {
      for (int trial = 0; trial < 12; ++trial) {
        const auto net = random_network(n, m, rng);
        const auto s = random_sample(net, rng);
        const auto analytic = loss_gradient(net, s);
        const auto numeric = oracle::fd_gradient(net, s, 1e-6);
        REQUIRE(analytic.size() == parameter_count(net));
        for (std::size_t i = 0; i < analytic.size(); ++i) {
          CHECK_MESSAGE(oracle::gradient_close(analytic[i], numeric[i], 1e-5, 1e-8),
                        "param " << i << " analytic " << analytic[i] << " numeric " << numeric[i]);
        }
        ++checked;
      }
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("repeated steps on one sample never increase its loss") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto net = random_network(2, 3, rng);
    net.eta = 0.01;
    const auto s = random_sample(net, rng);
    double last = loss(net, s);
    for (int step = 0; step < 100; ++step) {
      train_step(net, s);
      const double now = loss(net, s);
      CHECK(now <= last + 1e-15);
      last = now;
    }
  }
}

TEST_CASE("train examples") {
  std::mt19937_64 rng(3);
  auto net = random_network(2, 3, rng);
  const std::vector<TrainingSample> one{random_sample(net, rng)};
  const double start = mean_loss(net, one);
  const auto trained = train(net, one, 200, 1);
  CHECK(trained.loss_trace.size() == 200);
  CHECK(trained.loss_trace.back() < start);

  const auto none = train(net, one, 0, 1);
  CHECK(none.net == net);
  CHECK(none.loss_trace.empty());

  CHECK_ERROR_KIND(train(net, std::vector<TrainingSample>{}, 5, 1), ErrorKind::EmptyDataset);
  std::vector<TrainingSample> bad{{{1.0, 2.0}, {}}};
  CHECK_ERROR_KIND(train(net, bad, 5, 1), ErrorKind::DimensionMismatch);
}

TEST_CASE("training is deterministic per seed") {
  std::mt19937_64 rng(8);
  auto net = random_network(2, 3, rng);
  std::vector<TrainingSample> data;
  for (int i = 0; i < 64; ++i) data.push_back(random_sample(net, rng));
  const auto a = train(net, data, 20, 99);
  const auto b = train(net, data, 20, 99);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.net == b.net);
  const auto c = train(net, data, 20, 100);
  CHECK(c.loss_trace != a.loss_trace);
}

TEST_CASE("training skips samples that leave coverage") {
  auto net = single_rule(1, {0.0, 0.5, 0.0});
  std::vector<TrainingSample> data{{{0.1, 0.0}, {0.2, 0.6, 0.1}}, {{1e4, 0.0}, {0.0, 0.0, 0.0}}};
  const auto r = train(net, data, 3, 1);
  REQUIRE(r.skipped.size() == 3);
  CHECK(r.skipped[0] == 1);
  CHECK(r.loss_trace.back() < 0.5 * ((0.2 * 0.2) + 0.1 * 0.1 + 0.1 * 0.1));
}

TEST_CASE("teacher-student recovery") {
  const auto r = experiment::teacher_student(2024, 2000, 1e-3);
  CHECK(r.final_heldout < 1e-3);
  CHECK(r.final_heldout < r.initial_heldout);
}

TEST_CASE("property: normalized weights sum to one and outputs stay in the conclusion hull") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 2000; ++i) {
    const auto net = random_network(1 + i % 5, 1 + i % 6, rng);
    const auto s = random_sample(net, rng);
    const auto inf = infer(net, s.x);
    double sum = 0.0;
    for (double w : inf.normalized) sum += w;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (std::size_t k = 0; k < kOutputs; ++k) {
      double lo = net.rules[0].a[k];
      double hi = lo;
      for (const auto& r : net.rules) {
        lo = std::min(lo, r.a[k]);
        hi = std::max(hi, r.a[k]);
      }
      CHECK(inf.y[k] >= lo - 1e-12);
      CHECK(inf.y[k] <= hi + 1e-12);
    }
  }
}

TEST_CASE("property: shifting inputs and means together leaves inference unchanged") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto net = random_network(3, 4, rng);
    const auto s = random_sample(net, rng);
    const auto base = infer(net, s.x);
    const double c = std::uniform_real_distribution<double>(-50.0, 50.0)(rng);
    auto shifted = net;
    for (auto& r : shifted.rules) {
      for (auto& t : r.theta1) t += c;
      for (auto& t : r.theta2) t += c;
    }
    auto x = s.x;
    for (auto& v : x) v += c;
    const auto moved = infer(shifted, x);
    for (std::size_t k = 0; k < kOutputs; ++k) {
      CHECK(moved.y[k] == doctest::Approx(base.y[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("build_features examples") {
  PhaseHistory h(6);
  for (double e : {1.0, 2.0, 3.0, 4.0, 5.0}) h.push(e);
  // Newest is 5; lags start one step back.
  CHECK(build_features(h, 2) == std::vector<double>{4.0, 3.0, 1.0, 1.0});

  PhaseHistory down(6);
  for (double e : {5.0, 4.0, 3.0, 2.0, 1.0}) down.push(e);
  CHECK(build_features(down, 2) == std::vector<double>{2.0, 3.0, -1.0, -1.0});

  PhaseHistory flat(6);
  for (int i = 0; i < 6; ++i) flat.push(7.0);
  const auto x = build_features(flat, 5);
  for (std::size_t i = 5; i < 10; ++i) CHECK(x[i] == 0.0);

  PhaseHistory thin(6);
  thin.push(1.0);
  thin.push(2.0);
  CHECK_ERROR_KIND(build_features(thin, 2), ErrorKind::InsufficientHistory);
}

TEST_CASE("init_network examples") {
  InitOptions single;
  single.n = 1;
  single.k = 1;
  const auto one = init_network(single);
  REQUIRE(one.rules.size() == 1);
  CHECK(one.rules[0].theta1[0] == 0.0);
  CHECK(one.rules[0].theta2[0] == 0.0);
  CHECK(one.rules[0].a == Outputs{0.0, 0.5, 0.0});

  std::vector<std::vector<double>> rows;
  for (int v = 0; v <= 900; ++v) rows.push_back({static_cast<double>(v), static_cast<double>(v)});
  InitOptions q;
  q.n = 1;
  q.k = 3;
  q.data = rows;
  const auto net = init_network(q);
  REQUIRE(net.rules.size() == 3);
  CHECK(net.rules[0].theta1[0] == doctest::Approx(225.0));
  CHECK(net.rules[1].theta1[0] == doctest::Approx(450.0));
  CHECK(net.rules[2].theta2[0] == doctest::Approx(675.0));
  CHECK(net.rules[0].sigma1[0] == doctest::Approx(112.5));

  InitOptions zero;
  zero.n = 1;
  zero.k = 0;
  CHECK_ERROR_KIND(init_network(zero), ErrorKind::InvalidCount);

  InitOptions seeded;
  seeded.n = 1;
  seeded.seeds = {{{0.0, 0.0}, {0.1, 0.2, 0.3}}, {{4.0, 2.0}, {0.0, 0.9, -1.0}}};
  const auto s = init_network(seeded);
  CHECK(s.rules[1].theta1[0] == 4.0);
  CHECK(s.rules[1].sigma1[0] == 2.0);
  CHECK(s.rules[1].sigma2[0] == 1.0);
  CHECK(s.rules[1].a == Outputs{0.0, 0.9, -1.0});

  CHECK(init_network(q) == net);
}

TEST_CASE("model file round-trips bit-exactly") {
  std::mt19937_64 rng(12);
  const auto net = random_network(5, 4, rng);
  std::ostringstream out;
  save_network(out, net);
  CHECK(out.str().rfind("rbfnet v1 n=5 M=4 eta=0.01\n", 0) == 0);
  std::istringstream in(out.str());
  CHECK(load_network(in) == net);
}

TEST_CASE("model file errors") {
  std::istringstream empty("");
  CHECK_ERROR_KIND(load_network(empty), ErrorKind::Parse);
  std::istringstream header("rbfnet v2 n=1 M=1 eta=0.1\n");
  CHECK_ERROR_KIND(load_network(header), ErrorKind::Parse);
  std::istringstream short_rule("rbfnet v1 n=1 M=1 eta=0.1\n0 1 0 1 0 0.5\n");
  CHECK_ERROR_KIND(load_network(short_rule), ErrorKind::Parse);
  std::istringstream missing("rbfnet v1 n=1 M=2 eta=0.1\n0 1 0 1 0 0.5 0\n");
  CHECK_ERROR_KIND(load_network(missing), ErrorKind::Parse);
  std::istringstream bad_sigma("rbfnet v1 n=1 M=1 eta=0.1\n0 0 0 1 0 0.5 0\n");
  CHECK_ERROR_KIND(load_network(bad_sigma), ErrorKind::NonPositiveSigma);
}

TEST_CASE("network validation") {
  auto net = single_rule(2, {0.0, 0.5, 0.0});
  CHECK_NOTHROW(net.validate());
  net.rules[0].a[1] = 1.5;
  CHECK_ERROR_KIND(net.validate(), ErrorKind::OutOfRange);
  net = single_rule(2, {0.0, 0.5, 0.0});
  net.rules[0].sigma2[1] = 0.0;
  CHECK_ERROR_KIND(net.validate(), ErrorKind::NonPositiveSigma);
  net = single_rule(2, {0.0, 0.5, 0.0});
  net.rules[0].theta1.pop_back();
  CHECK_ERROR_KIND(net.validate(), ErrorKind::DimensionMismatch);
  net = single_rule(2, {0.0, 0.5, 0.0});
  net.eta = 0.0;
  CHECK_ERROR_KIND(net.validate(), ErrorKind::InvalidConfig);
}
