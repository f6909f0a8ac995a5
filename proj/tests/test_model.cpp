#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "hcrpl/model.hpp"
#include "support/test_util.hpp"

using namespace hcrpl;
using testutil::close;
using testutil::close_all;

namespace {

std::vector<Sample> two_blob_set(int per_class, double separation,
                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.id = out.size();
      s.label = c;
      s.features = {rng.gaussian(c * separation, 0.5),
                    rng.gaussian(c * separation, 0.5)};
      out.push_back(std::move(s));
    }
  return out;
}

}  // namespace

TEST_CASE("init_params is seeded and shaped", "[model]") {
  const ModelParams a = init_params(3, 5, 21);
  const ModelParams b = init_params(3, 5, 21);
  CHECK(a.weights == b.weights);
  CHECK(a.weights.size() == 15);
  CHECK(a.bias == std::vector<double>(3, 0.0));
  const ModelParams c = init_params(3, 5, 22);
  CHECK(a.weights != c.weights);
}

TEST_CASE("predict_proba is a softmax over the logits", "[model]") {
  ModelParams p;
  p.num_classes = 2;
  p.dim = 2;
  p.weights.assign(4, 0.0);
  p.bias = {0.0, 0.0};
  CHECK(close_all(predict_proba(p, std::vector<double>{1.0, 2.0}).values(),
                  {0.5, 0.5}, 1e-12));

  p.bias = {std::log(2.0), 0.0};
  // oracle: softmax([ln 2, 0]) = [2/3, 1/3]
  CHECK(close_all(predict_proba(p, std::vector<double>{0.0, 0.0}).values(),
                  {2.0 / 3.0, 1.0 / 3.0}));

  // shift invariance
  ModelParams shifted = p;
  shifted.bias[0] += 7.5;
  shifted.bias[1] += 7.5;
  const auto base = predict_proba(p, std::vector<double>{0.3, -0.2});
  const auto moved = predict_proba(shifted, std::vector<double>{0.3, -0.2});
  CHECK(close_all(base.values(), moved.values(), 1e-12));

  CHECK_THROWS_MATCHES(predict_proba(p, std::vector<double>{1.0}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::dimension_mismatch;
                       }));
}

TEST_CASE("augment jitters with the configured scale", "[model]") {
  const std::vector<double> x{1.0, -2.0, 3.0};

  Rng rng(5);
  CHECK(augment(x, 0.0, rng) == x);

  Rng r1(6), r2(6);
  CHECK(augment(x, 0.4, r1) == augment(x, 0.4, r2));

  // Monte Carlo: empirical std of the jitter within 5%
  Rng mc(7);
  const double sigma = 0.7;
  double sum = 0.0, sumsq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double eps = augment(std::vector<double>{0.0}, sigma, mc)[0];
    sum += eps;
    sumsq += eps * eps;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sumsq / n - mean * mean);
  CHECK(std::abs(stddev - sigma) / sigma < 0.05);
}

TEST_CASE("sgd_epoch with zero learning rate is a no-op", "[model]") {
  const std::vector<Sample> data = two_blob_set(20, 4.0, 31);
  const ModelParams params = init_params(2, 2, 31);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  Rng rng(3);
  const ModelParams after = sgd_epoch(params, data, cfg, rng);
  CHECK(after.weights == params.weights);
  CHECK(after.bias == params.bias);
}

TEST_CASE("single-step gradient matches finite differences", "[model]") {
  // one sample, one plain SGD step (zero initial velocity, no decay)
  Rng rng(17);
  ModelParams params = init_params(3, 4, 41);
  for (double& w : params.weights) w = rng.gaussian(0.0, 0.5);
  for (double& b : params.bias) b = rng.gaussian(0.0, 0.5);
  Sample s;
  s.id = 0;
  s.label = 1;
  s.features = {0.4, -1.2, 0.7, 2.0};
  const std::vector<Sample> set{s};

  std::vector<double> gw, gb;
  mixed_loss_grad(params, set, {}, gw, gb);

  const double h = 1e-5;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    ModelParams up = params, down = params;
    up.weights[i] += h;
    down.weights[i] -= h;
    const double fd = (mixed_loss(up, set, {}) - mixed_loss(down, set, {})) /
                      (2.0 * h);
    CHECK(std::abs(fd - gw[i]) <=
          1e-6 * std::max(std::abs(fd), 1e-8) + 1e-10);
  }
  for (std::size_t i = 0; i < params.bias.size(); ++i) {
    ModelParams up = params, down = params;
    up.bias[i] += h;
    down.bias[i] -= h;
    const double fd =
        (mixed_loss(up, set, {}) - mixed_loss(down, set, {})) / (2.0 * h);
    CHECK(std::abs(fd - gb[i]) <=
          1e-6 * std::max(std::abs(fd), 1e-8) + 1e-10);
  }
}

TEST_CASE("loss decreases on separable blobs", "[model]") {
  const std::vector<Sample> data = two_blob_set(40, 5.0, 51);
  ModelParams params = init_params(2, 2, 51);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  Rng rng(9);
  SgdVelocity vel;
  double prev = mixed_loss(params, data, {});
  for (int e = 0; e < 5; ++e) {
    params = sgd_epoch(params, data, cfg, rng, &vel);
    const double now = mixed_loss(params, data, {});
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("training is bit-deterministic", "[model]") {
  const std::vector<Sample> data = two_blob_set(30, 3.0, 61);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.augment_std = 0.2;

  auto train = [&]() {
    ModelParams params = init_params(2, 2, 61);
    Rng rng(13);
    SgdVelocity vel;
    for (int e = 0; e < 4; ++e)
      params = sgd_epoch(params, data, cfg, rng, &vel);
    return params;
  };
  const ModelParams a = train();
  const ModelParams b = train();
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
}

TEST_CASE("sgd_epoch rejects unusable training sets", "[model]") {
  const ModelParams params = init_params(2, 2, 71);
  TrainConfig cfg;
  Rng rng(1);
  CHECK_THROWS_MATCHES(sgd_epoch(params, {}, cfg, rng), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::empty_training_set;
                       }));
  Sample unlabeled;
  unlabeled.features = {0.0, 0.0};
  const std::vector<Sample> bad{unlabeled};
  CHECK_THROWS_AS(sgd_epoch(params, bad, cfg, rng), Error);
}

TEST_CASE("mixed_loss pools source and pseudo samples", "[model]") {
  ModelParams p;
  p.num_classes = 2;
  p.dim = 1;
  p.weights = {0.0, 0.0};
  p.bias = {0.0, 0.0};

  Sample a;
  a.label = 0;
  a.features = {0.0};

  // uniform predictions: loss is ln C for any labels
  CHECK(close(mixed_loss(p, std::vector<Sample>{a}, {}), std::log(2.0)));

  // near-one-hot predictions: loss collapses to ~0
  ModelParams sure = p;
  sure.bias = {60.0, 0.0};
  CHECK(mixed_loss(sure, std::vector<Sample>{a}, {}) <= 1.2e-11);

  // oracle: losses {0, ln 2} pooled over two samples -> (ln 2) / 2
  Sample b;
  b.label = 0;
  b.features = {0.0};
  ModelParams half;
  half.num_classes = 2;
  half.dim = 1;
  half.weights = {60.0, 0.0};  // sample a at x=1 -> certain; b at x=0 -> uniform
  half.bias = {0.0, 0.0};
  a.features = {1.0};
  const std::vector<Sample> both{a, b};
  CHECK(close(mixed_loss(half, both, {}), std::log(2.0) / 2.0));

  // pooled mean, not mean of per-set means: 3 source + 1 pseudo
  Sample c = b;
  const std::vector<Sample> source{a, a, a};
  const std::vector<Sample> pseudo{c};
  CHECK(close(mixed_loss(half, source, pseudo), std::log(2.0) / 4.0));
}

TEST_CASE("mixed_loss gradient matches finite differences on random draws",
          "[model]") {
  Rng rng(73);
  for (int trial = 0; trial < 5; ++trial) {
    const int C = 2 + static_cast<int>(rng.below(3));
    const int D = 1 + static_cast<int>(rng.below(4));
    ModelParams params = init_params(C, D, rng.next_u64());
    for (double& w : params.weights) w = rng.gaussian(0.0, 0.8);
    for (double& b : params.bias) b = rng.gaussian(0.0, 0.8);
    std::vector<Sample> source, pseudo;
    for (int i = 0; i < 4; ++i) {
      Sample s;
      s.id = i;
      s.label = static_cast<int>(rng.below(C));
      for (int d = 0; d < D; ++d) s.features.push_back(rng.gaussian(0.0, 1.5));
      (i % 2 ? pseudo : source).push_back(std::move(s));
    }
    std::vector<double> gw, gb;
    mixed_loss_grad(params, source, pseudo, gw, gb);
    const double h = 1e-5;
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
      ModelParams up = params, down = params;
      up.weights[i] += h;
      down.weights[i] -= h;
      const double fd =
          (mixed_loss(up, source, pseudo) - mixed_loss(down, source, pseudo)) /
          (2.0 * h);
      CHECK(std::abs(fd - gw[i]) <=
            1e-6 * std::max(std::abs(fd), 1e-8) + 1e-10);
    }
  }
}

TEST_CASE("checkpoint round trip", "[model]") {
  const ModelParams params = init_params(3, 4, 81);
  const std::string path =
      (std::filesystem::temp_directory_path() / "hcrpl_test_model.json")
          .string();
  save_checkpoint(params, path);
  const ModelParams loaded = load_checkpoint(path);
  CHECK(loaded.num_classes == params.num_classes);
  CHECK(loaded.dim == params.dim);
  CHECK(loaded.weights == params.weights);
  CHECK(loaded.bias == params.bias);
  std::remove(path.c_str());
}
