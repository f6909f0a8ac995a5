#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "hcrpl/ensemble.hpp"
#include "support/test_util.hpp"

using namespace hcrpl;
using testutil::close_all;
using testutil::random_prob;

namespace {

DomainDataset two_sample_targets() {
  DomainDataset ds;
  ds.tag = DomainTag::target;
  ds.num_classes = 2;
  ds.dim = 2;
  ds.samples.push_back({0, kNoLabel, 0, {1.0, -0.5}});
  ds.samples.push_back({1, kNoLabel, 1, {-0.25, 0.75}});
  return ds;
}

ModelParams hand_params() {
  ModelParams p;
  p.num_classes = 2;
  p.dim = 2;
  p.weights = {1.2, -0.4, -0.8, 0.9};  // rows: class 0, class 1
  p.bias = {0.1, -0.2};
  return p;
}

}  // namespace

TEST_CASE("te_update seeds the table then mixes by alpha", "[ensemble]") {
  EnsembleStore store;
  store.alpha = 0.95;
  const std::vector<std::pair<std::uint64_t, ProbVector>> first{
      {0, ProbVector({0.6, 0.4})}};
  te_update(store, first);
  CHECK(store.initialized);
  CHECK(close_all(store.table.at(0).values(), {0.6, 0.4}, 1e-15));

  const std::vector<std::pair<std::uint64_t, ProbVector>> fresh{
      {0, ProbVector({0.2, 0.8})}};
  te_update(store, fresh);
  // oracle: 0.95*0.6 + 0.05*0.2 and 0.95*0.4 + 0.05*0.8
  CHECK(close_all(store.table.at(0).values(), {0.58, 0.42}));

  const std::vector<std::pair<std::uint64_t, ProbVector>> unknown{
      {7, ProbVector({0.5, 0.5})}};
  CHECK_THROWS_MATCHES(te_update(store, unknown), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::unknown_id;
                       }));
}

TEST_CASE("alpha zero passes fresh predictions through", "[ensemble]") {
  EnsembleStore store;
  store.alpha = 0.0;
  te_update(store, std::vector<std::pair<std::uint64_t, ProbVector>>{
                       {0, ProbVector({0.9, 0.1})}});
  te_update(store, std::vector<std::pair<std::uint64_t, ProbVector>>{
                       {0, ProbVector({0.3, 0.7})}});
  CHECK(close_all(store.table.at(0).values(), {0.3, 0.7}, 1e-15));
}

TEST_CASE("te_update is a fixed point on equal inputs and stays convex",
          "[ensemble]") {
  Rng rng(101);
  for (double alpha : {0.0, 0.5, 0.95}) {
    EnsembleStore store;
    store.alpha = alpha;
    const ProbVector z = random_prob(rng, 4);
    te_update(store, std::vector<std::pair<std::uint64_t, ProbVector>>{{0, z}});
    te_update(store, std::vector<std::pair<std::uint64_t, ProbVector>>{{0, z}});
    CHECK(close_all(store.table.at(0).values(), z.values(), 1e-12));

    const ProbVector f = random_prob(rng, 4);
    te_update(store, std::vector<std::pair<std::uint64_t, ProbVector>>{{0, f}});
    for (std::size_t c = 0; c < 4; ++c) {
      const double lo = std::min(z[c], f[c]) - 1e-12;
      const double hi = std::max(z[c], f[c]) + 1e-12;
      CHECK(store.table.at(0)[c] >= lo);
      CHECK(store.table.at(0)[c] <= hi);
    }
  }
}

TEST_CASE("repeated updates converge geometrically", "[ensemble]") {
  const double alpha = 0.9;
  EnsembleStore store;
  store.alpha = alpha;
  const ProbVector z0({0.9, 0.05, 0.05});
  const ProbVector f({0.2, 0.5, 0.3});
  te_update(store, std::vector<std::pair<std::uint64_t, ProbVector>>{{0, z0}});
  double bound = 0.0;
  for (std::size_t c = 0; c < 3; ++c)
    bound = std::max(bound, std::abs(z0[c] - f[c]));
  for (int k = 1; k <= 50; ++k) {
    te_update(store, std::vector<std::pair<std::uint64_t, ProbVector>>{{0, f}});
    double gap = 0.0;
    for (std::size_t c = 0; c < 3; ++c)
      gap = std::max(gap, std::abs(store.table.at(0)[c] - f[c]));
    CHECK(gap <= std::pow(alpha, k) * bound + 1e-12);
  }
}

TEST_CASE("identity flags reduce the predicting phase to raw predictions",
          "[ensemble]") {
  const DomainDataset targets = two_sample_targets();
  const ModelParams params = hand_params();
  const ClassProportion q({0.5, 0.5});

  PredictOptions opts;
  opts.temperature = 1.0;
  opts.use_apc = false;
  opts.use_se = false;
  opts.augment_std = 0.0;
  Rng rng(3);
  const std::vector<ProbVector> preds = se_predict(params, targets, q, opts, rng);
  REQUIRE(preds.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const ProbVector raw = predict_proba(params, targets.samples[i].features);
    CHECK(close_all(preds[i].values(), raw.values(), 1e-12));
  }
}

TEST_CASE("self-ensembling with zero jitter degenerates to one pass",
          "[ensemble]") {
  const DomainDataset targets = two_sample_targets();
  const ModelParams params = hand_params();
  const ClassProportion q({0.5, 0.5});

  PredictOptions with_se;
  with_se.use_se = true;
  with_se.augment_std = 0.0;
  PredictOptions without_se = with_se;
  without_se.use_se = false;

  Rng r1(4), r2(4);
  const auto a = se_predict(params, targets, q, with_se, r1);
  const auto b = se_predict(params, targets, q, without_se, r2);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(close_all(a[i].values(), b[i].values(), 1e-12));
}

TEST_CASE("full predicting phase matches a straight-line scalar oracle",
          "[ensemble]") {
  const DomainDataset targets = two_sample_targets();
  const ModelParams params = hand_params();
  const ClassProportion q({0.5, 0.5});

  // Oracle: softmax, pooled mean, ratio, rescale, sharpen at T = 0.5,
  // written out longhand against hand-set logits.
  double oracle[2][2];
  double mean0 = 0.0, mean1 = 0.0;
  double raw[2][2];
  for (int i = 0; i < 2; ++i) {
    const double x0 = targets.samples[i].features[0];
    const double x1 = targets.samples[i].features[1];
    const double z0 = 1.2 * x0 + -0.4 * x1 + 0.1;
    const double z1 = -0.8 * x0 + 0.9 * x1 + -0.2;
    const double e0 = std::exp(z0), e1 = std::exp(z1);
    raw[i][0] = e0 / (e0 + e1);
    raw[i][1] = e1 / (e0 + e1);
    mean0 += raw[i][0];
    mean1 += raw[i][1];
  }
  mean0 /= 2.0;
  mean1 /= 2.0;
  const double r0 = 0.5 / mean0, r1 = 0.5 / mean1;
  for (int i = 0; i < 2; ++i) {
    const double c0 = r0 * raw[i][0], c1 = r1 * raw[i][1];
    const double n0 = c0 / (c0 + c1), n1 = c1 / (c0 + c1);
    const double s0 = n0 * n0, s1 = n1 * n1;  // 1/T = 2
    oracle[i][0] = s0 / (s0 + s1);
    oracle[i][1] = s1 / (s0 + s1);
  }

  PredictOptions opts;
  opts.temperature = 0.5;
  opts.use_apc = true;
  opts.use_se = true;
  opts.augment_std = 0.0;
  Rng rng(5);
  const auto preds = se_predict(params, targets, q, opts, rng);
  for (int i = 0; i < 2; ++i) {
    CHECK(testutil::close(preds[i][0], oracle[i][0]));
    CHECK(testutil::close(preds[i][1], oracle[i][1]));
  }
}

TEST_CASE("se_predict outputs stay on the simplex under all flags",
          "[ensemble]") {
  const DomainDataset targets = two_sample_targets();
  const ModelParams params = hand_params();
  const ClassProportion q({0.5, 0.5});
  Rng rng(6);
  for (bool apc : {false, true})
    for (bool se : {false, true})
      for (double t : {0.2, 0.5, 1.0, 2.0}) {
        PredictOptions opts;
        opts.use_apc = apc;
        opts.use_se = se;
        opts.temperature = t;
        opts.augment_std = 0.3;
        const auto preds = se_predict(params, targets, q, opts, rng);
        for (const ProbVector& p : preds) {
          double total = 0.0;
          for (std::size_t c = 0; c < p.size(); ++c) {
            CHECK(p[c] >= 0.0);
            total += p[c];
          }
          CHECK(testutil::close(total, 1.0, 1e-12));
        }
      }
}
