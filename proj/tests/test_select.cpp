#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "hcrpl/select.hpp"
#include "support/test_util.hpp"

using namespace hcrpl;
using testutil::random_prob;

namespace {

// Independent evaluation of the class-balanced solver, written longhand:
// thresholds from descending per-class confidence ranks, then the scaled
// argmax rule with the >= 1 acceptance test.
std::map<std::uint64_t, int> oracle_select(
    const std::vector<ScoredPrediction>& zs, double percent) {
  const std::size_t C = zs.front().second.size();
  std::vector<std::vector<double>> conf(C);
  for (const auto& [id, z] : zs) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c)
      if (z[c] > z[best]) best = c;
    conf[best].push_back(z[best]);
  }
  std::vector<double> thr(C, std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < C; ++c) {
    if (conf[c].empty()) continue;
    std::sort(conf[c].begin(), conf[c].end());
    std::size_t keep = static_cast<std::size_t>(
        std::ceil(percent * static_cast<double>(conf[c].size()) / 100.0 - 1e-9));
    if (keep < 1) keep = 1;
    if (keep > conf[c].size()) keep = conf[c].size();
    thr[c] = conf[c][conf[c].size() - keep];
  }
  std::map<std::uint64_t, int> out;
  for (const auto& [id, z] : zs) {
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double scaled =
          std::isinf(thr[c]) ? 0.0 : z[c] / thr[c];
      if (scaled > best_score) {
        best_score = scaled;
        best = c;
      }
    }
    if (best_score >= 1.0) out.emplace(id, static_cast<int>(best));
  }
  return out;
}

}  // namespace

TEST_CASE("portion schedule follows min(5r + 10, 90)", "[select]") {
  CHECK(portion_at_round(1) == 15.0);
  CHECK(portion_at_round(2) == 20.0);
  CHECK(portion_at_round(16) == 90.0);
  CHECK(portion_at_round(30) == 90.0);
  CHECK_THROWS_AS(portion_at_round(0), Error);
}

TEST_CASE("class thresholds pick the rank-defining confidence", "[select]") {
  // class 0 confidences 0.9, 0.8, 0.6, 0.4; class 1 never wins
  const std::vector<ScoredPrediction> zs{
      {0, ProbVector({0.9, 0.1})},
      {1, ProbVector({0.8, 0.2})},
      {2, ProbVector({0.6, 0.4})},
      {3, ProbVector({0.4 / 0.7, 0.3 / 0.7})},
  };
  // oracle: rank ceil(0.5 * 4) = 2 in descending order -> 0.8
  std::vector<double> thr = class_thresholds(zs, 50.0);
  CHECK(testutil::close(thr[0], 0.8));
  CHECK(std::isinf(thr[1]));

  // p = 100: everything passes, threshold is the minimum confidence
  thr = class_thresholds(zs, 100.0);
  CHECK(testutil::close(thr[0], 0.4 / 0.7));

  CHECK_THROWS_AS(class_thresholds(zs, 0.0), Error);
  CHECK_THROWS_AS(class_thresholds(zs, 101.0), Error);
}

TEST_CASE("integer rank boundaries do not round up", "[select]") {
  // 15% of 200 confidences must keep exactly 30, not 31
  std::vector<ScoredPrediction> zs;
  for (int i = 0; i < 200; ++i) {
    const double conf = 0.5 + 0.002 * i;
    zs.emplace_back(i, ProbVector({conf, 1.0 - conf}));
  }
  const std::vector<double> thr = class_thresholds(zs, 15.0);
  const PseudoLabelSet picked = cbst_select(zs, thr);
  CHECK(picked.entries.size() == 30);
}

TEST_CASE("cbst_select keeps the rank-defining sample", "[select]") {
  const std::vector<ScoredPrediction> zs{
      {1, ProbVector({0.9, 0.1})},
      {2, ProbVector({0.8, 0.2})},
      {3, ProbVector({0.6, 0.4})},
  };
  const std::vector<double> thr{0.8, kThresholdSentinel};
  const PseudoLabelSet out = cbst_select(zs, thr);
  REQUIRE(out.entries.size() == 2);
  CHECK(out.entries.at(1) == 0);
  CHECK(out.entries.at(2) == 0);
  CHECK(out.entries.count(3) == 0);
}

TEST_CASE("thresholds can flip the winning class before the gate", "[select]") {
  // oracle: scaled scores [0.55/0.9, 0.45/0.5] = [0.611, 0.9]; class 1 wins
  // the scaled argmax but 0.9 < 1, so the sample stays unselected
  const std::vector<ScoredPrediction> zs{{0, ProbVector({0.55, 0.45})}};
  const std::vector<double> thr{0.9, 0.5};
  CHECK(cbst_select(zs, thr).entries.empty());

  // with a laxer class-1 threshold the same sample is labeled 1, not 0
  const std::vector<double> thr2{0.9, 0.45};
  const PseudoLabelSet out = cbst_select(zs, thr2);
  REQUIRE(out.entries.size() == 1);
  CHECK(out.entries.at(0) == 1);
}

TEST_CASE("unit thresholds admit exact one-hot predictions only", "[select]") {
  const std::vector<ScoredPrediction> zs{
      {0, ProbVector({1.0, 0.0})},
      {1, ProbVector({0.999, 0.001})},
  };
  const std::vector<double> thr{1.0, 1.0};
  const PseudoLabelSet out = cbst_select(zs, thr);
  REQUIRE(out.entries.size() == 1);
  CHECK(out.entries.at(0) == 0);
}

TEST_CASE("raising the portion only adds selections per class", "[select]") {
  Rng rng(111);
  std::vector<ScoredPrediction> zs;
  for (int i = 0; i < 60; ++i) zs.emplace_back(i, random_prob(rng, 3));
  std::map<std::uint64_t, int> prev;
  for (double p : {10.0, 25.0, 50.0, 75.0, 100.0}) {
    const PseudoLabelSet now = cbst_select(zs, class_thresholds(zs, p));
    for (const auto& [id, label] : prev) {
      auto it = now.entries.find(id);
      // a sample can migrate only if another class's threshold crossed it;
      // with every threshold falling it must stay selected
      CHECK(it != now.entries.end());
    }
    prev = now.entries;
  }
}

TEST_CASE("solver matches the exhaustive oracle on random instances",
          "[select]") {
  Rng rng(112);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t C = 2 + rng.below(3);
    const std::size_t n = 1 + rng.below(20);
    std::vector<ScoredPrediction> zs;
    for (std::size_t i = 0; i < n; ++i) zs.emplace_back(i, random_prob(rng, C));
    const double percent = 1.0 + 99.0 * rng.uniform01();

    const PseudoLabelSet got = cbst_select(zs, class_thresholds(zs, percent));
    const std::map<std::uint64_t, int> expected = oracle_select(zs, percent);
    CHECK(got.entries == expected);
  }
}
