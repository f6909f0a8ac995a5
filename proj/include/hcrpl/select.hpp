// The selecting phase: portion schedule and the class-balanced self-training
// solver. Per class c the threshold exp(-k_c) is the confidence at rank
// ceil(p% * N_c) among samples currently won by c; a sample is pseudo-labeled
// with the argmax of its threshold-scaled scores when that scaled score
// reaches 1.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcrpl/error.hpp"
#include "hcrpl/prob.hpp"

namespace hcrpl {

// No sample can pass a class with this threshold (empty classes).
inline constexpr double kThresholdSentinel =
    std::numeric_limits<double>::infinity();

struct PseudoLabelSet {
  std::map<std::uint64_t, int> entries;  // target id -> pseudo class
  int round = 0;
};

struct PortionSchedule {
  double slope = 5.0;      // percent per round
  double intercept = 10.0; // percent
  double cap = 90.0;       // percent

  double at_round(int r) const {
    return std::min(slope * static_cast<double>(r) + intercept, cap);
  }
};

// min(5r + 10, 90) for r starting at 1.
inline double portion_at_round(int r) {
  if (r < 1) fail(Errc::invalid_spec, "round index starts at 1");
  return PortionSchedule{}.at_round(r);
}

using ScoredPrediction = std::pair<std::uint64_t, ProbVector>;

// Per-class confidence thresholds for the top p% rule. Classes that win no
// sample get the sentinel.
inline std::vector<double> class_thresholds(
    std::span<const ScoredPrediction> predictions, double percent) {
  if (!(percent > 0.0 && percent <= 100.0))
    fail(Errc::invalid_spec, "portion must be in (0, 100]");
  if (predictions.empty()) fail(Errc::empty_predictions, "no predictions");

  const std::size_t C = predictions.front().second.size();
  std::vector<std::vector<double>> confidences(C);
  for (const auto& [id, z] : predictions) {
    const int winner = argmax_stable(z);
    confidences[winner].push_back(z[winner]);
  }

  std::vector<double> thresholds(C, kThresholdSentinel);
  for (std::size_t c = 0; c < C; ++c) {
    auto& conf = confidences[c];
    if (conf.empty()) continue;
    std::sort(conf.begin(), conf.end(), std::greater<double>());
    // 1-indexed rank ceil(p/100 * N_c); the small slack keeps exact
    // integer boundaries (e.g. 15% of 200) from rounding up.
    const double exact = percent * static_cast<double>(conf.size()) / 100.0;
    std::size_t rank = static_cast<std::size_t>(std::ceil(exact - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, conf.size());
    thresholds[c] = conf[rank - 1];
  }
  return thresholds;
}

// Assigns each sample the argmax of z_c / threshold_c when that winning
// scaled score is >= 1, otherwise leaves it unselected. The >= (rather than
// strict >) keeps the rank-defining sample itself selected, so per-class
// counts match the schedule.
inline PseudoLabelSet cbst_select(std::span<const ScoredPrediction> predictions,
                                  std::span<const double> thresholds) {
  PseudoLabelSet out;
  std::vector<double> scaled;
  for (const auto& [id, z] : predictions) {
    if (z.size() != thresholds.size())
      fail(Errc::dimension_mismatch, "threshold class count mismatch");
    scaled.resize(z.size());
    for (std::size_t c = 0; c < z.size(); ++c)
      scaled[c] = z[c] / thresholds[c];  // x / inf == 0 for empty classes
    const int winner = argmax_stable(scaled);
    if (scaled[winner] >= 1.0) out.entries.emplace(id, winner);
  }
  return out;
}

}  // namespace hcrpl
