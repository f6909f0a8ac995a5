// Adaptive Prediction Calibration: the difficulty ratio R of prior class
// proportion to predictive class proportion, and the per-sample rescale
// that pulls predictive proportions back toward the prior.
#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcrpl/error.hpp"
#include "hcrpl/prob.hpp"

namespace hcrpl {

// Mean prediction entries are clamped at this floor before division so a
// nearly-dead class cannot blow R up unboundedly; an exactly-zero entry is
// still reported as a collapsed class.
inline constexpr double kProportionFloor = 1e-8;

struct DifficultyRatio {
  std::vector<double> ratio;  // entry c = q_c / p_c, all positive finite

  std::size_t size() const { return ratio.size(); }
  double operator[](std::size_t i) const { return ratio[i]; }
};

namespace detail {

inline DifficultyRatio ratio_from_mean(const ClassProportion& q,
                                       const std::vector<double>& mean) {
  DifficultyRatio r;
  r.ratio.resize(mean.size());
  for (std::size_t c = 0; c < mean.size(); ++c) {
    if (!(q[c] > 0.0))
      fail(Errc::degenerate_class,
           "class " + std::to_string(c) + " has zero prior mass");
    if (mean[c] == 0.0)
      fail(Errc::degenerate_class,
           "class " + std::to_string(c) + " has collapsed predictions");
    r.ratio[c] = q[c] / std::max(mean[c], kProportionFloor);
  }
  return r;
}

}  // namespace detail

// R = q / mean(predictions), element-wise.
inline DifficultyRatio difficulty_ratio(const ClassProportion& q,
                                        std::span<const ProbVector> predictions) {
  if (predictions.empty()) fail(Errc::empty_predictions, "no predictions");
  std::vector<double> mean(q.size(), 0.0);
  for (const ProbVector& p : predictions) {
    if (p.size() != q.size())
      fail(Errc::dimension_mismatch, "prediction class count mismatch");
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
  }
  for (double& m : mean) m /= static_cast<double>(predictions.size());
  return detail::ratio_from_mean(q, mean);
}

// Same, with the mean taken over both augmented prediction sets.
inline DifficultyRatio difficulty_ratio(const ClassProportion& q,
                                        std::span<const ProbVector> first,
                                        std::span<const ProbVector> second) {
  if (first.empty() && second.empty())
    fail(Errc::empty_predictions, "no predictions");
  std::vector<double> mean(q.size(), 0.0);
  for (std::span<const ProbVector> part : {first, second}) {
    for (const ProbVector& p : part) {
      if (p.size() != q.size())
        fail(Errc::dimension_mismatch, "prediction class count mismatch");
      for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += p[c];
    }
  }
  const double n = static_cast<double>(first.size() + second.size());
  for (double& m : mean) m /= n;
  return detail::ratio_from_mean(q, mean);
}

// normalize(R * p): hard classes (R_c > 1) gain relative mass, easy classes
// lose it.
inline ProbVector calibrate(const ProbVector& p, const DifficultyRatio& r) {
  if (p.size() != r.size())
    fail(Errc::dimension_mismatch, "ratio class count mismatch");
  std::vector<double> scaled(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) scaled[c] = r[c] * p[c];
  return normalize(scaled);
}

}  // namespace hcrpl
