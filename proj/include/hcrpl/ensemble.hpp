// The predicting phase: two augmented forward passes with calibration,
// averaging, and sharpening, plus the EMA table of per-sample ensemble
// predictions that the selecting phase consumes.
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcrpl/apc.hpp"
#include "hcrpl/dataset.hpp"
#include "hcrpl/error.hpp"
#include "hcrpl/model.hpp"
#include "hcrpl/prob.hpp"
#include "hcrpl/rng.hpp"

namespace hcrpl {

// Per-target-sample EMA of predictions. The first update stores the fresh
// predictions directly; EMA from an arbitrary starting vector would not be
// a valid probability vector.
struct EnsembleStore {
  std::map<std::uint64_t, ProbVector> table;  // ordered for determinism
  double alpha = 0.95;                        // EMA momentum in [0, 1)
  bool initialized = false;
};

struct PredictOptions {
  double temperature = 0.5;
  bool use_apc = true;
  bool use_se = true;
  double augment_std = 0.0;
};

// Prediction pass over the target set, input order preserved.
// With use_se: two independent augmentations per sample give P1 and P2, the
// predictive proportion is taken over both sets, both are calibrated by the
// same R, and the per-sample average is sharpened. Without use_se: one
// un-augmented pass, optional calibration, then sharpening. use_apc=false
// forces R to ones.
inline std::vector<ProbVector> se_predict(const ModelParams& params,
                                          const DomainDataset& targets,
                                          const ClassProportion& q,
                                          const PredictOptions& opts,
                                          Rng& rng) {
  if (targets.samples.empty())
    fail(Errc::empty_dataset, "target set is empty");
  const std::size_t n = targets.samples.size();

  if (!opts.use_se) {
    std::vector<ProbVector> preds;
    preds.reserve(n);
    for (const Sample& s : targets.samples)
      preds.push_back(predict_proba(params, s.features));
    if (opts.use_apc) {
      const DifficultyRatio r = difficulty_ratio(q, preds);
      for (ProbVector& p : preds) p = calibrate(p, r);
    }
    for (ProbVector& p : preds) p = sharpen(p, opts.temperature);
    return preds;
  }

  std::vector<ProbVector> first, second;
  first.reserve(n);
  second.reserve(n);
  for (const Sample& s : targets.samples) {
    const std::vector<double> x1 = augment(s.features, opts.augment_std, rng);
    const std::vector<double> x2 = augment(s.features, opts.augment_std, rng);
    first.push_back(predict_proba(params, x1));
    second.push_back(predict_proba(params, x2));
  }
  if (opts.use_apc) {
    const DifficultyRatio r = difficulty_ratio(q, first, second);
    for (ProbVector& p : first) p = calibrate(p, r);
    for (ProbVector& p : second) p = calibrate(p, r);
  }
  std::vector<ProbVector> preds;
  preds.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> avg(first[i].size());
    for (std::size_t c = 0; c < avg.size(); ++c)
      avg[c] = 0.5 * (first[i][c] + second[i][c]);
    preds.push_back(sharpen(ProbVector(std::move(avg)), opts.temperature));
  }
  return preds;
}

// Z[id] <- alpha * Z[id] + (1 - alpha) * fresh[id]. The first call seeds
// the table with the fresh predictions as-is.
inline void te_update(
    EnsembleStore& store,
    std::span<const std::pair<std::uint64_t, ProbVector>> fresh) {
  if (!store.initialized) {
    for (const auto& [id, p] : fresh) store.table.insert_or_assign(id, p);
    store.initialized = true;
    return;
  }
  for (const auto& [id, p] : fresh) {
    auto it = store.table.find(id);
    if (it == store.table.end())
      fail(Errc::unknown_id, "id " + std::to_string(id) + " not in store");
    std::vector<double> mixed(p.size());
    for (std::size_t c = 0; c < p.size(); ++c)
      mixed[c] = store.alpha * it->second[c] + (1.0 - store.alpha) * p[c];
    it->second = ProbVector(std::move(mixed));
  }
}

}  // namespace hcrpl
