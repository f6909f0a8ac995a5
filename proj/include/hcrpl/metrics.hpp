// Evaluation quantities: confusion matrix, per-class precision/recall/F1,
// false pseudo-label ratio, and predictive class proportion. 0/0 cells
// resolve to 0 so a collapsed class shows up as a zero instead of being
// skipped; the worst class is the quantity of interest.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hcrpl/dataset.hpp"
#include "hcrpl/error.hpp"
#include "hcrpl/prob.hpp"
#include "hcrpl/select.hpp"

namespace hcrpl {

struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::int64_t> counts;  // C x C, rows = true class

  std::int64_t at(int truth, int predicted) const {
    return counts[truth * num_classes + predicted];
  }
  std::int64_t total() const {
    std::int64_t t = 0;
    for (std::int64_t c : counts) t += c;
    return t;
  }
  std::int64_t trace() const {
    std::int64_t t = 0;
    for (int c = 0; c < num_classes; ++c) t += at(c, c);
    return t;
  }
  double accuracy() const {
    const std::int64_t n = total();
    return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
  }
};

inline ConfusionMatrix confusion(std::span<const int> truth,
                                 std::span<const int> predicted,
                                 int num_classes) {
  if (truth.size() != predicted.size())
    fail(Errc::dimension_mismatch, "label sequences differ in length");
  ConfusionMatrix cm;
  cm.num_classes = num_classes;
  cm.counts.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 ||
        predicted[i] >= num_classes)
      fail(Errc::label_out_of_range,
           "pair (" + std::to_string(truth[i]) + ", " +
               std::to_string(predicted[i]) + ") at index " +
               std::to_string(i));
    ++cm.counts[truth[i] * num_classes + predicted[i]];
  }
  return cm;
}

struct PerClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PrfReport {
  std::vector<PerClassMetrics> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double worst_class_f1 = 0.0;
};

inline PrfReport precision_recall_f1(const ConfusionMatrix& cm) {
  const int C = cm.num_classes;
  PrfReport report;
  report.per_class.resize(C);
  report.worst_class_f1 = 1.0;
  for (int c = 0; c < C; ++c) {
    std::int64_t col = 0, row = 0;
    for (int k = 0; k < C; ++k) {
      col += cm.at(k, c);
      row += cm.at(c, k);
    }
    const double tp = static_cast<double>(cm.at(c, c));
    PerClassMetrics& m = report.per_class[c];
    m.precision = col == 0 ? 0.0 : tp / static_cast<double>(col);
    m.recall = row == 0 ? 0.0 : tp / static_cast<double>(row);
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    report.macro_precision += m.precision;
    report.macro_recall += m.recall;
    report.macro_f1 += m.f1;
    report.worst_class_f1 = std::min(report.worst_class_f1, m.f1);
  }
  report.macro_precision /= C;
  report.macro_recall /= C;
  report.macro_f1 /= C;
  return report;
}

struct FalseRatio {
  double ratio = 0.0;
  bool empty = false;  // no pseudo labels this round
};

// Fraction of pseudo labels disagreeing with the hidden ground truth.
inline FalseRatio false_pseudo_label_ratio(const PseudoLabelSet& pseudo,
                                           const DomainDataset& targets) {
  if (pseudo.entries.empty()) return {0.0, true};
  std::map<std::uint64_t, int> truth;
  for (const Sample& s : targets.samples)
    if (s.hidden_label != kNoLabel) truth.emplace(s.id, s.hidden_label);
  std::int64_t wrong = 0;
  for (const auto& [id, label] : pseudo.entries) {
    auto it = truth.find(id);
    if (it == truth.end())
      fail(Errc::missing_truth,
           "no hidden label for pseudo-labeled id " + std::to_string(id));
    if (it->second != label) ++wrong;
  }
  return {static_cast<double>(wrong) /
              static_cast<double>(pseudo.entries.size()),
          false};
}

// Histogram of argmax over predictions, normalized.
inline ClassProportion predictive_class_proportion(
    std::span<const ProbVector> predictions) {
  if (predictions.empty()) fail(Errc::empty_predictions, "no predictions");
  std::vector<double> counts(predictions.front().size(), 0.0);
  for (const ProbVector& p : predictions) counts[argmax_stable(p)] += 1.0;
  for (double& c : counts) c /= static_cast<double>(predictions.size());
  return ClassProportion(std::move(counts));
}

}  // namespace hcrpl
