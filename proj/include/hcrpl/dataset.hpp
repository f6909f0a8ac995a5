// Dataset representation, synthetic domain-shift generation, CSV IO, and
// source composition for the semi-supervised setting.
//
// A target sample may carry a hidden ground-truth label. It exists only so
// evaluation can score pseudo-labels and test accuracy; nothing on the
// training path reads it.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hcrpl/error.hpp"
#include "hcrpl/prob.hpp"
#include "hcrpl/rng.hpp"

namespace hcrpl {

inline constexpr int kNoLabel = -1;

enum class DomainTag { source, target };

struct Sample {
  std::uint64_t id = 0;
  int label = kNoLabel;         // training-visible label
  int hidden_label = kNoLabel;  // evaluation-only ground truth
  std::vector<double> features;
};

struct DomainDataset {
  DomainTag tag = DomainTag::source;
  int num_classes = 0;
  int dim = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
};

struct HardClassSpec {
  int victim = 0;       // class whose target cluster is displaced
  int confusable = 0;   // class it is pulled toward
  double pull_fraction = 0.0;  // lambda in [0, 1]
};

struct ShiftSpec {
  int num_classes = 0;
  int dim = 0;
  int n_source_per_class = 0;
  int n_target_per_class = 0;
  std::vector<std::vector<double>> class_centers;  // C rows of D
  double within_class_std = 1.0;
  std::vector<double> target_translation;  // length D; empty means zero
  double target_rotation_angle = 0.0;      // radians, first two coordinates
  std::optional<HardClassSpec> hard_class;
  std::optional<ClassProportion> source_class_weights;
  std::uint64_t seed = 0;
};

// Canonical centers: class c sits on axis (c mod D) at scale, pushed one
// tier further out per wrap so any C fits into any D >= 1.
inline std::vector<std::vector<double>> axis_class_centers(int num_classes,
                                                           int dim,
                                                           double scale) {
  std::vector<std::vector<double>> centers(
      num_classes, std::vector<double>(dim, 0.0));
  for (int c = 0; c < num_classes; ++c)
    centers[c][c % dim] = scale * (1.0 + c / dim);
  return centers;
}

namespace detail {

inline void validate_shift_spec(const ShiftSpec& spec) {
  if (spec.num_classes < 2)
    fail(Errc::invalid_spec, "num_classes must be >= 2");
  if (spec.dim < 1) fail(Errc::invalid_spec, "dim must be >= 1");
  if (spec.n_source_per_class < 1 || spec.n_target_per_class < 1)
    fail(Errc::invalid_spec, "per-class sample counts must be >= 1");
  if (!(spec.within_class_std > 0.0))
    fail(Errc::invalid_spec, "within_class_std must be positive");
  if (spec.class_centers.size() != static_cast<std::size_t>(spec.num_classes))
    fail(Errc::invalid_spec, "class_centers must have one row per class");
  for (const auto& center : spec.class_centers)
    if (center.size() != static_cast<std::size_t>(spec.dim))
      fail(Errc::invalid_spec, "class center dimension mismatch");
  if (!spec.target_translation.empty() &&
      spec.target_translation.size() != static_cast<std::size_t>(spec.dim))
    fail(Errc::invalid_spec, "target_translation dimension mismatch");
  if (spec.target_rotation_angle != 0.0 && spec.dim < 2)
    fail(Errc::invalid_spec, "rotation requires dim >= 2");
  if (spec.hard_class) {
    const auto& hc = *spec.hard_class;
    if (hc.victim < 0 || hc.victim >= spec.num_classes || hc.confusable < 0 ||
        hc.confusable >= spec.num_classes)
      fail(Errc::invalid_spec, "hard_class indices out of range");
    if (hc.victim == hc.confusable)
      fail(Errc::invalid_spec, "hard_class victim and confusable must differ");
    if (!(hc.pull_fraction >= 0.0 && hc.pull_fraction <= 1.0))
      fail(Errc::invalid_spec, "hard_class.pull_fraction must be in [0, 1]");
  }
  if (spec.source_class_weights &&
      spec.source_class_weights->size() !=
          static_cast<std::size_t>(spec.num_classes))
    fail(Errc::invalid_spec, "source_class_weights must have C entries");
}

// Rotation in the first two coordinates, then translation; the rest of the
// coordinates shift only by the translation vector.
inline std::vector<double> target_center(const ShiftSpec& spec, int cls) {
  std::vector<double> center = spec.class_centers[cls];
  if (spec.target_rotation_angle != 0.0) {
    const double c = std::cos(spec.target_rotation_angle);
    const double s = std::sin(spec.target_rotation_angle);
    const double x = center[0];
    const double y = center[1];
    center[0] = c * x - s * y;
    center[1] = s * x + c * y;
  }
  if (!spec.target_translation.empty())
    for (int d = 0; d < spec.dim; ++d) center[d] += spec.target_translation[d];
  if (spec.hard_class && spec.hard_class->victim == cls) {
    const auto& hc = *spec.hard_class;
    for (int d = 0; d < spec.dim; ++d)
      center[d] += hc.pull_fraction * (spec.class_centers[hc.confusable][d] -
                                       spec.class_centers[hc.victim][d]);
  }
  return center;
}

}  // namespace detail

// Source blobs sit at the given centers; target blobs are the rotated and
// translated copies, with the victim class additionally pulled toward the
// confusable class's source center. Draw order is class-major then
// sample-major then coordinate-major, so equal specs give equal bytes.
inline std::pair<DomainDataset, DomainDataset> generate_shifted_pair(
    const ShiftSpec& spec) {
  detail::validate_shift_spec(spec);

  std::vector<int> source_counts(spec.num_classes, spec.n_source_per_class);
  if (spec.source_class_weights) {
    const double total =
        static_cast<double>(spec.num_classes) * spec.n_source_per_class;
    for (int c = 0; c < spec.num_classes; ++c)
      source_counts[c] = std::max(
          1, static_cast<int>(std::llround((*spec.source_class_weights)[c] * total)));
  }

  Rng rng(spec.seed);
  std::uint64_t next_id = 0;

  DomainDataset source;
  source.tag = DomainTag::source;
  source.num_classes = spec.num_classes;
  source.dim = spec.dim;
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int i = 0; i < source_counts[c]; ++i) {
      Sample s;
      s.id = next_id++;
      s.label = c;
      s.features.resize(spec.dim);
      for (int d = 0; d < spec.dim; ++d)
        s.features[d] =
            rng.gaussian(spec.class_centers[c][d], spec.within_class_std);
      source.samples.push_back(std::move(s));
    }
  }

  DomainDataset target;
  target.tag = DomainTag::target;
  target.num_classes = spec.num_classes;
  target.dim = spec.dim;
  for (int c = 0; c < spec.num_classes; ++c) {
    const std::vector<double> center = detail::target_center(spec, c);
    for (int i = 0; i < spec.n_target_per_class; ++i) {
      Sample s;
      s.id = next_id++;
      s.label = kNoLabel;
      s.hidden_label = c;
      s.features.resize(spec.dim);
      for (int d = 0; d < spec.dim; ++d)
        s.features[d] = rng.gaussian(center[d], spec.within_class_std);
      target.samples.push_back(std::move(s));
    }
  }
  return {std::move(source), std::move(target)};
}

namespace detail {

inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline double parse_double_cell(const std::string& cell, std::size_t row,
                                const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    fail(Errc::schema_error, "row " + std::to_string(row) + " column " +
                                 column + ": not a finite number: '" + cell +
                                 "'");
  return value;
}

inline long parse_int_cell(const std::string& cell, std::size_t row,
                           const std::string& column) {
  long value = 0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    fail(Errc::schema_error, "row " + std::to_string(row) + " column " +
                                 column + ": not an integer: '" + cell + "'");
  return value;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

// Schema: header `id,label[,hidden_label],f0,...,f{D-1}`, one sample per row,
// labels in [0, C) or -1 for absent, LF line endings, doubles at 17
// significant digits so a save/load round trip is exact.
inline void save_csv(const DomainDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + path);
  const bool with_hidden =
      std::any_of(ds.samples.begin(), ds.samples.end(),
                  [](const Sample& s) { return s.hidden_label != kNoLabel; });
  out << "id,label";
  if (with_hidden) out << ",hidden_label";
  for (int d = 0; d < ds.dim; ++d) out << ",f" << d;
  out << "\n";
  for (const Sample& s : ds.samples) {
    out << s.id << ',' << s.label;
    if (with_hidden) out << ',' << s.hidden_label;
    for (double f : s.features) out << ',' << detail::format_double(f);
    out << "\n";
  }
  if (!out) fail(Errc::io_error, "write failed: " + path);
}

inline DomainDataset load_csv(const std::string& path, int num_classes,
                              DomainTag tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open for reading: " + path);

  std::string line;
  if (!std::getline(in, line)) fail(Errc::schema_error, "empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header = detail::split_csv_line(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label")
    fail(Errc::schema_error, "header must start with id,label: " + path);
  std::size_t feature_start = 2;
  bool with_hidden = false;
  if (header[2] == "hidden_label") {
    with_hidden = true;
    feature_start = 3;
  }
  const std::size_t dim = header.size() - feature_start;
  if (dim < 1) fail(Errc::schema_error, "no feature columns: " + path);
  for (std::size_t d = 0; d < dim; ++d) {
    const std::string expect = "f" + std::to_string(d);
    if (header[feature_start + d] != expect)
      fail(Errc::schema_error, "expected column '" + expect + "', found '" +
                                   header[feature_start + d] + "'");
  }

  DomainDataset ds;
  ds.tag = tag;
  ds.num_classes = num_classes;
  ds.dim = static_cast<int>(dim);
  std::set<std::uint64_t> seen_ids;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      fail(Errc::schema_error, "row " + std::to_string(row) + ": expected " +
                                   std::to_string(header.size()) +
                                   " cells, found " +
                                   std::to_string(cells.size()));
    Sample s;
    const long id = detail::parse_int_cell(cells[0], row, "id");
    if (id < 0) fail(Errc::schema_error,
                     "row " + std::to_string(row) + ": negative id");
    s.id = static_cast<std::uint64_t>(id);
    if (!seen_ids.insert(s.id).second)
      fail(Errc::schema_error,
           "row " + std::to_string(row) + ": duplicate id " + cells[0]);

    const long label = detail::parse_int_cell(cells[1], row, "label");
    if (label < kNoLabel || label >= num_classes)
      fail(Errc::schema_error, "row " + std::to_string(row) + ": label " +
                                   std::to_string(label) +
                                   " out of range for C=" +
                                   std::to_string(num_classes));
    s.label = static_cast<int>(label);

    if (with_hidden) {
      const long hidden = detail::parse_int_cell(cells[2], row, "hidden_label");
      if (hidden < kNoLabel || hidden >= num_classes)
        fail(Errc::schema_error, "row " + std::to_string(row) +
                                     ": hidden_label " +
                                     std::to_string(hidden) + " out of range");
      s.hidden_label = static_cast<int>(hidden);
    }

    s.features.resize(dim);
    for (std::size_t d = 0; d < dim; ++d)
      s.features[d] = detail::parse_double_cell(cells[feature_start + d], row,
                                                header[feature_start + d]);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// Moves shots_per_class hidden-labeled target samples per class into the
// source set with their labels revealed. The remainder keeps its labels
// hidden. Selection order depends only on the seed.
inline std::pair<DomainDataset, DomainDataset> compose_ssda_source(
    const DomainDataset& source, const DomainDataset& target,
    int shots_per_class, std::uint64_t seed) {
  if (shots_per_class < 0)
    fail(Errc::invalid_spec, "shots_per_class must be >= 0");
  if (shots_per_class == 0) return {source, target};

  const int C = target.num_classes;
  std::vector<std::vector<std::size_t>> by_class(C);
  for (std::size_t i = 0; i < target.samples.size(); ++i) {
    const int truth = target.samples[i].hidden_label;
    if (truth >= 0 && truth < C) by_class[truth].push_back(i);
  }

  Rng rng(seed);
  std::vector<bool> moved(target.samples.size(), false);
  for (int c = 0; c < C; ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(shots_per_class))
      fail(Errc::insufficient_samples,
           "class " + std::to_string(c) + " has " +
               std::to_string(by_class[c].size()) + " target samples, need " +
               std::to_string(shots_per_class));
    rng.shuffle(by_class[c]);
    for (int k = 0; k < shots_per_class; ++k) moved[by_class[c][k]] = true;
  }

  DomainDataset new_source = source;
  DomainDataset new_target;
  new_target.tag = DomainTag::target;
  new_target.num_classes = target.num_classes;
  new_target.dim = target.dim;
  for (std::size_t i = 0; i < target.samples.size(); ++i) {
    Sample s = target.samples[i];
    if (moved[i]) {
      s.label = s.hidden_label;
      new_source.samples.push_back(std::move(s));
    } else {
      s.label = kNoLabel;
      new_target.samples.push_back(std::move(s));
    }
  }
  return {std::move(new_source), std::move(new_target)};
}

// Empirical proportion of the visible labels.
inline ClassProportion class_proportion(const DomainDataset& ds) {
  if (ds.samples.empty()) fail(Errc::empty_dataset, "dataset has no samples");
  std::vector<double> counts(ds.num_classes, 0.0);
  for (const Sample& s : ds.samples) {
    if (s.label == kNoLabel)
      fail(Errc::unlabeled_sample,
           "sample " + std::to_string(s.id) + " has no label");
    counts[s.label] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(ds.samples.size());
  return ClassProportion(std::move(counts));
}

// Empirical proportion of the hidden ground-truth labels (analysis only).
inline ClassProportion hidden_class_proportion(const DomainDataset& ds) {
  if (ds.samples.empty()) fail(Errc::empty_dataset, "dataset has no samples");
  std::vector<double> counts(ds.num_classes, 0.0);
  for (const Sample& s : ds.samples) {
    if (s.hidden_label == kNoLabel)
      fail(Errc::missing_truth,
           "sample " + std::to_string(s.id) + " has no hidden label");
    counts[s.hidden_label] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(ds.samples.size());
  return ClassProportion(std::move(counts));
}

}  // namespace hcrpl
