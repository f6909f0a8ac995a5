// Linear softmax classifier trained by minibatch SGD with heavy-ball
// momentum on the pooled cross-entropy objective over source plus
// pseudo-labeled samples. Kept linear so gradient and convergence checks
// stay exact; the labeling pipeline does not care about the backbone.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcrpl/dataset.hpp"
#include "hcrpl/error.hpp"
#include "hcrpl/prob.hpp"
#include "hcrpl/rng.hpp"

#include <nlohmann/json.hpp>

namespace hcrpl {

struct ModelParams {
  int num_classes = 0;
  int dim = 0;
  std::vector<double> weights;  // C x D, row-major
  std::vector<double> bias;     // C

  double weight(int c, int d) const { return weights[c * dim + d]; }
};

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double augment_std = 0.0;  // std of the Gaussian feature jitter
};

// Momentum buffers; zero-initialized, same shapes as the params.
struct SgdVelocity {
  std::vector<double> weights;
  std::vector<double> bias;
};

inline ModelParams init_params(int num_classes, int dim, std::uint64_t seed) {
  ModelParams p;
  p.num_classes = num_classes;
  p.dim = dim;
  p.weights.resize(static_cast<std::size_t>(num_classes) * dim);
  p.bias.assign(num_classes, 0.0);
  Rng rng(seed);
  for (double& w : p.weights) w = rng.gaussian(0.0, 0.01);
  return p;
}

namespace detail {

inline void softmax_logits(const ModelParams& params,
                           std::span<const double> x,
                           std::vector<double>& probs) {
  const int C = params.num_classes;
  const int D = params.dim;
  probs.resize(C);
  for (int c = 0; c < C; ++c) {
    double z = params.bias[c];
    const double* row = params.weights.data() + static_cast<std::size_t>(c) * D;
    for (int d = 0; d < D; ++d) z += row[d] * x[d];
    probs[c] = z;
  }
  const double zmax = *std::max_element(probs.begin(), probs.end());
  double total = 0.0;
  for (double& z : probs) {
    z = std::exp(z - zmax);
    total += z;
  }
  for (double& z : probs) z /= total;
}

}  // namespace detail

inline ProbVector predict_proba(const ModelParams& params,
                                std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(params.dim))
    fail(Errc::dimension_mismatch,
         "feature length " + std::to_string(x.size()) + ", model dim " +
             std::to_string(params.dim));
  std::vector<double> probs;
  detail::softmax_logits(params, x, probs);
  return ProbVector(std::move(probs));
}

// x plus iid Gaussian jitter. std == 0 keeps the draw count so rng streams
// stay aligned across configurations.
inline std::vector<double> augment(std::span<const double> x,
                                   double augment_std, Rng& rng) {
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v += augment_std * rng.gaussian();
  return out;
}

namespace detail {

inline constexpr double kProbClamp = 1e-12;

inline double clamped_log_loss(double p) {
  return -std::log(std::clamp(p, kProbClamp, 1.0));
}

// Accumulates d(cross-entropy)/d(params) for one sample into (gw, gb).
inline void accumulate_ce_grad(const ModelParams& params,
                               std::span<const double> x, int label,
                               std::vector<double>& probs,
                               std::vector<double>& gw,
                               std::vector<double>& gb) {
  softmax_logits(params, x, probs);
  const int C = params.num_classes;
  const int D = params.dim;
  for (int c = 0; c < C; ++c) {
    const double delta = probs[c] - (c == label ? 1.0 : 0.0);
    gb[c] += delta;
    double* grow = gw.data() + static_cast<std::size_t>(c) * D;
    for (int d = 0; d < D; ++d) grow[d] += delta * x[d];
  }
}

inline void check_labeled(std::span<const Sample> samples, int C, int D) {
  for (const Sample& s : samples) {
    if (s.label < 0 || s.label >= C)
      fail(Errc::unlabeled_sample,
           "sample " + std::to_string(s.id) + " has no usable label");
    if (s.features.size() != static_cast<std::size_t>(D))
      fail(Errc::dimension_mismatch,
           "sample " + std::to_string(s.id) + " feature length mismatch");
  }
}

}  // namespace detail

// One shuffled pass over the training set. Per batch: mean cross-entropy
// gradient plus weight_decay * weights (bias undecayed), then
// v <- momentum * v + g and params <- params - lr * v. Each sample is
// augmented once per visit. The input params are untouched.
inline ModelParams sgd_epoch(const ModelParams& params,
                             std::span<const Sample> train_set,
                             const TrainConfig& cfg, Rng& rng,
                             SgdVelocity* velocity = nullptr) {
  if (train_set.empty()) fail(Errc::empty_training_set, "no training samples");
  const int C = params.num_classes;
  const int D = params.dim;
  detail::check_labeled(train_set, C, D);

  SgdVelocity local;
  SgdVelocity& vel = velocity ? *velocity : local;
  if (vel.weights.size() != params.weights.size()) {
    vel.weights.assign(params.weights.size(), 0.0);
    vel.bias.assign(params.bias.size(), 0.0);
  }

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  ModelParams out = params;
  std::vector<double> gw(out.weights.size());
  std::vector<double> gb(out.bias.size());
  std::vector<double> probs;

  const std::size_t n = train_set.size();
  const std::size_t bs = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  for (std::size_t start = 0; start < n; start += bs) {
    const std::size_t count = std::min(bs, n - start);
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t k = 0; k < count; ++k) {
      const Sample& s = train_set[order[start + k]];
      const std::vector<double> x = augment(s.features, cfg.augment_std, rng);
      detail::accumulate_ce_grad(out, x, s.label, probs, gw, gb);
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < gw.size(); ++i)
      gw[i] = gw[i] * inv + cfg.weight_decay * out.weights[i];
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= inv;

    for (std::size_t i = 0; i < gw.size(); ++i) {
      vel.weights[i] = cfg.momentum * vel.weights[i] + gw[i];
      out.weights[i] -= cfg.learning_rate * vel.weights[i];
    }
    for (std::size_t i = 0; i < gb.size(); ++i) {
      vel.bias[i] = cfg.momentum * vel.bias[i] + gb[i];
      out.bias[i] -= cfg.learning_rate * vel.bias[i];
    }
  }
  return out;
}

// Pooled mean of per-sample cross-entropy over source plus pseudo-labeled
// samples: one average over m_s + m_t, not a mean of per-set means.
// Probabilities are clamped to [1e-12, 1] before the log.
inline double mixed_loss(const ModelParams& params,
                         std::span<const Sample> source_set,
                         std::span<const Sample> pseudo_set) {
  const std::size_t total = source_set.size() + pseudo_set.size();
  if (total == 0) return 0.0;
  detail::check_labeled(source_set, params.num_classes, params.dim);
  detail::check_labeled(pseudo_set, params.num_classes, params.dim);
  std::vector<double> probs;
  double loss = 0.0;
  for (std::span<const Sample> part : {source_set, pseudo_set}) {
    for (const Sample& s : part) {
      detail::softmax_logits(params, s.features, probs);
      loss += detail::clamped_log_loss(probs[s.label]);
    }
  }
  return loss / static_cast<double>(total);
}

// Analytic gradient of mixed_loss, same pooling. Used by the finite
// difference checks; sgd_epoch accumulates the identical per-sample terms.
inline void mixed_loss_grad(const ModelParams& params,
                            std::span<const Sample> source_set,
                            std::span<const Sample> pseudo_set,
                            std::vector<double>& gw, std::vector<double>& gb) {
  gw.assign(params.weights.size(), 0.0);
  gb.assign(params.bias.size(), 0.0);
  const std::size_t total = source_set.size() + pseudo_set.size();
  if (total == 0) return;
  detail::check_labeled(source_set, params.num_classes, params.dim);
  detail::check_labeled(pseudo_set, params.num_classes, params.dim);
  std::vector<double> probs;
  for (std::span<const Sample> part : {source_set, pseudo_set}) {
    for (const Sample& s : part)
      detail::accumulate_ce_grad(params, s.features, s.label, probs, gw, gb);
  }
  const double inv = 1.0 / static_cast<double>(total);
  for (double& g : gw) g *= inv;
  for (double& g : gb) g *= inv;
}

// Checkpoint format: {"C":..,"D":..,"weights":[[..]],"bias":[..]} with 17
// significant digits, written by hand so bytes are reproducible.
inline void save_checkpoint(const ModelParams& params,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot open for writing: " + path);
  out << "{\"C\":" << params.num_classes << ",\"D\":" << params.dim
      << ",\"weights\":[";
  for (int c = 0; c < params.num_classes; ++c) {
    if (c) out << ',';
    out << '[';
    for (int d = 0; d < params.dim; ++d) {
      if (d) out << ',';
      out << detail::format_double(params.weight(c, d));
    }
    out << ']';
  }
  out << "],\"bias\":[";
  for (int c = 0; c < params.num_classes; ++c) {
    if (c) out << ',';
    out << detail::format_double(params.bias[c]);
  }
  out << "]}\n";
  if (!out) fail(Errc::io_error, "write failed: " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open for reading: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::schema_error, std::string("bad checkpoint json: ") + e.what());
  }
  if (!j.contains("C") || !j.contains("D") || !j.contains("weights") ||
      !j.contains("bias"))
    fail(Errc::schema_error, "checkpoint missing required keys");
  ModelParams p;
  p.num_classes = j.at("C").get<int>();
  p.dim = j.at("D").get<int>();
  if (p.num_classes < 2 || p.dim < 1)
    fail(Errc::schema_error, "checkpoint has invalid dimensions");
  const auto& w = j.at("weights");
  const auto& b = j.at("bias");
  if (w.size() != static_cast<std::size_t>(p.num_classes) ||
      b.size() != static_cast<std::size_t>(p.num_classes))
    fail(Errc::schema_error, "checkpoint weight/bias shape mismatch");
  p.weights.reserve(static_cast<std::size_t>(p.num_classes) * p.dim);
  for (const auto& row : w) {
    if (row.size() != static_cast<std::size_t>(p.dim))
      fail(Errc::schema_error, "checkpoint weight row length mismatch");
    for (const auto& v : row) p.weights.push_back(v.get<double>());
  }
  for (const auto& v : b) p.bias.push_back(v.get<double>());
  for (double v : p.weights)
    if (!std::isfinite(v)) fail(Errc::schema_error, "non-finite weight");
  for (double v : p.bias)
    if (!std::isfinite(v)) fail(Errc::schema_error, "non-finite bias");
  return p;
}

}  // namespace hcrpl
