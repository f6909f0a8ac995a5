// Probability-vector kernels: the simplex types plus normalize / sharpen /
// entropy / argmax used throughout the pipeline.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hcrpl/error.hpp"

namespace hcrpl {

// Construction tolerance: inputs whose mass is within this of 1 are
// renormalized, anything further off is rejected as a logic bug.
inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kZeroMassFloor = 1e-300;

namespace detail {

inline double sum_of(const std::vector<double>& values) {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

// Divides by the sum unless it is already 1 within 1e-15; the skip keeps
// repeated normalization bit-stable once a vector is on the simplex.
inline void renormalize(std::vector<double>& values, double total) {
  if (std::abs(total - 1.0) <= 1e-15) return;
  for (double& v : values) v /= total;
}

}  // namespace detail

// Length-C nonnegative vector summing to 1. The tag keeps per-sample class
// probabilities and dataset-level class proportions from mixing silently.
template <class Tag>
class Simplex {
 public:
  Simplex() = default;

  explicit Simplex(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2)
      fail(Errc::invalid_distribution,
           "need at least 2 classes, got " + std::to_string(values_.size()));
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(values_[i] >= 0.0))
        fail(Errc::negative_entry, "entry " + std::to_string(i) + " is " +
                                       std::to_string(values_[i]));
    }
    const double total = detail::sum_of(values_);
    if (std::abs(total - 1.0) > kSimplexTolerance)
      fail(Errc::invalid_distribution,
           "mass sums to " + std::to_string(total) + ", expected 1");
    detail::renormalize(values_, total);
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const Simplex& a, const Simplex& b) {
    return a.values_ == b.values_;
  }

 private:
  std::vector<double> values_;
};

struct ProbTag {};
struct PropTag {};
using ProbVector = Simplex<ProbTag>;        // one sample's class probabilities
using ClassProportion = Simplex<PropTag>;   // a distribution over classes

// x / sum(x). Argmax is preserved since the map is a positive rescale.
inline ProbVector normalize(const std::vector<double>& raw) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!(raw[i] >= 0.0))
      fail(Errc::negative_entry,
           "entry " + std::to_string(i) + " is " + std::to_string(raw[i]));
  }
  const double total = detail::sum_of(raw);
  if (!(total > kZeroMassFloor))
    fail(Errc::zero_mass, "mass " + std::to_string(total) + " is not positive");
  std::vector<double> scaled = raw;
  detail::renormalize(scaled, total);
  return ProbVector(std::move(scaled));
}

// normalize(p^(1/T)). T < 1 concentrates mass on the argmax, T > 1 flattens.
inline ProbVector sharpen(const ProbVector& p, double temperature) {
  if (!(temperature > 0.0))
    fail(Errc::invalid_temperature,
         "temperature " + std::to_string(temperature) + " must be positive");
  const double exponent = 1.0 / temperature;
  std::vector<double> powered(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    powered[i] = std::pow(p[i], exponent);
  return normalize(powered);
}

// Shannon entropy in nats, with 0 * ln 0 = 0.
inline double entropy(const ProbVector& p) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  return h;
}

// Index of the maximum; ties break to the lowest index.
inline int argmax_stable(const std::vector<double>& values) {
  if (values.empty()) fail(Errc::dimension_mismatch, "argmax of empty sequence");
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = static_cast<int>(i);
  return best;
}

template <class Tag>
inline int argmax_stable(const Simplex<Tag>& p) {
  return argmax_stable(p.values());
}

}  // namespace hcrpl
