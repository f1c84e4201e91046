// Copyright 2026 The bpexplain Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bpx/error.hpp"

namespace bpx {

/// Probabilities are clamped to [kProbabilityFloor, 1] before any log or division.
inline constexpr double kProbabilityFloor = 1e-12;

/// Maximum deviation of a distribution's total mass from 1.
inline constexpr double kNormalizationTolerance = 1e-9;

/// A probability vector over the c classes of a model.
///
/// Houses priors, BP messages and beliefs. Entries are non-negative, sum to 1
/// within kNormalizationTolerance, and c >= 2.
class LabelDistribution {
 public:
  LabelDistribution() = default;

  /// Wraps an already normalized vector. Throws ValidationError otherwise.
  explicit LabelDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2) {
      throw ValidationError("a label distribution needs at least 2 classes");
    }
    double total = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0) {
        throw ValidationError("label distribution entries must be finite and >= 0");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      throw ValidationError("label distribution sums to " + std::to_string(total) +
                            ", expected 1");
    }
  }

  static LabelDistribution uniform(std::size_t class_count) {
    if (class_count < 2) {
      throw PreconditionError("a label distribution needs at least 2 classes");
    }
    return LabelDistribution(
        std::vector<double>(class_count, 1.0 / static_cast<double>(class_count)));
  }

  /// Scales non-negative weights to unit mass. All-zero weights are degenerate.
  static LabelDistribution normalize(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!std::isfinite(w) || w < 0.0) {
        throw ValidationError("weights must be finite and >= 0");
      }
      total += w;
    }
    if (!(total > 0.0)) {
      throw DegenerateError("cannot normalize an all-zero weight vector");
    }
    for (double& w : weights) w /= total;
    return LabelDistribution(std::move(weights));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  bool empty() const noexcept { return probs_.empty(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::vector<double>& values() const noexcept { return probs_; }

  bool operator==(const LabelDistribution&) const = default;

 private:
  std::vector<double> probs_;
};

namespace detail {

inline double clamp_probability(double p) { return std::clamp(p, kProbabilityFloor, 1.0); }

inline double kl_clamped(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw PreconditionError("KL divergence of distributions with different lengths (" +
                            std::to_string(p.size()) + " vs " + std::to_string(q.size()) +
                            ")");
  }
  double sum = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    const double px = clamp_probability(p[x]);
    const double qx = clamp_probability(q[x]);
    sum += px * std::log(px / qx);
  }
  // Clamping can perturb the mass by ~1e-12 and push an exact zero below it.
  return std::max(sum, 0.0);
}

}  // namespace detail

/// KL(p || q) in nats.
inline double kl(const LabelDistribution& p, const LabelDistribution& q) {
  return detail::kl_clamped(p.probs(), q.probs());
}

/// KL(p || q) + KL(q || p); the faithfulness distance between two marginals.
inline double sym_kl(const LabelDistribution& p, const LabelDistribution& q) {
  return kl(p, q) + kl(q, p);
}

/// Largest absolute entry-wise difference.
inline double max_abs_diff(const LabelDistribution& p, const LabelDistribution& q) {
  if (p.size() != q.size()) throw PreconditionError("distribution length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) m = std::max(m, std::abs(p[i] - q[i]));
  return m;
}

}  // namespace bpx
