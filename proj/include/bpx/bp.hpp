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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bpx/distribution.hpp"
#include "bpx/error.hpp"
#include "bpx/mrf.hpp"

namespace bpx {

/// Convergence control for sum-product BP.
struct BpConfig {
  std::size_t max_iters = 100;
  double tolerance = 1e-6;  // L-inf bound on the per-round message change
  double damping = 0.0;     // weight kept from the previous round, in [0, 1)

  void validate() const {
    if (max_iters < 1) throw ValidationError("BP max_iters must be >= 1");
    if (!(tolerance > 0.0)) throw ValidationError("BP tolerance must be > 0");
    if (!(damping >= 0.0 && damping < 1.0)) throw ValidationError("BP damping must be in [0, 1)");
  }

  bool operator==(const BpConfig&) const = default;
};

/// Config for BP on an acyclic model with `node_count` nodes.
///
/// Synchronous BP on a tree reaches its fixed point after diameter rounds and
/// the next round changes nothing, so it stops on an exactly zero residual no
/// later than round node_count.
inline BpConfig exact_tree_config(std::size_t node_count) {
  return BpConfig{std::max<std::size_t>(node_count, 1), std::numeric_limits<double>::min(), 0.0};
}

/// Messages for every directed edge of a model, stored flat.
///
/// Directed edge (a -> b) over edge e lives in slot 2e when a is the lower
/// endpoint, 2e + 1 otherwise.
class MessageTable {
 public:
  MessageTable() = default;

  /// Every message set to the uniform distribution.
  MessageTable(std::size_t edge_count, std::size_t class_count)
      : classes_(class_count),
        data_(2 * edge_count * class_count, 1.0 / static_cast<double>(class_count)) {}

  static std::size_t slot(std::size_t edge, bool from_lower) noexcept {
    return 2 * edge + (from_lower ? 0 : 1);
  }

  std::size_t class_count() const noexcept { return classes_; }
  std::size_t slot_count() const noexcept { return classes_ == 0 ? 0 : data_.size() / classes_; }

  std::span<const double> values(std::size_t s) const {
    return std::span<const double>(data_).subspan(s * classes_, classes_);
  }
  std::span<double> values(std::size_t s) {
    return std::span<double>(data_).subspan(s * classes_, classes_);
  }

  /// Slot of the message from -> to; throws if (from, to) is not an edge.
  static std::size_t slot_of(const Mrf& mrf, NodeId from, NodeId to) {
    auto e = mrf.edge_index(from, to);
    if (!e) {
      throw PreconditionError("(" + std::to_string(from) + ", " + std::to_string(to) +
                              ") is not an edge");
    }
    return slot(*e, from < to);
  }

  LabelDistribution at(const Mrf& mrf, NodeId from, NodeId to) const {
    auto v = values(slot_of(mrf, from, to));
    return LabelDistribution(std::vector<double>(v.begin(), v.end()));
  }

  void set(const Mrf& mrf, NodeId from, NodeId to, const LabelDistribution& m) {
    if (m.size() != classes_) throw PreconditionError("message class count mismatch");
    auto dst = values(slot_of(mrf, from, to));
    std::copy(m.probs().begin(), m.probs().end(), dst.begin());
  }

  bool operator==(const MessageTable&) const = default;

 private:
  std::size_t classes_ = 0;
  std::vector<double> data_;
};

/// Converged (or stopped) BP state.
struct BpResult {
  MessageTable messages;
  std::vector<LabelDistribution> beliefs;  // by dense node index
  bool converged = false;
  std::size_t iterations = 0;
  double max_residual = 0.0;

  const LabelDistribution& belief_of(const Mrf& mrf, NodeId id) const {
    return beliefs[mrf.require_index(id)];
  }
};

namespace detail {

inline void check_table(const Mrf& mrf, const MessageTable& messages) {
  if (messages.class_count() != mrf.class_count() ||
      messages.slot_count() != 2 * mrf.edge_count()) {
    throw PreconditionError("message table does not match the model");
  }
}

// Rescales a running product that is drifting towards underflow.
inline void rescale_if_tiny(std::span<double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  if (m > 0.0 && m < 1e-100) {
    for (double& x : v) x /= m;
  }
}

// Normalizes `out` in place; all-zero is degenerate.
inline void normalize_or_throw(std::span<double> out, const char* what, NodeId a, NodeId b) {
  double total = 0.0;
  for (double x : out) total += x;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegenerateError(std::string(what) + " (" + std::to_string(a) + " -> " +
                          std::to_string(b) + ") is all zero");
  }
  for (double& x : out) x /= total;
}

// sum_{x_i} psi(x_i, x_j) * weight(x_i), psi taken from edge e in the
// direction leaving dense node `from`.
inline void push_through_potential(const Mrf& mrf, std::size_t e, std::size_t from,
                                   std::span<const double> weight, std::span<double> out) {
  const auto& psi = mrf.potential_at(e);
  const bool from_lower = mrf.endpoints_at(e).first == from;
  const std::size_t c = mrf.class_count();
  for (std::size_t xj = 0; xj < c; ++xj) {
    double s = 0.0;
    for (std::size_t xi = 0; xi < c; ++xi) {
      s += (from_lower ? psi(xi, xj) : psi(xj, xi)) * weight[xi];
    }
    out[xj] = s;
  }
}

// One synchronous round: every outgoing message of every node, in sorted
// directed-edge order, computed from `prev` into `next`.
inline void sweep(const Mrf& mrf, const MessageTable& prev, MessageTable& next,
                  std::vector<double>& prefix, std::vector<double>& suffix) {
  const std::size_t c = mrf.class_count();
  for (std::size_t i = 0; i < mrf.node_count(); ++i) {
    auto nbrs = mrf.neighbors_at(i);
    const std::size_t d = nbrs.size();
    if (d == 0) continue;
    prefix.assign((d + 1) * c, 1.0);
    suffix.assign((d + 1) * c, 1.0);
    auto prior = mrf.prior_at(i).probs();
    for (std::size_t x = 0; x < c; ++x) prefix[x] = prior[x];
    for (std::size_t p = 0; p < d; ++p) {
      const auto& nb = nbrs[p];
      auto in = prev.values(MessageTable::slot(nb.edge, mrf.endpoints_at(nb.edge).first == nb.node));
      std::span<double> cur(prefix.data() + (p + 1) * c, c);
      for (std::size_t x = 0; x < c; ++x) cur[x] = prefix[p * c + x] * in[x];
      rescale_if_tiny(cur);
    }
    for (std::size_t p = d; p-- > 0;) {
      const auto& nb = nbrs[p];
      auto in = prev.values(MessageTable::slot(nb.edge, mrf.endpoints_at(nb.edge).first == nb.node));
      std::span<double> cur(suffix.data() + p * c, c);
      for (std::size_t x = 0; x < c; ++x) cur[x] = suffix[(p + 1) * c + x] * in[x];
      rescale_if_tiny(cur);
    }
    std::vector<double> weight(c);
    for (std::size_t p = 0; p < d; ++p) {
      const auto& nb = nbrs[p];
      for (std::size_t x = 0; x < c; ++x) weight[x] = prefix[p * c + x] * suffix[(p + 1) * c + x];
      auto out = next.values(MessageTable::slot(nb.edge, mrf.endpoints_at(nb.edge).first == i));
      push_through_potential(mrf, nb.edge, i, weight, out);
      normalize_or_throw(out, "message", mrf.id_at(i), mrf.id_at(nb.node));
    }
  }
}

inline LabelDistribution belief_at(const Mrf& mrf, const MessageTable& messages, std::size_t x) {
  const std::size_t c = mrf.class_count();
  auto prior = mrf.prior_at(x).probs();
  std::vector<double> b(prior.begin(), prior.end());
  for (const auto& nb : mrf.neighbors_at(x)) {
    auto in = messages.values(
        MessageTable::slot(nb.edge, mrf.endpoints_at(nb.edge).first == nb.node));
    for (std::size_t k = 0; k < c; ++k) b[k] *= in[k];
    rescale_if_tiny(b);
  }
  normalize_or_throw(b, "belief of node", mrf.id_at(x), mrf.id_at(x));
  return LabelDistribution(std::move(b));
}

}  // namespace detail

/// Sum-product update of the message i -> j from the messages into i.
inline LabelDistribution compute_message(const Mrf& mrf, const MessageTable& messages, NodeId i,
                                         NodeId j) {
  detail::check_table(mrf, messages);
  auto e = mrf.edge_index(i, j);
  if (!e) {
    throw PreconditionError("(" + std::to_string(i) + ", " + std::to_string(j) +
                            ") is not an edge");
  }
  const std::size_t ii = mrf.require_index(i);
  const std::size_t c = mrf.class_count();
  auto prior = mrf.prior_at(ii).probs();
  std::vector<double> weight(prior.begin(), prior.end());
  for (const auto& nb : mrf.neighbors_at(ii)) {
    if (nb.edge == *e) continue;
    auto in = messages.values(
        MessageTable::slot(nb.edge, mrf.endpoints_at(nb.edge).first == nb.node));
    for (std::size_t x = 0; x < c; ++x) weight[x] *= in[x];
    detail::rescale_if_tiny(weight);
  }
  std::vector<double> out(c);
  detail::push_through_potential(mrf, *e, ii, weight, out);
  detail::normalize_or_throw(out, "message", i, j);
  return LabelDistribution(std::move(out));
}

/// phi(x) times every incoming message, normalized.
inline LabelDistribution belief(const Mrf& mrf, const MessageTable& messages, NodeId x) {
  detail::check_table(mrf, messages);
  return detail::belief_at(mrf, messages, mrf.require_index(x));
}

/// Synchronous sum-product BP from uniform messages.
///
/// Stops when the largest entry-wise message change of a round drops below
/// config.tolerance (converged) or after config.max_iters rounds. Iteration
/// order is fixed, so results are bit-reproducible.
inline BpResult run_bp(const Mrf& mrf, const BpConfig& config = {}) {
  config.validate();
  BpResult result;
  result.messages = MessageTable(mrf.edge_count(), mrf.class_count());

  if (mrf.edge_count() == 0) {
    result.converged = true;
  } else {
    MessageTable next = result.messages;
    std::vector<double> prefix, suffix;
    for (std::size_t it = 1; it <= config.max_iters; ++it) {
      detail::sweep(mrf, result.messages, next, prefix, suffix);
      double residual = 0.0;
      for (std::size_t s = 0; s < 2 * mrf.edge_count(); ++s) {
        auto fresh = next.values(s);
        auto old = result.messages.values(s);
        if (config.damping > 0.0) {
          for (std::size_t x = 0; x < fresh.size(); ++x) {
            fresh[x] = (1.0 - config.damping) * fresh[x] + config.damping * old[x];
          }
        }
        for (std::size_t x = 0; x < fresh.size(); ++x) {
          residual = std::max(residual, std::abs(fresh[x] - old[x]));
        }
      }
      std::swap(result.messages, next);
      result.iterations = it;
      result.max_residual = residual;
      if (residual < config.tolerance) {
        result.converged = true;
        break;
      }
    }
  }

  result.beliefs.reserve(mrf.node_count());
  for (std::size_t x = 0; x < mrf.node_count(); ++x) {
    result.beliefs.push_back(detail::belief_at(mrf, result.messages, x));
  }
  return result;
}

}  // namespace bpx
