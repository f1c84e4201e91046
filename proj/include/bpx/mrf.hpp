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
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bpx/distribution.hpp"
#include "bpx/error.hpp"

namespace bpx {

using NodeId = std::int64_t;

/// An undirected edge stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  auto operator<=>(const Edge&) const = default;

  bool touches(NodeId x) const noexcept { return u == x || v == x; }
  NodeId other(NodeId x) const noexcept { return x == u ? v : u; }
};

/// Canonical edge between a and b. Self-loops are rejected.
inline Edge make_edge(NodeId a, NodeId b) {
  if (a == b) {
    throw ValidationError("self-loop on node " + std::to_string(a));
  }
  return a < b ? Edge{a, b} : Edge{b, a};
}

/// c x c table of strictly positive compatibilities psi(x_from, x_to).
class CompatibilityMatrix {
 public:
  CompatibilityMatrix() = default;

  CompatibilityMatrix(std::size_t class_count, std::vector<double> row_major)
      : classes_(class_count), entries_(std::move(row_major)) {
    if (classes_ < 2) throw ValidationError("compatibility matrix needs c >= 2");
    if (entries_.size() != classes_ * classes_) {
      throw ValidationError("compatibility matrix has " + std::to_string(entries_.size()) +
                            " entries, expected " + std::to_string(classes_ * classes_));
    }
    for (double e : entries_) {
      if (!std::isfinite(e) || e <= 0.0) {
        throw ValidationError("compatibility entries must be finite and strictly positive");
      }
    }
  }

  /// h on the diagonal, (1 - h) / (c - 1) elsewhere.
  static CompatibilityMatrix homophily(std::size_t class_count, double h) {
    if (class_count < 2) throw ValidationError("homophily potential needs c >= 2");
    if (!(h > 0.0 && h < 1.0)) throw ValidationError("homophily strength must lie in (0, 1)");
    const double off = (1.0 - h) / static_cast<double>(class_count - 1);
    std::vector<double> e(class_count * class_count, off);
    for (std::size_t a = 0; a < class_count; ++a) e[a * class_count + a] = h;
    return CompatibilityMatrix(class_count, std::move(e));
  }

  std::size_t class_count() const noexcept { return classes_; }
  double operator()(std::size_t a, std::size_t b) const { return entries_[a * classes_ + b]; }
  std::span<const double> entries() const noexcept { return entries_; }

  CompatibilityMatrix transposed() const {
    std::vector<double> t(entries_.size());
    for (std::size_t a = 0; a < classes_; ++a)
      for (std::size_t b = 0; b < classes_; ++b) t[b * classes_ + a] = entries_[a * classes_ + b];
    return CompatibilityMatrix(classes_, std::move(t));
  }

  bool operator==(const CompatibilityMatrix&) const = default;

 private:
  std::size_t classes_ = 0;
  std::vector<double> entries_;
};

/// Node declaration used to build an Mrf.
struct NodeSpec {
  NodeId id;
  LabelDistribution prior;
};

/// Edge declaration; `potential` is oriented as psi(x_from, x_to).
struct EdgeSpec {
  NodeId from;
  NodeId to;
  CompatibilityMatrix potential;
};

/// An immutable pairwise Markov random field.
///
/// Nodes are kept sorted by id and addressed internally by dense index (the
/// position in that order). Edges are sorted canonical pairs; the potential of
/// edge e is oriented from its lower-id endpoint to its higher-id endpoint, so
/// psi_ij(a, b) == psi_ji(b, a) holds by construction.
class Mrf {
 public:
  struct Neighbor {
    std::size_t node;  // dense index of the neighbor
    std::size_t edge;  // edge index
    bool operator==(const Neighbor&) const = default;
  };

  Mrf() = default;

  Mrf(std::size_t class_count, std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges)
      : classes_(class_count) {
    if (classes_ < 2) throw ValidationError("an MRF needs at least 2 classes");

    std::sort(nodes.begin(), nodes.end(),
              [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
    ids_.reserve(nodes.size());
    priors_.reserve(nodes.size());
    for (auto& n : nodes) {
      if (!ids_.empty() && ids_.back() == n.id) {
        throw ValidationError("duplicate node " + std::to_string(n.id));
      }
      if (n.prior.size() != classes_) {
        throw ValidationError("prior of node " + std::to_string(n.id) + " has " +
                              std::to_string(n.prior.size()) + " classes, expected " +
                              std::to_string(classes_));
      }
      ids_.push_back(n.id);
      priors_.push_back(std::move(n.prior));
    }

    struct Pending {
      std::size_t a, b;
      CompatibilityMatrix psi;
    };
    std::vector<Pending> pending;
    pending.reserve(edges.size());
    for (auto& e : edges) {
      if (e.from == e.to) throw ValidationError("self-loop on node " + std::to_string(e.from));
      if (e.potential.class_count() != classes_) {
        throw ValidationError("potential class count mismatch on edge (" +
                              std::to_string(e.from) + ", " + std::to_string(e.to) + ")");
      }
      auto a = index_of(e.from);
      auto b = index_of(e.to);
      if (!a || !b) {
        throw ValidationError("edge (" + std::to_string(e.from) + ", " + std::to_string(e.to) +
                              ") references an unknown node");
      }
      if (*a < *b) {
        pending.push_back({*a, *b, std::move(e.potential)});
      } else {
        pending.push_back({*b, *a, e.potential.transposed()});
      }
    }
    std::sort(pending.begin(), pending.end(), [](const Pending& x, const Pending& y) {
      return std::pair(x.a, x.b) < std::pair(y.a, y.b);
    });

    adjacency_.assign(ids_.size(), {});
    endpoints_.reserve(pending.size());
    edges_.reserve(pending.size());
    potentials_.reserve(pending.size());
    for (auto& p : pending) {
      if (!endpoints_.empty() && endpoints_.back() == std::pair(p.a, p.b)) {
        throw ValidationError("duplicate edge (" + std::to_string(ids_[p.a]) + ", " +
                              std::to_string(ids_[p.b]) + ")");
      }
      const std::size_t e = endpoints_.size();
      endpoints_.emplace_back(p.a, p.b);
      edges_.push_back(Edge{ids_[p.a], ids_[p.b]});
      potentials_.push_back(std::move(p.psi));
      adjacency_[p.a].push_back({p.b, e});
      adjacency_[p.b].push_back({p.a, e});
    }
    for (auto& adj : adjacency_) {
      std::sort(adj.begin(), adj.end(),
                [](const Neighbor& x, const Neighbor& y) { return x.node < y.node; });
    }
  }

  std::size_t class_count() const noexcept { return classes_; }
  std::size_t node_count() const noexcept { return ids_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  /// Node ids in ascending order; position == dense index.
  std::span<const NodeId> node_ids() const noexcept { return ids_; }
  /// Canonical edges in ascending order; position == edge index.
  std::span<const Edge> edges() const noexcept { return edges_; }

  std::optional<std::size_t> index_of(NodeId id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
  }

  std::size_t require_index(NodeId id) const {
    auto i = index_of(id);
    if (!i) throw PreconditionError("node " + std::to_string(id) + " is not in the graph");
    return *i;
  }

  bool contains(NodeId id) const { return index_of(id).has_value(); }
  NodeId id_at(std::size_t index) const { return ids_[index]; }

  const LabelDistribution& prior_at(std::size_t index) const { return priors_[index]; }
  const LabelDistribution& prior(NodeId id) const { return priors_[require_index(id)]; }

  std::span<const Neighbor> neighbors_at(std::size_t index) const { return adjacency_[index]; }
  std::size_t degree(NodeId id) const { return adjacency_[require_index(id)].size(); }

  std::vector<NodeId> neighbors(NodeId id) const {
    std::vector<NodeId> out;
    for (const auto& n : adjacency_[require_index(id)]) out.push_back(ids_[n.node]);
    return out;
  }

  /// Edge index joining dense indices a and b, if any.
  std::optional<std::size_t> edge_index_at(std::size_t a, std::size_t b) const {
    const auto& adj = adjacency_[a];
    auto it = std::lower_bound(adj.begin(), adj.end(), b,
                               [](const Neighbor& n, std::size_t v) { return n.node < v; });
    if (it == adj.end() || it->node != b) return std::nullopt;
    return it->edge;
  }

  std::optional<std::size_t> edge_index(NodeId u, NodeId v) const {
    auto a = index_of(u);
    auto b = index_of(v);
    if (!a || !b) return std::nullopt;
    return edge_index_at(*a, *b);
  }

  bool has_edge(NodeId u, NodeId v) const { return edge_index(u, v).has_value(); }

  /// Dense endpoints (lower, higher) of edge e.
  std::pair<std::size_t, std::size_t> endpoints_at(std::size_t e) const { return endpoints_[e]; }

  /// Potential of edge e oriented from its lower endpoint to its higher one.
  const CompatibilityMatrix& potential_at(std::size_t e) const { return potentials_[e]; }

  /// psi(x_from, x_to) for the edge (from, to); throws when it is not an edge.
  CompatibilityMatrix potential(NodeId from, NodeId to) const {
    auto e = edge_index(from, to);
    if (!e) {
      throw PreconditionError("(" + std::to_string(from) + ", " + std::to_string(to) +
                              ") is not an edge");
    }
    return from < to ? potentials_[*e] : potentials_[*e].transposed();
  }

  bool operator==(const Mrf&) const = default;

 private:
  std::size_t classes_ = 0;
  std::vector<NodeId> ids_;
  std::vector<LabelDistribution> priors_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<std::pair<std::size_t, std::size_t>> endpoints_;
  std::vector<Edge> edges_;
  std::vector<CompatibilityMatrix> potentials_;
};

/// The sub-model on `nodes` and `edges`, carrying the parent's priors and
/// potentials unchanged.
inline Mrf induced_subgraph(const Mrf& mrf, std::span<const NodeId> nodes,
                            std::span<const Edge> edges) {
  std::vector<NodeSpec> node_specs;
  node_specs.reserve(nodes.size());
  std::vector<NodeId> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end());
  for (NodeId id : sorted) node_specs.push_back({id, mrf.prior(id)});

  auto in_nodes = [&](NodeId id) { return std::binary_search(sorted.begin(), sorted.end(), id); };
  std::vector<EdgeSpec> edge_specs;
  edge_specs.reserve(edges.size());
  for (const Edge& raw : edges) {
    const Edge e = make_edge(raw.u, raw.v);
    if (!in_nodes(e.u) || !in_nodes(e.v)) {
      throw PreconditionError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                              ") has an endpoint outside the node set");
    }
    auto idx = mrf.edge_index(e.u, e.v);
    if (!idx) {
      throw PreconditionError("(" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                              ") is not an edge of the model");
    }
    edge_specs.push_back({e.u, e.v, mrf.potential_at(*idx)});
  }
  return Mrf(mrf.class_count(), std::move(node_specs), std::move(edge_specs));
}

/// Induced subgraph on a node set with every model edge among those nodes.
inline Mrf node_induced_subgraph(const Mrf& mrf, std::span<const NodeId> nodes) {
  std::vector<NodeId> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Edge> edges;
  for (NodeId id : sorted) {
    for (NodeId nb : mrf.neighbors(id)) {
      if (id < nb && std::binary_search(sorted.begin(), sorted.end(), nb)) {
        edges.push_back(Edge{id, nb});
      }
    }
  }
  return induced_subgraph(mrf, sorted, edges);
}

}  // namespace bpx
