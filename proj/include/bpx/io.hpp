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
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bpx/distribution.hpp"
#include "bpx/error.hpp"
#include "bpx/mrf.hpp"

namespace bpx {

/// A node's known class, 1-based as in label files.
struct NodeLabel {
  NodeId node;
  std::size_t label;
  bool operator==(const NodeLabel&) const = default;
};

/// An explicit prior for one node.
struct NodePrior {
  NodeId node;
  std::vector<double> probs;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == '\t' || line[i] == ' ' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != '\t' && line[i] != ' ' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline bool skippable(std::string_view line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string_view::npos || line[first] == '#';
}

inline NodeId parse_id(std::string_view field, const std::string& source, std::size_t line) {
  NodeId v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || v < 0) {
    throw ParseError(source, line, "expected a non-negative integer node id, got '" +
                                       std::string(field) + "'");
  }
  return v;
}

inline double parse_real(std::string_view field, const std::string& source, std::size_t line) {
  // from_chars for double is incomplete in older libstdc++
  std::string s(field);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v)) {
    throw ParseError(source, line, "expected a real number, got '" + s + "'");
  }
  return v;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace detail

/// Reads "u<TAB>v" lines; '#' lines and blank lines are skipped.
/// Returns distinct canonical edges in ascending order.
inline std::vector<Edge> parse_edges(std::istream& in, const std::string& source = "<edges>") {
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    auto f = detail::split_fields(line);
    if (f.size() != 2) {
      throw ParseError(source, lineno, "expected 2 fields 'u<TAB>v', got " + std::to_string(f.size()));
    }
    const NodeId u = detail::parse_id(f[0], source, lineno);
    const NodeId v = detail::parse_id(f[1], source, lineno);
    if (u == v) throw ParseError(source, lineno, "self-loop on node " + std::to_string(u));
    edges.push_back(make_edge(u, v));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

inline std::vector<Edge> load_edges(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_edges(in, path.string());
}

/// Reads "node<TAB>class" lines with 1-based classes. A node may appear once.
inline std::vector<NodeLabel> parse_labels(std::istream& in, const std::string& source = "<labels>") {
  std::map<NodeId, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    auto f = detail::split_fields(line);
    if (f.size() != 2) {
      throw ParseError(source, lineno, "expected 2 fields 'node<TAB>class', got " + std::to_string(f.size()));
    }
    const NodeId node = detail::parse_id(f[0], source, lineno);
    const NodeId cls = detail::parse_id(f[1], source, lineno);
    if (cls < 1) throw ParseError(source, lineno, "classes are numbered from 1");
    if (!seen.emplace(node, static_cast<std::size_t>(cls)).second) {
      throw ParseError(source, lineno, "node " + std::to_string(node) + " labelled twice");
    }
  }
  std::vector<NodeLabel> out;
  for (auto [n, c] : seen) out.push_back({n, c});
  return out;
}

inline std::vector<NodeLabel> load_labels(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_labels(in, path.string());
}

/// Reads "node<TAB>p_1<TAB>...<TAB>p_c" lines; each row must sum to 1.
inline std::vector<NodePrior> parse_priors(std::istream& in, const std::string& source = "<priors>") {
  std::map<NodeId, std::vector<double>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    auto f = detail::split_fields(line);
    if (f.size() < 3) throw ParseError(source, lineno, "expected 'node<TAB>p_1<TAB>...<TAB>p_c' with c >= 2");
    const NodeId node = detail::parse_id(f[0], source, lineno);
    std::vector<double> p;
    double total = 0.0;
    for (std::size_t i = 1; i < f.size(); ++i) {
      p.push_back(detail::parse_real(f[i], source, lineno));
      if (p.back() < 0.0) throw ParseError(source, lineno, "negative probability");
      total += p.back();
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      throw ParseError(source, lineno, "prior sums to " + std::to_string(total) + ", expected 1");
    }
    if (!seen.emplace(node, std::move(p)).second) {
      throw ParseError(source, lineno, "node " + std::to_string(node) + " has two priors");
    }
  }
  std::vector<NodePrior> out;
  for (auto& [n, p] : seen) out.push_back({n, std::move(p)});
  return out;
}

inline std::vector<NodePrior> load_priors(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_priors(in, path.string());
}

/// Where a model comes from and how its priors and potentials are built.
struct DatasetSpec {
  std::string preset;                  // "karate", or empty to read files
  std::filesystem::path edge_file;
  std::filesystem::path labels_file;   // optional
  std::filesystem::path priors_file;   // optional explicit priors
  std::size_t class_count = 2;
  std::optional<double> labeled_ratio;  // fraction of known labels revealed as priors
  double homophily = 0.9;
  std::uint64_t seed = 0;

  void validate() const {
    if (class_count < 2) throw ValidationError("class count must be >= 2");
    if (!(homophily > 0.0 && homophily < 1.0)) throw ValidationError("homophily must lie in (0, 1)");
    if (labeled_ratio && !(*labeled_ratio >= 0.0 && *labeled_ratio <= 1.0)) {
      throw ValidationError("labeled ratio must lie in [0, 1]");
    }
  }
};

/// Keeps round(ratio * |labels|) labels chosen uniformly with `seed`
/// (all of them when no ratio is given). Output is ascending by node.
inline std::vector<NodeLabel> reveal_labels(std::vector<NodeLabel> labels,
                                            std::optional<double> ratio, std::uint64_t seed) {
  if (!ratio) return labels;
  const auto keep = static_cast<std::size_t>(std::llround(*ratio * static_cast<double>(labels.size())));
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < keep && i < labels.size(); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, labels.size() - 1);
    std::swap(labels[i], labels[pick(rng)]);
  }
  labels.resize(std::min(keep, labels.size()));
  std::sort(labels.begin(), labels.end(),
            [](const NodeLabel& a, const NodeLabel& b) { return a.node < b.node; });
  return labels;
}

/// Builds the model: labelled nodes get 0.9 on their class and 0.1 / (c - 1)
/// elsewhere, other nodes a uniform prior (explicit `priors` override both),
/// and every edge the homophily potential h / (1 - h) / (c - 1).
/// Nodes are the union of edge endpoints, labelled nodes and prior nodes.
inline Mrf build_mrf(const DatasetSpec& spec, const std::vector<Edge>& edges,
                     const std::vector<NodeLabel>& labels,
                     const std::vector<NodePrior>& priors = {}) {
  spec.validate();
  const std::size_t c = spec.class_count;
  std::map<NodeId, LabelDistribution> node_priors;
  for (const Edge& e : edges) {
    node_priors.emplace(e.u, LabelDistribution::uniform(c));
    node_priors.emplace(e.v, LabelDistribution::uniform(c));
  }
  for (const auto& l : labels) {
    if (l.label < 1 || l.label > c) {
      throw ValidationError("node " + std::to_string(l.node) + " has class " +
                            std::to_string(l.label) + " outside 1.." + std::to_string(c));
    }
    std::vector<double> p(c, 0.1 / static_cast<double>(c - 1));
    p[l.label - 1] = 0.9;
    node_priors.insert_or_assign(l.node, LabelDistribution(std::move(p)));
  }
  for (const auto& p : priors) {
    if (p.probs.size() != c) {
      throw ValidationError("prior of node " + std::to_string(p.node) + " has " +
                            std::to_string(p.probs.size()) + " classes, expected " + std::to_string(c));
    }
    node_priors.insert_or_assign(p.node, LabelDistribution(p.probs));
  }
  std::vector<NodeSpec> nodes;
  nodes.reserve(node_priors.size());
  for (auto& [id, prior] : node_priors) nodes.push_back({id, std::move(prior)});
  const auto psi = CompatibilityMatrix::homophily(c, spec.homophily);
  std::vector<EdgeSpec> edge_specs;
  edge_specs.reserve(edges.size());
  for (const Edge& e : edges) edge_specs.push_back({e.u, e.v, psi});
  return Mrf(c, std::move(nodes), std::move(edge_specs));
}

/// Zachary's karate club: 34 members, 78 friendships, two factions.
struct KarateClub {
  std::vector<Edge> edges;
  std::vector<NodeLabel> factions;        // every member: 1 = instructor's, 2 = officer's
  std::vector<NodeLabel> default_labels;  // only the two faction heads, 0 and 33
};

inline KarateClub karate_club() {
  static constexpr std::pair<int, int> kEdges[] = {
      {0, 1},   {0, 2},   {0, 3},   {0, 4},   {0, 5},   {0, 6},   {0, 7},   {0, 8},
      {0, 10},  {0, 11},  {0, 12},  {0, 13},  {0, 17},  {0, 19},  {0, 21},  {0, 31},
      {1, 2},   {1, 3},   {1, 7},   {1, 13},  {1, 17},  {1, 19},  {1, 21},  {1, 30},
      {2, 3},   {2, 7},   {2, 8},   {2, 9},   {2, 13},  {2, 27},  {2, 28},  {2, 32},
      {3, 7},   {3, 12},  {3, 13},  {4, 6},   {4, 10},  {5, 6},   {5, 10},  {5, 16},
      {6, 16},  {8, 30},  {8, 32},  {8, 33},  {9, 33},  {13, 33}, {14, 32}, {14, 33},
      {15, 32}, {15, 33}, {18, 32}, {18, 33}, {19, 33}, {20, 32}, {20, 33}, {22, 32},
      {22, 33}, {23, 25}, {23, 27}, {23, 29}, {23, 32}, {23, 33}, {24, 25}, {24, 27},
      {24, 31}, {25, 31}, {26, 29}, {26, 33}, {27, 33}, {28, 31}, {28, 33}, {29, 32},
      {29, 33}, {30, 32}, {30, 33}, {31, 32}, {31, 33}, {32, 33}};
  // 1 = instructor's faction, 2 = officer's faction
  static constexpr int kFaction[34] = {1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 1, 1, 1, 1, 2, 2, 1,
                                       1, 2, 1, 2, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2};
  KarateClub k;
  for (auto [u, v] : kEdges) k.edges.push_back(Edge{u, v});
  for (int i = 0; i < 34; ++i) k.factions.push_back({i, static_cast<std::size_t>(kFaction[i])});
  k.default_labels = {{0, 1}, {33, 2}};
  return k;
}

enum class SyntheticKind { kTree, kChain, kErdosRenyi };

inline SyntheticKind parse_synthetic_kind(std::string_view s) {
  if (s == "tree") return SyntheticKind::kTree;
  if (s == "chain") return SyntheticKind::kChain;
  if (s == "erdos-renyi" || s == "er") return SyntheticKind::kErdosRenyi;
  throw ValidationError("unknown synthetic graph kind '" + std::string(s) + "'");
}

/// Deterministic synthetic edge lists on ids 0..n-1.
///
/// tree: uniform random recursive tree (param unused). chain: a path
/// (param unused). erdos-renyi: G(n, p) with expected mean degree `param`,
/// reduced to its largest connected component and relabelled 0..m-1 in id
/// order.
inline std::vector<Edge> generate_synthetic(SyntheticKind kind, std::size_t n, double param,
                                            std::uint64_t seed) {
  if (n < 1) throw ValidationError("synthetic graphs need n >= 1");
  if (!std::isfinite(param) || param < 0.0) throw ValidationError("synthetic graph parameter must be >= 0");
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  switch (kind) {
    case SyntheticKind::kChain:
      for (std::size_t i = 1; i < n; ++i) edges.push_back(Edge{static_cast<NodeId>(i - 1), static_cast<NodeId>(i)});
      return edges;
    case SyntheticKind::kTree:
      for (std::size_t i = 1; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        edges.push_back(Edge{static_cast<NodeId>(pick(rng)), static_cast<NodeId>(i)});
      }
      std::sort(edges.begin(), edges.end());
      return edges;
    case SyntheticKind::kErdosRenyi:
      break;
  }
  if (n < 2 || !(param > 0.0) || param >= static_cast<double>(n - 1)) {
    throw ValidationError("erdos-renyi mean degree must lie in (0, n - 1)");
  }
  // Geometric skipping over the pairs (w, v), w < v.
  const double p = param / static_cast<double>(n - 1);
  const double log_q = std::log1p(-p);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::int64_t v = 1, w = -1;
  const auto nn = static_cast<std::int64_t>(n);
  while (v < nn) {
    w += 1 + static_cast<std::int64_t>(std::floor(std::log1p(-unit(rng)) / log_q));
    while (w >= v && v < nn) {
      w -= v;
      ++v;
    }
    if (v < nn) edges.push_back(Edge{w, v});
  }
  // largest connected component
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Edge& e : edges) {
    auto a = find(static_cast<std::size_t>(e.u));
    auto b = find(static_cast<std::size_t>(e.v));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> comp_size(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++comp_size[find(i)];
  const std::size_t root =
      static_cast<std::size_t>(std::max_element(comp_size.begin(), comp_size.end()) - comp_size.begin());
  std::vector<NodeId> relabel(n, -1);
  NodeId next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (find(i) == root) relabel[i] = next++;
  }
  std::vector<Edge> kept;
  for (const Edge& e : edges) {
    if (relabel[static_cast<std::size_t>(e.u)] >= 0) {
      kept.push_back(make_edge(relabel[static_cast<std::size_t>(e.u)], relabel[static_cast<std::size_t>(e.v)]));
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

/// A loaded model and the labels that were turned into priors.
struct Dataset {
  Mrf mrf;
  std::vector<NodeLabel> revealed_labels;

  bool is_labeled(NodeId id) const {
    return std::any_of(revealed_labels.begin(), revealed_labels.end(),
                       [&](const NodeLabel& l) { return l.node == id; });
  }
};

/// Loads a preset or the files named by `spec`.
inline Dataset load_dataset(const DatasetSpec& spec) {
  spec.validate();
  std::vector<Edge> edges;
  std::vector<NodeLabel> labels;
  if (!spec.preset.empty()) {
    if (spec.preset != "karate") throw ValidationError("unknown preset '" + spec.preset + "'");
    if (spec.class_count != 2) throw ValidationError("the karate preset has 2 classes");
    auto k = karate_club();
    edges = std::move(k.edges);
    labels = spec.labeled_ratio ? k.factions : k.default_labels;
  } else {
    if (spec.edge_file.empty()) throw ValidationError("no edge file given");
    edges = load_edges(spec.edge_file);
  }
  if (!spec.labels_file.empty()) labels = load_labels(spec.labels_file);
  std::vector<NodePrior> priors;
  if (!spec.priors_file.empty()) priors = load_priors(spec.priors_file);
  Dataset d;
  d.revealed_labels = reveal_labels(std::move(labels), spec.labeled_ratio, spec.seed);
  d.mrf = build_mrf(spec, edges, d.revealed_labels, priors);
  return d;
}

}  // namespace bpx
