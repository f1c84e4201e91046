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
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bpx/bp.hpp"
#include "bpx/distribution.hpp"
#include "bpx/error.hpp"
#include "bpx/mrf.hpp"
#include "bpx/topology.hpp"

namespace bpx {

/// How a beam candidate is grown by one node.
enum class Method {
  kGlobal,        // GE-G: run BP on every frontier extension
  kLocal,         // GE-L: back-trace the full graph's converged messages
  kRandomGlobal,  // uniform frontier pick, GE-G structure
  kRandomLocal,   // uniform pick under the GE-L variant's structure and size
};

/// Structural constraint on which end-points GE-L may extend.
enum class LocalVariant {
  kUnconstrained,   // any open end-point
  kChain,           // only the most recently added node
  kDirectNeighbor,  // only the target (star around it)
};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::kGlobal: return "ge-g";
    case Method::kLocal: return "ge-l";
    case Method::kRandomGlobal: return "random-g";
    case Method::kRandomLocal: return "random-l";
  }
  return "?";
}

inline std::string_view variant_name(LocalVariant v) {
  switch (v) {
    case LocalVariant::kUnconstrained: return "unconstrained";
    case LocalVariant::kChain: return "chain";
    case LocalVariant::kDirectNeighbor: return "star";
  }
  return "?";
}

namespace detail {
inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}
}  // namespace detail

inline Method parse_method(std::string_view text) {
  const auto s = detail::lowercase(text);
  if (s == "ge-g" || s == "geg" || s == "global") return Method::kGlobal;
  if (s == "ge-l" || s == "gel" || s == "local") return Method::kLocal;
  if (s == "random-g" || s == "random_g") return Method::kRandomGlobal;
  if (s == "random-l" || s == "random_l") return Method::kRandomLocal;
  throw ValidationError("unknown search method '" + std::string(text) + "'");
}

inline LocalVariant parse_variant(std::string_view text) {
  const auto s = detail::lowercase(text);
  if (s == "unconstrained" || s == "none") return LocalVariant::kUnconstrained;
  if (s == "chain") return LocalVariant::kChain;
  if (s == "star" || s == "direct-neighbor" || s == "direct") return LocalVariant::kDirectNeighbor;
  throw ValidationError("unknown GE-L variant '" + std::string(text) + "'");
}

/// Parameters of one explanation search.
struct SearchConfig {
  std::size_t capacity = 5;  // C: maximum number of nodes in an explanation
  std::size_t beam = 1;      // k
  Method method = Method::kGlobal;
  LocalVariant variant = LocalVariant::kUnconstrained;
  double pruning_rate = 0.0;  // fraction of newly evaluated frontier nodes abandoned
  std::uint64_t seed = 0;
  BpConfig bp;  // for the full graph and for cyclic sub-models

  void validate() const {
    if (capacity < 1) throw ValidationError("capacity must be >= 1");
    if (beam < 1) throw ValidationError("beam width must be >= 1");
    if (!(pruning_rate >= 0.0 && pruning_rate < 1.0)) {
      throw ValidationError("pruning rate must lie in [0, 1)");
    }
    bp.validate();
  }
};

/// A candidate explanation of `target`: a connected sub-model and the target
/// belief BP computes on it.
struct ExplanationSubgraph {
  NodeId target = 0;
  std::vector<NodeId> nodes;             // insertion order, nodes[0] == target
  std::vector<Edge> edges;               // insertion order
  std::vector<NodeId> closed_endpoints;  // GE-L end-points closed by their prior; ascending
  LabelDistribution belief_on_subgraph;  // empty until evaluated
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::string method_tag;
  // Ranking key while the beam grows (objective for GE-G, back-tracing score
  // for GE-L, a random key for the baselines). Not serialized.
  double search_score = 0.0;

  static ExplanationSubgraph seed(NodeId target, std::string tag = {}) {
    ExplanationSubgraph s;
    s.target = target;
    s.nodes = {target};
    s.method_tag = std::move(tag);
    return s;
  }

  std::size_t size() const noexcept { return nodes.size(); }
  bool evaluated() const noexcept { return !belief_on_subgraph.empty(); }

  bool contains(NodeId id) const { return std::find(nodes.begin(), nodes.end(), id) != nodes.end(); }

  bool is_closed(NodeId id) const {
    return std::binary_search(closed_endpoints.begin(), closed_endpoints.end(), id);
  }

  std::vector<NodeId> sorted_nodes() const {
    auto v = nodes;
    std::sort(v.begin(), v.end());
    return v;
  }

  std::vector<Edge> sorted_edges() const {
    auto v = edges;
    std::sort(v.begin(), v.end());
    return v;
  }

  /// Copy with `node` attached through the single edge (node, anchor).
  ExplanationSubgraph extended(NodeId node, NodeId anchor) const {
    ExplanationSubgraph out = *this;
    out.nodes.push_back(node);
    out.edges.push_back(make_edge(node, anchor));
    out.belief_on_subgraph = {};
    out.objective = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  friend bool operator==(const ExplanationSubgraph& a, const ExplanationSubgraph& b) {
    const bool same_objective =
        (std::isnan(a.objective) && std::isnan(b.objective)) || a.objective == b.objective;
    return a.target == b.target && a.nodes == b.nodes && a.edges == b.edges &&
           a.closed_endpoints == b.closed_endpoints &&
           a.belief_on_subgraph == b.belief_on_subgraph && same_objective &&
           a.method_tag == b.method_tag;
  }
};

/// A frontier node together with the one subgraph node it would attach to.
struct FrontierLink {
  NodeId node;
  NodeId anchor;

  Edge edge() const { return make_edge(node, anchor); }
  auto operator<=>(const FrontierLink&) const = default;
};

/// Ranked candidates of one search; ascending objective.
struct Beam {
  std::vector<ExplanationSubgraph> candidates;
  std::size_t bp_invocations = 0;  // sub-model BP runs spent by the search
};

/// Every (Y, (Y, W)) with W in the subgraph and Y outside it, ordered by (Y, W).
inline std::vector<FrontierLink> frontier(const Mrf& mrf, const ExplanationSubgraph& sub) {
  const auto inside = sub.sorted_nodes();
  std::vector<FrontierLink> out;
  for (NodeId w : inside) {
    for (const auto& nb : mrf.neighbors_at(mrf.require_index(w))) {
      const NodeId y = mrf.id_at(nb.node);
      if (!std::binary_search(inside.begin(), inside.end(), y)) out.push_back({y, w});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// BP settings for a sub-model: exact termination on trees, `loopy` otherwise.
inline BpConfig subgraph_bp_config(const BpConfig& loopy, std::span<const NodeId> nodes,
                                   std::span<const Edge> edges) {
  return is_tree(nodes, edges) ? exact_tree_config(nodes.size()) : loopy;
}

/// Sub-model of an explanation and its BP state.
struct SubgraphInference {
  Mrf model;
  BpResult result;
};

inline SubgraphInference infer_subgraph(const Mrf& mrf, const ExplanationSubgraph& sub,
                                        const BpConfig& bp) {
  SubgraphInference out{induced_subgraph(mrf, sub.nodes, sub.edges), {}};
  out.result = run_bp(out.model, subgraph_bp_config(bp, sub.nodes, sub.edges));
  return out;
}

/// Runs BP on the candidate and fills its target belief and objective
/// d = sym_kl(full_belief, belief on the candidate).
inline ExplanationSubgraph evaluate_candidate(const Mrf& mrf, const LabelDistribution& full_belief,
                                              ExplanationSubgraph sub, const BpConfig& bp) {
  auto inf = infer_subgraph(mrf, sub, bp);
  sub.belief_on_subgraph = inf.result.belief_of(inf.model, sub.target);
  sub.objective = sym_kl(full_belief, sub.belief_on_subgraph);
  return sub;
}

namespace detail {

using RankKey = std::pair<std::vector<NodeId>, std::vector<Edge>>;

inline RankKey rank_key(const ExplanationSubgraph& s) { return {s.sorted_nodes(), s.sorted_edges()}; }

// Ascending score, then lexicographically smallest sorted node list, then
// sorted edge list.
template <typename Score>
void rank(std::vector<ExplanationSubgraph>& v, Score score) {
  std::vector<std::pair<RankKey, std::size_t>> keys;
  keys.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) keys.emplace_back(rank_key(v[i]), i);
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = score(v[a]);
    const double sb = score(v[b]);
    if (sa != sb) return sa < sb;
    return keys[a].first < keys[b].first;
  });
  std::vector<ExplanationSubgraph> sorted;
  sorted.reserve(v.size());
  for (std::size_t i : order) sorted.push_back(std::move(v[i]));
  v = std::move(sorted);
}

// Keeps the first occurrence of each (nodes, edges) subgraph.
inline void dedupe(std::vector<ExplanationSubgraph>& v) {
  std::set<RankKey> seen;
  std::vector<ExplanationSubgraph> out;
  out.reserve(v.size());
  for (auto& s : v) {
    if (seen.insert(rank_key(s)).second) out.push_back(std::move(s));
  }
  v = std::move(out);
}

inline void rank_by_search_score(std::vector<ExplanationSubgraph>& v) {
  rank(v, [](const ExplanationSubgraph& s) { return s.search_score; });
}

inline void rank_by_objective(std::vector<ExplanationSubgraph>& v) {
  rank(v, [](const ExplanationSubgraph& s) { return s.objective; });
}

// Every evaluated, non-pruned frontier extension of `sub`, ranked.
inline std::vector<ExplanationSubgraph> evaluate_frontier(const Mrf& mrf,
                                                          const LabelDistribution& full_belief,
                                                          const ExplanationSubgraph& sub,
                                                          const std::set<NodeId>& pruned,
                                                          const BpConfig& bp,
                                                          std::size_t* bp_runs) {
  std::vector<ExplanationSubgraph> out;
  for (const auto& link : frontier(mrf, sub)) {
    if (pruned.contains(link.node)) continue;
    auto cand = evaluate_candidate(mrf, full_belief, sub.extended(link.node, link.anchor), bp);
    cand.search_score = cand.objective;
    if (bp_runs) ++*bp_runs;
    out.push_back(std::move(cand));
  }
  rank_by_objective(out);
  return out;
}

// Node each non-target subgraph node emits its explained message towards.
inline std::optional<NodeId> parent_of(const ExplanationSubgraph& sub, NodeId u) {
  if (u == sub.target) return std::nullopt;
  for (std::size_t i = 1; i < sub.nodes.size(); ++i) {
    if (sub.nodes[i] == u && i - 1 < sub.edges.size() && sub.edges[i - 1].touches(u)) {
      return sub.edges[i - 1].other(u);
    }
  }
  // Subgraphs not built by insertion: walk the tree from the target.
  std::vector<NodeId> queue{sub.target};
  std::set<NodeId> seen{sub.target};
  while (!queue.empty()) {
    const NodeId cur = queue.back();
    queue.pop_back();
    for (const Edge& e : sub.edges) {
      if (!e.touches(cur)) continue;
      const NodeId nxt = e.other(cur);
      if (!seen.insert(nxt).second) continue;
      if (nxt == u) return cur;
      queue.push_back(nxt);
    }
  }
  throw PreconditionError("node " + std::to_string(u) + " is not connected to the target");
}

struct LocalStep {
  std::vector<ExplanationSubgraph> extensions;  // ranked, at most k
  std::vector<NodeId> closed_endpoints;         // the subgraph's closed set after this step
};

inline std::vector<NodeId> local_endpoints(const ExplanationSubgraph& sub, LocalVariant variant) {
  std::vector<NodeId> out;
  switch (variant) {
    case LocalVariant::kUnconstrained:
      for (NodeId u : sub.nodes) {
        if (!sub.is_closed(u)) out.push_back(u);
      }
      break;
    case LocalVariant::kChain:
      if (!sub.is_closed(sub.nodes.back())) out.push_back(sub.nodes.back());
      break;
    case LocalVariant::kDirectNeighbor:
      if (!sub.is_closed(sub.target)) out.push_back(sub.target);
      break;
  }
  return out;
}

inline LocalStep local_step(const Mrf& mrf, const BpResult& full_bp,
                            const ExplanationSubgraph& sub, std::size_t k,
                            LocalVariant variant) {
  struct Option {
    double score;
    NodeId node;
    NodeId anchor;
  };
  std::vector<Option> options;
  std::vector<NodeId> closed = sub.closed_endpoints;
  const auto inside = sub.sorted_nodes();

  for (NodeId u : local_endpoints(sub, variant)) {
    const auto parent = parent_of(sub, u);
    // Explained quantity: the target's belief, or the message u already emits
    // into the subgraph.
    const LabelDistribution explained = parent ? full_bp.messages.at(mrf, u, *parent)
                                               : full_bp.belief_of(mrf, sub.target);
    std::vector<Option> local;
    for (const auto& nb : mrf.neighbors_at(mrf.require_index(u))) {
      const NodeId z = mrf.id_at(nb.node);
      if (std::binary_search(inside.begin(), inside.end(), z)) continue;
      local.push_back({sym_kl(explained, full_bp.messages.at(mrf, z, u)), z, u});
    }
    if (local.empty()) continue;  // not an end-point
    if (parent) {
      // The prior competes with the incoming messages; it wins ties.
      const double prior_score = sym_kl(explained, mrf.prior(u));
      std::erase_if(local, [&](const Option& o) { return !(o.score < prior_score); });
      if (local.empty()) {
        closed.push_back(u);
        continue;
      }
    }
    options.insert(options.end(), local.begin(), local.end());
  }

  std::sort(closed.begin(), closed.end());
  closed.erase(std::unique(closed.begin(), closed.end()), closed.end());

  LocalStep step;
  step.closed_endpoints = closed;
  for (const auto& o : options) {
    auto ext = sub.extended(o.node, o.anchor);
    ext.closed_endpoints = closed;
    ext.search_score = o.score;
    step.extensions.push_back(std::move(ext));
  }
  rank_by_search_score(step.extensions);
  if (step.extensions.size() > k) step.extensions.resize(k);
  return step;
}

}  // namespace detail

/// Ranked list of the k lowest-objective frontier extensions of `sub`,
/// skipping frontier nodes in `pruned`. Each extension costs one BP run.
inline std::vector<ExplanationSubgraph> extend_geg(const Mrf& mrf,
                                                   const LabelDistribution& full_belief,
                                                   const ExplanationSubgraph& sub, std::size_t k,
                                                   const std::set<NodeId>& pruned,
                                                   const BpConfig& bp) {
  auto all = detail::evaluate_frontier(mrf, full_belief, sub, pruned, bp, nullptr);
  if (all.size() > k) all.resize(k);
  return all;
}

/// Up to k GE-L extensions of `sub`, ranked by back-tracing score.
///
/// Each open end-point U explains either the target belief (U is the target)
/// or the message U emits towards the subgraph. Incoming full-graph messages
/// from frontier nodes are scored against it with sym_kl; for non-target
/// end-points U's own prior competes too, and when the prior scores best U is
/// closed and never extended again. Returned extensions carry the updated
/// closed set.
inline std::vector<ExplanationSubgraph> extend_gel(const Mrf& mrf, const BpResult& full_bp,
                                                   const ExplanationSubgraph& sub, std::size_t k,
                                                   LocalVariant variant = LocalVariant::kUnconstrained) {
  return detail::local_step(mrf, full_bp, sub, k, variant).extensions;
}

/// Which structure a random baseline imitates.
struct RandomShape {
  bool local = false;  // imitate GE-L (variant applies) rather than GE-G
  LocalVariant variant = LocalVariant::kUnconstrained;
};

/// Frontier links a random baseline may pick from.
inline std::vector<FrontierLink> admissible_links(const Mrf& mrf, const ExplanationSubgraph& sub,
                                                  RandomShape shape) {
  auto links = frontier(mrf, sub);
  if (!shape.local || shape.variant == LocalVariant::kUnconstrained) return links;
  const NodeId anchor =
      shape.variant == LocalVariant::kChain ? sub.nodes.back() : sub.target;
  std::erase_if(links, [&](const FrontierLink& l) { return l.anchor != anchor; });
  return links;
}

/// Attaches one admissible frontier link chosen uniformly at random, or
/// nothing when none is admissible.
inline std::optional<ExplanationSubgraph> random_extend(const Mrf& mrf,
                                                        const ExplanationSubgraph& sub,
                                                        std::mt19937_64& rng, RandomShape shape) {
  const auto links = admissible_links(mrf, sub, shape);
  if (links.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, links.size() - 1);
  const auto& l = links[pick(rng)];
  return sub.extended(l.node, l.anchor);
}

/// Keeps the ceil((1 - rate) * n) best-scoring distinct nodes (a node scored
/// several times counts with its best score). Returns them ascending by id.
inline std::vector<NodeId> prune_frontier(std::span<const std::pair<NodeId, double>> scored,
                                          double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("pruning rate must lie in [0, 1)");
  std::vector<std::pair<NodeId, double>> best;
  for (const auto& [node, score] : scored) {
    auto it = std::find_if(best.begin(), best.end(), [&](const auto& b) { return b.first == node; });
    if (it == best.end()) {
      best.emplace_back(node, score);
    } else {
      it->second = std::min(it->second, score);
    }
  }
  std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  const double exact = (1.0 - rate) * static_cast<double>(best.size());
  // absorb representation error such as (1 - 0.7) * 10 = 3.0000000000000004
  std::size_t keep = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  if (!best.empty()) keep = std::clamp<std::size_t>(keep, 1, best.size());
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < keep; ++i) out.push_back(best[i].first);
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

inline std::mt19937_64 target_rng(std::uint64_t seed, NodeId target) {
  const auto t = static_cast<std::uint64_t>(target);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
  return std::mt19937_64(seq);
}

class Searcher {
 public:
  Searcher(const Mrf& mrf, const BpResult& full_bp, NodeId target, const SearchConfig& config)
      : mrf_(mrf),
        full_bp_(full_bp),
        target_(target),
        config_(config),
        full_belief_(full_bp.belief_of(mrf, target)),
        rng_(target_rng(config.seed, target)) {}

  Beam run() {
    std::size_t capacity = config_.capacity;
    if (config_.method == Method::kRandomLocal) {
      // Same structure and size as what GE-L finds for this target.
      SearchConfig local = config_;
      local.method = Method::kLocal;
      Beam gel = Searcher(mrf_, full_bp_, target_, local).run();
      bp_runs_ += gel.bp_invocations;
      capacity = gel.candidates.front().size();
    }

    const std::string tag(method_name(config_.method));
    std::vector<ExplanationSubgraph> beam{ExplanationSubgraph::seed(target_, tag)};
    std::vector<ExplanationSubgraph> finished;

    for (std::size_t t = 2; t <= capacity && !beam.empty(); ++t) {
      std::vector<ExplanationSubgraph> next;
      for (auto& sub : beam) {
        auto ext = extend(sub);
        if (ext.empty()) {
          finished.push_back(std::move(sub));
        } else {
          for (auto& e : ext) next.push_back(std::move(e));
        }
      }
      rank_by_search_score(next);
      dedupe(next);
      if (next.size() > config_.beam) next.resize(config_.beam);
      beam = std::move(next);
    }

    // Final BP on every surviving candidate, then the k best overall.
    for (auto& s : finished) beam.push_back(std::move(s));
    dedupe(beam);
    for (auto& s : beam) {
      s = evaluate_candidate(mrf_, full_belief_, std::move(s), config_.bp);
      s.search_score = s.objective;
      ++bp_runs_;
    }
    rank_by_objective(beam);
    if (beam.size() > config_.beam) beam.resize(config_.beam);
    return Beam{std::move(beam), bp_runs_};
  }

 private:
  std::vector<ExplanationSubgraph> extend(ExplanationSubgraph& sub) {
    switch (config_.method) {
      case Method::kGlobal: return extend_global(sub);
      case Method::kLocal: {
        auto step = local_step(mrf_, full_bp_, sub, config_.beam, config_.variant);
        sub.closed_endpoints = step.closed_endpoints;
        return std::move(step.extensions);
      }
      case Method::kRandomGlobal: return extend_random(sub, RandomShape{false, config_.variant});
      case Method::kRandomLocal: return extend_random(sub, RandomShape{true, config_.variant});
    }
    return {};
  }

  std::vector<ExplanationSubgraph> extend_global(const ExplanationSubgraph& sub) {
    auto all = evaluate_frontier(mrf_, full_belief_, sub, pruned_, config_.bp, &bp_runs_);
    if (config_.pruning_rate > 0.0 && !all.empty()) {
      // only nodes evaluated here for the first time face pruning
      std::vector<std::pair<NodeId, double>> scored;
      for (const auto& c : all) {
        if (!evaluated_.count(c.nodes.back())) scored.emplace_back(c.nodes.back(), c.objective);
      }
      for (const auto& c : all) evaluated_.insert(c.nodes.back());
      const auto keep = prune_frontier(scored, config_.pruning_rate);
      for (const auto& [node, score] : scored) {
        if (!std::binary_search(keep.begin(), keep.end(), node)) pruned_.insert(node);
      }
    }
    if (all.size() > config_.beam) all.resize(config_.beam);
    return all;
  }

  std::vector<ExplanationSubgraph> extend_random(const ExplanationSubgraph& sub,
                                                 RandomShape shape) {
    auto links = admissible_links(mrf_, sub, shape);
    std::vector<ExplanationSubgraph> out;
    std::uniform_real_distribution<double> key(0.0, 1.0);
    // partial Fisher-Yates: k distinct links
    for (std::size_t i = 0; i < links.size() && out.size() < config_.beam; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, links.size() - 1);
      std::swap(links[i], links[pick(rng_)]);
      auto ext = sub.extended(links[i].node, links[i].anchor);
      ext.search_score = key(rng_);
      out.push_back(std::move(ext));
    }
    return out;
  }

  const Mrf& mrf_;
  const BpResult& full_bp_;
  NodeId target_;
  SearchConfig config_;
  LabelDistribution full_belief_;
  std::mt19937_64 rng_;
  std::set<NodeId> pruned_;  // per target, shared by all beam branches
  std::set<NodeId> evaluated_;
  std::size_t bp_runs_ = 0;
};

}  // namespace detail

/// Beam search for up to k explanations of `target` with at most C nodes.
///
/// Starts from {target} and grows every beam member by one node per step
/// (C - 1 steps) using config.method, keeping the k best candidates. Branches
/// that cannot grow are kept aside at their current size. Every returned
/// candidate is a tree containing the target, re-evaluated by a final BP run
/// and ranked by ascending objective.
inline Beam beam_search(const Mrf& mrf, const BpResult& full_bp, NodeId target,
                        const SearchConfig& config) {
  config.validate();
  mrf.require_index(target);
  return detail::Searcher(mrf, full_bp, target, config).run();
}

/// Union of every beam candidate, evaluated as one explanation. The union may
/// contain cycles, in which case loopy BP with `bp` is used.
inline ExplanationSubgraph combine(const Beam& beam, const Mrf& mrf,
                                   const LabelDistribution& full_belief, const BpConfig& bp) {
  if (beam.candidates.empty()) throw PreconditionError("cannot combine an empty beam");
  ExplanationSubgraph out = ExplanationSubgraph::seed(beam.candidates.front().target, "comb");
  out.nodes.clear();
  for (const auto& c : beam.candidates) {
    if (c.target != out.target) throw PreconditionError("beam candidates explain different targets");
    for (NodeId n : c.nodes) {
      if (!out.contains(n)) out.nodes.push_back(n);
    }
    for (const Edge& e : c.edges) {
      if (std::find(out.edges.begin(), out.edges.end(), e) == out.edges.end()) out.edges.push_back(e);
    }
  }
  out = evaluate_candidate(mrf, full_belief, std::move(out), bp);
  out.search_score = out.objective;
  return out;
}

}  // namespace bpx
