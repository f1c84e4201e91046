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

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpx/batch.hpp"
#include "bpx/bp.hpp"
#include "bpx/error.hpp"
#include "bpx/explain.hpp"
#include "bpx/mrf.hpp"
#include "bpx/topology.hpp"

// Document schemas, version 1. Keys are written in a fixed order.
//
// explanation:
//   format_version, kind = "explanation", method, target, size, is_tree,
//   nodes [id...] (insertion order, target first),
//   edges [[u, v]...] (insertion order, u < v),
//   closed_endpoints [id...],
//   priors [{node, prior}...] (same order as nodes),
//   messages [{from, to, message}...] (converged sub-model messages,
//     ascending by (from, to); empty for a single node),
//   full_belief, subgraph_belief, objective,
//   bp {converged, iterations, max_residual},
//   config {...} (when known)
//
// beliefs:
//   format_version, kind = "beliefs", classes, converged, iterations,
//   max_residual, nodes [{node, prior, belief}...] ascending by node
//
// run_report:
//   format_version, kind = "run_report", config {...}, workers,
//   aggregate {targets, succeeded, mean_objective, mean_size, bp_invocations,
//     full_bp_converged[, full_bp_wall_time, total_wall_time]},
//   per_target [{target, method, objective, size, bp_invocations
//     [, wall_time][, error]}...] in request order
//
// Timings are omitted unless requested so that reports are reproducible
// byte for byte. NaN objectives are written as null.

namespace bpx {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

inline Json to_json(const LabelDistribution& d) { return Json(d.values()); }

inline LabelDistribution distribution_from_json(const Json& j) {
  return LabelDistribution(j.get<std::vector<double>>());
}

inline Json to_json(const BpConfig& bp) {
  return Json{{"max_iters", bp.max_iters}, {"tolerance", bp.tolerance}, {"damping", bp.damping}};
}

inline Json to_json(const SearchConfig& c) {
  Json j;
  j["method"] = method_name(c.method);
  j["variant"] = variant_name(c.variant);
  j["capacity"] = c.capacity;
  j["beam"] = c.beam;
  j["pruning_rate"] = c.pruning_rate;
  j["seed"] = c.seed;
  j["bp"] = to_json(c.bp);
  return j;
}

/// Reads a config object; absent keys keep their defaults.
inline SearchConfig search_config_from_json(const Json& j, SearchConfig c = {}) {
  if (!j.is_object()) throw ValidationError("config must be an object");
  try {
    if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("capacity")) c.capacity = j.at("capacity").get<std::size_t>();
    if (j.contains("C")) c.capacity = j.at("C").get<std::size_t>();
    if (j.contains("beam")) c.beam = j.at("beam").get<std::size_t>();
    if (j.contains("k")) c.beam = j.at("k").get<std::size_t>();
    if (j.contains("pruning_rate")) c.pruning_rate = j.at("pruning_rate").get<double>();
    if (j.contains("prune")) c.pruning_rate = j.at("prune").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("bp")) {
      const auto& b = j.at("bp");
      if (b.contains("max_iters")) c.bp.max_iters = b.at("max_iters").get<std::size_t>();
      if (b.contains("tolerance")) c.bp.tolerance = b.at("tolerance").get<double>();
      if (b.contains("damping")) c.bp.damping = b.at("damping").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace detail {

inline Json objective_json(double d) { return std::isnan(d) ? Json(nullptr) : Json(d); }

inline double objective_from(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

/// Self-contained document for one evaluated explanation. `inference` is
/// BP on the explanation's sub-model (see infer_subgraph).
inline Json export_explanation(const ExplanationSubgraph& sub, const LabelDistribution& full_belief,
                               const SubgraphInference& inference,
                               const std::optional<SearchConfig>& config = std::nullopt) {
  if (!sub.evaluated()) throw PreconditionError("explanation has not been evaluated");
  const Mrf& m = inference.model;
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "explanation";
  j["method"] = sub.method_tag;
  j["target"] = sub.target;
  j["size"] = sub.size();
  j["is_tree"] = is_tree(sub.nodes, sub.edges);
  j["nodes"] = sub.nodes;
  Json edges = Json::array();
  for (const Edge& e : sub.edges) edges.push_back({e.u, e.v});
  j["edges"] = std::move(edges);
  j["closed_endpoints"] = sub.closed_endpoints;
  Json priors = Json::array();
  for (NodeId n : sub.nodes) priors.push_back({{"node", n}, {"prior", to_json(m.prior(n))}});
  j["priors"] = std::move(priors);
  Json messages = Json::array();
  for (const Edge& e : m.edges()) {
    for (auto [from, to] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
      messages.push_back({{"from", from},
                          {"to", to},
                          {"message", to_json(inference.result.messages.at(m, from, to))}});
    }
  }
  std::stable_sort(messages.begin(), messages.end(), [](const Json& a, const Json& b) {
    return std::pair(a["from"].get<NodeId>(), a["to"].get<NodeId>()) <
           std::pair(b["from"].get<NodeId>(), b["to"].get<NodeId>());
  });
  j["messages"] = std::move(messages);
  j["full_belief"] = to_json(full_belief);
  j["subgraph_belief"] = to_json(sub.belief_on_subgraph);
  j["objective"] = detail::objective_json(sub.objective);
  j["bp"] = {{"converged", inference.result.converged},
             {"iterations", inference.result.iterations},
             {"max_residual", inference.result.max_residual}};
  if (config) j["config"] = to_json(*config);
  return j;
}

/// Runs BP on the explanation's sub-model and exports it.
inline Json export_explanation(const Mrf& mrf, const ExplanationSubgraph& sub,
                               const LabelDistribution& full_belief, const BpConfig& bp,
                               const std::optional<SearchConfig>& config = std::nullopt) {
  return export_explanation(sub, full_belief, infer_subgraph(mrf, sub, bp), config);
}

inline ExplanationSubgraph import_explanation(const Json& j) {
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw ValidationError("unsupported explanation format_version " + j.at("format_version").dump());
    }
    if (j.at("kind").get<std::string>() != "explanation") {
      throw ValidationError("document is not an explanation");
    }
    ExplanationSubgraph s;
    s.target = j.at("target").get<NodeId>();
    s.nodes = j.at("nodes").get<std::vector<NodeId>>();
    for (const auto& e : j.at("edges")) s.edges.push_back(make_edge(e.at(0).get<NodeId>(), e.at(1).get<NodeId>()));
    s.closed_endpoints = j.at("closed_endpoints").get<std::vector<NodeId>>();
    s.belief_on_subgraph = distribution_from_json(j.at("subgraph_belief"));
    s.objective = detail::objective_from(j.at("objective"));
    s.method_tag = j.at("method").get<std::string>();
    if (s.nodes.empty() || s.nodes.front() != s.target) {
      throw ValidationError("explanation nodes must start with the target");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed explanation document: ") + e.what());
  }
}

inline ExplanationSubgraph import_explanation(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("explanation is not valid JSON: ") + e.what());
  }
  return import_explanation(j);
}

inline Json beliefs_document(const Mrf& mrf, const BpResult& r) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "beliefs";
  j["classes"] = mrf.class_count();
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["max_residual"] = r.max_residual;
  Json nodes = Json::array();
  for (std::size_t i = 0; i < mrf.node_count(); ++i) {
    nodes.push_back({{"node", mrf.id_at(i)},
                     {"prior", to_json(mrf.prior_at(i))},
                     {"belief", to_json(r.beliefs[i])}});
  }
  j["nodes"] = std::move(nodes);
  return j;
}

inline Json report_document(const RunReport& report, bool include_timing = false) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "run_report";
  j["config"] = to_json(report.config);
  j["workers"] = report.workers;
  Json agg;
  agg["targets"] = report.per_target.size();
  agg["succeeded"] = report.succeeded();
  agg["mean_objective"] = detail::objective_json(report.mean_objective());
  agg["mean_size"] = detail::objective_json(report.mean_size());
  agg["bp_invocations"] = count_bp_invocations(report);
  agg["full_bp_converged"] = report.full_bp_converged;
  if (include_timing) {
    agg["full_bp_wall_time"] = report.full_bp_wall_time;
    agg["total_wall_time"] = report.total_wall_time;
  }
  j["aggregate"] = std::move(agg);
  Json rows = Json::array();
  for (const auto& t : report.per_target) {
    Json r;
    r["target"] = t.target;
    r["method"] = t.method;
    r["objective"] = detail::objective_json(t.objective);
    r["size"] = t.subgraph_size;
    r["bp_invocations"] = t.bp_invocations;
    if (include_timing) r["wall_time"] = t.wall_time;
    if (t.error) r["error"] = *t.error;
    rows.push_back(std::move(r));
  }
  j["per_target"] = std::move(rows);
  return j;
}

/// Canonical text form: two-space indentation and a trailing newline.
inline std::string dump_document(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace bpx
