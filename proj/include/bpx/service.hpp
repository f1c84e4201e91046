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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>

#include "bpx/bp.hpp"
#include "bpx/document.hpp"
#include "bpx/error.hpp"
#include "bpx/explain.hpp"
#include "bpx/io.hpp"
#include "bpx/topology.hpp"

namespace bpx {

struct Request {
  std::string method;  // "GET", "POST", ...
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  std::string body;  // JSON
};

/// HTTP facade over the engine. handle() is transport independent;
/// serve() binds it to a socket.
///
///   POST /api/session              dataset spec or {"preset": "karate"}
///   GET  /api/{sid}/belief?node=N
///   POST /api/{sid}/explain        {target, method, C, k, prune, seed, variant, comb}
///   POST /api/{sid}/whatif         {target, nodes, edges}
///   GET  /api/{sid}/neighborhood?node=N&radius=r
///   GET  /healthz
class ExplainService {
 public:
  using Clock = std::chrono::steady_clock;

  struct Options {
    std::chrono::seconds idle_timeout{30 * 60};
    SearchConfig defaults;
    std::function<Clock::time_point()> now = [] { return Clock::now(); };
  };

  ExplainService() : ExplainService(Options{}) {}
  explicit ExplainService(Options options) : options_(std::move(options)) {}

  Response handle(const Request& req) {
    try {
      evict_idle();
      return route(req);
    } catch (const HttpError& e) {
      return error(e.status, e.what());
    } catch (const DegenerateError& e) {
      return error(422, e.what());
    } catch (const ParseError& e) {
      return error(400, e.what());
    } catch (const Error& e) {
      return error(400, e.what());
    } catch (const nlohmann::json::exception& e) {
      return error(400, std::string("bad request body: ") + e.what());
    } catch (const std::exception& e) {
      return error(500, e.what());
    }
  }

  /// Drops sessions idle for longer than the timeout; returns how many.
  std::size_t evict_idle() {
    std::lock_guard lock(mu_);
    const auto now = options_.now();
    std::size_t n = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (now - it->second->last_used.load() > options_.idle_timeout) {
        it = sessions_.erase(it);
        ++n;
      } else {
        ++it;
      }
    }
    return n;
  }

  std::size_t session_count() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
  }

  /// Binds a listening socket; port 0 picks a free one. Returns the bound
  /// port, or -1 on failure.
  int bind(const std::string& host, int port = 0) {
    server_ = std::make_unique<httplib::Server>();
    auto bridge = [this](const httplib::Request& in, httplib::Response& out) {
      Request req{in.method, in.path, {}, in.body};
      for (const auto& [k, v] : in.params) req.query.emplace(k, v);
      Response r = handle(req);
      out.status = r.status;
      out.set_content(r.body, "application/json");
    };
    server_->Get(R"(/.*)", bridge);
    server_->Post(R"(/.*)", bridge);
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
  }

  /// Serves requests on the bound socket until stop() is called.
  bool listen() { return server_ && server_->listen_after_bind(); }

  bool serve(const std::string& host, int port) { return bind(host, port) >= 0 && listen(); }

  /// Blocks until a listen() started on another thread accepts requests.
  void wait_until_ready() const {
    if (server_) server_->wait_until_ready();
  }

  void stop() {
    if (server_) server_->stop();
  }

 private:
  struct HttpError : Error {
    HttpError(int s, const std::string& what) : Error(what), status(s) {}
    int status;
  };

  struct Session {
    Mrf mrf;
    BpResult full;
    SearchConfig defaults;
    std::mutex explain_mu;
    std::atomic<Clock::time_point> last_used;
  };

  static Response json_response(const Json& j, int status = 200) { return {status, dump_document(j)}; }

  static Response error(int status, const std::string& message) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["status"] = status;
    j["error"] = message;
    return json_response(j, status);
  }

  static std::vector<std::string_view> segments(std::string_view path) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < path.size()) {
      while (i < path.size() && path[i] == '/') ++i;
      const std::size_t start = i;
      while (i < path.size() && path[i] != '/') ++i;
      if (i > start) out.push_back(path.substr(start, i - start));
    }
    return out;
  }

  Response route(const Request& req) {
    const auto seg = segments(req.path);
    if (seg.size() == 1 && seg[0] == "healthz") {
      return json_response(Json{{"status", "ok"}, {"sessions", session_count()}});
    }
    if (seg.size() == 2 && seg[0] == "api" && seg[1] == "session") {
      require_method(req, "POST");
      return create_session(req);
    }
    if (seg.size() == 3 && seg[0] == "api") {
      auto s = session(std::string(seg[1]));
      if (seg[2] == "belief") {
        require_method(req, "GET");
        return belief(*s, req);
      }
      if (seg[2] == "explain") {
        require_method(req, "POST");
        return explain(*s, req);
      }
      if (seg[2] == "whatif") {
        require_method(req, "POST");
        return whatif(*s, req);
      }
      if (seg[2] == "neighborhood") {
        require_method(req, "GET");
        return neighborhood(*s, req);
      }
    }
    throw HttpError(404, "no route for " + req.method + " " + req.path);
  }

  static void require_method(const Request& req, std::string_view method) {
    if (req.method != method) throw HttpError(405, std::string(method) + " required for " + req.path);
  }

  static Json parse_body(const Request& req) {
    if (req.body.empty()) return Json::object();
    Json j;
    try {
      j = Json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      throw HttpError(400, std::string("body is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw HttpError(400, "body must be a JSON object");
    return j;
  }

  std::shared_ptr<Session> session(const std::string& sid) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(sid);
    if (it == sessions_.end()) throw HttpError(404, "unknown session '" + sid + "'");
    it->second->last_used = options_.now();
    return it->second;
  }

  static NodeId node_param(const Request& req, const Mrf& mrf) {
    auto it = req.query.find("node");
    if (it == req.query.end()) throw HttpError(400, "query parameter 'node' is required");
    NodeId id = 0;
    try {
      std::size_t used = 0;
      id = std::stoll(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw HttpError(400, "node must be an integer, got '" + it->second + "'");
    }
    if (!mrf.contains(id)) throw HttpError(404, "unknown node " + std::to_string(id));
    return id;
  }

  static std::vector<Edge> edges_from_text(const Json& body, const char* key) {
    std::istringstream in(body.at(key).get<std::string>());
    return parse_edges(in, key);
  }

  static Mrf model_from_body(const Json& body) {
    DatasetSpec spec;
    if (body.contains("preset")) spec.preset = body.at("preset").get<std::string>();
    if (body.contains("edge_file")) spec.edge_file = body.at("edge_file").get<std::string>();
    if (body.contains("labels_file")) spec.labels_file = body.at("labels_file").get<std::string>();
    if (body.contains("priors_file")) spec.priors_file = body.at("priors_file").get<std::string>();
    if (body.contains("classes")) spec.class_count = body.at("classes").get<std::size_t>();
    if (body.contains("homophily")) spec.homophily = body.at("homophily").get<double>();
    if (body.contains("labeled_ratio")) spec.labeled_ratio = body.at("labeled_ratio").get<double>();
    if (body.contains("seed")) spec.seed = body.at("seed").get<std::uint64_t>();
    if (!body.contains("edges")) {
      if (spec.preset.empty() && spec.edge_file.empty()) {
        throw ValidationError("session needs a preset, an edge_file or inline edges");
      }
      return load_dataset(spec).mrf;
    }
    // inline TSV text
    spec.validate();
    const auto edges = edges_from_text(body, "edges");
    std::vector<NodeLabel> labels;
    if (body.contains("labels")) {
      std::istringstream in(body.at("labels").get<std::string>());
      labels = parse_labels(in, "labels");
    }
    std::vector<NodePrior> priors;
    if (body.contains("priors")) {
      std::istringstream in(body.at("priors").get<std::string>());
      priors = parse_priors(in, "priors");
    }
    return build_mrf(spec, edges, reveal_labels(std::move(labels), spec.labeled_ratio, spec.seed), priors);
  }

  std::string new_session_id() {
    std::lock_guard lock(mu_);
    for (;;) {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng_()));
      if (!sessions_.count(buf)) return buf;
    }
  }

  Response create_session(const Request& req) {
    const Json body = parse_body(req);
    auto s = std::make_shared<Session>();
    s->mrf = model_from_body(body);
    s->defaults = options_.defaults;
    if (body.contains("config")) s->defaults = search_config_from_json(body.at("config"), s->defaults);
    s->full = run_bp(s->mrf, s->defaults.bp);
    s->last_used = options_.now();
    const std::string sid = new_session_id();
    {
      std::lock_guard lock(mu_);
      sessions_.emplace(sid, s);
    }
    Json j;
    j["format_version"] = kFormatVersion;
    j["session"] = sid;
    j["summary"] = {{"nodes", s->mrf.node_count()},
                    {"edges", s->mrf.edge_count()},
                    {"classes", s->mrf.class_count()}};
    j["bp"] = {{"converged", s->full.converged}, {"iterations", s->full.iterations}};
    j["config"] = to_json(s->defaults);
    return json_response(j, 201);
  }

  static Response belief(const Session& s, const Request& req) {
    const NodeId n = node_param(req, s.mrf);
    Json j;
    j["format_version"] = kFormatVersion;
    j["node"] = n;
    j["prior"] = to_json(s.mrf.prior(n));
    j["belief"] = to_json(s.full.belief_of(s.mrf, n));
    return json_response(j);
  }

  static Response explain(Session& s, const Request& req) {
    Json body = parse_body(req);
    if (!body.contains("target")) throw HttpError(400, "'target' is required");
    const NodeId target = body.at("target").get<NodeId>();
    if (!s.mrf.contains(target)) throw HttpError(404, "unknown target " + std::to_string(target));
    const bool with_comb = body.value("comb", true);
    body.erase("target");
    body.erase("comb");
    const SearchConfig config = search_config_from_json(body, s.defaults);

    std::lock_guard lock(s.explain_mu);
    const Beam beam = beam_search(s.mrf, s.full, target, config);
    const auto full_belief = s.full.belief_of(s.mrf, target);
    Json j;
    j["format_version"] = kFormatVersion;
    j["target"] = target;
    j["bp_invocations"] = beam.bp_invocations;
    Json candidates = Json::array();
    for (std::size_t i = 0; i < beam.candidates.size(); ++i) {
      const auto& c = beam.candidates[i];
      candidates.push_back({{"rank", i + 1},
                            {"size", c.size()},
                            {"objective", c.objective},
                            {"document", export_explanation(s.mrf, c, full_belief, config.bp, config)}});
    }
    j["candidates"] = std::move(candidates);
    if (with_comb) {
      const auto comb = combine(beam, s.mrf, full_belief, config.bp);
      j["comb"] = export_explanation(s.mrf, comb, full_belief, config.bp, config);
    }
    return json_response(j);
  }

  static Response whatif(const Session& s, const Request& req) {
    const Json body = parse_body(req);
    if (!body.contains("target") || !body.contains("nodes")) {
      throw HttpError(400, "'target' and 'nodes' are required");
    }
    ExplanationSubgraph sub;
    sub.target = body.at("target").get<NodeId>();
    sub.nodes = body.at("nodes").get<std::vector<NodeId>>();
    if (body.contains("edges")) {
      for (const auto& e : body.at("edges")) {
        sub.edges.push_back(make_edge(e.at(0).get<NodeId>(), e.at(1).get<NodeId>()));
      }
    }
    if (!s.mrf.contains(sub.target)) throw HttpError(404, "unknown target " + std::to_string(sub.target));
    if (std::find(sub.nodes.begin(), sub.nodes.end(), sub.target) == sub.nodes.end()) {
      throw HttpError(400, "the edit does not contain the target");
    }
    auto ids = sub.sorted_nodes();
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw HttpError(400, "duplicate node in edit");
    auto es = sub.sorted_edges();
    if (std::adjacent_find(es.begin(), es.end()) != es.end()) throw HttpError(400, "duplicate edge in edit");
    for (NodeId n : ids) {
      if (!s.mrf.contains(n)) throw HttpError(400, "node " + std::to_string(n) + " is not in the graph");
    }
    for (const Edge& e : es) {
      if (!s.mrf.has_edge(e.u, e.v)) {
        throw HttpError(400, "(" + std::to_string(e.u) + ", " + std::to_string(e.v) + ") is not a graph edge");
      }
      if (!std::binary_search(ids.begin(), ids.end(), e.u) || !std::binary_search(ids.begin(), ids.end(), e.v)) {
        throw HttpError(400, "edge endpoints must be listed in nodes");
      }
    }
    if (!is_connected(ids, es)) throw HttpError(400, "the edited subgraph is disconnected");
    // move the target to the front as explanations expect
    std::erase(sub.nodes, sub.target);
    sub.nodes.insert(sub.nodes.begin(), sub.target);

    const auto full_belief = s.full.belief_of(s.mrf, sub.target);
    sub = evaluate_candidate(s.mrf, full_belief, std::move(sub), s.defaults.bp);
    Json j;
    j["format_version"] = kFormatVersion;
    j["target"] = sub.target;
    j["belief_on_subgraph"] = to_json(sub.belief_on_subgraph);
    j["full_belief"] = to_json(full_belief);
    j["objective"] = sub.objective;
    j["is_tree"] = is_tree(ids, es);
    return json_response(j);
  }

  static Response neighborhood(const Session& s, const Request& req) {
    const NodeId center = node_param(req, s.mrf);
    std::size_t radius = 1;
    if (auto it = req.query.find("radius"); it != req.query.end()) {
      long long r = -1;
      try {
        std::size_t used = 0;
        r = std::stoll(it->second, &used);
        if (used != it->second.size()) r = -1;
      } catch (const std::exception&) {
      }
      if (r < 0) throw HttpError(400, "radius must be a non-negative integer");
      radius = static_cast<std::size_t>(r);
    }
    const auto ball = bfs_ball(s.mrf, center, radius);
    Json nodes = Json::array();
    Json edges = Json::array();
    for (NodeId n : ball) {
      nodes.push_back({{"node", n}, {"prior", to_json(s.mrf.prior(n))}, {"belief", to_json(s.full.belief_of(s.mrf, n))}});
    }
    for (const Edge& e : s.mrf.edges()) {
      if (std::binary_search(ball.begin(), ball.end(), e.u) && std::binary_search(ball.begin(), ball.end(), e.v)) {
        edges.push_back({e.u, e.v});
      }
    }
    Json j;
    j["format_version"] = kFormatVersion;
    j["center"] = center;
    j["radius"] = radius;
    j["nodes"] = std::move(nodes);
    j["edges"] = std::move(edges);
    return json_response(j);
  }

  Options options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 id_rng_{std::random_device{}()};
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace bpx
