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

// bpx: belief inference and explanation search from the command line.
//
//   bpx infer   --edges g.tsv [--labels l.tsv] [--out beliefs.json]
//   bpx explain --preset karate --target 5 --capacity 5 --beam 3 --comb --out dir
//   bpx batch   --edges g.tsv --ratio 0.01 --workers 8 --out report.json
//   bpx eval    --preset karate --labeled-ratio 0.5 --seeds 10
//   bpx serve   --port 8080
//
// Exit codes: 0 ok, 1 usage, 2 invalid data, 3 runtime failure,
// 4 full-graph BP stopped at the iteration limit (infer only).
// BPX_LOG=error|warn|info|debug sets stderr verbosity (default warn).

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bpx/batch.hpp"
#include "bpx/document.hpp"
#include "bpx/eval.hpp"
#include "bpx/explain.hpp"
#include "bpx/io.hpp"
#include "bpx/service.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInvalidData = 2, kRuntime = 3, kNotConverged = 4 };

enum class LogLevel { kError, kWarn, kInfo, kDebug };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("BPX_LOG");
    const std::string v = env ? env : "";
    if (v == "error") return LogLevel::kError;
    if (v == "info") return LogLevel::kInfo;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kWarn;
  }();
  return level;
}

void log(LogLevel level, const std::string& msg) {
  static constexpr const char* kTag[] = {"error", "warn", "info", "debug"};
  if (level <= log_level()) std::cerr << "bpx: " << kTag[static_cast<int>(level)] << ": " << msg << "\n";
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GraphFlags {
  std::string preset;
  std::string edges;
  std::string labels;
  std::string priors;
  std::size_t classes = 2;
  double homophily = 0.9;
  std::optional<double> labeled_ratio;
};

struct SearchFlags {
  std::string method = "ge-g";
  std::string variant = "unconstrained";
  std::size_t capacity = 5;
  std::size_t beam = 1;
  double prune = 0.0;
};

struct BpFlags {
  std::size_t max_iters = 100;
  double tolerance = 1e-6;
  double damping = 0.0;
};

void add_graph_flags(CLI::App* app, GraphFlags& g) {
  app->add_option("--edges", g.edges, "edge list, 'u<TAB>v' per line")->check(CLI::ExistingFile);
  app->add_option("--labels", g.labels, "known classes, 'node<TAB>class' per line (1-based)")
      ->check(CLI::ExistingFile);
  app->add_option("--priors", g.priors, "explicit priors, 'node<TAB>p_1<TAB>...<TAB>p_c' per line")
      ->check(CLI::ExistingFile);
  app->add_option("--preset", g.preset, "built-in network instead of --edges")
      ->check(CLI::IsMember({"karate"}));
  app->add_option("--classes", g.classes, "number of classes c")->capture_default_str();
  app->add_option("--homophily", g.homophily, "diagonal of the edge potential")->capture_default_str();
  app->add_option("--labeled-ratio", g.labeled_ratio, "fraction of known labels used as priors");
}

void add_bp_flags(CLI::App* app, BpFlags& b) {
  app->add_option("--max-iters", b.max_iters, "BP iteration limit")->capture_default_str();
  app->add_option("--tolerance", b.tolerance, "BP convergence threshold (max message change)")
      ->capture_default_str();
  app->add_option("--damping", b.damping, "BP message damping in [0, 1)")->capture_default_str();
}

void add_search_flags(CLI::App* app, SearchFlags& s) {
  app->add_option("--method", s.method, "ge-g, ge-l, random-g or random-l")->capture_default_str();
  app->add_option("--variant", s.variant, "GE-L structure: unconstrained, chain or star")
      ->capture_default_str();
  app->add_option("--capacity", s.capacity, "maximum explanation size C")->capture_default_str();
  app->add_option("--beam", s.beam, "beam width k")->capture_default_str();
  app->add_option("--prune", s.prune, "frontier pruning rate in [0, 1)")->capture_default_str();
}

bpx::Dataset load(const GraphFlags& g, std::uint64_t seed) {
  if (g.preset.empty() && g.edges.empty()) throw UsageError("one of --edges or --preset is required");
  if (!g.preset.empty() && !g.edges.empty()) throw UsageError("--edges and --preset are exclusive");
  bpx::DatasetSpec spec;
  spec.preset = g.preset;
  spec.edge_file = g.edges;
  spec.labels_file = g.labels;
  spec.priors_file = g.priors;
  spec.class_count = g.classes;
  spec.homophily = g.homophily;
  spec.labeled_ratio = g.labeled_ratio;
  spec.seed = seed;
  auto d = bpx::load_dataset(spec);
  log(LogLevel::kInfo, "loaded " + std::to_string(d.mrf.node_count()) + " nodes, " +
                           std::to_string(d.mrf.edge_count()) + " edges, " +
                           std::to_string(d.revealed_labels.size()) + " labelled");
  return d;
}

bpx::BpConfig bp_config(const BpFlags& b) {
  bpx::BpConfig c{b.max_iters, b.tolerance, b.damping};
  c.validate();
  return c;
}

bpx::SearchConfig search_config(const SearchFlags& s, const BpFlags& b, std::uint64_t seed) {
  bpx::SearchConfig c;
  c.method = bpx::parse_method(s.method);
  c.variant = bpx::parse_variant(s.variant);
  c.capacity = s.capacity;
  c.beam = s.beam;
  c.pruning_rate = s.prune;
  c.seed = seed;
  c.bp = bp_config(b);
  c.validate();
  return c;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    write_file(out_path, text);
  }
}

std::string summary_line(std::size_t rank, const bpx::ExplanationSubgraph& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-6zu %-6s size=%-3zu objective=%.6e\n", rank, s.method_tag.c_str(),
                s.size(), s.objective);
  return buf;
}

int cmd_infer(const GraphFlags& g, const BpFlags& b, std::uint64_t seed, const std::string& out) {
  const auto data = load(g, seed);
  const auto result = bpx::run_bp(data.mrf, bp_config(b));
  emit(out, bpx::dump_document(bpx::beliefs_document(data.mrf, result)));
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s after %zu iterations, max residual %.3e\n",
                result.converged ? "converged" : "not converged", result.iterations,
                result.max_residual);
  (out.empty() || out == "-" ? std::cerr : std::cout) << buf;
  return result.converged ? kOk : kNotConverged;
}

int cmd_explain(const GraphFlags& g, const SearchFlags& s, const BpFlags& b, std::uint64_t seed,
                bpx::NodeId target, bool with_comb, const std::string& out) {
  const auto data = load(g, seed);
  const auto config = search_config(s, b, seed);
  if (!data.mrf.contains(target)) throw bpx::ValidationError("unknown target " + std::to_string(target));
  const auto full = bpx::run_bp(data.mrf, config.bp);
  if (!full.converged) log(LogLevel::kWarn, "full-graph BP hit the iteration limit");
  const auto beam = bpx::beam_search(data.mrf, full, target, config);
  const auto full_belief = full.belief_of(data.mrf, target);

  std::vector<std::pair<std::string, bpx::Json>> docs;
  std::string summary;
  for (std::size_t i = 0; i < beam.candidates.size(); ++i) {
    const auto& c = beam.candidates[i];
    docs.emplace_back("candidate-" + std::to_string(i + 1) + ".json",
                      bpx::export_explanation(data.mrf, c, full_belief, config.bp, config));
    summary += summary_line(i + 1, c);
  }
  if (with_comb) {
    const auto comb = bpx::combine(beam, data.mrf, full_belief, config.bp);
    docs.emplace_back("comb.json", bpx::export_explanation(data.mrf, comb, full_belief, config.bp, config));
    summary += summary_line(0, comb);
  }
  log(LogLevel::kInfo, std::to_string(beam.bp_invocations) + " subgraph BP runs");

  if (out.empty() || out == "-") {
    bpx::Json all;
    all["target"] = target;
    all["documents"] = bpx::Json::array();
    for (auto& [name, doc] : docs) all["documents"].push_back(std::move(doc));
    std::cout << bpx::dump_document(all);
    std::cerr << summary;
  } else {
    std::filesystem::create_directories(out);
    for (const auto& [name, doc] : docs) write_file(std::filesystem::path(out) / name, bpx::dump_document(doc));
    std::cout << summary;
  }
  return kOk;
}

std::vector<bpx::NodeId> read_targets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bpx::ValidationError("cannot open '" + path + "'");
  std::vector<bpx::NodeId> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (bpx::detail::skippable(line)) continue;
    auto f = bpx::detail::split_fields(line);
    if (f.size() != 1) throw bpx::ParseError(path, lineno, "expected one node id per line");
    out.push_back(bpx::detail::parse_id(f[0], path, lineno));
  }
  return out;
}

/// ceil(ratio * |unlabelled|) unlabelled nodes drawn with `seed`, ascending.
std::vector<bpx::NodeId> sample_unlabeled(const bpx::Dataset& data, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw bpx::ValidationError("--ratio must lie in (0, 1]");
  std::vector<bpx::NodeId> pool;
  for (bpx::NodeId id : data.mrf.node_ids()) {
    if (!data.is_labeled(id)) pool.push_back(id);
  }
  const auto want = std::min(
      pool.size(), static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(pool.size()) - 1e-9)));
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < want; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(want);
  std::sort(pool.begin(), pool.end());
  return pool;
}

int cmd_batch(const GraphFlags& g, const SearchFlags& s, const BpFlags& b, std::uint64_t seed,
              const std::string& targets_file, std::optional<double> ratio, std::size_t workers,
              bool timings, const std::string& out) {
  if (targets_file.empty() == !ratio.has_value()) throw UsageError("give exactly one of --targets or --ratio");
  const auto data = load(g, seed);
  const auto config = search_config(s, b, seed);
  const auto targets = ratio ? sample_unlabeled(data, *ratio, seed) : read_targets(targets_file);
  const auto report = bpx::explain_targets(data.mrf, targets, config, workers);
  for (const auto& t : report.per_target) {
    if (t.error) log(LogLevel::kWarn, "target " + std::to_string(t.target) + ": " + *t.error);
  }
  emit(out, bpx::dump_document(bpx::report_document(report, timings)));
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu/%zu targets, mean objective %.6e, mean size %.2f, %zu BP runs\n",
                report.succeeded(), report.per_target.size(), report.mean_objective(), report.mean_size(),
                bpx::count_bp_invocations(report));
  (out.empty() || out == "-" ? std::cerr : std::cout) << buf;
  return kOk;
}

int cmd_eval(const GraphFlags& g, const SearchFlags& s, const BpFlags& b, std::uint64_t seed,
             std::size_t seeds, const std::vector<std::string>& methods, std::optional<double> ratio,
             std::size_t workers, const std::string& out) {
  if (seeds < 1) throw UsageError("--seeds must be >= 1");
  bpx::EvalOptions options;
  options.base = search_config(s, b, seed);
  options.workers = workers;
  options.seeds.clear();
  for (std::size_t i = 0; i < seeds; ++i) options.seeds.push_back(seed + i);
  if (!methods.empty()) {
    options.methods.clear();
    for (const auto& m : methods) options.methods.push_back(bpx::parse_eval_method(m));
  }
  auto dataset = [&](std::uint64_t sd) { return load(g, sd); };
  bpx::TargetPicker targets = bpx::all_nodes;
  if (ratio) {
    targets = [r = *ratio](const bpx::Dataset& d, std::uint64_t sd) { return sample_unlabeled(d, r, sd); };
  }
  const auto rows = bpx::evaluate_methods(dataset, targets, options);
  emit(out, bpx::format_table(rows));
  return kOk;
}

int cmd_serve(const std::string& host, int port, const BpFlags& b) {
  bpx::ExplainService::Options options;
  options.defaults.bp = bp_config(b);
  bpx::ExplainService service(options);
  std::cerr << "bpx: serving on http://" << host << ":" << port << "\n";
  if (!service.serve(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief propagation inference and explanation search"};
  app.set_version_flag("--version", BPX_VERSION);
  app.require_subcommand(1);

  GraphFlags graph;
  SearchFlags search;
  BpFlags bp;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t workers = 1;

  auto* infer = app.add_subcommand("infer", "run BP on the whole graph and write every belief");
  add_graph_flags(infer, graph);
  add_bp_flags(infer, bp);
  infer->add_option("--seed", seed, "seed for label sampling")->capture_default_str();
  infer->add_option("--out", out, "output file (default stdout)");

  bpx::NodeId target = 0;
  bool with_comb = false;
  auto* explain = app.add_subcommand("explain", "search explanations of one target's belief");
  add_graph_flags(explain, graph);
  add_bp_flags(explain, bp);
  add_search_flags(explain, search);
  explain->add_option("--target", target, "node to explain")->required();
  explain->add_option("--seed", seed, "seed for label sampling and random baselines")->capture_default_str();
  explain->add_flag("--comb", with_comb, "also write the union of the beam");
  explain->add_option("--out", out, "directory for the documents (default: one JSON to stdout)");

  std::string targets_file;
  std::optional<double> ratio;
  bool timings = false;
  auto* batch = app.add_subcommand("batch", "explain many targets in parallel");
  add_graph_flags(batch, graph);
  add_bp_flags(batch, bp);
  add_search_flags(batch, search);
  batch->add_option("--targets", targets_file, "file with one target per line")->check(CLI::ExistingFile);
  batch->add_option("--ratio", ratio, "explain this fraction of the unlabelled nodes");
  batch->add_option("--seed", seed, "seed for sampling and random baselines")->capture_default_str();
  batch->add_option("--workers", workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  batch->add_flag("--timings", timings, "include wall-clock times in the report");
  batch->add_option("--out", out, "report file (default stdout)");

  std::size_t seeds = 1;
  std::vector<std::string> methods;
  auto* eval = app.add_subcommand("eval", "compare search methods by mean objective and size");
  add_graph_flags(eval, graph);
  add_bp_flags(eval, bp);
  add_search_flags(eval, search);
  eval->add_option("--seed", seed, "first seed")->capture_default_str();
  eval->add_option("--seeds", seeds, "number of consecutive seeds")->capture_default_str();
  eval->add_option("--methods", methods, "subset of GE-G(k=1),GE-G(k=3),GE-L,Random-G,Random-L,Comb")
      ->delimiter(',');
  eval->add_option("--ratio", ratio, "explain this fraction of the unlabelled nodes (default all nodes)");
  eval->add_option("--workers", workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--out", out, "table file (default stdout)");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "start the HTTP explanation service");
  serve->add_option("--host", host, "bind address")->capture_default_str();
  serve->add_option("--port", port, "TCP port")->capture_default_str()->check(CLI::Range(1, 65535));
  add_bp_flags(serve, bp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*infer) return cmd_infer(graph, bp, seed, out);
    if (*explain) return cmd_explain(graph, search, bp, seed, target, with_comb, out);
    if (*batch) return cmd_batch(graph, search, bp, seed, targets_file, ratio, workers, timings, out);
    if (*eval) return cmd_eval(graph, search, bp, seed, seeds, methods, ratio, workers, out);
    if (*serve) return cmd_serve(host, port, bp);
  } catch (const UsageError& e) {
    log(LogLevel::kError, e.what());
    return kUsage;
  } catch (const bpx::DegenerateError& e) {
    log(LogLevel::kError, e.what());
    return kRuntime;
  } catch (const bpx::Error& e) {
    log(LogLevel::kError, e.what());
    return kInvalidData;
  } catch (const std::exception& e) {
    log(LogLevel::kError, e.what());
    return kRuntime;
  }
  return kUsage;
}
