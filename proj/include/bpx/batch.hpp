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
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bpx/bp.hpp"
#include "bpx/explain.hpp"
#include "bpx/mrf.hpp"

namespace bpx {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Indices are
/// handed out in increasing order. The first exception thrown by fn is
/// rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (!failed.load(std::memory_order_relaxed)) {
          const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
          if (i >= count) return;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

/// Outcome of one target in a batch run.
struct TargetResult {
  NodeId target = 0;
  std::string method;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::size_t subgraph_size = 0;
  double wall_time = 0.0;  // seconds, search only
  std::size_t bp_invocations = 0;
  std::optional<std::string> error;
  std::optional<ExplanationSubgraph> best;

  bool ok() const noexcept { return !error.has_value(); }
};

struct RunReport {
  SearchConfig config;
  std::size_t workers = 1;
  std::vector<TargetResult> per_target;  // in request order
  double full_bp_wall_time = 0.0;
  double total_wall_time = 0.0;
  bool full_bp_converged = true;

  std::size_t succeeded() const {
    return static_cast<std::size_t>(
        std::count_if(per_target.begin(), per_target.end(), [](const auto& t) { return t.ok(); }));
  }

  /// Mean over successful targets; NaN when there are none.
  double mean_objective() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : per_target) {
      if (t.ok()) sum += t.objective, ++n;
    }
    return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  }

  double mean_size() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& t : per_target) {
      if (t.ok()) sum += static_cast<double>(t.subgraph_size), ++n;
    }
    return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  }
};

/// Total subgraph BP runs over all targets of a report.
inline std::size_t count_bp_invocations(const RunReport& report) {
  std::size_t total = 0;
  for (const auto& t : report.per_target) total += t.bp_invocations;
  return total;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// Explains every target against a precomputed full-graph BP. Per-target
/// failures (unknown node, degenerate BP) are recorded and do not stop the
/// run. Outputs do not depend on `workers`.
inline RunReport explain_targets(const Mrf& mrf, const BpResult& full_bp,
                                 const std::vector<NodeId>& targets, const SearchConfig& config,
                                 std::size_t workers) {
  config.validate();
  if (workers < 1) throw ValidationError("worker count must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.config = config;
  report.workers = workers;
  report.full_bp_converged = full_bp.converged;
  report.per_target.resize(targets.size());
  parallel_for(targets.size(), workers, [&](std::size_t i) {
    TargetResult& r = report.per_target[i];
    r.target = targets[i];
    r.method = std::string(method_name(config.method));
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Beam beam = beam_search(mrf, full_bp, targets[i], config);
      const auto& best = beam.candidates.front();
      r.objective = best.objective;
      r.subgraph_size = best.size();
      r.bp_invocations = beam.bp_invocations;
      r.best = best;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.wall_time = detail::seconds_since(t0);
  });
  report.total_wall_time = detail::seconds_since(start);
  return report;
}

/// Runs BP on the whole graph once, then explains every target.
inline RunReport explain_targets(const Mrf& mrf, const std::vector<NodeId>& targets,
                                 const SearchConfig& config, std::size_t workers) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const BpResult full = run_bp(mrf, config.bp);
  const double full_time = detail::seconds_since(start);
  RunReport report = explain_targets(mrf, full, targets, config, workers);
  report.full_bp_wall_time = full_time;
  report.total_wall_time += full_time;
  return report;
}

}  // namespace bpx
