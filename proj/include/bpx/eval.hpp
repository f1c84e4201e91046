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

#include <array>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bpx/batch.hpp"
#include "bpx/bp.hpp"
#include "bpx/explain.hpp"
#include "bpx/io.hpp"

namespace bpx {

/// The rows of the method comparison table.
enum class EvalMethod { kGegBeam1, kGegBeam3, kGel, kRandomGlobal, kRandomLocal, kComb };

inline constexpr std::array kAllEvalMethods = {EvalMethod::kGegBeam1,    EvalMethod::kGegBeam3,
                                               EvalMethod::kGel,         EvalMethod::kRandomGlobal,
                                               EvalMethod::kRandomLocal, EvalMethod::kComb};

inline std::string_view eval_method_name(EvalMethod m) {
  switch (m) {
    case EvalMethod::kGegBeam1: return "GE-G(k=1)";
    case EvalMethod::kGegBeam3: return "GE-G(k=3)";
    case EvalMethod::kGel: return "GE-L";
    case EvalMethod::kRandomGlobal: return "Random-G";
    case EvalMethod::kRandomLocal: return "Random-L";
    case EvalMethod::kComb: return "Comb";
  }
  return "?";
}

inline EvalMethod parse_eval_method(std::string_view text) {
  const auto s = detail::lowercase(text);
  if (s == "ge-g(k=1)" || s == "ge-g1" || s == "geg1" || s == "ge-g") return EvalMethod::kGegBeam1;
  if (s == "ge-g(k=3)" || s == "ge-g3" || s == "geg3") return EvalMethod::kGegBeam3;
  if (s == "ge-l" || s == "gel") return EvalMethod::kGel;
  if (s == "random-g") return EvalMethod::kRandomGlobal;
  if (s == "random-l") return EvalMethod::kRandomLocal;
  if (s == "comb") return EvalMethod::kComb;
  throw ValidationError("unknown evaluation method '" + std::string(text) + "'");
}

struct EvalOptions {
  SearchConfig base;  // capacity, GE-L variant, pruning and BP settings
  std::vector<std::uint64_t> seeds{0};
  std::size_t workers = 1;
  std::vector<EvalMethod> methods{kAllEvalMethods.begin(), kAllEvalMethods.end()};
};

struct EvalRow {
  EvalMethod method;
  double mean_objective = 0.0;
  double mean_size = 0.0;
  std::size_t samples = 0;
  std::size_t failures = 0;
};

/// Builds the model for one seed.
using DatasetFactory = std::function<Dataset(std::uint64_t seed)>;
/// Chooses the targets explained for one seed.
using TargetPicker = std::function<std::vector<NodeId>(const Dataset&, std::uint64_t seed)>;

inline std::vector<NodeId> all_nodes(const Dataset& d, std::uint64_t) {
  auto ids = d.mrf.node_ids();
  return {ids.begin(), ids.end()};
}

namespace detail {

struct EvalCell {
  double objective = 0.0;
  std::size_t size = 0;
  bool ok = false;
};

inline SearchConfig eval_config(const SearchConfig& base, Method method, std::size_t beam,
                                std::uint64_t seed) {
  SearchConfig c = base;
  c.method = method;
  c.beam = beam;
  c.seed = seed;
  return c;
}

inline EvalCell best_of(const Beam& b) {
  const auto& s = b.candidates.front();
  return {s.objective, s.size(), true};
}

}  // namespace detail

/// Mean objective and mean explanation size of each method, averaged over
/// every (seed, target) pair that did not fail.
inline std::vector<EvalRow> evaluate_methods(const DatasetFactory& dataset,
                                             const TargetPicker& pick_targets,
                                             const EvalOptions& options) {
  options.base.validate();
  const auto slot = [](EvalMethod m) { return static_cast<std::size_t>(m); };
  std::array<bool, kAllEvalMethods.size()> wanted{};
  for (auto m : options.methods) wanted[slot(m)] = true;

  std::vector<EvalRow> rows;
  for (auto m : kAllEvalMethods) rows.push_back(EvalRow{m});

  for (std::uint64_t seed : options.seeds) {
    const Dataset data = dataset(seed);
    const Mrf& mrf = data.mrf;
    const BpResult full = run_bp(mrf, options.base.bp);
    const auto targets = pick_targets(data, seed);
    using Cells = std::array<detail::EvalCell, kAllEvalMethods.size()>;
    std::vector<Cells> cells(targets.size());

    parallel_for(targets.size(), options.workers, [&](std::size_t i) {
      const NodeId t = targets[i];
      Cells& out = cells[i];
      auto run = [&](EvalMethod m, Method method, std::size_t beam) -> std::optional<Beam> {
        try {
          Beam b = beam_search(mrf, full, t, detail::eval_config(options.base, method, beam, seed));
          out[slot(m)] = detail::best_of(b);
          return b;
        } catch (const Error&) {
          return std::nullopt;
        }
      };
      if (wanted[slot(EvalMethod::kGegBeam1)]) run(EvalMethod::kGegBeam1, Method::kGlobal, 1);
      if (wanted[slot(EvalMethod::kGegBeam3)] || wanted[slot(EvalMethod::kComb)]) {
        auto beam3 = run(EvalMethod::kGegBeam3, Method::kGlobal, 3);
        if (beam3 && wanted[slot(EvalMethod::kComb)]) {
          try {
            auto comb = combine(*beam3, mrf, full.belief_of(mrf, t), options.base.bp);
            out[slot(EvalMethod::kComb)] = {comb.objective, comb.size(), true};
          } catch (const Error&) {
          }
        }
      }
      if (wanted[slot(EvalMethod::kGel)]) run(EvalMethod::kGel, Method::kLocal, 1);
      if (wanted[slot(EvalMethod::kRandomGlobal)]) run(EvalMethod::kRandomGlobal, Method::kRandomGlobal, 1);
      if (wanted[slot(EvalMethod::kRandomLocal)]) run(EvalMethod::kRandomLocal, Method::kRandomLocal, 1);
    });

    for (const auto& c : cells) {
      for (auto m : kAllEvalMethods) {
        auto& row = rows[slot(m)];
        const auto& cell = c[slot(m)];
        if (cell.ok) {
          row.mean_objective += cell.objective;
          row.mean_size += static_cast<double>(cell.size);
          ++row.samples;
        } else {
          ++row.failures;
        }
      }
    }
  }

  std::vector<EvalRow> out;
  for (auto m : options.methods) {
    EvalRow row = rows[slot(m)];
    if (row.samples) {
      row.mean_objective /= static_cast<double>(row.samples);
      row.mean_size /= static_cast<double>(row.samples);
    } else {
      row.mean_objective = row.mean_size = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(row);
  }
  return out;
}

/// "mean[size]" with 4 significant digits and one decimal, e.g. "0.0012[5.0]".
inline std::string format_cell(double mean_objective, double mean_size) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g[%.1f]", mean_objective, mean_size);
  return buf;
}

inline std::string format_table(const std::vector<EvalRow>& rows) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-10s %s\n", "method", "objective[size]");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %s\n", std::string(eval_method_name(r.method)).c_str(),
                  format_cell(r.mean_objective, r.mean_size).c_str());
    out += buf;
  }
  return out;
}

}  // namespace bpx
