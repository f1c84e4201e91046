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
#include <cstddef>
#include <deque>
#include <numeric>
#include <span>
#include <vector>

#include "bpx/mrf.hpp"

namespace bpx {

/// Whether every node of (nodes, edges) is reachable from the first one.
/// Edges touching nodes outside the set are ignored.
inline bool is_connected(std::span<const NodeId> nodes, std::span<const Edge> edges) {
  if (nodes.empty()) return false;
  std::vector<NodeId> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  auto pos = [&](NodeId id) -> std::ptrdiff_t {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), id);
    return (it == sorted.end() || *it != id) ? -1 : it - sorted.begin();
  };
  // union-find
  std::vector<std::size_t> parent(sorted.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = sorted.size();
  for (const Edge& e : edges) {
    auto a = pos(e.u);
    auto b = pos(e.v);
    if (a < 0 || b < 0) continue;
    auto ra = find(static_cast<std::size_t>(a));
    auto rb = find(static_cast<std::size_t>(b));
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components == 1;
}

/// Connected and |edges| == |nodes| - 1 (with distinct edges inside the set).
inline bool is_tree(std::span<const NodeId> nodes, std::span<const Edge> edges) {
  std::vector<Edge> distinct;
  distinct.reserve(edges.size());
  for (const Edge& e : edges) distinct.push_back(make_edge(e.u, e.v));
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  return distinct.size() + 1 == nodes.size() && is_connected(nodes, distinct);
}

/// Node ids within `radius` hops of `center`, ascending.
inline std::vector<NodeId> bfs_ball(const Mrf& mrf, NodeId center, std::size_t radius) {
  const std::size_t start = mrf.require_index(center);
  std::vector<std::size_t> dist(mrf.node_count(), static_cast<std::size_t>(-1));
  std::deque<std::size_t> queue{start};
  dist[start] = 0;
  std::vector<NodeId> out{center};
  while (!queue.empty()) {
    const std::size_t cur = queue.front();
    queue.pop_front();
    if (dist[cur] == radius) continue;
    for (const auto& nb : mrf.neighbors_at(cur)) {
      if (dist[nb.node] != static_cast<std::size_t>(-1)) continue;
      dist[nb.node] = dist[cur] + 1;
      out.push_back(mrf.id_at(nb.node));
      queue.push_back(nb.node);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bpx
