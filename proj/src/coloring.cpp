/**
 * Copyright (c) 2012 Carnegie Mellon University.
 *     All rights reserved.
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing,
 *  software distributed under the License is distributed on an "AS
 *  IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either
 *  express or implied.  See the License for the specific language
 *  governing permissions and limitations under the License.
 */

#include <atomgraph/coloring.hpp>

#include <algorithm>
#include <numeric>
#include <set>

namespace atomgraph {

namespace {

template <typename NeighborsFn>
coloring greedy_over(const data_graph& g, const std::vector<vertex_id>& order,
                     NeighborsFn&& neighbors_of) {
  coloring c;
  c.color.assign(g.num_vertices(), ~color_id(0));
  std::vector<char> used;
  for (vertex_id v : order) {
    used.assign(used.size(), 0);
    for (vertex_id u : neighbors_of(v)) {
      color_id cu = c.color[u];
      if (cu == ~color_id(0)) continue;
      if (cu >= used.size()) used.resize(cu + 1, 0);
      used[cu] = 1;
    }
    color_id pick = 0;
    while (pick < used.size() && used[pick]) ++pick;
    if (pick >= used.size()) used.resize(pick + 1, 0);
    c.color[v] = pick;
    c.count = std::max(c.count, pick + 1);
  }
  if (g.num_vertices() == 0) c.count = 0;
  return c;
}

std::vector<vertex_id> default_order(const data_graph& g) {
  std::vector<vertex_id> order(g.num_vertices());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](vertex_id a, vertex_id b) {
    auto da = g.neighbors(a).size(), db = g.neighbors(b).size();
    if (da != db) return da > db;
    return a < b;
  });
  return order;
}

std::vector<vertex_id> distance2_neighbors(const data_graph& g, vertex_id v) {
  std::vector<vertex_id> out;
  for (vertex_id u : g.neighbors(v)) {
    out.push_back(u);
    for (vertex_id w : g.neighbors(u))
      if (w != v) out.push_back(w);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

coloring greedy_color(const data_graph& g, color_order order,
                      const std::vector<vertex_id>& given_order) {
  std::vector<vertex_id> ord =
      order == color_order::given ? given_order : default_order(g);
  return greedy_over(g, ord, [&](vertex_id v) { return g.neighbors(v); });
}

coloring bipartite_color(const data_graph& g, const std::vector<std::uint8_t>& side) {
  for (edge_index e = 0; e < g.num_edges(); ++e) {
    if (side[g.edge(e).source] == side[g.edge(e).target])
      throw not_bipartite_error("edge " + std::to_string(g.edge(e).source) + "->" +
                                std::to_string(g.edge(e).target) +
                                " stays within one side");
  }
  coloring c;
  c.color.assign(g.num_vertices(), 0);
  bool saw[2] = {false, false};
  for (vertex_id v = 0; v < g.num_vertices(); ++v) {
    c.color[v] = side[v] ? 1 : 0;
    saw[c.color[v]] = true;
  }
  c.count = saw[1] ? 2 : (saw[0] ? 1 : 0);
  return c;
}

coloring second_order_color(const data_graph& g) {
  return greedy_over(g, default_order(g),
                     [&](vertex_id v) { return distance2_neighbors(g, v); });
}

coloring vertex_model_color(const data_graph& g) {
  coloring c;
  c.color.assign(g.num_vertices(), 0);
  c.count = g.num_vertices() ? 1 : 0;
  return c;
}

bool coloring_valid_for(const data_graph& g, const coloring& c, consistency_model model) {
  if (c.color.size() != g.num_vertices()) return false;
  for (color_id col : c.color)
    if (col >= c.count) return false;
  if (model == consistency_model::vertex) return true;
  for (vertex_id v = 0; v < g.num_vertices(); ++v) {
    if (model == consistency_model::edge) {
      for (vertex_id u : g.neighbors(v))
        if (c.color[u] == c.color[v]) return false;
    } else {
      for (vertex_id u : distance2_neighbors(g, v))
        if (c.color[u] == c.color[v]) return false;
    }
  }
  return true;
}

coloring color_for_model(const data_graph& g, consistency_model model) {
  switch (model) {
    case consistency_model::vertex: return vertex_model_color(g);
    case consistency_model::edge: return greedy_color(g);
    case consistency_model::full: return second_order_color(g);
  }
  return greedy_color(g);
}

}  // namespace atomgraph
