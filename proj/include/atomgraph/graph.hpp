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

#ifndef ATOMGRAPH_GRAPH_HPP
#define ATOMGRAPH_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include <atomgraph/errors.hpp>
#include <atomgraph/util.hpp>

namespace atomgraph {

using vertex_id = std::uint64_t;
using edge_index = std::uint64_t;

constexpr vertex_id invalid_vertex = ~vertex_id(0);

struct edge_endpoints {
  vertex_id source;
  vertex_id target;
  bool operator==(const edge_endpoints&) const = default;
};

/**
 * The data graph: a static directed structure carrying mutable opaque
 * vertex and edge payloads. Structure is frozen at construction; only the
 * payload bytes change during execution.
 */
class data_graph {
public:
  data_graph() = default;

  static data_graph build(std::size_t vertex_count,
                          std::vector<edge_endpoints> edges,
                          std::vector<payload> vertex_data = {},
                          std::vector<payload> edge_data = {}) {
    data_graph g;
    g.vdata_.resize(vertex_count);
    if (!vertex_data.empty()) {
      if (vertex_data.size() != vertex_count)
        throw endpoint_out_of_range_error("vertex data size mismatch");
      g.vdata_ = std::move(vertex_data);
    }
    g.edges_ = std::move(edges);
    g.edata_.resize(g.edges_.size());
    if (!edge_data.empty()) {
      if (edge_data.size() != g.edges_.size())
        throw endpoint_out_of_range_error("edge data size mismatch");
      g.edata_ = std::move(edge_data);
    }
    g.finalize();
    return g;
  }

  std::size_t num_vertices() const { return vdata_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const edge_endpoints& edge(edge_index e) const { return edges_[e]; }

  payload& vertex_data(vertex_id v) { return vdata_[v]; }
  const payload& vertex_data(vertex_id v) const { return vdata_[v]; }
  payload& edge_data(edge_index e) { return edata_[e]; }
  const payload& edge_data(edge_index e) const { return edata_[e]; }

  /// Edge ids of edges into v, sorted by source vertex id.
  std::span<const edge_index> in_edges(vertex_id v) const {
    return {in_.data() + in_offset_[v], in_offset_[v + 1] - in_offset_[v]};
  }
  /// Edge ids of edges out of v, sorted by target vertex id.
  std::span<const edge_index> out_edges(vertex_id v) const {
    return {out_.data() + out_offset_[v], out_offset_[v + 1] - out_offset_[v]};
  }
  /// N[v]: union of in- and out-neighbors, sorted, each vertex once.
  std::span<const vertex_id> neighbors(vertex_id v) const {
    return {nbr_.data() + nbr_offset_[v], nbr_offset_[v + 1] - nbr_offset_[v]};
  }

  /// Directed edge lookup; returns false if (s, t) is not an edge.
  bool find_edge(vertex_id s, vertex_id t, edge_index& out) const {
    auto span = out_edges(s);
    for (edge_index e : span) {
      if (edges_[e].target == t) {
        out = e;
        return true;
      }
    }
    return false;
  }

  std::uint64_t data_digest() const {
    hasher64 h;
    for (const auto& p : vdata_) h.payload_bytes(p);
    for (const auto& p : edata_) h.payload_bytes(p);
    return h.digest();
  }

private:
  void finalize() {
    const std::size_t n = vdata_.size();
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& ep = edges_[e];
      if (ep.source >= n || ep.target >= n)
        throw endpoint_out_of_range_error("edge endpoint exceeds vertex count");
      if (ep.source == ep.target)
        throw self_loop_error("self loop at vertex " + std::to_string(ep.source));
    }
    // duplicate detection on sorted pairs
    {
      std::vector<edge_index> order(edges_.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](edge_index a, edge_index b) {
        return std::pair(edges_[a].source, edges_[a].target) <
               std::pair(edges_[b].source, edges_[b].target);
      });
      for (std::size_t i = 1; i < order.size(); ++i) {
        if (edges_[order[i - 1]] == edges_[order[i]])
          throw duplicate_edge_error("duplicate directed edge " +
                                     std::to_string(edges_[order[i]].source) + "->" +
                                     std::to_string(edges_[order[i]].target));
      }
    }

    auto build_index = [&](bool incoming, std::vector<std::size_t>& offsets,
                           std::vector<edge_index>& list) {
      std::vector<std::size_t> deg(n + 1, 0);
      for (const auto& ep : edges_) ++deg[(incoming ? ep.target : ep.source) + 1];
      offsets.assign(n + 1, 0);
      for (std::size_t v = 0; v < n; ++v) offsets[v + 1] = offsets[v] + deg[v + 1];
      list.resize(edges_.size());
      std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
      for (std::size_t e = 0; e < edges_.size(); ++e) {
        vertex_id key = incoming ? edges_[e].target : edges_[e].source;
        list[cursor[key]++] = e;
      }
      // stable neighbor order: sort each bucket by the far endpoint
      for (std::size_t v = 0; v < n; ++v) {
        std::sort(list.begin() + long(offsets[v]), list.begin() + long(offsets[v + 1]),
                  [&](edge_index a, edge_index b) {
                    vertex_id fa = incoming ? edges_[a].source : edges_[a].target;
                    vertex_id fb = incoming ? edges_[b].source : edges_[b].target;
                    return fa < fb;
                  });
      }
    };
    build_index(true, in_offset_, in_);
    build_index(false, out_offset_, out_);

    nbr_offset_.assign(n + 1, 0);
    std::vector<vertex_id> scratch;
    for (std::size_t v = 0; v < n; ++v) {
      scratch.clear();
      for (edge_index e : in_edges(v)) scratch.push_back(edges_[e].source);
      for (edge_index e : out_edges(v)) scratch.push_back(edges_[e].target);
      std::sort(scratch.begin(), scratch.end());
      scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
      nbr_offset_[v + 1] = nbr_offset_[v] + scratch.size();
      nbr_.insert(nbr_.end(), scratch.begin(), scratch.end());
    }
  }

  std::vector<edge_endpoints> edges_;
  std::vector<payload> vdata_;
  std::vector<payload> edata_;
  std::vector<std::size_t> in_offset_, out_offset_, nbr_offset_;
  std::vector<edge_index> in_, out_;
  std::vector<vertex_id> nbr_;
};

inline data_graph build_graph(std::size_t vertices,
                              std::vector<edge_endpoints> edges,
                              std::vector<payload> vertex_data = {},
                              std::vector<payload> edge_data = {}) {
  return data_graph::build(vertices, std::move(edges), std::move(vertex_data),
                           std::move(edge_data));
}

}  // namespace atomgraph

#endif
