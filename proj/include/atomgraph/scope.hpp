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

#ifndef ATOMGRAPH_SCOPE_HPP
#define ATOMGRAPH_SCOPE_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include <atomgraph/consistency.hpp>
#include <atomgraph/errors.hpp>
#include <atomgraph/globals.hpp>
#include <atomgraph/graph.hpp>
#include <atomgraph/util.hpp>

namespace atomgraph {

/// Identity of a data element, for dirty tracking and wire messages.
/// kind 0 = vertex data, 1 = directed edge data, 2 = per-vertex engine annex
/// (snapshot flag).
struct element_key {
  std::uint8_t kind = 0;
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  auto operator<=>(const element_key&) const = default;

  static element_key vertex(vertex_id v) { return {0, v, 0}; }
  static element_key edge(vertex_id s, vertex_id t) { return {1, s, t}; }
  static element_key flag(vertex_id v) { return {2, v, 0}; }
};

struct scheduled_task {
  vertex_id vertex;
  double priority;
};

/**
 * The readable/writable neighborhood handed to an update function: the
 * center vertex, all adjacent edges, and all adjacent vertices. Every
 * access goes through the consistency-model permission table; a denied
 * access throws access_violation_error, an access outside the
 * neighborhood throws target_not_in_scope_error.
 *
 * The executor binds payload slots before invoking the update function;
 * the scope itself is storage-agnostic so the serial executor and both
 * engines share one access path (identical gather order, hence identical
 * floating-point results).
 */
class scope {
public:
  struct vertex_slot {
    vertex_id vid;
    payload* data;
  };
  struct edge_slot {
    vertex_id source;
    vertex_id target;
    payload* data;
  };

  scope(vertex_id center, consistency_model model, payload* center_data,
        std::vector<vertex_slot> neighbors, std::vector<edge_slot> in_edges,
        std::vector<edge_slot> out_edges, const global_values* globals = nullptr)
      : center_(center),
        model_(model),
        center_data_(center_data),
        neighbors_(std::move(neighbors)),
        in_edges_(std::move(in_edges)),
        out_edges_(std::move(out_edges)),
        globals_(globals) {}

  vertex_id center() const { return center_; }
  consistency_model model() const { return model_; }

  std::size_t num_neighbors() const { return neighbors_.size(); }
  vertex_id neighbor(std::size_t i) const { return neighbors_[i].vid; }

  const std::vector<edge_slot>& in_edges() const { return in_edges_; }
  const std::vector<edge_slot>& out_edges() const { return out_edges_; }

  // -- vertex data ---------------------------------------------------------

  const payload& vertex_data() const { return *center_data_; }

  payload& vertex_data_mut() {
    require(scope_element::center_vertex, access_mode::write, element_key::vertex(center_));
    dirty(element_key::vertex(center_));
    return *center_data_;
  }

  const payload& neighbor_data(vertex_id u) const {
    const vertex_slot& s = find_neighbor(u);
    require(scope_element::adjacent_vertex, access_mode::read, element_key::vertex(u));
    return *s.data;
  }

  payload& neighbor_data_mut(vertex_id u) {
    const vertex_slot& s = find_neighbor(u);
    require(scope_element::adjacent_vertex, access_mode::write, element_key::vertex(u));
    dirty(element_key::vertex(u));
    return *s.data;
  }

  // -- edge data -----------------------------------------------------------

  bool has_edge(vertex_id s, vertex_id t) const { return lookup_edge(s, t) != nullptr; }

  const payload& edge_data(vertex_id s, vertex_id t) const {
    const edge_slot* e = require_edge(s, t);
    require(scope_element::adjacent_edge, access_mode::read, element_key::edge(s, t));
    return *e->data;
  }

  payload& edge_data_mut(vertex_id s, vertex_id t) {
    const edge_slot* e = require_edge(s, t);
    require(scope_element::adjacent_edge, access_mode::write, element_key::edge(s, t));
    dirty(element_key::edge(s, t));
    return *e->data;
  }

  // -- scheduling and globals ------------------------------------------------

  /// Schedule a future update of u. u must be the center or a neighbor;
  /// that keeps the owner of u locally resolvable in the distributed
  /// engines.
  void schedule(vertex_id u, double priority = 0.0) {
    if (u != center_ && !is_neighbor(u))
      throw target_not_in_scope_error("cannot schedule non-scope vertex " +
                                      std::to_string(u));
    scheduled_.push_back({u, priority});
  }

  const global_values::entry* global(const std::string& name) const {
    return globals_ ? globals_->find(name) : nullptr;
  }

  // -- executor-side access --------------------------------------------------

  const std::vector<scheduled_task>& scheduled() const { return scheduled_; }
  const std::vector<element_key>& written() const { return written_; }
  /// Pre-write images of the written elements, parallel to written().
  /// Engines byte-compare these against the post-update bytes to decide
  /// whether an element really changed (version bump, ghost push).
  const std::vector<payload>& written_pre_images() const { return written_pre_; }

  const payload& current_bytes(const element_key& k) const {
    if (k.kind == 0) return k.a == center_ ? *center_data_ : *find_neighbor(k.a).data;
    return *lookup_edge(k.a, k.b)->data;
  }

  /// Digest of everything an update function could read, in canonical order.
  std::uint64_t read_digest() const {
    hasher64 h;
    h.u64(center_).payload_bytes(*center_data_);
    for (const auto& s : neighbors_) h.u64(s.vid).payload_bytes(*s.data);
    for_each_edge_canonical([&](const edge_slot& e) {
      h.u64(e.source).u64(e.target).payload_bytes(*e.data);
    });
    return h.digest();
  }

  /// Digest of the elements actually written, post-update.
  std::uint64_t write_digest() const {
    std::vector<element_key> keys = written_;
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    hasher64 h;
    for (const auto& k : keys) {
      h.u64(k.kind).u64(k.a).u64(k.b);
      if (k.kind == 0) {
        h.payload_bytes(k.a == center_ ? *center_data_ : *find_neighbor(k.a).data);
      } else {
        h.payload_bytes(*lookup_edge(k.a, k.b)->data);
      }
    }
    return h.digest();
  }

private:
  void require(scope_element target, access_mode mode, const element_key& key) const {
    if (!check_access(model_, target, mode))
      throw access_violation_error(
          "consistency model '" + to_string(model_) + "' denies " +
          (mode == access_mode::write ? std::string("write") : std::string("read")) +
          " on element (" + std::to_string(key.kind) + "," + std::to_string(key.a) +
          "," + std::to_string(key.b) + ") in scope of " + std::to_string(center_));
  }

  bool is_neighbor(vertex_id u) const {
    auto it = std::lower_bound(neighbors_.begin(), neighbors_.end(), u,
                               [](const vertex_slot& s, vertex_id v) { return s.vid < v; });
    return it != neighbors_.end() && it->vid == u;
  }

  const vertex_slot& find_neighbor(vertex_id u) const {
    auto it = std::lower_bound(neighbors_.begin(), neighbors_.end(), u,
                               [](const vertex_slot& s, vertex_id v) { return s.vid < v; });
    if (it == neighbors_.end() || it->vid != u)
      throw target_not_in_scope_error("vertex " + std::to_string(u) +
                                      " not in scope of " + std::to_string(center_));
    return *it;
  }

  const edge_slot* lookup_edge(vertex_id s, vertex_id t) const {
    if (t == center_) {
      for (const auto& e : in_edges_)
        if (e.source == s) return &e;
    }
    if (s == center_) {
      for (const auto& e : out_edges_)
        if (e.target == t) return &e;
    }
    return nullptr;
  }

  const edge_slot* require_edge(vertex_id s, vertex_id t) const {
    const edge_slot* e = lookup_edge(s, t);
    if (!e)
      throw target_not_in_scope_error("edge " + std::to_string(s) + "->" +
                                      std::to_string(t) + " not in scope of " +
                                      std::to_string(center_));
    return e;
  }

  void dirty(const element_key& k) {
    if (std::find(written_.begin(), written_.end(), k) == written_.end()) {
      written_.push_back(k);
      written_pre_.push_back(current_bytes(k));  // captured before mutation
    }
  }

  template <typename F>
  void for_each_edge_canonical(F&& f) const {
    // in-edges then out-edges, each sorted by the far endpoint
    for (const auto& e : in_edges_) f(e);
    for (const auto& e : out_edges_) f(e);
  }

  vertex_id center_;
  consistency_model model_;
  payload* center_data_;
  std::vector<vertex_slot> neighbors_;
  std::vector<edge_slot> in_edges_;
  std::vector<edge_slot> out_edges_;
  const global_values* globals_;
  std::vector<scheduled_task> scheduled_;
  std::vector<element_key> written_;
  std::vector<payload> written_pre_;
};

/// Update : f(v, S_v) -> (S_v, T'). Stateless: everything flows through
/// the scope; T' is collected via scope::schedule.
using update_fn = std::function<void(scope&)>;

/// Build a scope over the serial data graph.
inline scope make_graph_scope(data_graph& g, vertex_id v, consistency_model model,
                              const global_values* globals = nullptr) {
  std::vector<scope::vertex_slot> nbrs;
  for (vertex_id u : g.neighbors(v)) nbrs.push_back({u, &g.vertex_data(u)});
  std::vector<scope::edge_slot> ins, outs;
  for (edge_index e : g.in_edges(v))
    ins.push_back({g.edge(e).source, v, &g.edge_data(e)});
  for (edge_index e : g.out_edges(v))
    outs.push_back({v, g.edge(e).target, &g.edge_data(e)});
  return scope(v, model, &g.vertex_data(v), std::move(nbrs), std::move(ins),
               std::move(outs), globals);
}

}  // namespace atomgraph

#endif
