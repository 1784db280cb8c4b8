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

#ifndef ATOMGRAPH_APPS_COEM_HPP
#define ATOMGRAPH_APPS_COEM_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include <atomgraph/graph.hpp>
#include <atomgraph/scope.hpp>
#include <atomgraph/util.hpp>

namespace atomgraph::apps {

// CoEM label propagation over a bipartite noun-phrase / context graph.
// vertex payload: seed flag (u8) then a distribution over types (T f64,
// sums to 1). edge payload: co-occurrence count (f64).

struct coem_vertex {
  bool seed = false;
  std::vector<double> dist;

  static coem_vertex decode(const payload& p, std::size_t types) {
    payload_reader r(p);
    coem_vertex v;
    v.seed = r.u8() != 0;
    v.dist.resize(types);
    for (auto& x : v.dist) x = r.f64();
    return v;
  }
  payload encode() const {
    payload_writer w;
    w.u8(seed ? 1 : 0);
    for (double x : dist) w.f64(x);
    return w.take();
  }
};

struct coem_config {
  std::size_t types = 4;
  double eps = 1e-6;
};

/// Non-seed vertices take the count-weighted average of their neighbors'
/// type distributions; seeds never change. Neighbors are rescheduled when
/// the center moved more than eps in L1.
inline update_fn make_coem_update(coem_config cfg) {
  return [cfg](scope& s) {
    coem_vertex self = coem_vertex::decode(s.vertex_data(), cfg.types);
    if (self.seed) return;
    if (s.num_neighbors() == 0) return;

    std::vector<double> acc(cfg.types, 0.0);
    double total = 0.0;
    auto fold = [&](vertex_id u, const payload& edge) {
      double w = payload_reader(edge).f64();
      coem_vertex nb = coem_vertex::decode(s.neighbor_data(u), cfg.types);
      for (std::size_t t = 0; t < cfg.types; ++t) acc[t] += w * nb.dist[t];
      total += w;
    };
    for (const auto& e : s.in_edges()) fold(e.source, *e.data);
    for (const auto& e : s.out_edges()) fold(e.target, *e.data);
    if (total <= 0.0) return;

    double delta = 0.0;
    for (std::size_t t = 0; t < cfg.types; ++t) {
      acc[t] /= total;
      delta += std::fabs(acc[t] - self.dist[t]);
    }
    self.dist = acc;
    s.vertex_data_mut() = self.encode();
    if (delta > cfg.eps) {
      for (std::size_t i = 0; i < s.num_neighbors(); ++i) s.schedule(s.neighbor(i), delta);
    }
  };
}

struct coem_problem {
  data_graph graph;
  std::size_t types = 0;
};

/**
 * Synthetic bipartite instance: noun-phrases [0, left), contexts
 * [left, left+right), seeded random co-occurrence edges with integer
 * counts, plus seed vertices pinned to pure types. Every vertex is kept
 * reachable from a seed so the fixed point is unique.
 */
inline coem_problem make_coem_synthetic(std::size_t left, std::size_t right,
                                        std::size_t types, std::size_t num_seeds,
                                        std::size_t avg_degree, std::uint64_t seed) {
  rng gen(seed);
  const std::size_t n = left + right;

  std::vector<edge_endpoints> edges;
  std::vector<payload> edata;
  std::vector<std::vector<char>> have(left, std::vector<char>(right, 0));
  auto add_edge = [&](std::size_t np, std::size_t ctx, double count) {
    if (have[np][ctx]) return;
    have[np][ctx] = 1;
    edges.push_back({np, left + ctx});
    edata.push_back(payload_writer().f64(count).take());
  };
  for (std::size_t np = 0; np < left; ++np) {
    std::size_t deg = 1 + gen.below(2 * avg_degree - 1);
    for (std::size_t i = 0; i < deg; ++i)
      add_edge(np, gen.below(right), 1.0 + double(gen.below(5)));
  }
  // make sure every context has at least one edge
  for (std::size_t ctx = 0; ctx < right; ++ctx) {
    bool any = false;
    for (std::size_t np = 0; np < left && !any; ++np) any = have[np][ctx];
    if (!any) add_edge(gen.below(left), ctx, 1.0);
  }

  std::vector<payload> vdata(n);
  std::vector<char> is_seed(n, 0);
  for (std::size_t i = 0; i < num_seeds; ++i) {
    // alternate seed sides, deterministic placement
    vertex_id v = (i % 2 == 0) ? vertex_id(i / 2) : vertex_id(left + i / 2);
    is_seed[v] = 1;
    coem_vertex cv;
    cv.seed = true;
    cv.dist.assign(types, 0.0);
    cv.dist[i % types] = 1.0;
    vdata[v] = cv.encode();
  }
  for (vertex_id v = 0; v < n; ++v) {
    if (is_seed[v]) continue;
    coem_vertex cv;
    cv.seed = false;
    cv.dist.assign(types, 1.0 / double(types));
    vdata[v] = cv.encode();
  }

  coem_problem p;
  p.graph = build_graph(n, std::move(edges), std::move(vdata), std::move(edata));
  p.types = types;
  return p;
}

/// Independent oracle: dense synchronous Jacobi iteration of the same
/// averaging map, run until the largest per-vertex L1 step is below tol.
inline std::vector<std::vector<double>> coem_jacobi_oracle(const data_graph& g,
                                                           std::size_t types,
                                                           double tol = 1e-12,
                                                           std::size_t max_iters = 100000) {
  const std::size_t n = g.num_vertices();
  std::vector<coem_vertex> verts;
  for (vertex_id v = 0; v < n; ++v) verts.push_back(coem_vertex::decode(g.vertex_data(v), types));
  std::vector<std::vector<double>> cur(n), next(n);
  for (vertex_id v = 0; v < n; ++v) cur[v] = verts[v].dist;

  for (std::size_t it = 0; it < max_iters; ++it) {
    double worst = 0.0;
    for (vertex_id v = 0; v < n; ++v) {
      if (verts[v].seed) {
        next[v] = cur[v];
        continue;
      }
      std::vector<double> acc(types, 0.0);
      double total = 0.0;
      auto fold = [&](vertex_id u, edge_index e) {
        double w = payload_reader(g.edge_data(e)).f64();
        for (std::size_t t = 0; t < types; ++t) acc[t] += w * cur[u][t];
        total += w;
      };
      for (edge_index e : g.in_edges(v)) fold(g.edge(e).source, e);
      for (edge_index e : g.out_edges(v)) fold(g.edge(e).target, e);
      if (total <= 0.0) {
        next[v] = cur[v];
        continue;
      }
      double delta = 0.0;
      for (std::size_t t = 0; t < types; ++t) {
        acc[t] /= total;
        delta += std::fabs(acc[t] - cur[v][t]);
      }
      next[v] = acc;
      worst = std::max(worst, delta);
    }
    cur.swap(next);
    if (worst < tol) break;
  }
  return cur;
}

inline std::vector<std::vector<double>> extract_distributions(const data_graph& g,
                                                              std::size_t types) {
  std::vector<std::vector<double>> out;
  for (vertex_id v = 0; v < g.num_vertices(); ++v)
    out.push_back(coem_vertex::decode(g.vertex_data(v), types).dist);
  return out;
}

}  // namespace atomgraph::apps

#endif
