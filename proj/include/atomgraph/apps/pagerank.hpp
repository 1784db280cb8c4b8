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

#ifndef ATOMGRAPH_APPS_PAGERANK_HPP
#define ATOMGRAPH_APPS_PAGERANK_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include <atomgraph/graph.hpp>
#include <atomgraph/scope.hpp>
#include <atomgraph/util.hpp>

namespace atomgraph::apps {

// vertex payload: R, R_old (two f64); edge payload: weight w (one f64)

struct pagerank_vertex {
  double rank = 0.0;
  double rank_old = 0.0;

  static pagerank_vertex decode(const payload& p) {
    payload_reader r(p);
    pagerank_vertex v;
    v.rank = r.f64();
    v.rank_old = r.f64();
    return v;
  }
  payload encode() const {
    return payload_writer().f64(rank).f64(rank_old).take();
  }
};

inline payload encode_weight(double w) { return payload_writer().f64(w).take(); }
inline double decode_weight(const payload& p) { return payload_reader(p).f64(); }

struct pagerank_config {
  double alpha = 0.15;
  double eps = 1e-5;
  std::size_t n = 0;  // vertex count, the n in alpha/n
};

/// The PageRank update: R(v) <- alpha/n + (1-alpha) * sum over in-links of
/// w_{u,v} R(u); schedules every neighbor when the rank moved more than eps.
/// Runs under edge consistency.
inline update_fn make_pagerank_update(pagerank_config cfg) {
  return [cfg](scope& s) {
    pagerank_vertex self = pagerank_vertex::decode(s.vertex_data());
    const double r_old = self.rank;
    double r = cfg.alpha / double(cfg.n);
    for (const auto& e : s.in_edges()) {
      double w = decode_weight(*e.data);
      double ru = pagerank_vertex::decode(s.neighbor_data(e.source)).rank;
      r += (1.0 - cfg.alpha) * w * ru;
    }
    self.rank = r;
    self.rank_old = r_old;
    s.vertex_data_mut() = self.encode();
    if (std::fabs(r - r_old) > cfg.eps) {
      for (std::size_t i = 0; i < s.num_neighbors(); ++i)
        s.schedule(s.neighbor(i), std::fabs(r - r_old));
    }
  };
}

/// Attach PageRank payloads to a graph structure: R = R_old = 1/n and
/// w_{u,v} = 1/outdeg(u), making the link matrix column-stochastic so
/// converged ranks sum to one.
inline data_graph make_pagerank_graph(std::size_t n, std::vector<edge_endpoints> edges) {
  std::vector<std::size_t> outdeg(n, 0);
  for (const auto& e : edges) ++outdeg[e.source];
  std::vector<payload> edata;
  edata.reserve(edges.size());
  for (const auto& e : edges) edata.push_back(encode_weight(1.0 / double(outdeg[e.source])));
  std::vector<payload> vdata(n, pagerank_vertex{1.0 / double(n), 1.0 / double(n)}.encode());
  return build_graph(n, std::move(edges), std::move(vdata), std::move(edata));
}

inline std::vector<double> extract_ranks(const data_graph& g) {
  std::vector<double> r(g.num_vertices());
  for (vertex_id v = 0; v < g.num_vertices(); ++v)
    r[v] = pagerank_vertex::decode(g.vertex_data(v)).rank;
  return r;
}

/**
 * Independent oracle: synchronous power iteration of the same fixed-point
 * equation, run to tolerance tol in the max norm. Touches none of the
 * executor or engine code paths.
 */
inline std::vector<double> pagerank_power_iteration(const data_graph& g,
                                                    const pagerank_config& cfg,
                                                    double tol = 1e-12,
                                                    std::size_t max_iters = 100000) {
  const std::size_t n = g.num_vertices();
  std::vector<double> r(n, 1.0 / double(n)), next(n);
  for (std::size_t it = 0; it < max_iters; ++it) {
    double delta = 0.0;
    for (vertex_id v = 0; v < n; ++v) {
      double x = cfg.alpha / double(cfg.n);
      for (edge_index e : g.in_edges(v))
        x += (1.0 - cfg.alpha) * decode_weight(g.edge_data(e)) * r[g.edge(e).source];
      next[v] = x;
      delta = std::max(delta, std::fabs(x - r[v]));
    }
    r.swap(next);
    if (delta < tol) break;
  }
  return r;
}

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

}  // namespace atomgraph::apps

#endif
