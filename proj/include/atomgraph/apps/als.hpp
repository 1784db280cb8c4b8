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

#ifndef ATOMGRAPH_APPS_ALS_HPP
#define ATOMGRAPH_APPS_ALS_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include <atomgraph/apps/linalg.hpp>
#include <atomgraph/graph.hpp>
#include <atomgraph/scope.hpp>
#include <atomgraph/util.hpp>

namespace atomgraph::apps {

// Alternating least squares over a bipartite users-by-movies graph.
// vertex payload: d latent factors (f64 each); edge payload: rating (f64).
// Users are vertices [0, num_users), movies [num_users, num_users+num_movies),
// edges directed user -> movie.

inline payload encode_latent(const std::vector<double>& x) {
  payload_writer w;
  for (double v : x) w.f64(v);
  return w.take();
}

inline std::vector<double> decode_latent(const payload& p, std::size_t d) {
  payload_reader r(p);
  std::vector<double> x(d);
  for (auto& v : x) v = r.f64();
  return x;
}

inline payload encode_rating(double r) { return payload_writer().f64(r).take(); }
inline double decode_rating(const payload& p) { return payload_reader(p).f64(); }

struct als_config {
  std::size_t d = 2;
  double lambda = 0.05;
  double eps = 1e-4;      // schedule threshold on the inf-norm latent change
  bool dynamic = false;   // static/BSP mode never reschedules
  /// Count of updates skipped because the normal matrix was singular
  /// (only possible with lambda == 0).
  std::shared_ptr<std::uint64_t> singular_skips = std::make_shared<std::uint64_t>(0);
};

/// Recompute the latent vector of the center from its neighbors' vectors by
/// solving the d x d regularized normal equations. Edge consistency.
inline update_fn make_als_update(als_config cfg) {
  return [cfg](scope& s) {
    const std::size_t d = cfg.d;
    if (s.num_neighbors() == 0) return;

    std::vector<double> a(d * d, 0.0), b(d, 0.0);
    auto accumulate = [&](vertex_id u, const payload& rating) {
      std::vector<double> y = decode_latent(s.neighbor_data(u), d);
      double r = decode_rating(rating);
      for (std::size_t i = 0; i < d; ++i) {
        b[i] += r * y[i];
        for (std::size_t j = 0; j < d; ++j) a[i * d + j] += y[i] * y[j];
      }
    };
    // bipartite: a vertex has either only in-edges or only out-edges
    for (const auto& e : s.in_edges()) accumulate(e.source, *e.data);
    for (const auto& e : s.out_edges()) accumulate(e.target, *e.data);
    for (std::size_t i = 0; i < d; ++i) a[i * d + i] += cfg.lambda;

    std::vector<double> x;
    if (!symmetric_solve(std::move(a), std::move(b), d, x)) {
      ++*cfg.singular_skips;  // rank-deficient with lambda == 0: skip vertex
      return;
    }

    std::vector<double> old = decode_latent(s.vertex_data(), d);
    double change = 0.0;
    for (std::size_t i = 0; i < d; ++i) change = std::max(change, std::fabs(x[i] - old[i]));
    s.vertex_data_mut() = encode_latent(x);

    if (cfg.dynamic && change > cfg.eps) {
      for (std::size_t i = 0; i < s.num_neighbors(); ++i)
        s.schedule(s.neighbor(i), change);
    }
  };
}

struct als_problem {
  data_graph graph;
  std::size_t num_users = 0;
  std::size_t num_movies = 0;
};

/// Noiseless synthetic: draw true factors U*, V* with a seeded Gaussian,
/// observe every rating of R = U* V*^T, and start from a small random init.
inline als_problem make_als_synthetic(std::size_t num_users, std::size_t num_movies,
                                      std::size_t true_rank, std::size_t d,
                                      std::uint64_t seed) {
  rng gen(seed);
  std::vector<std::vector<double>> ustar(num_users), vstar(num_movies);
  for (auto& row : ustar) {
    row.resize(true_rank);
    for (auto& x : row) x = gen.normal();
  }
  for (auto& row : vstar) {
    row.resize(true_rank);
    for (auto& x : row) x = gen.normal();
  }

  std::vector<edge_endpoints> edges;
  std::vector<payload> edata;
  for (std::size_t u = 0; u < num_users; ++u) {
    for (std::size_t m = 0; m < num_movies; ++m) {
      double r = 0.0;
      for (std::size_t k = 0; k < true_rank; ++k) r += ustar[u][k] * vstar[m][k];
      edges.push_back({u, num_users + m});
      edata.push_back(encode_rating(r));
    }
  }

  std::vector<payload> vdata;
  for (std::size_t v = 0; v < num_users + num_movies; ++v) {
    std::vector<double> x(d);
    for (auto& xi : x) xi = 0.3 * gen.normal();
    vdata.push_back(encode_latent(x));
  }

  als_problem p;
  p.graph = build_graph(num_users + num_movies, std::move(edges), std::move(vdata),
                        std::move(edata));
  p.num_users = num_users;
  p.num_movies = num_movies;
  return p;
}

/// Training RMSE over all observed ratings.
inline double als_rmse(const data_graph& g, std::size_t d) {
  double sq = 0.0;
  std::size_t count = 0;
  for (edge_index e = 0; e < g.num_edges(); ++e) {
    const auto& ep = g.edge(e);
    std::vector<double> x = decode_latent(g.vertex_data(ep.source), d);
    std::vector<double> y = decode_latent(g.vertex_data(ep.target), d);
    double pred = 0.0;
    for (std::size_t i = 0; i < d; ++i) pred += x[i] * y[i];
    double err = decode_rating(g.edge_data(e)) - pred;
    sq += err * err;
    ++count;
  }
  return count ? std::sqrt(sq / double(count)) : 0.0;
}

/**
 * Serial oracle: exact alternating sweeps (all users, then all movies) on a
 * plain copy of the problem, independent of scopes and engines. Returns the
 * RMSE after each full sweep pair.
 */
inline std::vector<double> als_sweep_oracle(data_graph g, const als_problem& meta,
                                            const als_config& cfg, std::size_t pairs) {
  auto solve_side = [&](bool users) {
    vertex_id lo = users ? 0 : meta.num_users;
    vertex_id hi = users ? meta.num_users : meta.num_users + meta.num_movies;
    for (vertex_id v = lo; v < hi; ++v) {
      std::vector<double> a(cfg.d * cfg.d, 0.0), b(cfg.d, 0.0);
      std::size_t nnbr = 0;
      auto add = [&](vertex_id u, edge_index e) {
        std::vector<double> y = decode_latent(g.vertex_data(u), cfg.d);
        double r = decode_rating(g.edge_data(e));
        for (std::size_t i = 0; i < cfg.d; ++i) {
          b[i] += r * y[i];
          for (std::size_t j = 0; j < cfg.d; ++j) a[i * cfg.d + j] += y[i] * y[j];
        }
        ++nnbr;
      };
      for (edge_index e : g.in_edges(v)) add(g.edge(e).source, e);
      for (edge_index e : g.out_edges(v)) add(g.edge(e).target, e);
      if (nnbr == 0) continue;
      for (std::size_t i = 0; i < cfg.d; ++i) a[i * cfg.d + i] += cfg.lambda;
      std::vector<double> x;
      if (symmetric_solve(std::move(a), std::move(b), cfg.d, x))
        g.vertex_data(v) = encode_latent(x);
    }
  };
  std::vector<double> rmse;
  for (std::size_t p = 0; p < pairs; ++p) {
    solve_side(true);
    solve_side(false);
    rmse.push_back(als_rmse(g, cfg.d));
  }
  return rmse;
}

}  // namespace atomgraph::apps

#endif
