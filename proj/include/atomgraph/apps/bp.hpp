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

#ifndef ATOMGRAPH_APPS_BP_HPP
#define ATOMGRAPH_APPS_BP_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include <atomgraph/graph.hpp>
#include <atomgraph/scope.hpp>
#include <atomgraph/util.hpp>

namespace atomgraph::apps {

// Loopy belief propagation on a binary (K = 2) pairwise MRF.
//
// vertex payload: node potential [K] then belief [K].
// edge payload (u -> v as stored): pairwise potential [K*K] with
// pot[a*K + b] = psi(x_u = a, x_v = b), then message u->v [K], then
// message v->u [K]. Messages and beliefs stay normalized to sum 1.

constexpr std::size_t bp_states = 2;

struct bp_vertex {
  double potential[bp_states];
  double belief[bp_states];

  static bp_vertex decode(const payload& p) {
    payload_reader r(p);
    bp_vertex v;
    for (auto& x : v.potential) x = r.f64();
    for (auto& x : v.belief) x = r.f64();
    return v;
  }
  payload encode() const {
    payload_writer w;
    for (double x : potential) w.f64(x);
    for (double x : belief) w.f64(x);
    return w.take();
  }
};

struct bp_edge {
  double potential[bp_states * bp_states];
  double msg_fwd[bp_states];  // source -> target
  double msg_rev[bp_states];  // target -> source

  static bp_edge decode(const payload& p) {
    payload_reader r(p);
    bp_edge e;
    for (auto& x : e.potential) x = r.f64();
    for (auto& x : e.msg_fwd) x = r.f64();
    for (auto& x : e.msg_rev) x = r.f64();
    return e;
  }
  payload encode() const {
    payload_writer w;
    for (double x : potential) w.f64(x);
    for (double x : msg_fwd) w.f64(x);
    for (double x : msg_rev) w.f64(x);
    return w.take();
  }
};

inline void normalize(double* x, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += x[i];
  for (std::size_t i = 0; i < k; ++i) x[i] /= s;
}

struct bp_config {
  double threshold = 1e-5;  // residual below this is not rescheduled
};

/**
 * Vertex-centric sum-product: recompute every outgoing message of the
 * center from the incoming messages and the node potential, refresh the
 * belief, and schedule each neighbor with the L1 residual of its new
 * message as priority. Edge consistency suffices: the update writes the
 * center vertex and adjacent edges only.
 */
inline update_fn make_bp_update(bp_config cfg) {
  return [cfg](scope& s) {
    constexpr std::size_t k = bp_states;
    bp_vertex self = bp_vertex::decode(s.vertex_data());

    // gather: product of node potential and all incoming messages,
    // in canonical (in-edges then out-edges) order
    struct incident {
      vertex_id other;
      bool center_is_target;
      const scope::edge_slot* slot;
      bp_edge edge;
    };
    std::vector<incident> inc;
    for (const auto& e : s.in_edges())
      inc.push_back({e.source, true, &e, bp_edge::decode(*e.data)});
    for (const auto& e : s.out_edges())
      inc.push_back({e.target, false, &e, bp_edge::decode(*e.data)});

    double prod[k];
    for (std::size_t i = 0; i < k; ++i) prod[i] = self.potential[i];
    for (const auto& n : inc) {
      const double* m = n.center_is_target ? n.edge.msg_fwd : n.edge.msg_rev;
      for (std::size_t i = 0; i < k; ++i) prod[i] *= m[i];
    }

    for (std::size_t i = 0; i < k; ++i) self.belief[i] = prod[i];
    normalize(self.belief, k);
    s.vertex_data_mut() = self.encode();

    // scatter: cavity product / incoming, convolved with the pairwise table
    for (auto& n : inc) {
      const double* in_msg = n.center_is_target ? n.edge.msg_fwd : n.edge.msg_rev;
      double* out_msg = n.center_is_target ? n.edge.msg_rev : n.edge.msg_fwd;
      double cavity[k];
      for (std::size_t i = 0; i < k; ++i) cavity[i] = prod[i] / in_msg[i];

      double fresh[k];
      if (n.center_is_target) {
        // center is x_t; message to source indexed by x_s = a
        for (std::size_t a = 0; a < k; ++a) {
          double v = 0.0;
          for (std::size_t b = 0; b < k; ++b) v += cavity[b] * n.edge.potential[a * k + b];
          fresh[a] = v;
        }
      } else {
        // center is x_s; message to target indexed by x_t = b
        for (std::size_t b = 0; b < k; ++b) {
          double v = 0.0;
          for (std::size_t a = 0; a < k; ++a) v += cavity[a] * n.edge.potential[a * k + b];
          fresh[b] = v;
        }
      }
      normalize(fresh, k);

      double residual = 0.0;
      for (std::size_t i = 0; i < k; ++i) residual += std::fabs(fresh[i] - out_msg[i]);
      for (std::size_t i = 0; i < k; ++i) out_msg[i] = fresh[i];

      vertex_id src = n.center_is_target ? n.other : s.center();
      vertex_id dst = n.center_is_target ? s.center() : n.other;
      s.edge_data_mut(src, dst) = n.edge.encode();
      if (residual > cfg.threshold) s.schedule(n.other, residual);
    }
  };
}

/// Build an MRF over an arbitrary structure with seeded random potentials.
/// Messages start uniform; beliefs start at the normalized node potential.
inline data_graph make_mrf(std::size_t n, std::vector<edge_endpoints> edges,
                           std::uint64_t seed, double coupling = 0.5) {
  rng gen(seed);
  std::vector<payload> vdata;
  vdata.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    bp_vertex bv;
    for (auto& x : bv.potential) x = std::exp(gen.uniform(-1.0, 1.0));
    for (std::size_t i = 0; i < bp_states; ++i) bv.belief[i] = bv.potential[i];
    normalize(bv.belief, bp_states);
    vdata.push_back(bv.encode());
  }
  std::vector<payload> edata;
  edata.reserve(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    bp_edge be;
    double agree = std::exp(gen.uniform(0.0, coupling));
    for (std::size_t a = 0; a < bp_states; ++a)
      for (std::size_t b = 0; b < bp_states; ++b)
        be.potential[a * bp_states + b] = (a == b) ? agree : 1.0;
    for (auto& x : be.msg_fwd) x = 1.0 / double(bp_states);
    for (auto& x : be.msg_rev) x = 1.0 / double(bp_states);
    edata.push_back(be.encode());
  }
  return build_graph(n, std::move(edges), std::move(vdata), std::move(edata));
}

/// Exhaustive-enumeration marginals: sums the unnormalized joint over all
/// 2^n assignments. Only viable for tiny graphs; that is the point.
inline std::vector<std::array<double, bp_states>> enumerate_marginals(const data_graph& g) {
  const std::size_t n = g.num_vertices();
  std::vector<std::array<double, bp_states>> marg(n, {0.0, 0.0});
  std::vector<bp_vertex> verts;
  for (vertex_id v = 0; v < n; ++v) verts.push_back(bp_vertex::decode(g.vertex_data(v)));
  std::vector<bp_edge> edges;
  for (edge_index e = 0; e < g.num_edges(); ++e) edges.push_back(bp_edge::decode(g.edge_data(e)));

  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
    double w = 1.0;
    for (vertex_id v = 0; v < n; ++v) w *= verts[v].potential[(mask >> v) & 1];
    for (edge_index e = 0; e < g.num_edges(); ++e) {
      std::size_t a = (mask >> g.edge(e).source) & 1;
      std::size_t b = (mask >> g.edge(e).target) & 1;
      w *= edges[e].potential[a * bp_states + b];
    }
    for (vertex_id v = 0; v < n; ++v) marg[v][(mask >> v) & 1] += w;
  }
  for (auto& m : marg) {
    double s = m[0] + m[1];
    m[0] /= s;
    m[1] /= s;
  }
  return marg;
}

inline std::vector<std::array<double, bp_states>> extract_beliefs(const data_graph& g) {
  std::vector<std::array<double, bp_states>> out;
  for (vertex_id v = 0; v < g.num_vertices(); ++v) {
    bp_vertex bv = bp_vertex::decode(g.vertex_data(v));
    out.push_back({bv.belief[0], bv.belief[1]});
  }
  return out;
}

}  // namespace atomgraph::apps

#endif
