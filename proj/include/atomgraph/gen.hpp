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

#ifndef ATOMGRAPH_GEN_HPP
#define ATOMGRAPH_GEN_HPP

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include <atomgraph/graph.hpp>
#include <atomgraph/util.hpp>

namespace atomgraph::gen {

/// Preferential attachment: a directed seed cycle, then each new vertex
/// links to `attach` degree-biased targets. Every vertex has out-degree
/// at least one.
inline std::vector<edge_endpoints> powerlaw(std::size_t n, std::size_t attach,
                                            std::uint64_t seed) {
  rng gen(seed);
  std::size_t m0 = std::max<std::size_t>(attach, 2);
  std::vector<edge_endpoints> edges;
  std::vector<vertex_id> hubs;  // one entry per incident edge end: degree-biased urn
  for (std::size_t v = 0; v < std::min(m0, n); ++v) {
    vertex_id w = vertex_id((v + 1) % std::min(m0, n));
    if (w == v) break;
    edges.push_back({v, w});
    hubs.push_back(v);
    hubs.push_back(w);
  }
  for (std::size_t v = m0; v < n; ++v) {
    std::set<vertex_id> targets;
    while (targets.size() < attach) {
      vertex_id t = hubs[gen.below(hubs.size())];
      if (t != v) targets.insert(t);
    }
    for (vertex_id t : targets) {
      edges.push_back({v, t});
      hubs.push_back(v);
      hubs.push_back(t);
    }
  }
  return edges;
}

/// nx * ny * nz lattice; one directed edge per undirected pair, oriented
/// from the lower to the higher vertex id. connectivity 6 links axis
/// neighbors; 26 links the full cube around each cell.
inline std::vector<edge_endpoints> grid3d(std::size_t nx, std::size_t ny, std::size_t nz,
                                          int connectivity = 6) {
  auto id = [&](std::size_t x, std::size_t y, std::size_t z) {
    return vertex_id(x + nx * (y + ny * z));
  };
  std::vector<edge_endpoints> edges;
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t x = 0; x < nx; ++x) {
        for (int dz = -1; dz <= 1; ++dz) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (dx == 0 && dy == 0 && dz == 0) continue;
              if (connectivity == 6 && (dx != 0) + (dy != 0) + (dz != 0) != 1) continue;
              long x2 = long(x) + dx, y2 = long(y) + dy, z2 = long(z) + dz;
              if (x2 < 0 || y2 < 0 || z2 < 0 || x2 >= long(nx) || y2 >= long(ny) ||
                  z2 >= long(nz))
                continue;
              vertex_id a = id(x, y, z);
              vertex_id b = id(std::size_t(x2), std::size_t(y2), std::size_t(z2));
              if (a < b) edges.push_back({a, b});
            }
          }
        }
      }
    }
  }
  return edges;
}

/// 2D grid, same orientation convention.
inline std::vector<edge_endpoints> grid2d(std::size_t nx, std::size_t ny) {
  std::vector<edge_endpoints> edges;
  auto id = [&](std::size_t x, std::size_t y) { return vertex_id(x + nx * y); };
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      if (x + 1 < nx) edges.push_back({id(x, y), id(x + 1, y)});
      if (y + 1 < ny) edges.push_back({id(x, y), id(x, y + 1)});
    }
  }
  return edges;
}

/// Uniform random tree on n vertices (each vertex attaches to a uniform
/// earlier vertex), edges oriented low -> high.
inline std::vector<edge_endpoints> random_tree(std::size_t n, std::uint64_t seed) {
  rng gen(seed);
  std::vector<edge_endpoints> edges;
  for (vertex_id v = 1; v < n; ++v) edges.push_back({gen.below(v), v});
  return edges;
}

/// Random simple directed graph with n vertices and roughly avg_out
/// out-edges per vertex; a directed cycle backbone keeps every vertex with
/// out-degree >= 1 and the graph strongly connected.
inline std::vector<edge_endpoints> random_directed(std::size_t n, double avg_out,
                                                   std::uint64_t seed,
                                                   bool cycle_backbone = true) {
  rng gen(seed);
  std::set<std::pair<vertex_id, vertex_id>> used;
  std::vector<edge_endpoints> edges;
  auto add = [&](vertex_id s, vertex_id t) {
    if (s == t) return;
    if (!used.insert({s, t}).second) return;
    edges.push_back({s, t});
  };
  if (cycle_backbone && n > 1)
    for (vertex_id v = 0; v < n; ++v) add(v, (v + 1) % n);
  std::size_t extra = std::size_t(double(n) * avg_out);
  for (std::size_t i = 0; i < extra; ++i) add(gen.below(n), gen.below(n));
  return edges;
}

/// Bipartite edges left -> right with roughly avg_degree per left vertex;
/// every right vertex gets at least one edge.
inline std::vector<edge_endpoints> bipartite(std::size_t left, std::size_t right,
                                             std::size_t avg_degree, std::uint64_t seed) {
  rng gen(seed);
  std::set<std::pair<vertex_id, vertex_id>> used;
  std::vector<edge_endpoints> edges;
  auto add = [&](std::size_t l, std::size_t r) {
    if (!used.insert({l, r}).second) return;
    edges.push_back({vertex_id(l), vertex_id(left + r)});
  };
  for (std::size_t l = 0; l < left; ++l) {
    std::size_t deg = 1 + gen.below(std::max<std::size_t>(1, 2 * avg_degree - 1));
    for (std::size_t i = 0; i < deg; ++i) add(l, gen.below(right));
  }
  for (std::size_t r = 0; r < right; ++r) {
    bool any = false;
    for (const auto& e : edges)
      if (e.target == left + r) {
        any = true;
        break;
      }
    if (!any) add(gen.below(left), r);
  }
  return edges;
}

}  // namespace atomgraph::gen

#endif
