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

#ifndef ATOMGRAPH_CONSISTENCY_HPP
#define ATOMGRAPH_CONSISTENCY_HPP

#include <string>

#include <atomgraph/errors.hpp>
#include <atomgraph/graph.hpp>

namespace atomgraph {

/**
 * Consistency models, ordered by how much of the scope an update function
 * may touch. Full permits strictly more than edge, edge strictly more than
 * vertex.
 *
 *  - vertex: read/write the central vertex data only.
 *  - edge:   read/write the central vertex and adjacent edges, read-only
 *            access to adjacent vertices.
 *  - full:   read/write the entire scope.
 */
enum class consistency_model { vertex, edge, full };

enum class access_mode { read, write };

enum class scope_element { center_vertex, adjacent_vertex, adjacent_edge };

/// The permission table. Pure; scope classification happens elsewhere.
inline bool check_access(consistency_model model, scope_element target,
                         access_mode mode) {
  switch (model) {
    case consistency_model::vertex:
      return target == scope_element::center_vertex;
    case consistency_model::edge:
      if (target == scope_element::adjacent_vertex) return mode == access_mode::read;
      return true;
    case consistency_model::full:
      return true;
  }
  return false;
}

/// Classify a vertex relative to a scope center and consult the table.
/// Throws target_not_in_scope_error when v is neither the center nor
/// adjacent to it.
inline bool check_vertex_access(const data_graph& g, consistency_model model,
                                vertex_id center, vertex_id v, access_mode mode) {
  if (v == center) return check_access(model, scope_element::center_vertex, mode);
  auto nbrs = g.neighbors(center);
  if (!std::binary_search(nbrs.begin(), nbrs.end(), v))
    throw target_not_in_scope_error("vertex " + std::to_string(v) +
                                    " not in scope of " + std::to_string(center));
  return check_access(model, scope_element::adjacent_vertex, mode);
}

/// Same for a directed edge (s, t); the edge must be incident to center.
inline bool check_edge_access(const data_graph& g, consistency_model model,
                              vertex_id center, vertex_id s, vertex_id t,
                              access_mode mode) {
  edge_index e;
  if ((s != center && t != center) || !g.find_edge(s, t, e))
    throw target_not_in_scope_error("edge " + std::to_string(s) + "->" +
                                    std::to_string(t) + " not in scope of " +
                                    std::to_string(center));
  return check_access(model, scope_element::adjacent_edge, mode);
}

inline std::string to_string(consistency_model m) {
  switch (m) {
    case consistency_model::vertex: return "vertex";
    case consistency_model::edge: return "edge";
    case consistency_model::full: return "full";
  }
  return "?";
}

inline consistency_model consistency_from_string(const std::string& s) {
  if (s == "vertex") return consistency_model::vertex;
  if (s == "edge") return consistency_model::edge;
  if (s == "full") return consistency_model::full;
  throw std::invalid_argument("unknown consistency model: " + s);
}

}  // namespace atomgraph

#endif
