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

#ifndef ATOMGRAPH_COLORING_HPP
#define ATOMGRAPH_COLORING_HPP

#include <cstdint>
#include <vector>

#include <atomgraph/consistency.hpp>
#include <atomgraph/graph.hpp>

namespace atomgraph {

using color_id = std::uint32_t;

struct coloring {
  std::vector<color_id> color;  // per vertex
  color_id count = 0;
};

enum class color_order { degree_desc, given };

/// Greedy distance-1 coloring. Default order: descending degree, ties by
/// vertex id; deterministic for a given order.
coloring greedy_color(const data_graph& g, color_order order = color_order::degree_desc,
                      const std::vector<vertex_id>& given_order = {});

/// Two colors from a claimed bipartition; throws not_bipartite_error if
/// any edge stays within one side.
coloring bipartite_color(const data_graph& g, const std::vector<std::uint8_t>& side);

/// Greedy coloring of the square graph: no two vertices within distance 2
/// share a color. Satisfies the full consistency model.
coloring second_order_color(const data_graph& g);

/// All vertices one color: the vertex consistency model.
coloring vertex_model_color(const data_graph& g);

/// Validity per target model. Edge: distance-1 proper; full: distance-2
/// proper; vertex: any coloring qualifies.
bool coloring_valid_for(const data_graph& g, const coloring& c, consistency_model model);

/// Pick a coloring that realizes the model.
coloring color_for_model(const data_graph& g, consistency_model model);

}  // namespace atomgraph

#endif
