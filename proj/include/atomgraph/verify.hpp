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

#ifndef ATOMGRAPH_VERIFY_HPP
#define ATOMGRAPH_VERIFY_HPP

#include <string>
#include <vector>

#include <atomgraph/graph.hpp>
#include <atomgraph/scope.hpp>
#include <atomgraph/trace.hpp>

namespace atomgraph {

struct serializability_verdict {
  bool serializable = false;
  /// The candidate serial order (update completion time, ties by machine
  /// then per-machine sequence) that reproduced the final data.
  std::vector<vertex_id> witness;
  /// Empty when serializable; otherwise the first violation found.
  std::string violation;
};

/**
 * Checks that a recorded parallel execution is serializable:
 *  (1) structurally, no two updates whose scopes may conflict under the
 *      model overlap in logical time (adjacent under edge consistency,
 *      distance <= 2 under full);
 *  (2) semantically, replaying the completion-time order through the
 *      serial executor from `initial` reproduces `final_state` byte for
 *      byte (f must be deterministic).
 *
 * Throws incomplete_trace_error if the trace cannot be replayed.
 */
serializability_verdict verify_serializability(const run_trace& trace, data_graph initial,
                                               const data_graph& final_state,
                                               const update_fn& f, consistency_model model);

/// The completion-time candidate order by itself.
std::vector<vertex_id> witness_order(const run_trace& trace);

}  // namespace atomgraph

#endif
