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

#ifndef ATOMGRAPH_SERIAL_HPP
#define ATOMGRAPH_SERIAL_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include <atomgraph/graph.hpp>
#include <atomgraph/scope.hpp>
#include <atomgraph/taskset.hpp>
#include <atomgraph/trace.hpp>

namespace atomgraph {

struct serial_options {
  consistency_model model = consistency_model::edge;
  removal_policy policy = removal_policy::fifo;
  /// Scripted execution order; required when policy == explicit_order.
  /// Vertices are executed in this exact sequence.
  std::vector<vertex_id> explicit_order;
  std::uint64_t max_updates = 10'000'000;
  /// If true, hitting the budget stops cleanly instead of throwing.
  bool stop_on_budget = false;
  const global_values* globals = nullptr;
  /// Called after every update with (updates so far, vertex); benches use it
  /// to track convergence without touching the executor.
  std::function<void(std::uint64_t, vertex_id)> on_update;
};

struct serial_result {
  std::uint64_t updates = 0;
  bool budget_exhausted = false;
  run_trace trace;
};

/**
 * The single-loop execution model: remove a vertex from T, execute the
 * update function on its scope, merge the returned schedule set back into
 * T with deduplication. Runs until T is empty or the budget is hit.
 */
inline serial_result run_serial(data_graph& g, const update_fn& f, task_set initial,
                                const serial_options& opts = {}) {
  serial_result result;
  trace_sink sink(0);
  logical_time clock = 0;

  auto execute = [&](vertex_id v) {
    scope s = make_graph_scope(g, v, opts.model, opts.globals);
    std::uint64_t rd = s.read_digest();
    f(s);
    trace_record& rec = sink.append(trace_kind::update, clock, clock + 1, v);
    rec.read_digest = rd;
    rec.write_digest = s.write_digest();
    rec.writes = s.written();
    ++clock;
    ++result.updates;
    if (opts.on_update) opts.on_update(result.updates, v);
    return s.scheduled();
  };

  if (opts.policy == removal_policy::explicit_order) {
    for (vertex_id v : opts.explicit_order) {
      if (result.updates >= opts.max_updates) {
        if (opts.stop_on_budget) {
          result.budget_exhausted = true;
          break;
        }
        throw iteration_budget_error("serial update budget exceeded");
      }
      initial.remove(v);  // keep the set's bookkeeping consistent
      initial.add_all(execute(v));
    }
  } else {
    while (!initial.empty()) {
      if (result.updates >= opts.max_updates) {
        if (opts.stop_on_budget) {
          result.budget_exhausted = true;
          break;
        }
        throw iteration_budget_error("serial update budget exceeded");
      }
      auto task = initial.remove_next(opts.policy);
      if (!task) break;
      initial.add_all(execute(task->vertex));
    }
  }

  result.trace.records = sink.records();
  return result;
}

}  // namespace atomgraph

#endif
