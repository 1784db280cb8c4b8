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

#include <atomgraph/verify.hpp>

#include <algorithm>

#include <atomgraph/serial.hpp>

namespace atomgraph {

namespace {

std::vector<const trace_record*> update_records_in_completion_order(const run_trace& trace) {
  std::vector<const trace_record*> updates;
  for (const auto& r : trace.records)
    if (r.kind == trace_kind::update) updates.push_back(&r);
  std::stable_sort(updates.begin(), updates.end(),
                   [](const trace_record* a, const trace_record* b) {
                     if (a->end != b->end) return a->end < b->end;
                     if (a->machine != b->machine) return a->machine < b->machine;
                     return a->seq < b->seq;
                   });
  return updates;
}

bool within_distance2(const data_graph& g, vertex_id a, vertex_id b) {
  auto na = g.neighbors(a);
  if (std::binary_search(na.begin(), na.end(), b)) return true;
  auto nb = g.neighbors(b);
  // shared neighbor: both lists sorted
  std::size_t i = 0, j = 0;
  while (i < na.size() && j < nb.size()) {
    if (na[i] == nb[j]) return true;
    if (na[i] < nb[j]) ++i;
    else ++j;
  }
  return false;
}

}  // namespace

std::vector<vertex_id> witness_order(const run_trace& trace) {
  std::vector<vertex_id> order;
  for (const auto* r : update_records_in_completion_order(trace)) order.push_back(r->vertex);
  return order;
}

serializability_verdict verify_serializability(const run_trace& trace, data_graph initial,
                                               const data_graph& final_state,
                                               const update_fn& f, consistency_model model) {
  serializability_verdict verdict;
  auto updates = update_records_in_completion_order(trace);

  for (const auto* r : updates) {
    if (r->vertex >= initial.num_vertices())
      throw incomplete_trace_error("update record for vertex outside the graph");
    if (r->end < r->start) throw incomplete_trace_error("update record with negative span");
  }

  // (1) structural exclusion: sweep by start time, keep the active set
  if (model != consistency_model::vertex) {
    std::vector<const trace_record*> by_start(updates);
    std::stable_sort(by_start.begin(), by_start.end(),
                     [](const trace_record* a, const trace_record* b) {
                       return a->start < b->start;
                     });
    std::vector<const trace_record*> active;
    for (const auto* r : by_start) {
      active.erase(std::remove_if(active.begin(), active.end(),
                                  [&](const trace_record* o) { return o->end <= r->start; }),
                   active.end());
      for (const auto* o : active) {
        auto nbrs = initial.neighbors(r->vertex);
        bool conflict =
            model == consistency_model::edge
                ? std::binary_search(nbrs.begin(), nbrs.end(), o->vertex)
                : within_distance2(initial, r->vertex, o->vertex);
        if (o->vertex == r->vertex) conflict = true;  // same vertex must not overlap
        if (conflict) {
          verdict.violation = "updates of vertices " + std::to_string(o->vertex) + " and " +
                              std::to_string(r->vertex) +
                              " overlap in logical time under the " + to_string(model) +
                              " consistency model";
          return verdict;
        }
      }
      active.push_back(r);
    }
  }

  // (2) semantic replay along the completion-time order
  verdict.witness = witness_order(trace);
  serial_options opts;
  opts.model = model;
  opts.policy = removal_policy::explicit_order;
  opts.explicit_order = verdict.witness;
  opts.max_updates = std::max<std::uint64_t>(verdict.witness.size(), 1);
  serial_result replay = run_serial(initial, f, task_set{}, opts);

  // per-step digests must line up with the engine's records
  for (std::size_t i = 0; i < updates.size(); ++i) {
    const trace_record& engine_rec = *updates[i];
    const trace_record& replay_rec = replay.trace.records[i];
    if (engine_rec.read_digest != replay_rec.read_digest ||
        engine_rec.write_digest != replay_rec.write_digest) {
      verdict.violation = "replay diverged at step " + std::to_string(i) + " (vertex " +
                          std::to_string(engine_rec.vertex) + ")";
      return verdict;
    }
  }

  for (vertex_id v = 0; v < initial.num_vertices(); ++v) {
    if (initial.vertex_data(v) != final_state.vertex_data(v)) {
      verdict.violation = "vertex " + std::to_string(v) + " data differs from replay";
      return verdict;
    }
  }
  for (edge_index e = 0; e < initial.num_edges(); ++e) {
    if (initial.edge_data(e) != final_state.edge_data(e)) {
      verdict.violation = "edge " + std::to_string(initial.edge(e).source) + "->" +
                          std::to_string(initial.edge(e).target) + " data differs from replay";
      return verdict;
    }
  }

  verdict.serializable = true;
  return verdict;
}

}  // namespace atomgraph
