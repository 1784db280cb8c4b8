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

#ifndef ATOMGRAPH_ENGINE_HPP
#define ATOMGRAPH_ENGINE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <atomgraph/consistency.hpp>
#include <atomgraph/sim.hpp>
#include <atomgraph/snapshot.hpp>
#include <atomgraph/trace.hpp>

namespace atomgraph {

// counted message kinds shared by the engines
constexpr msg_kind kind_schedule_fwd = 30;

struct engine_options {
  consistency_model model = consistency_model::edge;
  std::uint32_t workers = 1;
  /// Logical time one update execution occupies a worker.
  logical_time update_cost = 1;
  /// Logical time to save one vertex's snapshot records. The synchronous
  /// path pays ceil(owned/workers) * save_cost stopped; the asynchronous
  /// path pays save_cost per snapshot update, overlapped with execution.
  logical_time save_cost = 1;

  std::uint64_t max_color_steps = 10'000;              // chromatic budget
  std::uint64_t max_updates = ~std::uint64_t(0);       // global update budget
  std::uint64_t pipeline_length = 100;                 // locking engine

  /// Snapshot trigger points: completed color-steps (chromatic) or logical
  /// times (locking). Each entry produces one epoch, numbered from 0.
  std::vector<std::uint64_t> snapshot_at;
  bool snapshot_async = false;  // locking engine only
  /// Straggler injection: stall this machine when a snapshot starts.
  std::int32_t straggler_machine = -1;
  logical_time straggler_delay = 0;
  /// Simulated failure: end the run right after this epoch completes.
  std::uint32_t halt_after_epoch = ~std::uint32_t(0);

  latency_model latency;
  std::uint64_t seed = 0;
};

struct engine_result {
  run_trace trace;
  std::uint64_t updates = 0;
  std::uint64_t color_steps = 0;  // chromatic only
  bool budget_exhausted = false;
  bool halted_at_checkpoint = false;
  logical_time makespan = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t bytes_pushed = 0;
  /// Per sync task: the sequence of finalized values with versions.
  std::map<std::string, std::vector<std::pair<std::uint64_t, payload>>> sync_history;
  snapshot_store snapshots;
};

}  // namespace atomgraph

#endif
