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

#ifndef ATOMGRAPH_BENCH_HPP
#define ATOMGRAPH_BENCH_HPP

#include <functional>
#include <vector>

#include <atomgraph/engine.hpp>
#include <atomgraph/graph.hpp>
#include <atomgraph/partition.hpp>
#include <atomgraph/report.hpp>
#include <atomgraph/scope.hpp>

namespace atomgraph {

struct bench_workload {
  const data_graph* graph = nullptr;
  update_fn update;
  std::vector<scheduled_task> initial;
  std::uint32_t atoms = 16;
  machine_id machines = 4;
  partition_method method = partition_method::hash;
  /// Overrides place_atoms when non-empty (deliberately skewed layouts).
  std::vector<machine_id> fixed_assignment;
  engine_options options;
};

struct pipeline_bench_point {
  std::uint64_t pipeline_length = 0;
  run_report report;
};

/// Run the locking engine once per pipeline length with otherwise identical
/// seeds and configuration; the update budget keeps the executed work equal
/// across runs, so makespans compare latency hiding and nothing else.
std::vector<pipeline_bench_point> bench_pipeline(const bench_workload& workload,
                                                 const std::vector<std::uint64_t>& lengths);

struct snapshot_bench_result {
  run_report no_snapshot;     // plain run
  run_report no_straggler;    // snapshot, fault-free
  run_report with_straggler;  // snapshot, one machine stalled at its start
  /// makespan(with_straggler) - makespan(no_straggler): what the fault cost.
  std::int64_t penalty() const {
    return std::int64_t(with_straggler.makespan) - std::int64_t(no_straggler.makespan);
  }
  /// makespan(no_straggler) - makespan(no_snapshot): what the snapshot cost.
  std::int64_t overhead() const {
    return std::int64_t(no_straggler.makespan) - std::int64_t(no_snapshot.makespan);
  }
};

/// Three paired runs of the same workload: no snapshot, snapshot without a
/// fault, and snapshot with `straggler_delay` injected on `straggler` when
/// the snapshot starts. snapshot_at is a logical time; async selects the
/// Chandy-Lamport path.
snapshot_bench_result bench_snapshot(const bench_workload& workload, bool async,
                                     logical_time snapshot_at, machine_id straggler,
                                     logical_time straggler_delay);

/// Shared partition loader honoring fixed_assignment.
std::vector<local_partition> bench_partitions(const bench_workload& workload);

}  // namespace atomgraph

#endif
