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

#include <atomgraph/bench.hpp>

#include <atomgraph/locking.hpp>

namespace atomgraph {

std::vector<local_partition> bench_partitions(const bench_workload& workload) {
  over_partition_result parts =
      over_partition(*workload.graph, workload.atoms, workload.method);
  partition_assignment assign;
  if (!workload.fixed_assignment.empty()) {
    assign.machines = workload.machines;
    assign.atom_machine = workload.fixed_assignment;
  } else {
    assign = place_atoms(parts.index, workload.machines);
  }
  std::vector<local_partition> out;
  for (machine_id p = 0; p < workload.machines; ++p) {
    std::vector<atom_journal> mine;
    for (atom_id a = 0; a < workload.atoms; ++a)
      if (assign.of(a) == p) mine.push_back(parts.journals[a]);
    out.push_back(build_local_partition(parts.index, assign, p, mine));
  }
  return out;
}

namespace {

run_report run_once(const bench_workload& workload, engine_options opts) {
  std::vector<local_partition> parts = bench_partitions(workload);
  locking_engine eng(parts, workload.update, opts);
  eng.seed(workload.initial);
  engine_result res = eng.run();
  return run_report::from(res);
}

}  // namespace

std::vector<pipeline_bench_point> bench_pipeline(const bench_workload& workload,
                                                 const std::vector<std::uint64_t>& lengths) {
  std::vector<pipeline_bench_point> points;
  for (std::uint64_t L : lengths) {
    engine_options opts = workload.options;
    opts.pipeline_length = L;
    points.push_back({L, run_once(workload, opts)});
  }
  return points;
}

snapshot_bench_result bench_snapshot(const bench_workload& workload, bool async,
                                     logical_time snapshot_at, machine_id straggler,
                                     logical_time straggler_delay) {
  snapshot_bench_result result;

  engine_options plain = workload.options;
  plain.snapshot_at.clear();
  result.no_snapshot = run_once(workload, plain);

  engine_options snap = workload.options;
  snap.snapshot_at = {snapshot_at};
  snap.snapshot_async = async;
  snap.straggler_machine = -1;
  result.no_straggler = run_once(workload, snap);

  snap.straggler_machine = std::int32_t(straggler);
  snap.straggler_delay = straggler_delay;
  result.with_straggler = run_once(workload, snap);
  return result;
}

}  // namespace atomgraph
