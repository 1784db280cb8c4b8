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

#ifndef ATOMGRAPH_CHROMATIC_HPP
#define ATOMGRAPH_CHROMATIC_HPP

#include <deque>
#include <memory>
#include <unordered_map>
#include <unordered_set>

#include <atomgraph/coloring.hpp>
#include <atomgraph/engine.hpp>
#include <atomgraph/ghost.hpp>
#include <atomgraph/globals.hpp>
#include <atomgraph/partition.hpp>
#include <atomgraph/sync.hpp>
#include <atomgraph/taskset.hpp>

namespace atomgraph {

/**
 * The chromatic engine: executes all scheduled vertices of one color as a
 * synchronous color-step, pushes ghost changes as they are made, and puts
 * a full communication barrier between steps. The coloring realizes the
 * consistency model (distance-1 for edge, distance-2 for full, single
 * color for vertex). Sync tasks run between color-steps; synchronous
 * snapshots run at configured step boundaries.
 */
class chromatic_engine {
public:
  chromatic_engine(std::vector<local_partition>& parts, coloring col, update_fn f,
                   engine_options opts);

  void add_sync(const std::string& name, sync_task task);

  /// Seed the initial task set (routed to each vertex's owner).
  void seed(const std::vector<scheduled_task>& initial);
  void seed_all();

  /// Run color-steps until the global task set empties or a budget or halt
  /// triggers. Throws invalid_coloring_error up front if the coloring does
  /// not realize the model.
  engine_result run();

  /// After run(): re-sweep support used by BSP-style workloads: number of
  /// full color cycles to re-seed every vertex for (0 = plain dynamic run).
  void set_resweep_cycles(std::uint64_t cycles) { resweep_cycles_ = cycles; }

  cluster& transport() { return cluster_; }

private:
  struct machine_state {
    std::vector<std::deque<vertex_id>> buckets;  // per color
    std::unordered_set<vertex_id> pending;
    std::vector<vertex_id> exec;  // current step, ascending
    std::size_t exec_next = 0;
    std::uint32_t busy_workers = 0;
    std::uint64_t executed = 0;
    logical_time barrier_arrive_time = 0;
    bool in_barrier = false;
    bool done = false;
  };

  // master bookkeeping
  struct master_state {
    std::uint64_t step_index = 0;   // completed color-steps
    color_id cursor = 0;            // next color to consider
    std::uint32_t reports_pending = 0;
    std::vector<std::uint64_t> color_totals;    // from the completed report round
    std::vector<std::uint64_t> report_totals;   // accumulating round
    std::uint64_t report_executed = 0;
    std::vector<std::uint64_t> all_color_counts;  // global census, for reseeds
    std::uint64_t total_executed = 0;
    bool sync_ran_this_boundary = false;
    std::uint32_t next_epoch = 0;
    std::uint32_t snap_done_pending = 0;
    std::vector<std::string> sync_queue;  // names awaiting partials
    std::uint32_t partials_pending = 0;
    std::vector<payload> partials;  // per machine
    std::map<std::string, std::uint64_t> global_versions;
    std::vector<std::pair<std::string, global_values::entry>> pending_globals;
    bool stopping = false;
  };

  void report_counts(machine_id m);
  void master_handle_report(machine_id src, payload msg);
  void master_decide();
  void master_begin_step(color_id c, bool reseed);
  void master_stop();
  void master_start_sync();
  void master_handle_partial(machine_id src, payload msg);
  void master_begin_snapshot();
  void master_handle_snap_done();

  void handle_begin(machine_id m, const payload& msg);
  void handle_sync_req(machine_id m, const payload& msg);
  void handle_snapshot(machine_id m, const payload& msg);
  void start_step(machine_id m, color_id c);
  void pump(machine_id m);
  void finish_step(machine_id m);
  void add_task(machine_id m, vertex_id v);
  void send_to_master(machine_id m, msg_kind kind, payload msg);
  void to_all(msg_kind kind, const payload& msg);

  std::vector<local_partition>& parts_;
  coloring coloring_;
  update_fn update_;
  engine_options opts_;
  cluster cluster_;
  ghost_sync ghosts_;
  sync_registry registry_;
  std::vector<global_values> globals_;
  std::vector<machine_state> machines_;
  std::vector<trace_sink> sinks_;
  std::unordered_map<vertex_id, machine_id> owner_;
  master_state master_;
  engine_result result_;
  std::vector<std::map<element_key, std::uint64_t>> saved_versions_;
  std::unique_ptr<barrier_service> barrier_;
  std::uint64_t resweep_cycles_ = 0;
};

/// Convenience wrapper matching the one-call contract: partitions in,
/// engine result out; throws iteration_budget_error if the step budget was
/// exhausted before the task set drained.
engine_result run_chromatic(std::vector<local_partition>& parts, const coloring& col,
                            const update_fn& f, const std::vector<scheduled_task>& initial,
                            const engine_options& opts, sync_registry* syncs = nullptr);

}  // namespace atomgraph

#endif
