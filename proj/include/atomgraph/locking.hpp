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

#ifndef ATOMGRAPH_LOCKING_HPP
#define ATOMGRAPH_LOCKING_HPP

#include <deque>
#include <memory>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include <atomgraph/engine.hpp>
#include <atomgraph/ghost.hpp>
#include <atomgraph/globals.hpp>
#include <atomgraph/partition.hpp>
#include <atomgraph/sync.hpp>
#include <atomgraph/taskset.hpp>

namespace atomgraph {

enum class lock_mode : std::uint8_t { read = 0, write = 1 };

/// The canonical lock order: machine id, then vertex id. Plans acquire
/// locks in exactly this order, which precludes deadlock.
struct lock_key {
  machine_id owner;
  vertex_id vertex;
  auto operator<=>(const lock_key&) const = default;
};

/**
 * The per-machine lock requests of one scope acquisition, grouped by
 * machine in canonical order. Lock modes derive from the consistency
 * model: vertex = write center; edge = write center, read neighbors;
 * full = write center and neighbors.
 */
struct scope_lock_plan {
  vertex_id center = 0;
  consistency_model model = consistency_model::edge;
  machine_id origin = 0;

  struct hop {
    machine_id machine;
    std::vector<std::pair<vertex_id, lock_mode>> locks;  // ascending vertex
    /// Elements owned by this hop that the origin caches, with the
    /// origin's cached versions (for the skip-unchanged sync rule).
    std::vector<std::pair<element_key, std::uint64_t>> sync;
  };
  std::vector<hop> hops;  // ascending machine id
};

/// Build the plan for an owned center vertex. Throws not_owned_error when
/// the vertex is not owned by the partition.
scope_lock_plan plan_scope_locks(const local_partition& part, vertex_id v,
                                 consistency_model model);

/**
 * The fully asynchronous engine: a bounded pipeline of in-flight scope
 * acquisitions per machine, non-blocking readers-writer locks chained
 * across machines in canonical order, prioritized scheduling with an
 * approximate bucket queue, termination by counting token, and both
 * snapshot modes.
 */
class locking_engine {
public:
  locking_engine(std::vector<local_partition>& parts, update_fn f, engine_options opts);

  void add_sync(const std::string& name, sync_task task);
  void seed(const std::vector<scheduled_task>& initial);
  void seed_all();

  engine_result run();

  cluster& transport() { return cluster_; }

  // exposed counters for safety assertions in tests
  std::uint64_t rw_violations() const { return rw_violations_; }
  std::uint64_t max_in_flight() const { return max_in_flight_; }

private:
  struct waiter {
    std::uint64_t plan_uid;
    lock_mode mode;
    std::function<void()> resume;
  };
  struct rwlock {
    std::int64_t writer = -1;  // plan uid or -1
    std::uint32_t readers = 0;
    std::deque<waiter> queue;
  };

  enum class task_kind : std::uint8_t { app = 0, snapshot = 1 };

  struct pending_info {
    enum class state : std::uint8_t { queued, in_pipeline, executing } st;
    double priority = 0;
    bool dirty = false;
    double dirty_priority = 0;
  };

  /// One in-flight acquisition, shared across continuations.
  struct flight {
    scope_lock_plan plan;
    std::uint64_t uid = 0;
    task_kind kind = task_kind::app;
    std::uint32_t epoch = 0;  // snapshot tasks
    logical_time issued_at = 0;
    std::vector<ghost_sync::decoded_update> synced;  // collected refreshes
  };

  struct machine_state {
    std::unordered_map<vertex_id, rwlock> locks;
    // scheduler: urgent snapshot deque + 32 exponentially spaced buckets
    std::deque<vertex_id> urgent;
    std::vector<std::deque<std::pair<vertex_id, std::uint32_t>>> buckets;
    std::unordered_map<vertex_id, pending_info> pending;
    std::unordered_set<vertex_id> snapshot_pending;
    std::uint64_t scheduled_tasks = 0;  // queued entries (live)
    // pipeline
    std::uint32_t in_flight = 0;
    std::deque<std::shared_ptr<flight>> ready;
    std::uint32_t busy_workers = 0;
    std::uint64_t executed = 0;
    std::uint64_t next_plan_seq = 0;
    std::unordered_map<std::uint64_t, std::shared_ptr<flight>> flights;
    // snapshot state
    bool suspended = false;
    bool suspend_reported = false;
    std::uint32_t suspend_epoch = 0;
    std::uint32_t async_epoch = 0;            // current async epoch target
    std::uint64_t async_remaining = 0;        // owned vertices not yet snapshotted
    snapshot_journal async_journal;
    bool done = false;
    bool budget_hit = false;
  };

  struct master_state {
    std::uint32_t next_epoch = 0;
    std::uint32_t suspend_pending = 0;
    std::uint32_t save_pending = 0;
    std::uint32_t async_pending = 0;
    bool stopped = false;
    bool snapshot_active = false;
    std::map<std::string, std::uint64_t> global_versions;
    // final sync pass at termination
    std::vector<std::string> final_queue;
    std::uint32_t partials_pending = 0;
    std::vector<payload> partials;
    bool final_pass_done = false;
  };

  // scheduling
  static std::uint32_t bucket_of(double priority);
  void schedule_local(machine_id m, vertex_id v, double priority);
  void schedule_snapshot(machine_id m, vertex_id v, std::uint32_t epoch);
  std::optional<std::pair<vertex_id, task_kind>> next_task(machine_id m);
  void refill(machine_id m);
  bool idle(machine_id m) const;
  void maybe_notify_idle(machine_id m);

  // locks
  bool try_acquire(machine_id m, vertex_id v, lock_mode mode, std::uint64_t uid);
  void enqueue_waiter(machine_id m, vertex_id v, lock_mode mode, std::uint64_t uid,
                      std::function<void()> resume);
  void release_lock(machine_id m, vertex_id v, lock_mode mode, std::uint64_t uid);

  // acquisition chain
  void issue_plan(machine_id m, vertex_id v, task_kind kind);
  void process_hop(machine_id m, const std::shared_ptr<flight>& fl, std::size_t hop_index,
                   std::size_t lock_index);
  void hop_done(machine_id m, const std::shared_ptr<flight>& fl, std::size_t hop_index);
  void plan_ready(machine_id m, const std::shared_ptr<flight>& fl);
  payload encode_flight(const flight& fl, std::size_t hop_index) const;
  std::shared_ptr<flight> decode_flight(payload msg, std::size_t& hop_index) const;

  // execution and release
  void pump(machine_id m);
  void execute(machine_id m, const std::shared_ptr<flight>& fl);
  void run_snapshot_update(machine_id m, const std::shared_ptr<flight>& fl, scope& s,
                           std::vector<element_key>& changed,
                           std::vector<scheduled_task>& sched);
  void finish_execution(machine_id m, const std::shared_ptr<flight>& fl,
                        std::vector<element_key> changed,
                        std::vector<scheduled_task> sched);
  void handle_release(machine_id m, machine_id src, payload msg);

  // snapshots
  void master_snapshot_timer(std::uint64_t at_index);
  void begin_sync_snapshot(std::uint32_t epoch);
  void begin_async_snapshot(std::uint32_t epoch);
  void machine_save_sync(machine_id m, std::uint32_t epoch);
  void check_suspend_drained(machine_id m);
  void async_vertex_done(machine_id m);
  void epoch_finished(std::uint32_t epoch, bool async);

  // sync passes and termination
  void master_final_sync_then_stop();
  void master_handle_partial(machine_id src, payload msg);
  void master_stop();

  void send_to_master(machine_id m, msg_kind kind, payload msg);
  void to_all(msg_kind kind, const payload& msg);
  void handle_control(machine_id m, msg_kind kind, const payload& msg);

  std::vector<local_partition>& parts_;
  update_fn update_;
  engine_options opts_;
  cluster cluster_;
  ghost_sync ghosts_;
  sync_registry registry_;
  std::vector<global_values> globals_;
  std::vector<machine_state> machines_;
  std::vector<trace_sink> sinks_;
  master_state master_;
  engine_result result_;
  std::vector<std::map<element_key, std::uint64_t>> saved_versions_;
  std::unique_ptr<barrier_service> barrier_;
  int term_session_ = -1;
  std::vector<std::uint64_t> budgets_;
  std::uint64_t rw_violations_ = 0;
  std::uint64_t max_in_flight_ = 0;
};

/// One-call wrapper; throws iteration_budget_error if the update budget
/// cut the run short.
engine_result run_locking(std::vector<local_partition>& parts, const update_fn& f,
                          const std::vector<scheduled_task>& initial,
                          const engine_options& opts, sync_registry* syncs = nullptr);

}  // namespace atomgraph

#endif
