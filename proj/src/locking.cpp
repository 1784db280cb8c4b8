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

#include <atomgraph/locking.hpp>

#include <algorithm>
#include <cmath>

namespace atomgraph {

namespace {

// counted
constexpr msg_kind kind_chain = 40;
constexpr msg_kind kind_chain_done = 41;
constexpr msg_kind kind_release = 42;
// control
constexpr msg_kind kind_stop = 210;
constexpr msg_kind kind_suspend = 211;
constexpr msg_kind kind_snap_save = 214;
constexpr msg_kind kind_snap_saved = 215;
constexpr msg_kind kind_resume = 216;
constexpr msg_kind kind_async_begin = 217;
constexpr msg_kind kind_async_done = 218;
constexpr msg_kind kind_sync_req = 219;
constexpr msg_kind kind_sync_partial = 220;
constexpr msg_kind kind_globals = 221;

std::uint64_t make_uid(machine_id origin, std::uint64_t seq) {
  return (std::uint64_t(origin) << 40) | seq;
}

}  // namespace

scope_lock_plan plan_scope_locks(const local_partition& part, vertex_id v,
                                 consistency_model model) {
  if (!part.has_vertex(v) || !part.vertex(v).owned)
    throw not_owned_error("plan_scope_locks: vertex " + std::to_string(v) +
                          " not owned by machine " + std::to_string(part.machine));
  scope_lock_plan plan;
  plan.center = v;
  plan.model = model;
  plan.origin = part.machine;

  std::map<machine_id, std::map<vertex_id, lock_mode>> locks;
  locks[part.machine][v] = lock_mode::write;
  if (model != consistency_model::vertex) {
    lock_mode nbr_mode =
        model == consistency_model::full ? lock_mode::write : lock_mode::read;
    for (vertex_id u : part.vertex(v).neighbors) {
      machine_id owner = part.vertex(u).owner;
      auto& slot = locks[owner][u];
      slot = std::max(slot, nbr_mode);
    }
  }

  // data to refresh: every scope element the origin does not own, stamped
  // with the origin's cached version so unchanged data is skipped
  std::map<machine_id, std::vector<std::pair<element_key, std::uint64_t>>> sync;
  if (model != consistency_model::vertex) {
    auto add_sync = [&](const element_key& key) {
      if (part.element_owned(key)) return;
      sync[part.element_owner(key)].emplace_back(key, part.element_version(key));
    };
    const auto& center = part.vertex(v);
    for (vertex_id u : center.neighbors) {
      add_sync(element_key::vertex(u));
      add_sync(element_key::flag(u));
    }
    for (std::uint32_t e : center.in_edges)
      add_sync(element_key::edge(part.edge(e).source, part.edge(e).target));
    for (std::uint32_t e : center.out_edges)
      add_sync(element_key::edge(part.edge(e).source, part.edge(e).target));
  }

  for (auto& [machine, lockmap] : locks) {
    scope_lock_plan::hop h;
    h.machine = machine;
    for (auto& [vid, mode] : lockmap) h.locks.emplace_back(vid, mode);
    auto it = sync.find(machine);
    if (it != sync.end()) h.sync = std::move(it->second);
    plan.hops.push_back(std::move(h));
  }
  // std::map iteration already gives ascending machine ids and vertex ids
  return plan;
}

// ---- engine -----------------------------------------------------------------

locking_engine::locking_engine(std::vector<local_partition>& parts, update_fn f,
                               engine_options opts)
    : parts_(parts),
      update_(std::move(f)),
      opts_(opts),
      cluster_(machine_id(parts.size()), opts.latency, opts.seed),
      ghosts_(cluster_, parts),
      globals_(parts.size()),
      machines_(parts.size()),
      saved_versions_(parts.size()) {
  for (machine_id p = 0; p < parts_.size(); ++p) {
    sinks_.emplace_back(p);
    machines_[p].buckets.resize(32);
  }
  // per-machine budgets proportional to owned vertices: a budget of k*|V|
  // means k sweeps of work on every machine regardless of ownership skew
  budgets_.assign(parts_.size(), ~std::uint64_t(0));
  if (opts_.max_updates != ~std::uint64_t(0)) {
    std::uint64_t total = 0;
    for (const auto& part : parts_) total += part.owned_vertices().size();
    for (machine_id p = 0; p < parts_.size(); ++p)
      budgets_[p] = total == 0
                        ? 0
                        : std::max<std::uint64_t>(
                              1, opts_.max_updates * parts_[p].owned_vertices().size() /
                                     total);
  }
  if (opts_.pipeline_length < 1) opts_.pipeline_length = 1;
}

void locking_engine::add_sync(const std::string& name, sync_task task) {
  registry_.register_sync(name, std::move(task));
}

void locking_engine::seed(const std::vector<scheduled_task>& initial) {
  std::unordered_map<vertex_id, machine_id> owner;
  for (machine_id p = 0; p < parts_.size(); ++p)
    for (vertex_id v : parts_[p].owned_vertices()) owner[v] = p;
  for (const auto& t : initial) {
    auto it = owner.find(t.vertex);
    if (it == owner.end())
      throw endpoint_out_of_range_error("seeded vertex not in any partition");
    schedule_local(it->second, t.vertex, t.priority);
  }
}

void locking_engine::seed_all() {
  for (machine_id p = 0; p < parts_.size(); ++p)
    for (vertex_id v : parts_[p].owned_vertices()) schedule_local(p, v, 0.0);
}

// priority to bucket: exponentially spaced, highest priority in bucket 0,
// non-positive priorities in the lowest bucket
std::uint32_t locking_engine::bucket_of(double priority) {
  if (!(priority > 0)) return 31;
  double l = std::log2(priority / 1e-9);
  if (l <= 0) return 31;
  if (l >= 31) return 0;
  return 31 - std::uint32_t(l);
}

void locking_engine::schedule_local(machine_id m, vertex_id v, double priority) {
  machine_state& st = machines_[m];
  auto it = st.pending.find(v);
  if (it == st.pending.end()) {
    pending_info info;
    info.st = pending_info::state::queued;
    info.priority = priority;
    st.pending.emplace(v, info);
    st.buckets[bucket_of(priority)].push_back({v, bucket_of(priority)});
    ++st.scheduled_tasks;
    return;
  }
  pending_info& info = it->second;
  if (info.st == pending_info::state::queued) {
    if (priority > info.priority) {
      std::uint32_t cur = bucket_of(info.priority);
      std::uint32_t nb = bucket_of(priority);
      info.priority = priority;
      // an entry in a better bucket supersedes the old one, which is
      // skipped as stale when popped
      if (nb < cur) st.buckets[nb].push_back({v, nb});
    }
  } else {
    // executing or in pipeline: run again after it finishes
    info.dirty = true;
    info.dirty_priority = std::max(info.dirty_priority, priority);
  }
}

void locking_engine::schedule_snapshot(machine_id m, vertex_id v, std::uint32_t epoch) {
  machine_state& st = machines_[m];
  if (parts_[m].vertex(v).snap_epoch >= epoch) return;  // already snapshotted
  if (!st.snapshot_pending.insert(v).second) return;    // already queued or in flight
  st.urgent.push_back(v);
}

std::optional<std::pair<vertex_id, locking_engine::task_kind>> locking_engine::next_task(
    machine_id m) {
  machine_state& st = machines_[m];
  if (!st.urgent.empty()) {
    vertex_id v = st.urgent.front();
    st.urgent.pop_front();
    return std::pair(v, task_kind::snapshot);
  }
  if (st.budget_hit) return std::nullopt;
  for (auto& bucket : st.buckets) {
    while (!bucket.empty()) {
      auto [v, b] = bucket.front();
      bucket.pop_front();
      auto it = st.pending.find(v);
      if (it == st.pending.end() || it->second.st != pending_info::state::queued)
        continue;  // stale entry
      if (bucket_of(it->second.priority) != b) continue;  // superseded duplicate
      --st.scheduled_tasks;
      return std::pair(v, task_kind::app);
    }
  }
  return std::nullopt;
}

void locking_engine::refill(machine_id m) {
  machine_state& st = machines_[m];
  if (st.suspended || st.done) return;
  while (st.in_flight < opts_.pipeline_length) {
    if (st.executed >= budgets_[m]) st.budget_hit = true;
    auto task = next_task(m);
    if (!task) break;
    auto [v, kind] = *task;
    if (kind == task_kind::app) st.pending.at(v).st = pending_info::state::in_pipeline;
    issue_plan(m, v, kind);
  }
  maybe_notify_idle(m);
}

bool locking_engine::idle(machine_id m) const {
  const machine_state& st = machines_[m];
  if (st.done) return true;
  if (st.suspended) return false;
  bool schedule_empty = st.urgent.empty() && (st.scheduled_tasks == 0 || st.budget_hit);
  return schedule_empty && st.in_flight == 0 && st.ready.empty() && st.busy_workers == 0;
}

void locking_engine::maybe_notify_idle(machine_id m) {
  if (term_session_ >= 0 && idle(m)) cluster_.notify_flag(term_session_, m);
}

// ---- readers-writer locks ------------------------------------------------

bool locking_engine::try_acquire(machine_id m, vertex_id v, lock_mode mode,
                                 std::uint64_t uid) {
  rwlock& l = machines_[m].locks[v];
  if (mode == lock_mode::write) {
    if (l.writer == -1 && l.readers == 0 && l.queue.empty()) {
      l.writer = std::int64_t(uid);
      return true;
    }
    return false;
  }
  if (l.writer == -1 && l.queue.empty()) {
    ++l.readers;
    return true;
  }
  return false;
}

void locking_engine::enqueue_waiter(machine_id m, vertex_id v, lock_mode mode,
                                    std::uint64_t uid, std::function<void()> resume) {
  machines_[m].locks[v].queue.push_back({uid, mode, std::move(resume)});
}

void locking_engine::release_lock(machine_id m, vertex_id v, lock_mode mode,
                                  std::uint64_t uid) {
  rwlock& l = machines_[m].locks[v];
  if (mode == lock_mode::write) {
    if (l.writer != std::int64_t(uid)) {
      ++rw_violations_;
      throw not_held_error("write lock on " + std::to_string(v) + " not held by plan");
    }
    l.writer = -1;
  } else {
    if (l.readers == 0) {
      ++rw_violations_;
      throw not_held_error("read lock on " + std::to_string(v) + " not held");
    }
    --l.readers;
  }
  if (l.writer != -1 && l.readers > 0) ++rw_violations_;

  // grant in FIFO order: one writer, or a run of consecutive readers
  while (!l.queue.empty()) {
    waiter& w = l.queue.front();
    if (w.mode == lock_mode::write) {
      if (l.writer != -1 || l.readers != 0) break;
      l.writer = std::int64_t(w.plan_uid);
      auto resume = std::move(w.resume);
      l.queue.pop_front();
      resume();
      break;
    }
    if (l.writer != -1) break;
    ++l.readers;
    auto resume = std::move(w.resume);
    l.queue.pop_front();
    resume();
  }
}

// ---- acquisition chain ---------------------------------------------------

payload locking_engine::encode_flight(const flight& fl, std::size_t hop_index) const {
  payload_writer w;
  w.u32(fl.plan.origin);
  w.u64(fl.uid);
  w.u8(std::uint8_t(fl.kind));
  w.u32(fl.epoch);
  w.u64(fl.plan.center);
  w.u8(std::uint8_t(fl.plan.model == consistency_model::vertex  ? 0
                    : fl.plan.model == consistency_model::edge ? 1
                                                               : 2));
  w.u64(fl.issued_at);
  w.u32(std::uint32_t(hop_index));
  w.u32(std::uint32_t(fl.plan.hops.size()));
  for (const auto& h : fl.plan.hops) {
    w.u32(h.machine);
    w.u32(std::uint32_t(h.locks.size()));
    for (const auto& [v, mode] : h.locks) {
      w.u64(v);
      w.u8(std::uint8_t(mode));
    }
    w.u32(std::uint32_t(h.sync.size()));
    for (const auto& [key, cached] : h.sync) {
      w.u8(key.kind);
      w.u64(key.a);
      w.u64(key.b);
      w.u64(cached);
    }
  }
  w.u32(std::uint32_t(fl.synced.size()));
  for (const auto& u : fl.synced) ghost_sync::encode_update(w, u.key, u.version, u.bytes);
  return w.take();
}

std::shared_ptr<locking_engine::flight> locking_engine::decode_flight(
    payload msg, std::size_t& hop_index) const {
  payload_reader r(msg);
  auto fl = std::make_shared<flight>();
  fl->plan.origin = r.u32();
  fl->uid = r.u64();
  fl->kind = task_kind(r.u8());
  fl->epoch = r.u32();
  fl->plan.center = r.u64();
  std::uint8_t model = r.u8();
  fl->plan.model = model == 0   ? consistency_model::vertex
                   : model == 1 ? consistency_model::edge
                                : consistency_model::full;
  fl->issued_at = r.u64();
  hop_index = r.u32();
  std::uint32_t hops = r.u32();
  for (std::uint32_t i = 0; i < hops; ++i) {
    scope_lock_plan::hop h;
    h.machine = r.u32();
    std::uint32_t locks = r.u32();
    for (std::uint32_t j = 0; j < locks; ++j) {
      vertex_id v = r.u64();
      h.locks.emplace_back(v, lock_mode(r.u8()));
    }
    std::uint32_t syncs = r.u32();
    for (std::uint32_t j = 0; j < syncs; ++j) {
      element_key key;
      key.kind = r.u8();
      key.a = r.u64();
      key.b = r.u64();
      h.sync.emplace_back(key, r.u64());
    }
    fl->plan.hops.push_back(std::move(h));
  }
  std::uint32_t synced = r.u32();
  for (std::uint32_t i = 0; i < synced; ++i) fl->synced.push_back(ghost_sync::decode_update(r));
  return fl;
}

void locking_engine::issue_plan(machine_id m, vertex_id v, task_kind kind) {
  machine_state& st = machines_[m];
  auto fl = std::make_shared<flight>();
  // snapshot updates always lock an edge-consistent scope
  fl->plan = plan_scope_locks(parts_[m], v,
                              kind == task_kind::snapshot ? consistency_model::edge
                                                          : opts_.model);
  fl->uid = make_uid(m, st.next_plan_seq++);
  fl->kind = kind;
  fl->epoch = kind == task_kind::snapshot ? st.async_epoch : 0;
  fl->issued_at = cluster_.now();
  st.flights[fl->uid] = fl;
  ++st.in_flight;
  max_in_flight_ = std::max<std::uint64_t>(max_in_flight_, st.in_flight);

  if (fl->plan.hops.front().machine == m) {
    process_hop(m, fl, 0, 0);
  } else {
    cluster_.send(m, fl->plan.hops.front().machine, kind_chain, encode_flight(*fl, 0));
  }
}

void locking_engine::process_hop(machine_id m, const std::shared_ptr<flight>& fl,
                                 std::size_t hop_index, std::size_t lock_index) {
  const scope_lock_plan::hop& hop = fl->plan.hops[hop_index];
  for (std::size_t i = lock_index; i < hop.locks.size(); ++i) {
    auto [v, mode] = hop.locks[i];
    if (try_acquire(m, v, mode, fl->uid)) continue;
    // queue a continuation that resumes the sequential acquisition
    enqueue_waiter(m, v, mode, fl->uid,
                   [this, m, fl, hop_index, i]() { process_hop(m, fl, hop_index, i + 1); });
    return;
  }
  hop_done(m, fl, hop_index);
}

void locking_engine::hop_done(machine_id m, const std::shared_ptr<flight>& fl,
                              std::size_t hop_index) {
  const scope_lock_plan::hop& hop = fl->plan.hops[hop_index];
  // synchronization of locked data happens as soon as this machine's locks
  // are complete: append anything the origin's cache has stale
  for (const auto& [key, cached] : hop.sync) {
    std::uint64_t version = parts_[m].element_version(key);
    if (version > cached)
      fl->synced.push_back({key, version, parts_[m].element_bytes(key)});
  }
  const bool last = hop_index + 1 >= fl->plan.hops.size();
  if (!last) {
    machine_id next = fl->plan.hops[hop_index + 1].machine;
    if (next == m) {
      process_hop(m, fl, hop_index + 1, 0);
    } else {
      cluster_.send(m, next, kind_chain, encode_flight(*fl, hop_index + 1));
      fl->synced.clear();  // travels with the chain
    }
  } else if (fl->plan.origin == m) {
    plan_ready(m, fl);
  } else {
    cluster_.send(m, fl->plan.origin, kind_chain_done, encode_flight(*fl, hop_index));
  }
}

void locking_engine::plan_ready(machine_id m, const std::shared_ptr<flight>& fl) {
  machine_state& st = machines_[m];
  // the chain may have travelled: adopt the canonical flight object
  auto it = st.flights.find(fl->uid);
  std::shared_ptr<flight> local = it->second;
  if (local != fl) local->synced = fl->synced;

  for (const auto& u : local->synced) ghosts_.apply_remote_change(m, u.key, u.version, u.bytes);
  local->synced.clear();

  trace_record& rec =
      sinks_[m].append(trace_kind::lock_acquire, local->issued_at, cluster_.now(),
                       local->plan.center);
  rec.note = local->kind == task_kind::snapshot ? "snapshot" : "app";

  --st.in_flight;  // ready vertices leave the pipeline
  st.ready.push_back(local);
  refill(m);
  pump(m);
}

// ---- execution ------------------------------------------------------------

void locking_engine::pump(machine_id m) {
  machine_state& st = machines_[m];
  while (st.busy_workers < opts_.workers && !st.ready.empty()) {
    std::shared_ptr<flight> fl = st.ready.front();
    st.ready.pop_front();
    ++st.busy_workers;
    execute(m, fl);
  }
}

void locking_engine::execute(machine_id m, const std::shared_ptr<flight>& fl) {
  machine_state& st = machines_[m];
  vertex_id v = fl->plan.center;

  std::vector<element_key> changed;
  std::vector<scheduled_task> sched;

  if (fl->kind == task_kind::app) {
    auto pit = st.pending.find(v);
    if (pit != st.pending.end()) pit->second.st = pending_info::state::executing;
    if (st.executed >= budgets_[m]) {
      // budget spent while this plan was in flight: release without running
      st.budget_hit = true;
      cluster_.after(m, 0, [this, m, fl]() { finish_execution(m, fl, {}, {}); });
      return;
    }
    scope s = parts_[m].make_scope(v, opts_.model, &globals_[m]);
    std::uint64_t rd = s.read_digest();
    update_(s);
    trace_record& rec = sinks_[m].append(trace_kind::update, cluster_.now(),
                                         cluster_.now() + opts_.update_cost, v);
    rec.read_digest = rd;
    rec.write_digest = s.write_digest();
    rec.writes = s.written();
    ++st.executed;
    for (std::size_t i = 0; i < s.written().size(); ++i)
      if (s.current_bytes(s.written()[i]) != s.written_pre_images()[i])
        changed.push_back(s.written()[i]);
    sched = s.scheduled();
  } else {
    scope s = parts_[m].make_scope(v, consistency_model::edge, &globals_[m]);
    run_snapshot_update(m, fl, s, changed, sched);
  }

  logical_time cost = fl->kind == task_kind::snapshot ? opts_.save_cost : opts_.update_cost;
  cluster_.after(m, cost,
                 [this, m, fl, changed = std::move(changed), sched = std::move(sched)]() {
                   finish_execution(m, fl, changed, sched);
                 });
}

void locking_engine::run_snapshot_update(machine_id m, const std::shared_ptr<flight>& fl,
                                         scope& s, std::vector<element_key>& changed,
                                         std::vector<scheduled_task>& sched) {
  machine_state& st = machines_[m];
  local_partition& part = parts_[m];
  vertex_id v = fl->plan.center;
  st.snapshot_pending.erase(v);
  if (part.vertex(v).snap_epoch >= fl->epoch) return;  // already snapshotted: quit

  std::vector<element_key> saved;
  st.async_journal.records.push_back(
      snapshot_journal::record::vertex(v, part.vertex(v).data));
  saved.push_back(element_key::vertex(v));

  for (vertex_id u : part.vertex(v).neighbors) {
    // the neighbor's flag is scope data: fresh under the read lock
    if (part.vertex(u).snap_epoch >= fl->epoch) continue;
    std::optional<payload> fwd, rev;
    if (s.has_edge(v, u)) fwd = s.edge_data(v, u);
    if (s.has_edge(u, v)) rev = s.edge_data(u, v);
    st.async_journal.records.push_back(
        snapshot_journal::record::edge_pair(v, u, std::move(fwd), std::move(rev)));
    saved.push_back(element_key::edge(v, u));
    sched.push_back({u, 0.0});  // snapshot flood
  }

  part.vertex(v).snap_epoch = fl->epoch;
  changed.push_back(element_key::flag(v));

  trace_record& rec = sinks_[m].append(trace_kind::snapshot_save, cluster_.now(),
                                       cluster_.now() + opts_.save_cost, v);
  rec.note = "epoch-" + std::to_string(fl->epoch - 1);
  rec.writes = std::move(saved);
  async_vertex_done(m);
}

void locking_engine::finish_execution(machine_id m, const std::shared_ptr<flight>& fl,
                                      std::vector<element_key> changed,
                                      std::vector<scheduled_task> sched) {
  machine_state& st = machines_[m];

  // 1. forward the schedule set to each owner before releasing the scope
  std::map<machine_id, std::vector<scheduled_task>> fwd;
  for (const auto& t : sched) {
    machine_id owner = parts_[m].vertex(t.vertex).owner;
    if (owner == m) {
      if (fl->kind == task_kind::snapshot) schedule_snapshot(m, t.vertex, fl->epoch);
      else schedule_local(m, t.vertex, t.priority);
    } else {
      fwd[owner].push_back(t);
    }
  }
  for (const auto& [dst, tasks] : fwd) {
    payload_writer w;
    w.u8(fl->kind == task_kind::snapshot ? 1 : 0);
    w.u32(fl->epoch);
    w.u32(std::uint32_t(tasks.size()));
    for (const auto& t : tasks) {
      w.u64(t.vertex);
      w.f64(t.priority);
    }
    cluster_.send(m, dst, kind_schedule_fwd, w.take());
  }

  // 2. push changes and release locks, reverse visit order; writebacks for
  // remote-owned elements ride inside the release hop to their owner
  std::map<machine_id, std::vector<element_key>> writebacks;
  for (const auto& key : changed) {
    if (parts_[m].element_owned(key)) {
      ghosts_.mark_changed(m, key);
      ghosts_.push_change(m, key);
    } else {
      writebacks[parts_[m].element_owner(key)].push_back(key);
    }
  }
  trace_record& rec =
      sinks_[m].append(trace_kind::lock_release, cluster_.now(), cluster_.now(),
                       fl->plan.center);
  rec.note = fl->kind == task_kind::snapshot ? "snapshot" : "app";

  for (std::size_t i = fl->plan.hops.size(); i-- > 0;) {
    const auto& hop = fl->plan.hops[i];
    auto wb = writebacks.find(hop.machine);
    if (hop.machine == m) {
      for (const auto& [v, mode] : hop.locks) release_lock(m, v, mode, fl->uid);
      continue;
    }
    payload_writer w;
    w.u64(fl->uid);
    w.u32(std::uint32_t(hop.locks.size()));
    for (const auto& [v, mode] : hop.locks) {
      w.u64(v);
      w.u8(std::uint8_t(mode));
    }
    std::uint32_t nwb = wb == writebacks.end() ? 0 : std::uint32_t(wb->second.size());
    w.u32(nwb);
    if (wb != writebacks.end()) {
      for (const auto& key : wb->second) {
        ghost_sync::encode_update(w, key, parts_[m].element_version(key),
                                  parts_[m].element_bytes(key));
        // adopt the version the owner will install
        parts_[m].set_element_version(key, parts_[m].element_version(key) + 1);
      }
    }
    cluster_.send(m, hop.machine, kind_release, w.take());
  }

  // 3. retire the flight
  st.flights.erase(fl->uid);
  if (fl->kind == task_kind::app) {
    auto pit = st.pending.find(fl->plan.center);
    if (pit != st.pending.end()) {
      bool dirty = pit->second.dirty;
      double dp = pit->second.dirty_priority;
      st.pending.erase(pit);
      if (dirty) schedule_local(m, fl->plan.center, dp);
    }
  }
  --st.busy_workers;
  refill(m);
  pump(m);
  check_suspend_drained(m);
  maybe_notify_idle(m);
}

void locking_engine::handle_release(machine_id m, machine_id src, payload msg) {
  payload_reader r(msg);
  std::uint64_t uid = r.u64();
  std::uint32_t nlocks = r.u32();
  std::vector<std::pair<vertex_id, lock_mode>> locks;
  for (std::uint32_t i = 0; i < nlocks; ++i) {
    vertex_id v = r.u64();
    locks.emplace_back(v, lock_mode(r.u8()));
  }
  std::uint32_t nwb = r.u32();
  for (std::uint32_t i = 0; i < nwb; ++i) {
    auto u = ghost_sync::decode_update(r);
    ghosts_.apply_writeback(m, src, u.key, u.version, u.bytes);
  }
  // install writebacks first so waiters granted below read fresh data
  for (const auto& [v, mode] : locks) release_lock(m, v, mode, uid);
  maybe_notify_idle(m);
}

// ---- snapshots --------------------------------------------------------------

void locking_engine::master_snapshot_timer(std::uint64_t at_index) {
  if (master_.stopped || master_.snapshot_active) return;
  std::uint32_t epoch = master_.next_epoch++;
  master_.snapshot_active = true;
  if (opts_.straggler_machine >= 0)
    cluster_.stall(machine_id(opts_.straggler_machine), opts_.straggler_delay);
  trace_record& rec = sinks_[0].append(trace_kind::barrier, cluster_.now(), cluster_.now());
  rec.note = std::string(opts_.snapshot_async ? "async" : "sync") + "-snapshot-epoch-" +
             std::to_string(epoch) + "-requested";
  if (opts_.snapshot_async) begin_async_snapshot(epoch);
  else begin_sync_snapshot(epoch);
  (void)at_index;
}

void locking_engine::begin_sync_snapshot(std::uint32_t epoch) {
  master_.save_pending = std::uint32_t(parts_.size());
  to_all(kind_suspend, payload_writer().u32(epoch).take());
}

void locking_engine::begin_async_snapshot(std::uint32_t epoch) {
  master_.async_pending = std::uint32_t(parts_.size());
  to_all(kind_async_begin, payload_writer().u32(epoch).take());
}

void locking_engine::check_suspend_drained(machine_id m) {
  machine_state& st = machines_[m];
  if (!st.suspended || st.suspend_reported) return;
  if (st.in_flight != 0 || !st.ready.empty() || st.busy_workers != 0) return;
  st.suspend_reported = true;
  // flush: all communication settles behind the barrier before saving
  barrier_->arrive(m, [this, m]() {
    machine_save_sync(m, machines_[m].suspend_epoch);
  });
}

void locking_engine::machine_save_sync(machine_id m, std::uint32_t epoch) {
  if (m == 0) {
    // the flush barrier released: every machine is drained and quiet
    trace_record& mark =
        sinks_[0].append(trace_kind::barrier, cluster_.now(), cluster_.now());
    mark.note = "sync-snapshot-epoch-" + std::to_string(epoch) + "-begin";
  }
  local_partition& part = parts_[m];
  auto& saved = saved_versions_[m];
  snapshot_journal j;
  j.epoch = epoch;
  j.machine = std::uint16_t(m);
  std::vector<element_key> written;
  for (vertex_id v : part.owned_vertices()) {
    element_key key = element_key::vertex(v);
    std::uint64_t version = part.element_version(key);
    auto it = saved.find(key);
    if (it != saved.end() && it->second == version) continue;
    saved[key] = version;
    j.records.push_back(snapshot_journal::record::vertex(v, part.vertex(v).data));
    written.push_back(key);
  }
  for (const auto& e : part.edges()) {
    if (!e.owned) continue;
    element_key key = element_key::edge(e.source, e.target);
    auto it = saved.find(key);
    if (it != saved.end() && it->second == e.version) continue;
    saved[key] = e.version;
    j.records.push_back(
        snapshot_journal::record::edge_pair(e.source, e.target, e.data, std::nullopt));
    written.push_back(key);
  }
  j.complete = true;
  std::uint64_t vertex_records = 0;
  for (const auto& rec : j.records) vertex_records += rec.kind == 0 ? 1 : 0;
  result_.snapshots.add(std::move(j));
  logical_time save_time =
      opts_.save_cost * ((vertex_records + opts_.workers - 1) / opts_.workers);
  trace_record& rec = sinks_[m].append(trace_kind::snapshot_save, cluster_.now(),
                                       cluster_.now() + save_time);
  rec.note = "epoch-" + std::to_string(epoch);
  rec.writes = std::move(written);
  cluster_.after(m, save_time, [this, m]() { send_to_master(m, kind_snap_saved, {}); });
}

void locking_engine::async_vertex_done(machine_id m) {
  machine_state& st = machines_[m];
  if (st.async_remaining == 0) return;
  if (--st.async_remaining > 0) return;
  st.async_journal.complete = true;
  result_.snapshots.add(std::move(st.async_journal));
  st.async_journal = {};
  send_to_master(m, kind_async_done,
                 payload_writer().u32(st.async_epoch - 1).take());
}

void locking_engine::epoch_finished(std::uint32_t epoch, bool async) {
  trace_record& rec = sinks_[0].append(trace_kind::barrier, cluster_.now(), cluster_.now());
  rec.note = std::string(async ? "async" : "sync") + "-snapshot-epoch-" +
             std::to_string(epoch) + "-end";
  master_.snapshot_active = false;
  if (epoch == opts_.halt_after_epoch) {
    result_.halted_at_checkpoint = true;
    master_stop();
    return;
  }
  if (!async) to_all(kind_resume, {});
}

// ---- termination and final sync ---------------------------------------------

void locking_engine::master_final_sync_then_stop() {
  if (master_.stopped) return;
  if (registry_.tasks().empty() || master_.final_pass_done) {
    master_stop();
    return;
  }
  master_.final_pass_done = true;
  master_.final_queue.clear();
  for (const auto& [name, task] : registry_.tasks()) master_.final_queue.push_back(name);
  payload_writer w;
  w.u32(std::uint32_t(master_.final_queue.size()));
  for (const auto& name : master_.final_queue) w.blob(payload(name.begin(), name.end()));
  master_.partials_pending = std::uint32_t(parts_.size());
  master_.partials.assign(parts_.size(), {});
  to_all(kind_sync_req, w.take());
}

void locking_engine::master_handle_partial(machine_id src, payload msg) {
  master_.partials[src] = std::move(msg);
  if (--master_.partials_pending > 0) return;
  std::vector<std::vector<payload>> per_machine(parts_.size());
  for (machine_id p = 0; p < parts_.size(); ++p) {
    payload_reader r(master_.partials[p]);
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) per_machine[p].push_back(r.blob());
  }
  payload_writer out;
  out.u32(std::uint32_t(master_.final_queue.size()));
  for (std::size_t t = 0; t < master_.final_queue.size(); ++t) {
    const std::string& name = master_.final_queue[t];
    const sync_task& task = registry_.at(name);
    payload acc = task.identity;
    for (machine_id p = 0; p < parts_.size(); ++p)
      acc = task.combine(acc, per_machine[p][t]);
    payload z = task.finalize(acc);
    std::uint64_t version = ++master_.global_versions[name];
    result_.sync_history[name].emplace_back(version, z);
    globals_[0].install(name, version, z);
    out.blob(payload(name.begin(), name.end()));
    out.u64(version);
    out.blob(z);
    trace_record& rec = sinks_[0].append(trace_kind::sync, cluster_.now(), cluster_.now());
    rec.note = name;
  }
  cluster_.broadcast(0, kind_globals, out.take());
  master_stop();
}

void locking_engine::master_stop() {
  if (master_.stopped) return;
  master_.stopped = true;
  result_.makespan = cluster_.now();
  if (term_session_ >= 0) cluster_.disarm_quiescence(term_session_);
  to_all(kind_stop, {});
}

// ---- wiring -----------------------------------------------------------------

void locking_engine::send_to_master(machine_id m, msg_kind kind, payload msg) {
  if (m == 0) {
    cluster_.after(0, 0, [this, kind, msg = std::move(msg)]() mutable {
      if (kind == kind_sync_partial) master_handle_partial(0, std::move(msg));
      else handle_control(0, kind, msg);
    });
  } else {
    cluster_.send(m, 0, kind, std::move(msg));
  }
}

void locking_engine::to_all(msg_kind kind, const payload& msg) {
  cluster_.broadcast(0, kind, msg);
  cluster_.after(0, 0, [this, kind, msg]() { handle_control(0, kind, msg); });
}

void locking_engine::handle_control(machine_id m, msg_kind kind, const payload& msg) {
  machine_state& st = machines_[m];
  switch (kind) {
    case kind_stop:
      st.done = true;
      maybe_notify_idle(m);
      break;
    case kind_suspend: {
      st.suspended = true;
      st.suspend_reported = false;
      st.suspend_epoch = payload_reader(msg).u32();
      check_suspend_drained(m);
      break;
    }
    case kind_resume:
      st.suspended = false;
      refill(m);
      maybe_notify_idle(m);
      break;
    case kind_async_begin: {
      std::uint32_t epoch = payload_reader(msg).u32();
      st.async_epoch = epoch + 1;  // flag target; 0 means never snapshotted
      st.async_journal = {};
      st.async_journal.epoch = epoch;
      st.async_journal.machine = std::uint16_t(m);
      st.async_remaining = parts_[m].owned_vertices().size();
      if (st.async_remaining == 0) {
        st.async_journal.complete = true;
        result_.snapshots.add(std::move(st.async_journal));
        st.async_journal = {};
        send_to_master(m, kind_async_done, payload_writer().u32(epoch).take());
        break;
      }
      // seed a snapshot task at every owned vertex, at maximum priority
      for (vertex_id v : parts_[m].owned_vertices()) schedule_snapshot(m, v, st.async_epoch);
      refill(m);
      break;
    }
    case kind_snap_saved:
      if (--master_.save_pending == 0)
        epoch_finished(master_.next_epoch - 1, false);
      break;
    case kind_async_done:
      if (--master_.async_pending == 0)
        epoch_finished(master_.next_epoch - 1, true);
      break;
    case kind_sync_req: {
      payload_reader r(msg);
      std::uint32_t n = r.u32();
      payload_writer w;
      w.u32(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        payload name_bytes = r.blob();
        std::string name(name_bytes.begin(), name_bytes.end());
        w.blob(sync_partial(parts_[m], registry_.at(name), opts_.model, &globals_[m]));
      }
      send_to_master(m, kind_sync_partial, w.take());
      break;
    }
    default:
      break;
  }
}

engine_result locking_engine::run() {
  barrier_ = std::make_unique<barrier_service>(cluster_);

  for (machine_id p = 0; p < parts_.size(); ++p) {
    cluster_.on(p, kind_chain, [this, p](machine_id, payload msg) {
      std::size_t hop_index = 0;
      auto fl = decode_flight(std::move(msg), hop_index);
      process_hop(p, fl, hop_index, 0);
    });
    cluster_.on(p, kind_chain_done, [this, p](machine_id, payload msg) {
      std::size_t hop_index = 0;
      auto fl = decode_flight(std::move(msg), hop_index);
      plan_ready(p, fl);
    });
    cluster_.on(p, kind_release, [this, p](machine_id src, payload msg) {
      handle_release(p, src, std::move(msg));
    });
    cluster_.on(p, kind_schedule_fwd, [this, p](machine_id, payload msg) {
      payload_reader r(msg);
      bool snapshot = r.u8() != 0;
      std::uint32_t epoch = r.u32();
      std::uint32_t n = r.u32();
      for (std::uint32_t i = 0; i < n; ++i) {
        vertex_id v = r.u64();
        double priority = r.f64();
        if (snapshot) schedule_snapshot(p, v, epoch);
        else schedule_local(p, v, priority);
      }
      refill(p);
    });
    for (msg_kind k :
         {kind_stop, kind_suspend, kind_resume, kind_async_begin, kind_sync_req})
      cluster_.on(p, k,
                  [this, p, k](machine_id, payload msg) { handle_control(p, k, msg); });
  }
  for (msg_kind k : {kind_snap_saved, kind_async_done})
    cluster_.on(0, k, [this, k](machine_id, payload msg) { handle_control(0, k, msg); });
  cluster_.on(0, kind_sync_partial,
              [this](machine_id src, payload msg) { master_handle_partial(src, std::move(msg)); });
  for (machine_id p = 1; p < parts_.size(); ++p)
    cluster_.on(p, kind_globals, [this, p](machine_id, payload msg) {
      payload_reader r(msg);
      std::uint32_t n = r.u32();
      for (std::uint32_t i = 0; i < n; ++i) {
        payload name_bytes = r.blob();
        std::uint64_t version = r.u64();
        payload value = r.blob();
        globals_[p].install(std::string(name_bytes.begin(), name_bytes.end()), version,
                            std::move(value));
      }
    });

  // snapshot triggers at configured logical times
  for (std::size_t i = 0; i < opts_.snapshot_at.size(); ++i)
    cluster_.after(0, opts_.snapshot_at[i], [this, i]() { master_snapshot_timer(i); });

  term_session_ = cluster_.arm_quiescence([this](machine_id m) { return idle(m); },
                                          [this]() { master_final_sync_then_stop(); });

  for (machine_id p = 0; p < parts_.size(); ++p)
    cluster_.after(p, 0, [this, p]() { refill(p); });

  cluster_.run();

  result_.trace = merge_traces(sinks_);
  for (machine_id p = 0; p < parts_.size(); ++p) {
    result_.updates += machines_[p].executed;
    if (machines_[p].budget_hit &&
        (machines_[p].scheduled_tasks > 0 || !machines_[p].urgent.empty()))
      result_.budget_exhausted = true;
  }
  if (result_.makespan == 0) result_.makespan = cluster_.now();
  result_.messages_sent = cluster_.total_sent();
  result_.bytes_pushed = cluster_.payload_bytes_sent();
  return std::move(result_);
}

engine_result run_locking(std::vector<local_partition>& parts, const update_fn& f,
                          const std::vector<scheduled_task>& initial,
                          const engine_options& opts, sync_registry* syncs) {
  locking_engine eng(parts, f, opts);
  if (syncs)
    for (const auto& [name, task] : syncs->tasks()) eng.add_sync(name, task);
  eng.seed(initial);
  engine_result res = eng.run();
  if (res.budget_exhausted)
    throw iteration_budget_error("locking engine exhausted its update budget");
  return res;
}

}  // namespace atomgraph
