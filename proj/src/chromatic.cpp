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

#include <atomgraph/chromatic.hpp>

#include <algorithm>

namespace atomgraph {

namespace {

constexpr msg_kind kind_report = 201;
constexpr msg_kind kind_begin = 202;
constexpr msg_kind kind_sync_req = 203;
constexpr msg_kind kind_partial = 204;
constexpr msg_kind kind_snap = 205;
constexpr msg_kind kind_snap_done = 206;

constexpr std::uint8_t begin_step = 0;
constexpr std::uint8_t begin_stop = 1;
constexpr std::uint8_t begin_reseed_step = 2;

}  // namespace

chromatic_engine::chromatic_engine(std::vector<local_partition>& parts, coloring col,
                                   update_fn f, engine_options opts)
    : parts_(parts),
      coloring_(std::move(col)),
      update_(std::move(f)),
      opts_(opts),
      cluster_(machine_id(parts.size()), opts.latency, opts.seed),
      ghosts_(cluster_, parts),
      globals_(parts.size()),
      machines_(parts.size()),
      saved_versions_(parts.size()) {
  const color_id colors = std::max<color_id>(coloring_.count, 1);
  for (machine_id p = 0; p < parts_.size(); ++p) {
    sinks_.emplace_back(p);
    machines_[p].buckets.resize(colors);
    for (vertex_id v : parts_[p].owned_vertices()) owner_[v] = p;
  }
  master_.color_totals.assign(colors, 0);
  master_.report_totals.assign(colors, 0);
  master_.all_color_counts.assign(colors, 0);
  for (const auto& [v, m] : owner_) ++master_.all_color_counts[coloring_.color[v]];
}

void chromatic_engine::add_sync(const std::string& name, sync_task task) {
  registry_.register_sync(name, std::move(task));
}

void chromatic_engine::seed(const std::vector<scheduled_task>& initial) {
  for (const auto& t : initial) {
    auto it = owner_.find(t.vertex);
    if (it == owner_.end())
      throw endpoint_out_of_range_error("seeded vertex not in any partition");
    add_task(it->second, t.vertex);
  }
}

void chromatic_engine::seed_all() {
  for (machine_id p = 0; p < parts_.size(); ++p)
    for (vertex_id v : parts_[p].owned_vertices()) add_task(p, v);
}

void chromatic_engine::add_task(machine_id m, vertex_id v) {
  machine_state& st = machines_[m];
  if (!st.pending.insert(v).second) return;  // duplicate: ignored
  st.buckets[coloring_.color[v]].push_back(v);
}

void chromatic_engine::send_to_master(machine_id m, msg_kind kind, payload msg) {
  if (m == 0) {
    cluster_.after(0, 0, [this, kind, msg = std::move(msg)]() mutable {
      if (kind == kind_report) master_handle_report(0, std::move(msg));
      else if (kind == kind_partial) master_handle_partial(0, std::move(msg));
      else if (kind == kind_snap_done) master_handle_snap_done();
    });
  } else {
    cluster_.send(m, 0, kind, std::move(msg));
  }
}

void chromatic_engine::to_all(msg_kind kind, const payload& msg) {
  cluster_.broadcast(0, kind, msg);
  cluster_.after(0, 0, [this, kind, msg]() {
    if (kind == kind_begin) handle_begin(0, msg);
    else if (kind == kind_sync_req) handle_sync_req(0, msg);
    else if (kind == kind_snap) handle_snapshot(0, msg);
  });
}

engine_result chromatic_engine::run() {
  // validate the coloring against the model, distributed over owners:
  // every distance-1 pair is an edge at some owner, and every distance-2
  // pair runs through some owned middle vertex
  for (machine_id p = 0; p < parts_.size(); ++p) {
    for (vertex_id v : parts_[p].owned_vertices()) {
      const auto& entry = parts_[p].vertex(v);
      if (opts_.model != consistency_model::vertex) {
        for (vertex_id u : entry.neighbors)
          if (coloring_.color[u] == coloring_.color[v])
            throw invalid_coloring_error("adjacent vertices " + std::to_string(u) + "," +
                                         std::to_string(v) + " share a color");
      }
      if (opts_.model == consistency_model::full) {
        for (std::size_t i = 0; i < entry.neighbors.size(); ++i)
          for (std::size_t j = i + 1; j < entry.neighbors.size(); ++j)
            if (coloring_.color[entry.neighbors[i]] == coloring_.color[entry.neighbors[j]])
              throw invalid_coloring_error("distance-2 vertices share a color");
      }
    }
  }

  barrier_ = std::make_unique<barrier_service>(cluster_);

  for (machine_id p = 0; p < parts_.size(); ++p) {
    cluster_.on(p, kind_begin,
                [this, p](machine_id, payload msg) { handle_begin(p, std::move(msg)); });
    cluster_.on(p, kind_schedule_fwd, [this, p](machine_id, payload msg) {
      payload_reader r(msg);
      std::uint32_t n = r.u32();
      for (std::uint32_t i = 0; i < n; ++i) {
        vertex_id v = r.u64();
        r.f64();  // priority: order within a color-step is by vertex id
        add_task(p, v);
      }
    });
    cluster_.on(p, kind_sync_req,
                [this, p](machine_id, payload msg) { handle_sync_req(p, std::move(msg)); });
    cluster_.on(p, kind_snap,
                [this, p](machine_id, payload msg) { handle_snapshot(p, std::move(msg)); });
  }
  cluster_.on(0, kind_report,
              [this](machine_id src, payload msg) { master_handle_report(src, std::move(msg)); });
  cluster_.on(0, kind_partial,
              [this](machine_id src, payload msg) { master_handle_partial(src, std::move(msg)); });
  cluster_.on(0, kind_snap_done, [this](machine_id, payload) { master_handle_snap_done(); });

  // bootstrap: every machine reports its seeded counts
  master_.reports_pending = std::uint32_t(parts_.size());
  for (machine_id p = 0; p < parts_.size(); ++p)
    cluster_.after(p, 0, [this, p]() { report_counts(p); });

  cluster_.run();

  result_.trace = merge_traces(sinks_);
  result_.color_steps = master_.step_index;
  result_.updates = master_.total_executed;
  result_.makespan = cluster_.now();
  result_.messages_sent = cluster_.total_sent();
  result_.bytes_pushed = cluster_.payload_bytes_sent();
  return std::move(result_);
}

void chromatic_engine::report_counts(machine_id m) {
  payload_writer w;
  machine_state& st = machines_[m];
  w.u32(std::uint32_t(st.buckets.size()));
  for (const auto& b : st.buckets) w.u64(b.size());
  w.u64(st.executed);
  send_to_master(m, kind_report, w.take());
}

void chromatic_engine::master_handle_report(machine_id, payload msg) {
  payload_reader r(msg);
  std::uint32_t colors = r.u32();
  for (std::uint32_t c = 0; c < colors; ++c) master_.report_totals[c] += r.u64();
  master_.report_executed += r.u64();
  if (--master_.reports_pending > 0) return;

  master_.color_totals = master_.report_totals;
  master_.total_executed = master_.report_executed;
  master_.report_totals.assign(master_.color_totals.size(), 0);
  master_.report_executed = 0;
  master_decide();
}

void chromatic_engine::master_decide() {
  // phase 1: snapshots due at this boundary
  if (master_.next_epoch < opts_.snapshot_at.size() &&
      master_.step_index >= opts_.snapshot_at[master_.next_epoch]) {
    master_begin_snapshot();
    return;  // resumes in master_handle_snap_done
  }
  // phase 2: sync tasks due at this boundary
  if (!master_.sync_ran_this_boundary && master_.step_index > 0) {
    master_.sync_queue.clear();
    for (const auto& [name, task] : registry_.tasks())
      if (master_.step_index % task.period == 0) master_.sync_queue.push_back(name);
    if (!master_.sync_queue.empty()) {
      master_.sync_ran_this_boundary = true;
      master_start_sync();
      return;  // resumes in master_handle_partial
    }
  }
  // phase 3: stop or next color
  std::uint64_t total_pending = 0;
  for (std::uint64_t t : master_.color_totals) total_pending += t;
  bool reseed = false;
  if (total_pending == 0 && resweep_cycles_ > 0) {
    --resweep_cycles_;
    reseed = true;
    master_.color_totals = master_.all_color_counts;
    total_pending = owner_.size();
  }
  if (total_pending == 0) {
    master_stop();
    return;
  }
  if (master_.step_index >= opts_.max_color_steps ||
      master_.total_executed >= opts_.max_updates) {
    result_.budget_exhausted = true;
    master_stop();
    return;
  }
  color_id c = master_.cursor;
  while (master_.color_totals[c] == 0) c = (c + 1) % color_id(master_.color_totals.size());
  master_.cursor = (c + 1) % color_id(master_.color_totals.size());
  master_begin_step(c, reseed);
}

void chromatic_engine::master_begin_step(color_id c, bool reseed) {
  master_.sync_ran_this_boundary = false;
  payload_writer w;
  w.u8(reseed ? begin_reseed_step : begin_step);
  w.u32(c);
  w.u32(std::uint32_t(master_.pending_globals.size()));
  for (const auto& [name, entry] : master_.pending_globals) {
    w.blob(payload(name.begin(), name.end()));
    w.u64(entry.version);
    w.blob(entry.value);
  }
  master_.pending_globals.clear();
  to_all(kind_begin, w.take());
}

void chromatic_engine::master_stop() {
  master_.stopping = true;
  payload_writer w;
  w.u8(begin_stop);
  w.u32(0);
  w.u32(0);
  to_all(kind_begin, w.take());
}

void chromatic_engine::master_start_sync() {
  payload_writer w;
  w.u32(std::uint32_t(master_.sync_queue.size()));
  for (const auto& name : master_.sync_queue) w.blob(payload(name.begin(), name.end()));
  master_.partials_pending = std::uint32_t(parts_.size());
  master_.partials.assign(parts_.size(), {});
  to_all(kind_sync_req, w.take());
}

void chromatic_engine::handle_sync_req(machine_id m, const payload& msg) {
  payload_reader r(msg);
  std::uint32_t n = r.u32();
  payload_writer w;
  w.u32(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    payload name_bytes = r.blob();
    std::string name(name_bytes.begin(), name_bytes.end());
    w.blob(sync_partial(parts_[m], registry_.at(name), opts_.model, &globals_[m]));
  }
  send_to_master(m, kind_partial, w.take());
}

void chromatic_engine::master_handle_partial(machine_id src, payload msg) {
  master_.partials[src] = std::move(msg);
  if (--master_.partials_pending > 0) return;

  // parse each machine's reply (partials in sync_queue order), then
  // combine in machine-id order, finalize, version, and stage the values
  // for the next step broadcast
  std::vector<std::vector<payload>> per_machine(parts_.size());
  for (machine_id p = 0; p < parts_.size(); ++p) {
    payload_reader r(master_.partials[p]);
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) per_machine[p].push_back(r.blob());
  }
  for (std::size_t t = 0; t < master_.sync_queue.size(); ++t) {
    const std::string& name = master_.sync_queue[t];
    const sync_task& task = registry_.at(name);
    payload acc = task.identity;
    for (machine_id p = 0; p < parts_.size(); ++p)
      acc = task.combine(acc, per_machine[p][t]);
    payload z = task.finalize(acc);
    std::uint64_t version = ++master_.global_versions[name];
    result_.sync_history[name].emplace_back(version, z);
    global_values::entry e;
    e.version = version;
    e.value = z;
    master_.pending_globals.emplace_back(name, std::move(e));
    trace_record& rec = sinks_[0].append(trace_kind::sync, cluster_.now(), cluster_.now());
    rec.note = name;
  }
  master_decide();
}

void chromatic_engine::master_begin_snapshot() {
  std::uint32_t epoch = master_.next_epoch++;
  if (opts_.straggler_machine >= 0)
    cluster_.stall(machine_id(opts_.straggler_machine), opts_.straggler_delay);
  master_.snap_done_pending = std::uint32_t(parts_.size());
  trace_record& rec = sinks_[0].append(trace_kind::barrier, cluster_.now(), cluster_.now());
  rec.note = "snapshot-epoch-" + std::to_string(epoch) + "-begin";
  to_all(kind_snap, payload_writer().u32(epoch).take());
}

void chromatic_engine::handle_snapshot(machine_id m, const payload& msg) {
  std::uint32_t epoch = payload_reader(msg).u32();
  snapshot_journal j;
  j.epoch = epoch;
  j.machine = std::uint16_t(m);
  local_partition& part = parts_[m];
  auto& saved = saved_versions_[m];
  std::vector<element_key> written;

  for (vertex_id v : part.owned_vertices()) {
    element_key key = element_key::vertex(v);
    std::uint64_t version = part.element_version(key);
    auto it = saved.find(key);
    if (it != saved.end() && it->second == version) continue;  // unchanged since last epoch
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
  result_.snapshots.add(std::move(j));

  trace_record& rec =
      sinks_[m].append(trace_kind::snapshot_save, cluster_.now(), cluster_.now());
  rec.note = "epoch-" + std::to_string(epoch);
  rec.writes = std::move(written);
  send_to_master(m, kind_snap_done, {});
}

void chromatic_engine::master_handle_snap_done() {
  if (--master_.snap_done_pending > 0) return;
  std::uint32_t epoch = master_.next_epoch - 1;
  trace_record& rec = sinks_[0].append(trace_kind::barrier, cluster_.now(), cluster_.now());
  rec.note = "snapshot-epoch-" + std::to_string(epoch) + "-end";
  if (epoch == opts_.halt_after_epoch) {
    result_.halted_at_checkpoint = true;
    master_stop();
    return;
  }
  master_decide();
}

void chromatic_engine::handle_begin(machine_id m, const payload& msg) {
  payload_reader r(msg);
  std::uint8_t op = r.u8();
  std::uint32_t color = r.u32();
  std::uint32_t nglobals = r.u32();
  for (std::uint32_t i = 0; i < nglobals; ++i) {
    payload name_bytes = r.blob();
    std::uint64_t version = r.u64();
    payload value = r.blob();
    globals_[m].install(std::string(name_bytes.begin(), name_bytes.end()), version,
                        std::move(value));
  }
  if (op == begin_stop) {
    machines_[m].done = true;
    return;
  }
  if (op == begin_reseed_step)
    for (vertex_id v : parts_[m].owned_vertices()) add_task(m, v);
  start_step(m, color);
}

void chromatic_engine::start_step(machine_id m, color_id c) {
  machine_state& st = machines_[m];
  st.exec.assign(st.buckets[c].begin(), st.buckets[c].end());
  st.buckets[c].clear();
  std::sort(st.exec.begin(), st.exec.end());
  for (vertex_id v : st.exec) st.pending.erase(v);
  st.exec_next = 0;
  pump(m);
}

void chromatic_engine::pump(machine_id m) {
  machine_state& st = machines_[m];
  while (st.busy_workers < opts_.workers && st.exec_next < st.exec.size()) {
    vertex_id v = st.exec[st.exec_next++];
    ++st.busy_workers;

    // apply the update now; the worker stays busy for update_cost
    scope s = parts_[m].make_scope(v, opts_.model, &globals_[m]);
    std::uint64_t rd = s.read_digest();
    update_(s);
    logical_time t0 = cluster_.now();
    trace_record& rec = sinks_[m].append(trace_kind::update, t0, t0 + opts_.update_cost, v);
    rec.read_digest = rd;
    rec.write_digest = s.write_digest();
    rec.writes = s.written();
    ++st.executed;

    // decide which written elements actually changed
    std::vector<element_key> changed;
    for (std::size_t i = 0; i < s.written().size(); ++i)
      if (s.current_bytes(s.written()[i]) != s.written_pre_images()[i])
        changed.push_back(s.written()[i]);
    std::vector<scheduled_task> scheduled = s.scheduled();

    cluster_.after(m, opts_.update_cost,
                   [this, m, changed = std::move(changed), scheduled = std::move(scheduled)]() {
      // ghost traffic: eager within the color-step
      for (const auto& key : changed) {
        if (parts_[m].element_owned(key)) {
          ghosts_.mark_changed(m, key);
          ghosts_.push_change(m, key);
        } else {
          ghosts_.send_writeback(m, key);
        }
      }
      // schedule set: local tasks direct, remote forwarded to owners
      std::map<machine_id, std::vector<scheduled_task>> fwd;
      for (const auto& t : scheduled) {
        machine_id owner = parts_[m].vertex(t.vertex).owner;
        if (owner == m) add_task(m, t.vertex);
        else fwd[owner].push_back(t);
      }
      for (const auto& [dst, tasks] : fwd) {
        payload_writer w;
        w.u32(std::uint32_t(tasks.size()));
        for (const auto& t : tasks) {
          w.u64(t.vertex);
          w.f64(t.priority);
        }
        cluster_.send(m, dst, kind_schedule_fwd, w.take());
      }
      --machines_[m].busy_workers;
      pump(m);
    });
  }
  finish_step(m);
}

void chromatic_engine::finish_step(machine_id m) {
  machine_state& st = machines_[m];
  if (st.busy_workers > 0 || st.exec_next < st.exec.size() || st.in_barrier || st.done)
    return;
  st.in_barrier = true;
  st.barrier_arrive_time = cluster_.now();
  barrier_->arrive(m, [this, m]() {
    machine_state& stm = machines_[m];
    stm.in_barrier = false;
    trace_record& rec =
        sinks_[m].append(trace_kind::barrier, stm.barrier_arrive_time, cluster_.now());
    rec.note = "color-step";
    if (m == 0) {
      ++master_.step_index;
      master_.reports_pending = std::uint32_t(parts_.size());
    }
    report_counts(m);
  });
}

engine_result run_chromatic(std::vector<local_partition>& parts, const coloring& col,
                            const update_fn& f, const std::vector<scheduled_task>& initial,
                            const engine_options& opts, sync_registry* syncs) {
  chromatic_engine eng(parts, col, f, opts);
  if (syncs)
    for (const auto& [name, task] : syncs->tasks()) eng.add_sync(name, task);
  eng.seed(initial);
  engine_result res = eng.run();
  if (res.budget_exhausted)
    throw iteration_budget_error("chromatic engine exhausted its color-step budget");
  return res;
}

}  // namespace atomgraph
