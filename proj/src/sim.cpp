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

#include <atomgraph/sim.hpp>

#include <algorithm>

namespace atomgraph {

bool detect_termination(std::span<const quiescence_state> round1,
                        std::span<const quiescence_state> round2) {
  if (round1.size() != round2.size() || round1.empty()) return false;
  std::uint64_t sent = 0, received = 0;
  for (std::size_t i = 0; i < round1.size(); ++i) {
    if (!round1[i].scheduler_empty || !round2[i].scheduler_empty) return false;
    if (round1[i].sent != round2[i].sent) return false;
    if (round1[i].received != round2[i].received) return false;
    sent += round2[i].sent;
    received += round2[i].received;
  }
  return sent == received;
}

cluster::cluster(machine_id machines, latency_model latency, std::uint64_t seed)
    : m_(machines),
      latency_(latency),
      jitter_rng_(splitmix64(seed ^ latency.seed ^ 0x7ea757a117ULL)),
      busy_until_(machines, 0),
      sent_(machines, 0),
      received_(machines, 0) {
  if (machines == 0) throw unknown_machine_error("cluster needs at least one machine");
}

void cluster::on(machine_id m, msg_kind kind, handler_fn h) {
  handlers_[{m, kind}] = std::move(h);
}

void cluster::push_event(logical_time t, machine_id m, std::function<void()> fn) {
  queue_.push(event{t, next_seq_++, m, std::move(fn)});
}

void cluster::send(machine_id src, machine_id dst, msg_kind kind, payload msg) {
  if (src >= m_ || dst >= m_)
    throw unknown_machine_error("send between unknown machines " + std::to_string(src) +
                                "->" + std::to_string(dst));
  logical_time delay = latency_.base;
  if (latency_.jitter > 0) delay += jitter_rng_.below(latency_.jitter + 1);
  logical_time at = now_ + delay;
  // FIFO per (source, destination, kind): never deliver before an earlier
  // send on the same channel
  auto key = std::tuple(src, dst, kind);
  auto it = channel_clock_.find(key);
  if (it != channel_clock_.end()) at = std::max(at, it->second);
  channel_clock_[key] = at;

  if (kind < first_control_kind) {
    ++sent_[src];
    ++total_sent_;
    payload_bytes_ += msg.size();
  }
  msg_digest_.u64(src).u64(dst).u64(kind).u64(now_).u64(at).payload_bytes(msg);

  push_event(at, dst, [this, src, dst, kind, m = std::move(msg)]() mutable {
    deliver(src, dst, kind, std::move(m));
  });
}

void cluster::broadcast(machine_id src, msg_kind kind, const payload& msg) {
  for (machine_id p = 0; p < m_; ++p)
    if (p != src) send(src, p, kind, msg);
}

void cluster::deliver(machine_id src, machine_id dst, msg_kind kind, payload msg) {
  if (kind < first_control_kind) {
    ++received_[dst];
    ++total_received_;
  }
  auto it = handlers_.find({dst, kind});
  if (it == handlers_.end())
    throw unknown_machine_error("no handler for kind " + std::to_string(kind) +
                                " on machine " + std::to_string(dst));
  it->second(src, std::move(msg));
  if (kind < first_control_kind) {
    // a counted delivery can change the quiescence picture: wake any
    // session that went passive after an unsatisfied round
    for (int sid = 0; sid < int(sessions_.size()); ++sid) wake_session(sid);
  }
}

void cluster::wake_session(int sid) {
  session& s = sessions_[std::size_t(sid)];
  if (!s.armed || s.fired || !s.passive || s.restart_scheduled) return;
  s.restart_scheduled = true;
  after(0, 0, [this, sid]() {
    session& ss = sessions_[std::size_t(sid)];
    ss.restart_scheduled = false;
    if (!ss.armed || ss.fired || !ss.passive) return;
    ss.passive = false;
    start_round(sid);
  });
}

void cluster::after(machine_id m, logical_time delay, std::function<void()> fn) {
  if (m >= m_) throw unknown_machine_error("after() on unknown machine");
  push_event(now_ + delay, m, std::move(fn));
}

void cluster::stall(machine_id m, logical_time duration) {
  busy_until_[m] = std::max(busy_until_[m], now_ + duration);
}

bool cluster::step() {
  while (true) {
    if (queue_.empty()) return false;
    event ev;
    if (choice_oracle) {
      // collect all events runnable at the minimal instant and let the
      // oracle pick; used by the interleaving explorer
      std::vector<event> batch;
      logical_time t = queue_.top().time;
      while (!queue_.empty() && queue_.top().time == t) {
        batch.push_back(queue_.top());
        queue_.pop();
      }
      std::size_t pick = batch.size() == 1 ? 0 : choice_oracle(batch.size());
      ev = batch[pick];
      for (std::size_t i = 0; i < batch.size(); ++i)
        if (i != pick) queue_.push(batch[i]);
    } else {
      ev = queue_.top();
      queue_.pop();
    }
    if (ev.machine < m_ && busy_until_[ev.machine] > ev.time) {
      // machine stalled: replay the event when it wakes, preserving order
      ev.time = busy_until_[ev.machine];
      queue_.push(ev);
      continue;
    }
    now_ = std::max(now_, ev.time);
    ev.fn();
    return true;
  }
}

void cluster::run() {
  while (step()) {
  }
  for (std::size_t sid = 0; sid < sessions_.size(); ++sid) {
    const session& s = sessions_[sid];
    if (s.armed && !s.fired)
      throw barrier_timeout_error(
          "event queue drained with quiescence session " + std::to_string(sid) +
          " unsatisfied (token parked at machine " + std::to_string(s.token_at) + ")");
  }
}

// ---- quiescence token ring --------------------------------------------

int cluster::arm_quiescence(flag_fn local_flag, std::function<void()> on_fire) {
  int sid = int(sessions_.size());
  if (kind_quiescence_token + sid > 255)
    throw unknown_machine_error("too many quiescence sessions");
  sessions_.push_back({});
  session& s = sessions_.back();
  s.flag = std::move(local_flag);
  s.on_fire = std::move(on_fire);
  s.current.assign(m_, {});

  const msg_kind kind = msg_kind(kind_quiescence_token + sid);
  for (machine_id p = 0; p < m_; ++p) {
    on(p, kind, [this, sid, p](machine_id, payload msg) {
      session& ss = sessions_[std::size_t(sid)];
      if (!ss.armed || ss.fired) return;
      payload_reader r(msg);
      std::uint8_t returning = r.u8();
      ss.round = r.u64();
      for (machine_id q = 0; q < m_; ++q) {
        ss.current[q].scheduler_empty = r.u8() != 0;
        ss.current[q].sent = r.u64();
        ss.current[q].received = r.u64();
      }
      if (returning) {
        token_round_done(sid);
      } else {
        token_arrived(sid, p);
      }
    });
  }
  rearm_quiescence(sid);
  return sid;
}

void cluster::rearm_quiescence(int sid) {
  session& s = sessions_[std::size_t(sid)];
  s.armed = true;
  s.fired = false;
  s.have_previous = false;
  s.round = 0;
  s.token_held = false;
  s.passive = false;
  s.restart_scheduled = false;
  // start the first round later this instant, from machine 0
  after(0, 0, [this, sid]() { start_round(sid); });
}

void cluster::disarm_quiescence(int sid) { sessions_[std::size_t(sid)].armed = false; }

void cluster::start_round(int sid) {
  session& s = sessions_[std::size_t(sid)];
  if (!s.armed || s.fired) return;
  ++s.round;
  s.round_start_sent = total_sent_;
  s.round_start_received = total_received_;
  token_arrived(sid, 0);
}

void cluster::token_arrived(int sid, machine_id m) {
  session& s = sessions_[std::size_t(sid)];
  s.token_at = m;
  s.token_held = true;
  if (s.flag(m)) token_forward(sid, m);
  // else: parked until notify_flag
}

void cluster::notify_flag(int sid, machine_id m) {
  session& s = sessions_[std::size_t(sid)];
  if (!s.armed || s.fired) return;
  if (s.passive) {
    wake_session(sid);
    return;
  }
  if (s.token_held && s.token_at == m && s.flag(m)) token_forward(sid, m);
}

void cluster::token_forward(int sid, machine_id m) {
  session& s = sessions_[std::size_t(sid)];
  s.token_held = false;
  // stamp this machine's observation
  s.current[m] = {true, sent_[m], received_[m]};

  auto encode_token = [&](bool returning) {
    payload_writer w;
    w.u8(returning ? 1 : 0);
    w.u64(s.round);
    for (machine_id q = 0; q < m_; ++q) {
      w.u8(s.current[q].scheduler_empty ? 1 : 0);
      w.u64(s.current[q].sent);
      w.u64(s.current[q].received);
    }
    return w.take();
  };
  const msg_kind kind = msg_kind(kind_quiescence_token + sid);
  if (m + 1 < m_) {
    send(m, m + 1, kind, encode_token(false));
  } else if (m_ == 1) {
    after(0, 0, [this, sid]() { token_round_done(sid); });
  } else {
    send(m, 0, kind, encode_token(true));
  }
}

void cluster::token_round_done(int sid) {
  session& s = sessions_[std::size_t(sid)];
  if (!s.armed || s.fired) return;
  if (s.have_previous && detect_termination(s.previous, s.current)) {
    s.fired = true;
    s.armed = false;
    s.on_fire();
    return;
  }
  s.previous = s.current;
  s.have_previous = true;

  // if any counted traffic moved while the token circulated, the stamps are
  // stale: run another round at once. If the round saw a frozen state with
  // balanced counters, run the confirmation round. A frozen state with
  // unbalanced counters means a message is in flight: park until its
  // delivery (or a flag change) wakes the session. This keeps the ring from
  // spinning and starving deliveries under adversarial event orderings.
  const bool activity = total_sent_ != s.round_start_sent ||
                        total_received_ != s.round_start_received;
  std::uint64_t sent = 0, received = 0;
  for (const auto& q : s.current) {
    sent += q.sent;
    received += q.received;
  }
  if (activity || sent == received) {
    start_round(sid);
  } else {
    s.passive = true;
  }
}

// ---- barrier -------------------------------------------------------------

barrier_service::barrier_service(cluster& c)
    : cluster_(c), arrived_(c.machines(), false), callbacks_(c.machines()) {
  // armed lazily on the first arrival; a run that never reaches a barrier
  // must not leave an unsatisfied session behind
  session_ = cluster_.arm_quiescence(
      [this](machine_id m) { return arrived_[m]; }, [this]() { release(); });
  cluster_.disarm_quiescence(session_);
  armed_ = false;
}

barrier_service::~barrier_service() { cluster_.disarm_quiescence(session_); }

void barrier_service::release() {
  ++generation_;
  armed_ = false;
  std::vector<std::function<void()>> cbs(callbacks_.size());
  cbs.swap(callbacks_);
  for (machine_id p = 0; p < cluster_.machines(); ++p) {
    arrived_[p] = false;
    if (cbs[p]) cluster_.after(p, 0, std::move(cbs[p]));
  }
}

void barrier_service::arrive(machine_id m, std::function<void()> cb) {
  if (arrived_[m]) throw barrier_timeout_error("double arrival at barrier");
  if (!armed_) {
    cluster_.rearm_quiescence(session_);
    armed_ = true;
  }
  arrived_[m] = true;
  callbacks_[m] = std::move(cb);
  cluster_.notify_flag(session_, m);
}

// ---- socket framing --------------------------------------------------------

payload encode_frame(msg_kind kind, const payload& msg) {
  payload_writer w;
  w.u32(std::uint32_t(1 + msg.size()));
  w.u8(kind);
  w.raw(msg.data(), msg.size());
  return w.take();
}

bool decode_frame(const payload& data, std::size_t& offset, msg_kind& kind, payload& msg) {
  if (data.size() - offset < 4) return false;
  payload_reader r(std::span(data.data() + offset, data.size() - offset));
  std::uint32_t len = r.u32();
  if (len < 1) throw codec_error("frame length must cover the kind byte");
  if (data.size() - offset - 4 < len) return false;
  kind = r.u8();
  msg = r.take_raw(len - 1);
  offset += 4 + len;
  return true;
}

}  // namespace atomgraph
