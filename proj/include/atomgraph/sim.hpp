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

#ifndef ATOMGRAPH_SIM_HPP
#define ATOMGRAPH_SIM_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <span>
#include <vector>

#include <atomgraph/atom.hpp>  // machine_id
#include <atomgraph/errors.hpp>
#include <atomgraph/trace.hpp>
#include <atomgraph/util.hpp>

namespace atomgraph {

using msg_kind = std::uint8_t;

/// Kinds at or above this value are control traffic (engine coordination,
/// quiescence tokens) and are excluded from the quiescence message
/// counters. Kinds 240..255 are reserved for quiescence session tokens.
constexpr msg_kind first_control_kind = 200;
constexpr msg_kind kind_quiescence_token = 240;

/// Fixed per-message delay plus seeded jitter, in logical time units.
struct latency_model {
  logical_time base = 0;
  logical_time jitter = 0;  // uniform in [0, jitter]
  std::uint64_t seed = 0;
};

/// One machine's view for the termination predicate.
struct quiescence_state {
  bool scheduler_empty = false;
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
};

/// The two-round counting rule: quiescent iff both rounds show every
/// scheduler empty and globally sent == received, with identical counters
/// across the rounds. Never true while a counted message is in flight.
bool detect_termination(std::span<const quiescence_state> round1,
                        std::span<const quiescence_state> round2);

/**
 * A deterministic in-process "cluster": m logical machines driven by one
 * discrete-event loop. Messages are delivered exactly once, per
 * (source, destination, kind) in send order, after the model latency.
 * Handlers for one machine never run reentrantly; machines interleave at
 * event granularity. Identical seeds give identical schedules.
 */
class cluster {
public:
  using handler_fn = std::function<void(machine_id source, payload msg)>;

  cluster(machine_id machines, latency_model latency = {}, std::uint64_t seed = 0);

  machine_id machines() const { return m_; }
  logical_time now() const { return now_; }

  void on(machine_id m, msg_kind kind, handler_fn h);

  void send(machine_id src, machine_id dst, msg_kind kind, payload msg);
  /// To every machine except src.
  void broadcast(machine_id src, msg_kind kind, const payload& msg);

  /// Schedule fn to run on machine m after delay (0 = later this instant).
  void after(machine_id m, logical_time delay, std::function<void()> fn);

  /// Straggler injection: machine m processes nothing for the next
  /// `duration` units; pending and new events are pushed past the stall.
  void stall(machine_id m, logical_time duration);

  /// Drain the event queue. Throws barrier_timeout_error if the queue
  /// empties while a quiescence session is armed but unsatisfied (a
  /// machine never arrived / never went idle: deadlock).
  void run();
  /// Process a single event. Returns false when the queue is empty.
  bool step();

  // ---- counted-message audit ----
  std::uint64_t total_sent() const { return total_sent_; }
  std::uint64_t total_received() const { return total_received_; }
  std::uint64_t sent_by(machine_id m) const { return sent_[m]; }
  std::uint64_t received_by(machine_id m) const { return received_[m]; }
  std::uint64_t payload_bytes_sent() const { return payload_bytes_; }
  std::uint64_t message_digest() const { return msg_digest_.digest(); }

  // ---- quiescence sessions (token ring) -------------------------------
  //
  // A session circulates a counting token around the ring 0 -> 1 -> ... ->
  // m-1 -> 0. A machine holds the token while its local flag is false and
  // forwards it, stamped with its counters, once true. Machine 0 declares
  // quiescence after two consecutive rounds that satisfy
  // detect_termination, then runs on_fire once (on machine 0).
  //
  // Engines must call notify_flag(session, m) whenever machine m's flag
  // may have turned true, and must not send counted messages from a
  // machine whose flag is currently reported true except in reaction to a
  // delivered message.

  using flag_fn = std::function<bool(machine_id)>;
  int arm_quiescence(flag_fn local_flag, std::function<void()> on_fire);
  /// Reset a fired/disarmed session and start a fresh detection cycle.
  void rearm_quiescence(int session);
  void disarm_quiescence(int session);
  void notify_flag(int session, machine_id m);

  /// Tie-break oracle for the interleaving explorer: given the number of
  /// runnable events at the current instant, return the index to run.
  std::function<std::size_t(std::size_t)> choice_oracle;

private:
  struct event {
    logical_time time;
    std::uint64_t seq;
    machine_id machine;
    std::function<void()> fn;
  };
  struct event_later {
    bool operator()(const event& a, const event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  struct session {
    bool armed = false;
    flag_fn flag;
    std::function<void()> on_fire;
    machine_id token_at = 0;     // who holds or will next receive the token
    bool token_held = false;     // parked at token_at waiting for its flag
    bool passive = false;        // frozen-unbalanced round: wait for a change
    bool restart_scheduled = false;
    std::uint64_t round = 0;
    std::uint64_t round_start_sent = 0, round_start_received = 0;
    std::vector<quiescence_state> current, previous;
    bool have_previous = false;
    bool fired = false;
  };

  void push_event(logical_time t, machine_id m, std::function<void()> fn);
  void deliver(machine_id src, machine_id dst, msg_kind kind, payload msg);
  void token_arrived(int sid, machine_id m);
  void token_forward(int sid, machine_id m);
  void token_round_done(int sid);
  void start_round(int sid);
  void wake_session(int sid);

  machine_id m_;
  latency_model latency_;
  rng jitter_rng_;
  logical_time now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<event, std::vector<event>, event_later> queue_;
  std::map<std::pair<machine_id, msg_kind>, handler_fn> handlers_;
  std::map<std::tuple<machine_id, machine_id, msg_kind>, logical_time> channel_clock_;
  std::vector<logical_time> busy_until_;
  std::vector<std::uint64_t> sent_, received_;
  std::uint64_t total_sent_ = 0, total_received_ = 0, payload_bytes_ = 0;
  hasher64 msg_digest_;
  std::vector<session> sessions_;
};

/**
 * A full communication barrier: every machine arrives, and no machine is
 * released until all counted messages sent before its arrival are
 * delivered. Built on a quiescence session whose flag is "arrived".
 */
class barrier_service {
public:
  explicit barrier_service(cluster& c);
  ~barrier_service();

  /// Machine m arrives; cb runs on m once the barrier releases. Every
  /// machine must eventually arrive.
  void arrive(machine_id m, std::function<void()> cb);

  bool released_once() const { return generation_ > 0; }
  std::uint64_t generation() const { return generation_; }

private:
  void release();

  cluster& cluster_;
  int session_;
  bool armed_ = false;
  std::vector<bool> arrived_;
  std::vector<std::function<void()>> callbacks_;
  std::uint64_t generation_ = 0;
};

// ---- optional socket framing ------------------------------------------
//
// Wire frame for the out-of-process transport: u32 length (kind + payload),
// u8 kind, payload bytes. The in-process simulator is the deterministic
// reference; this codec defines the interchange format.

payload encode_frame(msg_kind kind, const payload& msg);
/// Decodes one frame from data at offset; returns false if incomplete.
/// Throws codec_error on a malformed frame.
bool decode_frame(const payload& data, std::size_t& offset, msg_kind& kind, payload& msg);

}  // namespace atomgraph

#endif
