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

#ifndef ATOMGRAPH_GHOST_HPP
#define ATOMGRAPH_GHOST_HPP

#include <cstdint>
#include <map>
#include <vector>

#include <atomgraph/partition.hpp>
#include <atomgraph/sim.hpp>

namespace atomgraph {

constexpr msg_kind kind_ghost_push = 20;
constexpr msg_kind kind_ghost_writeback = 21;

/**
 * Version-stamped coherence for ghost elements. Owners push changed data
 * to the machines holding ghosts, skipping any destination that already
 * has the current version; stale deliveries are discarded by the version
 * check on the receiving side. Writers of remote-owned elements (full
 * consistency, adjacent-edge writes) send a write-back to the owner, which
 * installs it and fans the new version out to the other holders.
 */
class ghost_sync {
public:
  ghost_sync(cluster& c, std::vector<local_partition>& parts);

  /// Owner side: bump the element version after its bytes changed.
  /// Returns the new version.
  std::uint64_t mark_changed(machine_id m, const element_key& key);

  /// Owner side: push the element to every machine holding a ghost of it,
  /// skipping machines that already saw the current version. Returns the
  /// number of messages sent. Throws not_owned_error if m does not own key.
  int push_change(machine_id m, const element_key& key);

  /// Ghost side: send the locally written bytes of a remote-owned element
  /// back to its owner. The caller must hold whatever locks make the
  /// owner's version stable (engine contract).
  void send_writeback(machine_id m, const element_key& key);

  /// Apply one decoded ghost update (id, version, payload) to a local
  /// ghost: installed if newer, discarded if stale. The message handler
  /// path; exposed for engines that embed updates in their own messages.
  void apply_remote_change(machine_id m, const element_key& key, std::uint64_t version,
                           const payload& bytes);

  /// Owner side: install a write-back from machine src (which holds locks
  /// freezing the element), bump the version, and fan the new value out to
  /// the other ghost holders. Exposed for engines whose release messages
  /// carry the write-backs.
  void apply_writeback(machine_id m, machine_id src, const element_key& key,
                       std::uint64_t version, const payload& bytes);

  /// Wire helpers (element kind u8, id u64 (edge: two u64), version u64,
  /// payload length u32 + bytes).
  static void encode_update(payload_writer& w, const element_key& key,
                            std::uint64_t version, const payload& bytes);
  struct decoded_update {
    element_key key;
    std::uint64_t version;
    payload bytes;
  };
  static decoded_update decode_update(payload_reader& r);

  /// Bandwidth audit: payload bytes pushed per element so far.
  std::uint64_t pushed_bytes(const element_key& key) const;
  /// Distinct value changes recorded per element (version bumps).
  std::uint64_t change_count(const element_key& key) const;

private:
  void handle_push(machine_id m, machine_id src, payload msg);
  void handle_writeback(machine_id m, machine_id src, payload msg);

  cluster& cluster_;
  std::vector<local_partition>& parts_;
  // per machine: last version pushed per (element, destination)
  std::vector<std::map<std::pair<element_key, machine_id>, std::uint64_t>> last_pushed_;
  std::map<element_key, std::uint64_t> pushed_bytes_;
  std::map<element_key, std::uint64_t> changes_;
};

}  // namespace atomgraph

#endif
