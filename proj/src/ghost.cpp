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

#include <atomgraph/ghost.hpp>

namespace atomgraph {

ghost_sync::ghost_sync(cluster& c, std::vector<local_partition>& parts)
    : cluster_(c), parts_(parts), last_pushed_(parts.size()) {
  for (machine_id p = 0; p < cluster_.machines(); ++p) {
    cluster_.on(p, kind_ghost_push,
                [this, p](machine_id src, payload msg) { handle_push(p, src, std::move(msg)); });
    cluster_.on(p, kind_ghost_writeback, [this, p](machine_id src, payload msg) {
      handle_writeback(p, src, std::move(msg));
    });
  }
}

std::uint64_t ghost_sync::mark_changed(machine_id m, const element_key& key) {
  local_partition& part = parts_[m];
  if (!part.has_element(key) || !part.element_owned(key))
    throw not_owned_error("mark_changed on non-owned element");
  std::uint64_t v = part.element_version(key) + 1;
  part.set_element_version(key, v);
  ++changes_[key];
  return v;
}

void ghost_sync::encode_update(payload_writer& w, const element_key& key,
                               std::uint64_t version, const payload& bytes) {
  w.u8(key.kind);
  w.u64(key.a);
  if (key.kind == 1) w.u64(key.b);
  w.u64(version);
  w.blob(bytes);
}

ghost_sync::decoded_update ghost_sync::decode_update(payload_reader& r) {
  decoded_update u;
  u.key.kind = r.u8();
  u.key.a = r.u64();
  u.key.b = u.key.kind == 1 ? r.u64() : 0;
  u.version = r.u64();
  u.bytes = r.blob();
  return u;
}

int ghost_sync::push_change(machine_id m, const element_key& key) {
  local_partition& part = parts_[m];
  if (!part.has_element(key) || !part.element_owned(key))
    throw not_owned_error("push_change on non-owned element");
  const std::uint64_t version = part.element_version(key);
  const payload bytes = part.element_bytes(key);
  int sent = 0;
  for (machine_id holder : part.element_holders(key)) {
    auto lastkey = std::pair(key, holder);
    auto it = last_pushed_[m].find(lastkey);
    if (it != last_pushed_[m].end() && it->second == version) continue;  // unchanged: skip
    payload_writer w;
    encode_update(w, key, version, bytes);
    cluster_.send(m, holder, kind_ghost_push, w.take());
    last_pushed_[m][lastkey] = version;
    pushed_bytes_[key] += bytes.size();
    ++sent;
  }
  return sent;
}

void ghost_sync::apply_remote_change(machine_id m, const element_key& key,
                                     std::uint64_t version, const payload& bytes) {
  local_partition& part = parts_[m];
  if (!part.has_element(key) || part.element_owned(key))
    throw unknown_ghost_error("remote change for element not ghosted here");
  if (version <= part.element_version(key)) return;  // stale: discard
  part.set_element_bytes(key, bytes);
  part.set_element_version(key, version);
}

void ghost_sync::send_writeback(machine_id m, const element_key& key) {
  local_partition& part = parts_[m];
  if (!part.has_element(key) || part.element_owned(key))
    throw not_owned_error("writeback needs a local ghost of the element");
  const std::uint64_t cached = part.element_version(key);
  const payload bytes = part.element_bytes(key);
  payload_writer w;
  encode_update(w, key, cached, bytes);
  cluster_.send(m, part.element_owner(key), kind_ghost_writeback, w.take());
  // the owner will install cached+1; adopt it now so this cache stays
  // coherent without an echo message
  part.set_element_version(key, cached + 1);
}

void ghost_sync::handle_push(machine_id m, machine_id, payload msg) {
  payload_reader r(msg);
  decoded_update u = decode_update(r);
  apply_remote_change(m, u.key, u.version, u.bytes);
}

void ghost_sync::handle_writeback(machine_id m, machine_id src, payload msg) {
  payload_reader r(msg);
  decoded_update u = decode_update(r);
  apply_writeback(m, src, u.key, u.version, u.bytes);
}

void ghost_sync::apply_writeback(machine_id m, machine_id src, const element_key& key,
                                 std::uint64_t version, const payload& bytes) {
  local_partition& part = parts_[m];
  if (!part.element_owned(key))
    throw not_owned_error("writeback delivered to a non-owner");
  // the writer held locks that freeze this element, so its cached version
  // must match ours; anything else is a coherence bug
  if (part.element_version(key) != version)
    throw unknown_ghost_error("writeback version skew: engine lock protocol violated");
  part.set_element_bytes(key, bytes);
  part.set_element_version(key, version + 1);
  ++changes_[key];
  // fan out to the other holders; the writer already adopted the version
  for (machine_id holder : part.element_holders(key)) {
    auto lastkey = std::pair(key, holder);
    if (holder == src) {
      last_pushed_[m][lastkey] = version + 1;
      continue;
    }
    payload_writer w;
    encode_update(w, key, version + 1, bytes);
    cluster_.send(m, holder, kind_ghost_push, w.take());
    last_pushed_[m][lastkey] = version + 1;
    pushed_bytes_[key] += bytes.size();
  }
}

std::uint64_t ghost_sync::pushed_bytes(const element_key& key) const {
  auto it = pushed_bytes_.find(key);
  return it == pushed_bytes_.end() ? 0 : it->second;
}

std::uint64_t ghost_sync::change_count(const element_key& key) const {
  auto it = changes_.find(key);
  return it == changes_.end() ? 0 : it->second;
}

}  // namespace atomgraph
