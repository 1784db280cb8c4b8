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

#include <atomgraph/snapshot.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace atomgraph {

double optimal_interval(double t_checkpoint, double t_mtbf) {
  if (!(t_checkpoint > 0) || !(t_mtbf > 0))
    throw non_positive_input_error("checkpoint interval inputs must be positive");
  return std::sqrt(2.0 * t_checkpoint * t_mtbf);
}

namespace {

constexpr char snap_magic[4] = {'S', 'N', 'A', 'P'};
constexpr std::uint16_t snap_version = 1;
constexpr std::uint8_t marker_kind = 0xfe;

payload encode_records(const snapshot_journal& j) {
  payload_writer w;
  for (const auto& r : j.records) {
    w.u8(r.kind);
    w.u64(r.a);
    if (r.kind == 1) w.u64(r.b);
    w.u8(std::uint8_t((r.has_fwd ? 1 : 0) | (r.has_rev ? 2 : 0)));
    if (r.has_fwd) w.blob(r.fwd);
    if (r.has_rev) w.blob(r.rev);
  }
  if (j.complete) w.u8(marker_kind);
  return w.take();
}

}  // namespace

void write_snapshot_journal(const snapshot_journal& j, const std::string& path) {
  payload_writer w;
  w.raw(snap_magic, 4);
  w.u16(snap_version);
  w.u16(0);
  w.u32(j.epoch);
  w.u16(j.machine);
  payload records = encode_records(j);
  w.raw(records.data(), records.size());
  w.u64(fnv1a64(records.data(), records.size()));
  payload data = w.take();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw sink_write_error("cannot write snapshot journal: " + path);
  out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
  if (!out) throw sink_write_error("short write: " + path);
}

snapshot_journal read_snapshot_journal(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw missing_atom_error("snapshot journal not found: " + path);
  payload data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 14 || std::memcmp(data.data(), snap_magic, 4) != 0)
    throw corrupt_atom_file_error("bad snapshot header: " + path);
  payload_reader r(data);
  r.take_raw(4);
  if (r.u16() != snap_version)
    throw corrupt_atom_file_error("bad snapshot version: " + path);
  r.u16();
  snapshot_journal j;
  j.epoch = r.u32();
  j.machine = r.u16();
  if (r.remaining() <= 8) throw corrupt_atom_file_error("truncated snapshot: " + path);
  payload records = r.take_raw(r.remaining() - 8);
  if (r.u64() != fnv1a64(records.data(), records.size()))
    throw corrupt_atom_file_error("snapshot checksum mismatch: " + path);

  payload_reader rr(records);
  try {
    while (!rr.done()) {
      std::uint8_t kind = rr.u8();
      if (kind == marker_kind) {
        j.complete = true;
        if (!rr.done()) throw corrupt_atom_file_error("records after marker: " + path);
        break;
      }
      snapshot_journal::record rec;
      rec.kind = kind;
      rec.a = rr.u64();
      if (kind == 1) rec.b = rr.u64();
      else if (kind != 0) throw corrupt_atom_file_error("unknown record kind: " + path);
      std::uint8_t flags = rr.u8();
      rec.has_fwd = flags & 1;
      rec.has_rev = flags & 2;
      if (rec.has_fwd) rec.fwd = rr.blob();
      if (rec.has_rev) rec.rev = rr.blob();
      j.records.push_back(std::move(rec));
    }
  } catch (const codec_error&) {
    throw corrupt_atom_file_error("malformed snapshot record: " + path);
  }
  return j;
}

std::vector<const snapshot_journal*> snapshot_store::epoch(std::uint32_t e) const {
  std::vector<const snapshot_journal*> out;
  for (const auto& j : journals_)
    if (j.epoch == e) out.push_back(&j);
  return out;
}

std::uint32_t snapshot_store::max_epoch() const {
  std::uint32_t m = 0;
  for (const auto& j : journals_) m = std::max(m, j.epoch);
  return m;
}

void snapshot_store::write_dir(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& j : journals_) {
    char name[64];
    std::snprintf(name, sizeof(name), "epoch_%04u_machine_%04u.snap", j.epoch, j.machine);
    write_snapshot_journal(j, dir + "/" + name);
  }
}

snapshot_store snapshot_store::load_dir(const std::string& dir) {
  snapshot_store store;
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".snap") files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) store.add(read_snapshot_journal(f));
  return store;
}

recovery_result recover(const atom_index& index, const partition_assignment& assignment,
                        const std::vector<atom_journal>& atoms, const snapshot_store& store,
                        std::uint32_t epoch) {
  // pick the newest complete epoch at or below the requested one
  recovery_result result;
  std::int64_t use = -1;
  for (std::int64_t e = epoch; e >= 0; --e) {
    auto js = store.epoch(std::uint32_t(e));
    std::vector<char> have(assignment.machines, 0);
    for (const auto* j : js)
      if (j->complete) have[j->machine] = 1;
    bool all = std::all_of(have.begin(), have.end(), [](char c) { return c != 0; });
    if (all) {
      use = e;
      break;
    }
    result.fell_back = true;
  }
  if (use < 0)
    throw incomplete_checkpoint_error("no complete snapshot epoch at or below " +
                                      std::to_string(epoch));
  result.used_epoch = std::uint32_t(use);

  // base load from atoms
  for (machine_id p = 0; p < assignment.machines; ++p) {
    std::vector<atom_journal> mine;
    for (const auto& a : atoms)
      if (assignment.of(a.id) == p) mine.push_back(a);
    result.partitions.push_back(build_local_partition(index, assignment, p, mine));
  }

  // overlay epochs 0..use in order; later epochs win
  for (std::uint32_t e = 0; e <= result.used_epoch; ++e) {
    for (const auto* j : store.epoch(e)) {
      for (const auto& rec : j->records) {
        // apply to the owner partition; ghosts are refreshed afterwards
        for (auto& part : result.partitions) {
          if (rec.kind == 0) {
            if (part.has_vertex(rec.a) && part.vertex(rec.a).owned)
              part.vertex(rec.a).data = rec.fwd;
          } else {
            std::uint32_t slot;
            if (rec.has_fwd && part.find_edge(rec.a, rec.b, slot) && part.edge(slot).owned)
              part.edge(slot).data = rec.fwd;
            if (rec.has_rev && part.find_edge(rec.b, rec.a, slot) && part.edge(slot).owned)
              part.edge(slot).data = rec.rev;
          }
        }
      }
    }
  }

  // refresh ghosts from owners; the recovered state is a clean load
  for (auto& part : result.partitions) {
    for (auto& v : part.vertices()) {
      v.version = 0;
      v.snap_epoch = 0;
      v.snap_version = 0;
      if (!v.owned) v.data = result.partitions[v.owner].vertex(v.vid).data;
    }
    for (auto& e : part.edges()) {
      e.version = 0;
      if (!e.owned) {
        std::uint32_t slot;
        if (result.partitions[e.owner].find_edge(e.source, e.target, slot))
          e.data = result.partitions[e.owner].edge(slot).data;
      }
    }
  }
  return result;
}

recovery_result recover_from_dirs(const std::string& atom_dir, const std::string& snap_dir,
                                  machine_id machines, std::uint32_t epoch) {
  atom_index index = read_atom_index(atom_dir + "/index");
  partition_assignment assignment = place_atoms(index, machines);
  std::vector<atom_journal> atoms;
  for (atom_id a = 0; a < index.k; ++a)
    atoms.push_back(read_atom(atom_dir + "/" + index.atoms[a].location));
  snapshot_store store = snapshot_store::load_dir(snap_dir);
  return recover(index, assignment, atoms, store, epoch);
}

}  // namespace atomgraph
