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

#include <atomgraph/atom.hpp>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

namespace atomgraph {

namespace {

constexpr char atom_magic[4] = {'A', 'T', 'O', 'M'};
constexpr char index_magic[4] = {'A', 'T', 'I', 'X'};
constexpr std::uint16_t format_version = 1;

payload read_file(const std::string& path, const char* kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw missing_atom_error(std::string(kind) + " not found: " + path);
  payload data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::string& path, const payload& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw sink_write_error("cannot open for write: " + path);
  out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
  if (!out) throw sink_write_error("short write: " + path);
}

void encode_record(payload_writer& w, const atom_command& c) {
  w.u8(std::uint8_t(c.op));
  w.u64(c.id_a);
  if (c.op != atom_opcode::add_vertex) w.u64(c.id_b);
  w.blob(c.data);
}

payload encode_records(const std::vector<atom_command>& commands) {
  payload_writer w;
  for (const auto& c : commands) encode_record(w, c);
  return w.take();
}

payload encode_atom_file(atom_id id, const std::vector<atom_command>& commands,
                         std::uint32_t timestamp) {
  payload_writer w;
  w.raw(atom_magic, 4);
  w.u16(format_version);
  w.u16(0);  // flags; bit 0 reserved for compression
  w.u32(id);
  w.u32(timestamp);
  if (!commands.empty()) {
    payload records = encode_records(commands);
    w.raw(records.data(), records.size());
    w.u64(fnv1a64(records.data(), records.size()));
  }
  return w.take();
}

atom_journal decode_atom_file(const payload& data, const std::string& path) {
  if (data.size() < 16) throw corrupt_atom_file_error("truncated header: " + path);
  if (std::memcmp(data.data(), atom_magic, 4) != 0)
    throw corrupt_atom_file_error("bad magic: " + path);
  payload_reader r(data);
  r.take_raw(4);
  if (r.u16() != format_version) throw corrupt_atom_file_error("bad version: " + path);
  r.u16();  // flags
  atom_journal j;
  j.id = r.u32();
  r.u32();  // timestamp

  if (r.done()) return j;  // empty journal: bare header
  if (r.remaining() <= 8) throw corrupt_atom_file_error("truncated records: " + path);

  const std::size_t record_bytes = r.remaining() - 8;
  payload records = r.take_raw(record_bytes);
  std::uint64_t checksum = r.u64();
  if (checksum != fnv1a64(records.data(), records.size()))
    throw corrupt_atom_file_error("checksum mismatch: " + path);

  payload_reader rr(records);
  try {
    while (!rr.done()) {
      atom_command c;
      c.op = atom_opcode(rr.u8());
      switch (c.op) {
        case atom_opcode::add_vertex:
          c.id_a = rr.u64();
          break;
        case atom_opcode::add_edge:
        case atom_opcode::add_ghost_vertex:
        case atom_opcode::add_ghost_edge:
          c.id_a = rr.u64();
          c.id_b = rr.u64();
          break;
        default:
          throw corrupt_atom_file_error("unknown opcode: " + path);
      }
      c.data = rr.blob();
      j.commands.push_back(std::move(c));
    }
  } catch (const codec_error&) {
    throw corrupt_atom_file_error("malformed record: " + path);
  }
  return j;
}

std::uint32_t now_timestamp() { return std::uint32_t(std::time(nullptr)); }

}  // namespace

void write_atom(const atom_journal& journal, const std::string& path) {
  write_file(path, encode_atom_file(journal.id, journal.commands, now_timestamp()));
}

atom_journal read_atom(const std::string& path) {
  return decode_atom_file(read_file(path, "atom file"), path);
}

void append_commands(const std::string& path, const std::vector<atom_command>& commands) {
  atom_journal j = read_atom(path);  // validates the existing file
  j.commands.insert(j.commands.end(), commands.begin(), commands.end());
  write_file(path, encode_atom_file(j.id, j.commands, now_timestamp()));
}

// ---- atom index -----------------------------------------------------------

void write_atom_index(const atom_index& index, const std::string& path) {
  payload_writer body;
  for (const auto& a : index.atoms) {
    char name[64] = {0};
    if (a.location.size() >= sizeof(name))
      throw sink_write_error("atom location too long: " + a.location);
    std::memcpy(name, a.location.data(), a.location.size());
    body.raw(name, sizeof(name));
    body.u64(a.owned_vertices);
    body.u64(a.owned_edges);
  }
  body.u32(std::uint32_t(index.meta_edges.size()));
  for (const auto& [a, b] : index.meta_edges) {
    body.u32(a);
    body.u32(b);
  }
  payload b = body.take();

  payload_writer w;
  w.raw(index_magic, 4);
  w.u16(format_version);
  w.u16(0);
  w.u32(index.k);
  w.u64(index.total_vertices);
  w.u64(index.total_edges);
  w.raw(b.data(), b.size());
  w.u64(fnv1a64(b.data(), b.size()));
  write_file(path, w.take());
}

atom_index read_atom_index(const std::string& path) {
  payload data = read_file(path, "atom index");
  if (data.size() < 28 || std::memcmp(data.data(), index_magic, 4) != 0)
    throw corrupt_atom_file_error("bad index header: " + path);
  payload_reader r(data);
  r.take_raw(4);
  if (r.u16() != format_version) throw corrupt_atom_file_error("bad index version: " + path);
  r.u16();
  atom_index idx;
  idx.k = r.u32();
  idx.total_vertices = r.u64();
  idx.total_edges = r.u64();
  if (r.remaining() <= 8) throw corrupt_atom_file_error("truncated index: " + path);
  payload body = r.take_raw(r.remaining() - 8);
  if (r.u64() != fnv1a64(body.data(), body.size()))
    throw corrupt_atom_file_error("index checksum mismatch: " + path);

  payload_reader rb(body);
  try {
    for (std::uint32_t i = 0; i < idx.k; ++i) {
      atom_index::atom_info info;
      payload name = rb.take_raw(64);
      info.location.assign(reinterpret_cast<const char*>(name.data()),
                           strnlen(reinterpret_cast<const char*>(name.data()), 64));
      info.owned_vertices = rb.u64();
      info.owned_edges = rb.u64();
      idx.atoms.push_back(std::move(info));
    }
    std::uint32_t ne = rb.u32();
    for (std::uint32_t i = 0; i < ne; ++i) {
      atom_id a = rb.u32();
      atom_id b = rb.u32();
      idx.meta_edges.emplace_back(a, b);
    }
    if (!rb.done()) throw corrupt_atom_file_error("trailing bytes in index: " + path);
  } catch (const codec_error&) {
    throw corrupt_atom_file_error("malformed index: " + path);
  }
  return idx;
}

}  // namespace atomgraph
