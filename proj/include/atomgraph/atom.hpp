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

#ifndef ATOMGRAPH_ATOM_HPP
#define ATOMGRAPH_ATOM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <atomgraph/errors.hpp>
#include <atomgraph/graph.hpp>
#include <atomgraph/util.hpp>

namespace atomgraph {

using atom_id = std::uint32_t;
using machine_id = std::uint32_t;

enum class atom_opcode : std::uint8_t {
  add_vertex = 1,        // ids: vid
  add_edge = 2,          // ids: src, dst
  add_ghost_vertex = 3,  // ids: vid, owning atom
  add_ghost_edge = 4,    // ids: src, dst
};

/// One graph-generating command. Replaying a journal's commands in order
/// reconstructs the atom's owned elements and its ghost skeleton.
struct atom_command {
  atom_opcode op;
  std::uint64_t id_a = 0;
  std::uint64_t id_b = 0;
  payload data;

  bool operator==(const atom_command&) const = default;

  static atom_command vertex(vertex_id v, payload d) {
    return {atom_opcode::add_vertex, v, 0, std::move(d)};
  }
  static atom_command edge(vertex_id s, vertex_id t, payload d) {
    return {atom_opcode::add_edge, s, t, std::move(d)};
  }
  static atom_command ghost_vertex(vertex_id v, atom_id owner, payload d) {
    return {atom_opcode::add_ghost_vertex, v, owner, std::move(d)};
  }
  static atom_command ghost_edge(vertex_id s, vertex_id t, payload d) {
    return {atom_opcode::add_ghost_edge, s, t, std::move(d)};
  }
};

struct atom_journal {
  atom_id id = 0;
  std::vector<atom_command> commands;

  bool operator==(const atom_journal&) const = default;

  std::vector<vertex_id> owned_vertices() const {
    std::vector<vertex_id> out;
    for (const auto& c : commands)
      if (c.op == atom_opcode::add_vertex) out.push_back(c.id_a);
    return out;
  }
  std::vector<vertex_id> ghost_vertices() const {
    std::vector<vertex_id> out;
    for (const auto& c : commands)
      if (c.op == atom_opcode::add_ghost_vertex) out.push_back(c.id_a);
    return out;
  }
};

// Atom file layout: 16-byte header (magic "ATOM", version u16, flags u16,
// atom id u32, timestamp u32), then records (opcode u8, ids as LE u64,
// payload length u32 + bytes), then a u64 checksum over the record bytes.
// An empty journal is the bare header. The flags word reserves bit 0 for a
// compressed record section.

void write_atom(const atom_journal& journal, const std::string& path);
atom_journal read_atom(const std::string& path);
void append_commands(const std::string& path, const std::vector<atom_command>& commands);

/**
 * The meta-graph: k atoms, their sizes and file locations, and a meta-edge
 * for every pair of atoms joined by at least one crossing data edge.
 */
struct atom_index {
  struct atom_info {
    std::string location;
    std::uint64_t owned_vertices = 0;
    std::uint64_t owned_edges = 0;
  };
  std::uint32_t k = 0;
  std::uint64_t total_vertices = 0;
  std::uint64_t total_edges = 0;
  std::vector<atom_info> atoms;
  std::vector<std::pair<atom_id, atom_id>> meta_edges;  // a < b, sorted
};

void write_atom_index(const atom_index& index, const std::string& path);
atom_index read_atom_index(const std::string& path);

}  // namespace atomgraph

#endif
