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

#ifndef ATOMGRAPH_PARTITION_HPP
#define ATOMGRAPH_PARTITION_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <atomgraph/atom.hpp>
#include <atomgraph/graph.hpp>
#include <atomgraph/scope.hpp>

namespace atomgraph {

enum class partition_method { hash, bfs_blocks };

struct over_partition_result {
  std::vector<atom_journal> journals;
  atom_index index;
};

/// Split a graph into k atoms (k >= 1, k <= |V|). Each journal carries its
/// owned vertices and edges plus ghost commands for everything adjacent
/// to its boundary, so a machine can reconstruct its local neighborhood
/// from journals alone.
over_partition_result over_partition(const data_graph& g, std::uint32_t k,
                                     partition_method method);

struct partition_assignment {
  std::vector<machine_id> atom_machine;  // indexed by atom id
  machine_id machines = 0;

  machine_id of(atom_id a) const { return atom_machine[a]; }
};

/// Balance-place atoms onto m machines: greedy largest-first placement by
/// owned-vertex count, then bounded local refinement passes that move atoms
/// to reduce the crossing meta-edge count while preserving balance.
partition_assignment place_atoms(const atom_index& index, machine_id m);

/**
 * One machine's share of the graph: owned vertices and edges, plus ghost
 * copies of every remote element adjacent to the boundary. Ghosts carry
 * version stamps for the coherence protocol. Each directed edge is owned
 * by the machine owning its source vertex.
 */
class local_partition {
public:
  struct vertex_entry {
    vertex_id vid = 0;
    payload data;
    std::uint64_t version = 0;
    bool owned = false;
    machine_id owner = 0;
    std::vector<machine_id> ghost_holders;    // machines caching this element
    std::vector<std::uint32_t> in_edges;      // local edge slots, sorted by source
    std::vector<std::uint32_t> out_edges;     // local edge slots, sorted by target
    std::vector<vertex_id> neighbors;         // N[v], sorted
    // snapshot annex: epoch this vertex was last snapshotted in, ghost-synced
    std::uint64_t snap_epoch = 0;
    std::uint64_t snap_version = 0;
  };
  struct edge_entry {
    vertex_id source = 0;
    vertex_id target = 0;
    payload data;
    std::uint64_t version = 0;
    bool owned = false;
    machine_id owner = 0;
    std::vector<machine_id> ghost_holders;
  };

  machine_id machine = 0;

  std::vector<vertex_entry>& vertices() { return vertices_; }
  const std::vector<vertex_entry>& vertices() const { return vertices_; }
  std::vector<edge_entry>& edges() { return edges_; }
  const std::vector<edge_entry>& edges() const { return edges_; }

  bool has_vertex(vertex_id v) const { return vindex_.count(v) > 0; }
  vertex_entry& vertex(vertex_id v) { return vertices_[vindex_.at(v)]; }
  const vertex_entry& vertex(vertex_id v) const { return vertices_[vindex_.at(v)]; }

  bool find_edge(vertex_id s, vertex_id t, std::uint32_t& slot) const {
    auto it = eindex_.find(key(s, t));
    if (it == eindex_.end()) return false;
    slot = it->second;
    return true;
  }
  edge_entry& edge(std::uint32_t slot) { return edges_[slot]; }
  const edge_entry& edge(std::uint32_t slot) const { return edges_[slot]; }

  /// Owned vertex ids, ascending. The engines' unit of work.
  const std::vector<vertex_id>& owned_vertices() const { return owned_; }

  void index_after_fill();  // builds adjacency, neighbor lists, indices

  /// Bind a scope over local storage for an owned center vertex.
  scope make_scope(vertex_id center, consistency_model model,
                   const global_values* globals = nullptr);

  // ---- uniform element access (kind 0 vertex, 1 edge, 2 snapshot flag) ----

  bool has_element(const element_key& k) const;
  /// Element payload bytes; the snapshot flag is its encoded epoch.
  payload element_bytes(const element_key& k) const;
  void set_element_bytes(const element_key& k, const payload& bytes);
  std::uint64_t element_version(const element_key& k) const;
  void set_element_version(const element_key& k, std::uint64_t v);
  bool element_owned(const element_key& k) const;
  machine_id element_owner(const element_key& k) const;
  std::vector<machine_id> element_holders(const element_key& k) const;

private:
  static std::uint64_t key_hash(vertex_id s, vertex_id t) {
    return splitmix64(s * 0x9e3779b97f4a7c15ULL ^ t);
  }
  static std::pair<vertex_id, vertex_id> key(vertex_id s, vertex_id t) { return {s, t}; }

  struct pair_hash {
    std::size_t operator()(const std::pair<vertex_id, vertex_id>& p) const {
      return std::size_t(key_hash(p.first, p.second));
    }
  };

  std::vector<vertex_entry> vertices_;  // sorted by vid
  std::vector<edge_entry> edges_;       // sorted by (source, target)
  std::vector<vertex_id> owned_;
  std::unordered_map<vertex_id, std::uint32_t> vindex_;
  std::unordered_map<std::pair<vertex_id, vertex_id>, std::uint32_t, pair_hash> eindex_;
};

/// Replay a machine's atom journals into its local partition.
local_partition build_local_partition(const atom_index& index,
                                      const partition_assignment& assignment,
                                      machine_id machine,
                                      const std::vector<atom_journal>& atoms);

/// Same, reading the atom files named by the index from a directory.
local_partition load_partition(const atom_index& index,
                               const partition_assignment& assignment,
                               machine_id machine, const std::string& dir);

/// Convenience: partition a graph in memory and load every machine.
std::vector<local_partition> partition_in_memory(const data_graph& g, std::uint32_t k,
                                                 machine_id m, partition_method method);

/// Reassemble owned payloads from all machines into a full payload image,
/// ordered like the original graph (for result extraction and checks).
void gather_partitions(const std::vector<local_partition>& parts, data_graph& into);

}  // namespace atomgraph

#endif
