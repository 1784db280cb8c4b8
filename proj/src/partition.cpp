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

#include <atomgraph/partition.hpp>

#include <algorithm>
#include <cstdio>
#include <deque>
#include <map>
#include <numeric>
#include <set>

namespace atomgraph {

namespace {

std::string atom_file_name(atom_id a) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "atom_%04u.atom", a);
  return buf;
}

std::vector<atom_id> assign_atoms(const data_graph& g, std::uint32_t k,
                                  partition_method method) {
  const std::size_t n = g.num_vertices();
  std::vector<atom_id> owner(n);
  if (method == partition_method::hash) {
    for (vertex_id v = 0; v < n; ++v) owner[v] = atom_id(splitmix64(v) % k);
    return owner;
  }
  // bfs-blocks: repeated BFS grabbing a balanced block per atom
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> block(k, n / k);
  for (std::uint32_t a = 0; a < n % k; ++a) ++block[a];
  std::deque<vertex_id> frontier;
  vertex_id scan = 0;
  for (std::uint32_t a = 0; a < k; ++a) {
    std::size_t grabbed = 0;
    while (grabbed < block[a]) {
      if (frontier.empty()) {
        while (scan < n && seen[scan]) ++scan;
        if (scan >= n) break;
        frontier.push_back(scan);
        seen[scan] = 1;
      }
      vertex_id v = frontier.front();
      frontier.pop_front();
      owner[v] = a;
      ++grabbed;
      for (vertex_id u : g.neighbors(v)) {
        if (!seen[u]) {
          seen[u] = 1;
          frontier.push_back(u);
        }
      }
    }
  }
  return owner;
}

}  // namespace

over_partition_result over_partition(const data_graph& g, std::uint32_t k,
                                     partition_method method) {
  if (k < 1 || k > g.num_vertices())
    throw k_too_large_error("atom count " + std::to_string(k) + " not in [1, |V|=" +
                            std::to_string(g.num_vertices()) + "]");
  std::vector<atom_id> owner = assign_atoms(g, k, method);

  over_partition_result out;
  out.journals.resize(k);
  for (std::uint32_t a = 0; a < k; ++a) out.journals[a].id = a;

  // vertices first so every later edge command has its endpoints in place
  std::vector<std::vector<atom_command>> ghost_vertex_cmds(k), edge_cmds(k);
  std::vector<std::set<vertex_id>> ghosts(k);
  for (vertex_id v = 0; v < g.num_vertices(); ++v)
    out.journals[owner[v]].commands.push_back(atom_command::vertex(v, g.vertex_data(v)));

  std::set<std::pair<atom_id, atom_id>> meta;
  std::vector<std::uint64_t> edge_count(k, 0);
  for (edge_index e = 0; e < g.num_edges(); ++e) {
    vertex_id s = g.edge(e).source, t = g.edge(e).target;
    atom_id as = owner[s], at = owner[t];
    edge_cmds[as].push_back(atom_command::edge(s, t, g.edge_data(e)));
    ++edge_count[as];
    if (as != at) {
      edge_cmds[at].push_back(atom_command::ghost_edge(s, t, g.edge_data(e)));
      ghosts[as].insert(t);
      ghosts[at].insert(s);
      meta.insert({std::min(as, at), std::max(as, at)});
    }
  }
  for (std::uint32_t a = 0; a < k; ++a) {
    for (vertex_id v : ghosts[a])
      ghost_vertex_cmds[a].push_back(
          atom_command::ghost_vertex(v, owner[v], g.vertex_data(v)));
    auto& cmds = out.journals[a].commands;
    cmds.insert(cmds.end(), ghost_vertex_cmds[a].begin(), ghost_vertex_cmds[a].end());
    cmds.insert(cmds.end(), edge_cmds[a].begin(), edge_cmds[a].end());
  }

  out.index.k = k;
  out.index.total_vertices = g.num_vertices();
  out.index.total_edges = g.num_edges();
  for (std::uint32_t a = 0; a < k; ++a) {
    atom_index::atom_info info;
    info.location = atom_file_name(a);
    info.owned_vertices = out.journals[a].owned_vertices().size();
    info.owned_edges = edge_count[a];
    out.index.atoms.push_back(std::move(info));
  }
  out.index.meta_edges.assign(meta.begin(), meta.end());
  return out;
}

partition_assignment place_atoms(const atom_index& index, machine_id m) {
  if (m < 1 || m > index.k)
    throw more_machines_than_atoms_error("machines " + std::to_string(m) +
                                         " vs atoms " + std::to_string(index.k));
  const std::uint32_t k = index.k;
  partition_assignment assign;
  assign.machines = m;
  assign.atom_machine.assign(k, 0);

  // greedy: largest atoms first onto the least-loaded machine
  std::vector<atom_id> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](atom_id a, atom_id b) {
    if (index.atoms[a].owned_vertices != index.atoms[b].owned_vertices)
      return index.atoms[a].owned_vertices > index.atoms[b].owned_vertices;
    return a < b;
  });
  std::vector<std::uint64_t> load(m, 0);
  for (atom_id a : order) {
    machine_id best = 0;
    for (machine_id p = 1; p < m; ++p)
      if (load[p] < load[best]) best = p;
    assign.atom_machine[a] = best;
    load[best] += index.atoms[a].owned_vertices;
  }

  // local refinement: move an atom when that strictly reduces the crossing
  // meta-edge count and keeps every machine within 25% of the mean load
  std::vector<std::vector<atom_id>> adj(k);
  for (const auto& [a, b] : index.meta_edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  const double mean = double(index.total_vertices) / double(m);
  const double hi = mean * 1.25, lo = mean * 0.75;
  for (int pass = 0; pass < 10; ++pass) {
    bool moved = false;
    for (atom_id a = 0; a < k; ++a) {
      machine_id cur = assign.atom_machine[a];
      std::uint64_t sz = index.atoms[a].owned_vertices;
      // crossing meta-edges of a per candidate machine
      std::vector<int> cross(m, 0);
      for (atom_id b : adj[a])
        for (machine_id p = 0; p < m; ++p)
          if (assign.atom_machine[b] != p) ++cross[p];
      machine_id best = cur;
      for (machine_id p = 0; p < m; ++p) {
        if (p == cur) continue;
        if (cross[p] >= cross[best]) continue;
        if (double(load[p] + sz) > hi) continue;
        if (double(load[cur] - sz) < lo && double(load[cur]) >= lo) continue;
        best = p;
      }
      if (best != cur) {
        load[cur] -= sz;
        load[best] += sz;
        assign.atom_machine[a] = best;
        moved = true;
      }
    }
    if (!moved) break;
  }
  return assign;
}

// ---- local partition -------------------------------------------------------

void local_partition::index_after_fill() {
  std::sort(vertices_.begin(), vertices_.end(),
            [](const vertex_entry& a, const vertex_entry& b) { return a.vid < b.vid; });
  std::sort(edges_.begin(), edges_.end(), [](const edge_entry& a, const edge_entry& b) {
    return std::pair(a.source, a.target) < std::pair(b.source, b.target);
  });
  vindex_.clear();
  eindex_.clear();
  owned_.clear();
  for (std::uint32_t i = 0; i < vertices_.size(); ++i) {
    vindex_[vertices_[i].vid] = i;
    if (vertices_[i].owned) owned_.push_back(vertices_[i].vid);
  }
  for (std::uint32_t i = 0; i < edges_.size(); ++i)
    eindex_[{edges_[i].source, edges_[i].target}] = i;

  for (auto& v : vertices_) {
    v.in_edges.clear();
    v.out_edges.clear();
    v.neighbors.clear();
  }
  for (std::uint32_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    auto si = vindex_.find(e.source);
    auto ti = vindex_.find(e.target);
    if (si != vindex_.end()) vertices_[si->second].out_edges.push_back(i);
    if (ti != vindex_.end()) vertices_[ti->second].in_edges.push_back(i);
  }
  for (auto& v : vertices_) {
    std::sort(v.in_edges.begin(), v.in_edges.end(), [&](std::uint32_t a, std::uint32_t b) {
      return edges_[a].source < edges_[b].source;
    });
    std::sort(v.out_edges.begin(), v.out_edges.end(), [&](std::uint32_t a, std::uint32_t b) {
      return edges_[a].target < edges_[b].target;
    });
    for (std::uint32_t e : v.in_edges) v.neighbors.push_back(edges_[e].source);
    for (std::uint32_t e : v.out_edges) v.neighbors.push_back(edges_[e].target);
    std::sort(v.neighbors.begin(), v.neighbors.end());
    v.neighbors.erase(std::unique(v.neighbors.begin(), v.neighbors.end()),
                      v.neighbors.end());
  }

  // ghost holders: machines owning a neighbor of an owned boundary element
  for (auto& v : vertices_) {
    if (!v.owned) continue;
    std::set<machine_id> holders;
    for (vertex_id u : v.neighbors) {
      const auto& ue = vertices_[vindex_.at(u)];
      if (ue.owner != machine) holders.insert(ue.owner);
    }
    v.ghost_holders.assign(holders.begin(), holders.end());
  }
  for (auto& e : edges_) {
    if (!e.owned) continue;
    e.ghost_holders.clear();
    const auto& te = vertices_[vindex_.at(e.target)];
    if (te.owner != machine) e.ghost_holders.push_back(te.owner);
  }
}

scope local_partition::make_scope(vertex_id center, consistency_model model,
                                  const global_values* globals) {
  vertex_entry& c = vertex(center);
  std::vector<scope::vertex_slot> nbrs;
  nbrs.reserve(c.neighbors.size());
  for (vertex_id u : c.neighbors) nbrs.push_back({u, &vertex(u).data});
  std::vector<scope::edge_slot> ins, outs;
  ins.reserve(c.in_edges.size());
  outs.reserve(c.out_edges.size());
  for (std::uint32_t e : c.in_edges) ins.push_back({edges_[e].source, center, &edges_[e].data});
  for (std::uint32_t e : c.out_edges) outs.push_back({center, edges_[e].target, &edges_[e].data});
  return scope(center, model, &c.data, std::move(nbrs), std::move(ins), std::move(outs),
               globals);
}

bool local_partition::has_element(const element_key& k) const {
  if (k.kind == 1) {
    std::uint32_t slot;
    return find_edge(k.a, k.b, slot);
  }
  return has_vertex(k.a);
}

payload local_partition::element_bytes(const element_key& k) const {
  switch (k.kind) {
    case 0: return vertex(k.a).data;
    case 2: return payload_writer().u64(vertex(k.a).snap_epoch).take();
    default: {
      std::uint32_t slot;
      if (!find_edge(k.a, k.b, slot))
        throw unknown_ghost_error("no local edge for element");
      return edges_[slot].data;
    }
  }
}

void local_partition::set_element_bytes(const element_key& k, const payload& bytes) {
  switch (k.kind) {
    case 0: vertex(k.a).data = bytes; break;
    case 2: vertex(k.a).snap_epoch = payload_reader(bytes).u64(); break;
    default: {
      std::uint32_t slot;
      if (!find_edge(k.a, k.b, slot))
        throw unknown_ghost_error("no local edge for element");
      edges_[slot].data = bytes;
    }
  }
}

std::uint64_t local_partition::element_version(const element_key& k) const {
  switch (k.kind) {
    case 0: return vertex(k.a).version;
    case 2: return vertex(k.a).snap_version;
    default: {
      std::uint32_t slot;
      if (!find_edge(k.a, k.b, slot))
        throw unknown_ghost_error("no local edge for element");
      return edges_[slot].version;
    }
  }
}

void local_partition::set_element_version(const element_key& k, std::uint64_t v) {
  switch (k.kind) {
    case 0: vertex(k.a).version = v; break;
    case 2: vertex(k.a).snap_version = v; break;
    default: {
      std::uint32_t slot;
      if (!find_edge(k.a, k.b, slot))
        throw unknown_ghost_error("no local edge for element");
      edges_[slot].version = v;
    }
  }
}

bool local_partition::element_owned(const element_key& k) const {
  if (k.kind == 1) {
    std::uint32_t slot;
    if (!find_edge(k.a, k.b, slot)) throw unknown_ghost_error("no local edge for element");
    return edges_[slot].owned;
  }
  return vertex(k.a).owned;
}

machine_id local_partition::element_owner(const element_key& k) const {
  if (k.kind == 1) {
    std::uint32_t slot;
    if (!find_edge(k.a, k.b, slot)) throw unknown_ghost_error("no local edge for element");
    return edges_[slot].owner;
  }
  return vertex(k.a).owner;
}

std::vector<machine_id> local_partition::element_holders(const element_key& k) const {
  if (k.kind == 1) {
    std::uint32_t slot;
    if (!find_edge(k.a, k.b, slot)) throw unknown_ghost_error("no local edge for element");
    return edges_[slot].ghost_holders;
  }
  return vertex(k.a).ghost_holders;
}

local_partition build_local_partition(const atom_index&,
                                      const partition_assignment& assignment,
                                      machine_id machine,
                                      const std::vector<atom_journal>& atoms) {
  local_partition part;
  part.machine = machine;

  std::map<vertex_id, local_partition::vertex_entry> verts;
  std::map<std::pair<vertex_id, vertex_id>, local_partition::edge_entry> edges;
  std::map<vertex_id, atom_id> vertex_atom;  // for ghosts: recorded owner atom

  for (const auto& j : atoms) {
    for (const auto& c : j.commands) {
      switch (c.op) {
        case atom_opcode::add_vertex: {
          auto& e = verts[c.id_a];
          e.vid = c.id_a;
          e.data = c.data;
          e.owned = true;
          e.owner = machine;
          vertex_atom[c.id_a] = j.id;
          break;
        }
        case atom_opcode::add_ghost_vertex: {
          machine_id owner = assignment.of(atom_id(c.id_b));
          vertex_atom.emplace(c.id_a, atom_id(c.id_b));
          auto it = verts.find(c.id_a);
          if (it != verts.end() && it->second.owned) break;  // owned locally by another atom
          auto& e = verts[c.id_a];
          e.vid = c.id_a;
          e.data = c.data;
          e.owned = owner == machine;
          e.owner = owner;
          break;
        }
        case atom_opcode::add_edge: {
          auto& e = edges[{c.id_a, c.id_b}];
          e.source = c.id_a;
          e.target = c.id_b;
          e.data = c.data;
          e.owned = true;
          e.owner = machine;
          break;
        }
        case atom_opcode::add_ghost_edge: {
          auto it = edges.find({c.id_a, c.id_b});
          if (it != edges.end() && it->second.owned) break;
          auto& e = edges[{c.id_a, c.id_b}];
          e.source = c.id_a;
          e.target = c.id_b;
          e.data = c.data;
          e.owned = false;
          break;
        }
      }
    }
  }
  // resolve ghost edge owners now every ghost vertex's atom is known
  for (auto& [key, e] : edges) {
    if (e.owned) continue;
    auto it = vertex_atom.find(e.source);
    if (it == vertex_atom.end())
      throw corrupt_atom_file_error("ghost edge source without owner record");
    e.owner = assignment.of(it->second);
    if (e.owner == machine) e.owned = true;  // both atoms landed here
  }

  for (auto& [vid, e] : verts) part.vertices().push_back(std::move(e));
  for (auto& [key, e] : edges) part.edges().push_back(std::move(e));
  part.index_after_fill();
  return part;
}

local_partition load_partition(const atom_index& index,
                               const partition_assignment& assignment,
                               machine_id machine, const std::string& dir) {
  std::vector<atom_journal> atoms;
  for (atom_id a = 0; a < index.k; ++a) {
    if (assignment.of(a) != machine) continue;
    atoms.push_back(read_atom(dir + "/" + index.atoms[a].location));
    if (atoms.back().id != a)
      throw corrupt_atom_file_error("atom id mismatch in " + index.atoms[a].location);
  }
  return build_local_partition(index, assignment, machine, atoms);
}

std::vector<local_partition> partition_in_memory(const data_graph& g, std::uint32_t k,
                                                 machine_id m, partition_method method) {
  over_partition_result parts = over_partition(g, k, method);
  partition_assignment assign = place_atoms(parts.index, m);
  std::vector<local_partition> out;
  for (machine_id p = 0; p < m; ++p) {
    std::vector<atom_journal> mine;
    for (atom_id a = 0; a < k; ++a)
      if (assign.of(a) == p) mine.push_back(parts.journals[a]);
    out.push_back(build_local_partition(parts.index, assign, p, mine));
  }
  return out;
}

void gather_partitions(const std::vector<local_partition>& parts, data_graph& into) {
  for (const auto& p : parts) {
    for (const auto& v : p.vertices())
      if (v.owned) into.vertex_data(v.vid) = v.data;
    for (const auto& e : p.edges()) {
      if (!e.owned) continue;
      edge_index idx;
      if (!into.find_edge(e.source, e.target, idx))
        throw missing_atom_error("gathered edge not in target graph");
      into.edge_data(idx) = e.data;
    }
  }
}

}  // namespace atomgraph
