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

#ifndef ATOMGRAPH_SNAPSHOT_HPP
#define ATOMGRAPH_SNAPSHOT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <atomgraph/partition.hpp>

namespace atomgraph {

/// Young's first-order optimum: sqrt(2 * t_checkpoint * t_mtbf). Both
/// inputs must be positive; strictly increasing in each.
double optimal_interval(double t_checkpoint, double t_mtbf);

struct checkpoint_policy {
  double t_checkpoint = 0;
  double t_mtbf = 0;
  double interval() const { return optimal_interval(t_checkpoint, t_mtbf); }
};

/**
 * One machine's saved records for one epoch. Vertex records carry the
 * vertex payload; edge records carry the payloads of one or both
 * directions of a vertex pair.
 */
struct snapshot_journal {
  std::uint32_t epoch = 0;
  std::uint16_t machine = 0;
  bool complete = false;

  struct record {
    std::uint8_t kind = 0;  // 0 vertex, 1 edge pair
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    bool has_fwd = false;  // payload of edge a->b (unused flag for vertices)
    bool has_rev = false;  // payload of edge b->a
    payload fwd;
    payload rev;

    bool operator==(const record&) const = default;

    static record vertex(vertex_id v, payload data) {
      record r;
      r.kind = 0;
      r.a = v;
      r.has_fwd = true;
      r.fwd = std::move(data);
      return r;
    }
    static record edge_pair(vertex_id a, vertex_id b, std::optional<payload> fwd,
                            std::optional<payload> rev) {
      record r;
      r.kind = 1;
      r.a = a;
      r.b = b;
      if (fwd) {
        r.has_fwd = true;
        r.fwd = std::move(*fwd);
      }
      if (rev) {
        r.has_rev = true;
        r.rev = std::move(*rev);
      }
      return r;
    }
  };
  std::vector<record> records;
};

// Journal file: magic "SNAP", version u16, flags u16, epoch u32, machine
// u16; records (kind u8, ids, presence flags, payloads); a completeness
// marker record; u64 checksum trailer over the record bytes.
void write_snapshot_journal(const snapshot_journal& j, const std::string& path);
snapshot_journal read_snapshot_journal(const std::string& path);

/// In-memory sink for all epochs of a run, with filesystem persistence.
class snapshot_store {
public:
  void add(snapshot_journal j) { journals_.push_back(std::move(j)); }
  const std::vector<snapshot_journal>& all() const { return journals_; }
  std::vector<const snapshot_journal*> epoch(std::uint32_t e) const;
  std::uint32_t max_epoch() const;
  bool empty() const { return journals_.empty(); }

  void write_dir(const std::string& dir) const;
  static snapshot_store load_dir(const std::string& dir);

private:
  std::vector<snapshot_journal> journals_;
};

struct recovery_result {
  std::vector<local_partition> partitions;
  std::uint32_t used_epoch = 0;
  bool fell_back = false;  // requested epoch was incomplete on some machine
};

/**
 * Rebuild partitions from atoms, then overlay snapshot epochs 0..e in
 * order. If epoch e is missing a completeness marker on any machine, falls
 * back to e-1 (and so on); throws incomplete_checkpoint_error when no
 * complete epoch remains. Ghost copies are refreshed from owners and all
 * version stamps reset, so the result is a coherent load-time state.
 */
recovery_result recover(const atom_index& index, const partition_assignment& assignment,
                        const std::vector<atom_journal>& atoms, const snapshot_store& store,
                        std::uint32_t epoch);

/// Same, reading atoms from a directory.
recovery_result recover_from_dirs(const std::string& atom_dir, const std::string& snap_dir,
                                  machine_id machines, std::uint32_t epoch);

}  // namespace atomgraph

#endif
