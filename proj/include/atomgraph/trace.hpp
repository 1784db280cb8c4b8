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

#ifndef ATOMGRAPH_TRACE_HPP
#define ATOMGRAPH_TRACE_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <atomgraph/scope.hpp>
#include <atomgraph/util.hpp>

namespace atomgraph {

using logical_time = std::uint64_t;

enum class trace_kind : std::uint8_t {
  update,
  lock_acquire,
  lock_release,
  snapshot_save,
  barrier,
  sync
};

inline const char* to_string(trace_kind k) {
  switch (k) {
    case trace_kind::update: return "update";
    case trace_kind::lock_acquire: return "lock-acquire";
    case trace_kind::lock_release: return "lock-release";
    case trace_kind::snapshot_save: return "snapshot-save";
    case trace_kind::barrier: return "barrier";
    case trace_kind::sync: return "sync";
  }
  return "?";
}

struct trace_record {
  std::uint64_t seq = 0;        // per-machine, strictly increasing
  logical_time start = 0;
  logical_time end = 0;
  std::uint32_t machine = 0;
  vertex_id vertex = invalid_vertex;
  trace_kind kind = trace_kind::update;
  std::uint64_t read_digest = 0;
  std::uint64_t write_digest = 0;
  std::vector<element_key> writes;  // elements written (update) or saved (snapshot)
  std::string note;                 // free-form detail (snapshot epoch, sync name, ...)
};

/// A completed run's merged trace, ordered by (start, machine, seq).
struct run_trace {
  std::vector<trace_record> records;

  void merge_sort_records() {
    std::stable_sort(records.begin(), records.end(),
                     [](const trace_record& a, const trace_record& b) {
                       if (a.start != b.start) return a.start < b.start;
                       if (a.machine != b.machine) return a.machine < b.machine;
                       return a.seq < b.seq;
                     });
  }

  std::uint64_t digest() const {
    hasher64 h;
    for (const auto& r : records) {
      h.u64(r.seq).u64(r.start).u64(r.end).u64(r.machine).u64(r.vertex);
      h.u64(std::uint64_t(r.kind)).u64(r.read_digest).u64(r.write_digest);
      for (const auto& k : r.writes) h.u64(k.kind).u64(k.a).u64(k.b);
      h.bytes(r.note.data(), r.note.size());
    }
    return h.digest();
  }

  std::size_t count(trace_kind k) const {
    return std::size_t(std::count_if(records.begin(), records.end(),
                                     [&](const trace_record& r) { return r.kind == k; }));
  }
};

/// Per-machine sink; engines write locally, the harness merges at run end.
class trace_sink {
public:
  explicit trace_sink(std::uint32_t machine) : machine_(machine) {}

  trace_record& append(trace_kind kind, logical_time start, logical_time end,
                       vertex_id v = invalid_vertex) {
    trace_record r;
    r.seq = next_seq_++;
    r.start = start;
    r.end = end;
    r.machine = machine_;
    r.vertex = v;
    r.kind = kind;
    records_.push_back(std::move(r));
    return records_.back();
  }

  const std::vector<trace_record>& records() const { return records_; }
  std::vector<trace_record>& records() { return records_; }

private:
  std::uint32_t machine_;
  std::uint64_t next_seq_ = 0;
  std::vector<trace_record> records_;
};

inline run_trace merge_traces(const std::vector<trace_sink>& sinks) {
  run_trace t;
  for (const auto& s : sinks)
    t.records.insert(t.records.end(), s.records().begin(), s.records().end());
  t.merge_sort_records();
  return t;
}

}  // namespace atomgraph

#endif
