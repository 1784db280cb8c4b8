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

#ifndef ATOMGRAPH_TASKSET_HPP
#define ATOMGRAPH_TASKSET_HPP

#include <cstdint>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

#include <atomgraph/scope.hpp>

namespace atomgraph {

enum class removal_policy { fifo, lifo, priority_max, explicit_order };

/**
 * The pending vertex set T. At most one entry per vertex; re-adding a
 * pending vertex keeps its queue position and raises its priority to the
 * max of old and new.
 */
class task_set {
public:
  /// Returns true if the vertex was newly inserted (not already pending).
  bool add(vertex_id v, double priority = 0.0) {
    auto it = pending_.find(v);
    if (it != pending_.end()) {
      if (priority > it->second) {
        it->second = priority;
        heap_.push({priority, order_.size(), v});
      }
      return false;
    }
    pending_.emplace(v, priority);
    order_.push_back(v);
    heap_.push({priority, order_.size() - 1, v});
    return true;
  }

  void add_all(const std::vector<scheduled_task>& tasks) {
    for (const auto& t : tasks) add(t.vertex, t.priority);
  }

  bool contains(vertex_id v) const { return pending_.count(v) > 0; }
  double priority_of(vertex_id v) const { return pending_.at(v); }
  std::size_t size() const { return pending_.size(); }
  bool empty() const { return pending_.empty(); }

  std::optional<scheduled_task> remove_next(removal_policy policy) {
    switch (policy) {
      case removal_policy::fifo:
        while (head_ < order_.size()) {
          vertex_id v = order_[head_++];
          auto it = pending_.find(v);
          if (it != pending_.end()) return take(it);
        }
        return std::nullopt;
      case removal_policy::lifo:
        while (!order_.empty()) {
          vertex_id v = order_.back();
          order_.pop_back();
          auto it = pending_.find(v);
          if (it != pending_.end()) return take(it);
        }
        return std::nullopt;
      case removal_policy::priority_max:
        while (!heap_.empty()) {
          heap_entry e = heap_.top();
          heap_.pop();
          auto it = pending_.find(e.vertex);
          // stale heap entries: vertex gone or priority superseded
          if (it != pending_.end() && it->second == e.priority) return take(it);
        }
        return std::nullopt;
      case removal_policy::explicit_order:
        // handled by the caller (run_serial replays a scripted order)
        return std::nullopt;
    }
    return std::nullopt;
  }

  /// Remove a specific vertex if pending (explicit-order replay).
  std::optional<scheduled_task> remove(vertex_id v) {
    auto it = pending_.find(v);
    if (it == pending_.end()) return std::nullopt;
    return take(it);
  }

private:
  struct heap_entry {
    double priority;
    std::size_t seq;
    vertex_id vertex;
    bool operator<(const heap_entry& o) const {
      // max-heap on priority; FIFO within equal priority
      if (priority != o.priority) return priority < o.priority;
      return seq > o.seq;
    }
  };

  std::optional<scheduled_task> take(std::unordered_map<vertex_id, double>::iterator it) {
    scheduled_task t{it->first, it->second};
    pending_.erase(it);
    return t;
  }

  std::unordered_map<vertex_id, double> pending_;
  std::vector<vertex_id> order_;  // insertion order; lazily compacted
  std::size_t head_ = 0;
  std::priority_queue<heap_entry> heap_;
};

/// T <- T union T' with per-vertex dedup, max-priority on duplicates.
inline task_set schedule_merge(task_set t, const std::vector<scheduled_task>& additions) {
  t.add_all(additions);
  return t;
}

}  // namespace atomgraph

#endif
