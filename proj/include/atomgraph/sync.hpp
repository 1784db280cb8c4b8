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

#ifndef ATOMGRAPH_SYNC_HPP
#define ATOMGRAPH_SYNC_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <atomgraph/partition.hpp>
#include <atomgraph/scope.hpp>

namespace atomgraph {

/**
 * A global aggregate Z = Finalize(combine over all scopes of Map(S_v)).
 * combine must be associative and commutative; registration runs a
 * randomized algebraic check against the task's accumulator generator.
 */
struct sync_task {
  std::function<payload(scope&)> map;
  std::function<payload(const payload&, const payload&)> combine;
  std::function<payload(const payload&)> finalize;  // defaults to identity
  payload identity;
  /// Evaluation period: color-steps (chromatic) or updates (locking).
  std::uint64_t period = 1;
  bool consistent = true;
  /// Random accumulator generator for the registration property check.
  std::function<payload(rng&)> gen;
  /// Accumulator equality for the property check; byte equality unless the
  /// accumulator is floating point.
  std::function<bool(const payload&, const payload&)> acc_equal;
};

class sync_registry {
public:
  /// Registers the task after a randomized commutativity/associativity
  /// check (100 triples). Throws duplicate_name_error or
  /// non_commutative_combine_error.
  void register_sync(const std::string& name, sync_task task);

  const std::map<std::string, sync_task>& tasks() const { return tasks_; }
  bool has(const std::string& name) const { return tasks_.count(name) > 0; }
  const sync_task& at(const std::string& name) const { return tasks_.at(name); }

private:
  std::map<std::string, sync_task> tasks_;
};

/// Fold Map over one machine's owned scopes in ascending vertex order.
payload sync_partial(local_partition& part, const sync_task& task,
                     consistency_model model, const global_values* globals = nullptr);

/// Reference pass over a set of partitions: per-machine partials combined
/// in machine-id order, then finalized. The engines' distributed passes
/// must agree with this.
payload run_sync_pass(std::vector<local_partition>& parts, const sync_task& task,
                      consistency_model model);

/// Same aggregation over a plain graph (single machine fold), for the
/// partition-independence checks.
payload run_sync_pass(data_graph& g, const sync_task& task, consistency_model model);

// Common accumulator helpers: one f64 carried in the payload.
sync_task sync_sum_f64(std::function<double(scope&)> map_value, std::uint64_t period = 1);
sync_task sync_max_f64(std::function<double(scope&)> map_value, std::uint64_t period = 1);
sync_task sync_count(std::uint64_t period = 1);

inline double sync_value_f64(const payload& p) { return payload_reader(p).f64(); }
inline std::uint64_t sync_value_u64(const payload& p) { return payload_reader(p).u64(); }

}  // namespace atomgraph

#endif
