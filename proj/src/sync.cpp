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

#include <atomgraph/sync.hpp>

#include <cmath>

#include <atomgraph/errors.hpp>

namespace atomgraph {

void sync_registry::register_sync(const std::string& name, sync_task task) {
  if (tasks_.count(name)) throw duplicate_name_error("sync task already registered: " + name);
  if (!task.finalize) task.finalize = [](const payload& p) { return p; };
  if (!task.acc_equal)
    task.acc_equal = [](const payload& a, const payload& b) { return a == b; };
  if (!task.gen)
    throw non_commutative_combine_error("sync task needs an accumulator generator: " + name);

  rng r(fnv1a64(name.data(), name.size()));
  for (int trial = 0; trial < 100; ++trial) {
    payload a = task.gen(r), b = task.gen(r), c = task.gen(r);
    if (!task.acc_equal(task.combine(a, b), task.combine(b, a)))
      throw non_commutative_combine_error("combine is not commutative: " + name);
    if (!task.acc_equal(task.combine(a, task.combine(b, c)),
                        task.combine(task.combine(a, b), c)))
      throw non_commutative_combine_error("combine is not associative: " + name);
    // identity behaves as a unit
    if (!task.acc_equal(task.combine(task.identity, a), a) ||
        !task.acc_equal(task.combine(a, task.identity), a))
      throw non_commutative_combine_error("identity is not a unit: " + name);
  }
  tasks_.emplace(name, std::move(task));
}

payload sync_partial(local_partition& part, const sync_task& task,
                     consistency_model model, const global_values* globals) {
  payload acc = task.identity;
  for (vertex_id v : part.owned_vertices()) {
    scope s = part.make_scope(v, model, globals);
    acc = task.combine(acc, task.map(s));
  }
  return acc;
}

payload run_sync_pass(std::vector<local_partition>& parts, const sync_task& task,
                      consistency_model model) {
  payload acc = task.identity;
  for (auto& part : parts) acc = task.combine(acc, sync_partial(part, task, model));
  return task.finalize ? task.finalize(acc) : acc;
}

payload run_sync_pass(data_graph& g, const sync_task& task, consistency_model model) {
  payload acc = task.identity;
  for (vertex_id v = 0; v < g.num_vertices(); ++v) {
    scope s = make_graph_scope(g, v, model);
    acc = task.combine(acc, task.map(s));
  }
  return task.finalize ? task.finalize(acc) : acc;
}

namespace {

payload f64_payload(double v) { return payload_writer().f64(v).take(); }

std::function<bool(const payload&, const payload&)> f64_approx_equal() {
  return [](const payload& a, const payload& b) {
    double x = sync_value_f64(a), y = sync_value_f64(b);
    double scale = std::max({std::fabs(x), std::fabs(y), 1.0});
    return std::fabs(x - y) <= 1e-9 * scale;
  };
}

std::function<payload(rng&)> f64_gen() {
  return [](rng& r) { return f64_payload(r.uniform(-100.0, 100.0)); };
}

}  // namespace

sync_task sync_sum_f64(std::function<double(scope&)> map_value, std::uint64_t period) {
  sync_task t;
  t.map = [mv = std::move(map_value)](scope& s) { return f64_payload(mv(s)); };
  t.combine = [](const payload& a, const payload& b) {
    return f64_payload(sync_value_f64(a) + sync_value_f64(b));
  };
  t.identity = f64_payload(0.0);
  t.period = period;
  t.gen = f64_gen();
  t.acc_equal = f64_approx_equal();
  return t;
}

sync_task sync_max_f64(std::function<double(scope&)> map_value, std::uint64_t period) {
  sync_task t;
  t.map = [mv = std::move(map_value)](scope& s) { return f64_payload(mv(s)); };
  t.combine = [](const payload& a, const payload& b) {
    return f64_payload(std::max(sync_value_f64(a), sync_value_f64(b)));
  };
  t.identity = f64_payload(-std::numeric_limits<double>::infinity());
  t.period = period;
  t.gen = f64_gen();
  t.acc_equal = [](const payload& a, const payload& b) {
    return sync_value_f64(a) == sync_value_f64(b);
  };
  return t;
}

sync_task sync_count(std::uint64_t period) {
  sync_task t;
  t.map = [](scope&) { return payload_writer().u64(1).take(); };
  t.combine = [](const payload& a, const payload& b) {
    return payload_writer().u64(sync_value_u64(a) + sync_value_u64(b)).take();
  };
  t.identity = payload_writer().u64(0).take();
  t.period = period;
  t.gen = [](rng& r) { return payload_writer().u64(r.below(1000)).take(); };
  return t;
}

}  // namespace atomgraph
