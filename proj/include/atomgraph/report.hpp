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

#ifndef ATOMGRAPH_REPORT_HPP
#define ATOMGRAPH_REPORT_HPP

#include <string>
#include <vector>

#include <atomgraph/engine.hpp>
#include <atomgraph/trace.hpp>

namespace atomgraph {

/**
 * Machine-readable run summary. updates, makespan and the updates-vs-time
 * curve are recomputed from the trace; message and byte counters come from
 * the transport.
 */
struct run_report {
  std::uint64_t updates = 0;
  std::uint64_t messages = 0;
  std::uint64_t bytes_pushed = 0;
  logical_time makespan = 0;
  /// Cumulative updates completed by each completion instant.
  std::vector<std::pair<logical_time, std::uint64_t>> updates_over_time;

  static run_report from(const engine_result& result);

  /// Longest stretch of the run without a completed update ("flatline").
  logical_time longest_update_gap() const;

  std::string to_json() const;
};

/// Line-delimited trace records (one JSON object per line) for external
/// auditing; reading back reproduces the records exactly.
void write_trace_jsonl(const run_trace& trace, const std::string& path);
run_trace read_trace_jsonl(const std::string& path);

}  // namespace atomgraph

#endif
