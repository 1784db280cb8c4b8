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

#include <atomgraph/report.hpp>

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include <atomgraph/errors.hpp>

namespace atomgraph {

using nlohmann::json;

run_report run_report::from(const engine_result& result) {
  run_report r;
  r.messages = result.messages_sent;
  r.bytes_pushed = result.bytes_pushed;
  r.makespan = result.makespan;

  std::vector<logical_time> ends;
  for (const auto& rec : result.trace.records)
    if (rec.kind == trace_kind::update) ends.push_back(rec.end);
  std::sort(ends.begin(), ends.end());
  r.updates = ends.size();
  r.updates_over_time.reserve(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) {
    if (!r.updates_over_time.empty() && r.updates_over_time.back().first == ends[i]) {
      r.updates_over_time.back().second = i + 1;
    } else {
      r.updates_over_time.emplace_back(ends[i], i + 1);
    }
  }
  return r;
}

logical_time run_report::longest_update_gap() const {
  logical_time gap = 0, prev = 0;
  for (const auto& [t, n] : updates_over_time) {
    gap = std::max(gap, t - prev);
    prev = t;
  }
  gap = std::max(gap, makespan > prev ? makespan - prev : 0);
  return gap;
}

std::string run_report::to_json() const {
  json j;
  j["updates"] = updates;
  j["messages"] = messages;
  j["bytes_pushed"] = bytes_pushed;
  j["makespan"] = makespan;
  json curve = json::array();
  for (const auto& [t, n] : updates_over_time) curve.push_back({t, n});
  j["updates_over_time"] = curve;
  return j.dump();
}

void write_trace_jsonl(const run_trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw sink_write_error("cannot write trace: " + path);
  for (const auto& r : trace.records) {
    json j;
    j["seq"] = r.seq;
    j["t0"] = r.start;
    j["t1"] = r.end;
    j["m"] = r.machine;
    if (r.vertex != invalid_vertex) j["v"] = r.vertex;
    j["kind"] = to_string(r.kind);
    if (r.kind == trace_kind::update) {
      j["rd"] = r.read_digest;
      j["wr"] = r.write_digest;
    }
    if (!r.writes.empty()) {
      json w = json::array();
      for (const auto& k : r.writes) w.push_back({k.kind, k.a, k.b});
      j["writes"] = w;
    }
    if (!r.note.empty()) j["note"] = r.note;
    out << j.dump() << "\n";
  }
}

run_trace read_trace_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw incomplete_trace_error("trace file not found: " + path);
  run_trace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw incomplete_trace_error("malformed trace line: " + line);
    trace_record r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.start = j.at("t0").get<logical_time>();
    r.end = j.at("t1").get<logical_time>();
    r.machine = j.at("m").get<std::uint32_t>();
    if (j.contains("v")) r.vertex = j.at("v").get<vertex_id>();
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "update") r.kind = trace_kind::update;
    else if (kind == "lock-acquire") r.kind = trace_kind::lock_acquire;
    else if (kind == "lock-release") r.kind = trace_kind::lock_release;
    else if (kind == "snapshot-save") r.kind = trace_kind::snapshot_save;
    else if (kind == "barrier") r.kind = trace_kind::barrier;
    else if (kind == "sync") r.kind = trace_kind::sync;
    else throw incomplete_trace_error("unknown record kind: " + kind);
    if (j.contains("rd")) r.read_digest = j.at("rd").get<std::uint64_t>();
    if (j.contains("wr")) r.write_digest = j.at("wr").get<std::uint64_t>();
    if (j.contains("writes")) {
      for (const auto& w : j.at("writes")) {
        element_key k;
        k.kind = w.at(0).get<std::uint8_t>();
        k.a = w.at(1).get<std::uint64_t>();
        k.b = w.at(2).get<std::uint64_t>();
        r.writes.push_back(k);
      }
    }
    if (j.contains("note")) r.note = j.at("note").get<std::string>();
    trace.records.push_back(std::move(r));
  }
  return trace;
}

}  // namespace atomgraph
