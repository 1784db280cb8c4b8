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

#include <atomgraph/textio.hpp>

#include <fstream>
#include <sstream>

#include <atomgraph/errors.hpp>
#include <atomgraph/util.hpp>

namespace atomgraph {

data_graph read_graph_text(const std::string& graph_path,
                           const std::string& vertex_sidecar_path) {
  std::ifstream in(graph_path);
  if (!in) throw missing_atom_error("graph file not found: " + graph_path);
  std::string line;
  std::size_t n = 0;
  bool have_header = false;
  std::vector<edge_endpoints> edges;
  std::vector<payload> edata;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("#vertices", 0) == 0) {
      n = std::stoull(line.substr(9));
      have_header = true;
      continue;
    }
    if (line[0] == '#') continue;
    std::istringstream ls(line);
    vertex_id s, t;
    std::string hex;
    if (!(ls >> s >> t)) throw codec_error("bad edge line: " + line);
    ls >> hex;
    edges.push_back({s, t});
    edata.push_back(hex.empty() ? payload{} : from_hex(hex));
  }
  if (!have_header) throw codec_error("missing '#vertices N' header: " + graph_path);

  std::vector<payload> vdata(n);
  if (!vertex_sidecar_path.empty()) {
    std::ifstream vin(vertex_sidecar_path);
    if (!vin) throw missing_atom_error("vertex sidecar not found: " + vertex_sidecar_path);
    while (std::getline(vin, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      vertex_id v;
      std::string hex;
      if (!(ls >> v >> hex)) throw codec_error("bad vertex line: " + line);
      if (v >= n) throw endpoint_out_of_range_error("sidecar vertex out of range");
      vdata[v] = from_hex(hex);
    }
  }
  return build_graph(n, std::move(edges), std::move(vdata), std::move(edata));
}

void write_graph_text(const data_graph& g, const std::string& graph_path,
                      const std::string& vertex_sidecar_path) {
  std::ofstream out(graph_path);
  if (!out) throw sink_write_error("cannot write: " + graph_path);
  out << "#vertices " << g.num_vertices() << "\n";
  for (edge_index e = 0; e < g.num_edges(); ++e)
    out << g.edge(e).source << "\t" << g.edge(e).target << "\t"
        << to_hex(g.edge_data(e)) << "\n";
  if (!vertex_sidecar_path.empty()) write_vertex_sidecar(g, vertex_sidecar_path);
}

void write_vertex_sidecar(const data_graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw sink_write_error("cannot write: " + path);
  for (vertex_id v = 0; v < g.num_vertices(); ++v)
    out << v << "\t" << to_hex(g.vertex_data(v)) << "\n";
}

}  // namespace atomgraph
