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

#ifndef ATOMGRAPH_TEXTIO_HPP
#define ATOMGRAPH_TEXTIO_HPP

#include <string>

#include <atomgraph/graph.hpp>

namespace atomgraph {

// Graph text format: one header line "#vertices N", then one line per
// directed edge "src<TAB>dst<TAB>edge_payload_hex". Vertex payloads live in
// a sidecar file of "vid<TAB>payload_hex" lines.

data_graph read_graph_text(const std::string& graph_path,
                           const std::string& vertex_sidecar_path = "");

void write_graph_text(const data_graph& g, const std::string& graph_path,
                      const std::string& vertex_sidecar_path = "");

/// Write just the vertex payloads in sidecar format (vid<TAB>payload_hex).
void write_vertex_sidecar(const data_graph& g, const std::string& path);

}  // namespace atomgraph

#endif
