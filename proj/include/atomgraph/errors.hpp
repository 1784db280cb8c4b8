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

#ifndef ATOMGRAPH_ERRORS_HPP
#define ATOMGRAPH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace atomgraph {

#define ATOMGRAPH_DEFINE_ERROR(name)                                   \
  class name : public std::runtime_error {                             \
  public:                                                              \
    explicit name(const std::string& what) : std::runtime_error(what) {} \
  }

// graph construction
ATOMGRAPH_DEFINE_ERROR(duplicate_edge_error);
ATOMGRAPH_DEFINE_ERROR(self_loop_error);
ATOMGRAPH_DEFINE_ERROR(endpoint_out_of_range_error);

// scope access
ATOMGRAPH_DEFINE_ERROR(target_not_in_scope_error);
ATOMGRAPH_DEFINE_ERROR(access_violation_error);

// execution
ATOMGRAPH_DEFINE_ERROR(iteration_budget_error);
ATOMGRAPH_DEFINE_ERROR(invalid_coloring_error);
ATOMGRAPH_DEFINE_ERROR(not_bipartite_error);

// atom files and partitioning
ATOMGRAPH_DEFINE_ERROR(k_too_large_error);
ATOMGRAPH_DEFINE_ERROR(corrupt_atom_file_error);
ATOMGRAPH_DEFINE_ERROR(more_machines_than_atoms_error);
ATOMGRAPH_DEFINE_ERROR(missing_atom_error);

// transport
ATOMGRAPH_DEFINE_ERROR(unknown_machine_error);
ATOMGRAPH_DEFINE_ERROR(barrier_timeout_error);

// ghost cache
ATOMGRAPH_DEFINE_ERROR(not_owned_error);
ATOMGRAPH_DEFINE_ERROR(unknown_ghost_error);

// locking
ATOMGRAPH_DEFINE_ERROR(not_held_error);

// snapshots
ATOMGRAPH_DEFINE_ERROR(non_positive_input_error);
ATOMGRAPH_DEFINE_ERROR(sink_write_error);
ATOMGRAPH_DEFINE_ERROR(requires_locking_engine_error);
ATOMGRAPH_DEFINE_ERROR(incomplete_checkpoint_error);

// sync
ATOMGRAPH_DEFINE_ERROR(duplicate_name_error);
ATOMGRAPH_DEFINE_ERROR(non_commutative_combine_error);

// trace / verification
ATOMGRAPH_DEFINE_ERROR(incomplete_trace_error);

// applications
ATOMGRAPH_DEFINE_ERROR(singular_system_error);

#undef ATOMGRAPH_DEFINE_ERROR

}  // namespace atomgraph

#endif
