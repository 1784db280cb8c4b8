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

#ifndef ATOMGRAPH_GLOBALS_HPP
#define ATOMGRAPH_GLOBALS_HPP

#include <cstdint>
#include <map>
#include <string>

#include <atomgraph/util.hpp>

namespace atomgraph {

/**
 * Read replica of named global values maintained by sync operations.
 * Update functions only ever see a whole finalized value; partial
 * accumulations are never installed here.
 */
class global_values {
public:
  struct entry {
    std::uint64_t version = 0;
    payload value;
  };

  void install(const std::string& name, std::uint64_t version, payload value) {
    auto& e = values_[name];
    if (version >= e.version) {
      e.version = version;
      e.value = std::move(value);
    }
  }

  const entry* find(const std::string& name) const {
    auto it = values_.find(name);
    return it == values_.end() ? nullptr : &it->second;
  }

  bool has(const std::string& name) const { return values_.count(name) > 0; }

private:
  std::map<std::string, entry> values_;
};

}  // namespace atomgraph

#endif
