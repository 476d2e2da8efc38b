// Copyright 2026 The kgsynth Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KGSYNTH_SCHEMA_H_
#define KGSYNTH_SCHEMA_H_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kgsynth {

struct EntityType {
  std::string type_name;
  std::string description;
  std::vector<std::string> attribute_keys;
  // Type-level stand-in used by fuzzification ("someone").
  std::string fuzzified_placeholder;
};

struct RelationType {
  std::string relation_name;
  // Empty means any entity type.
  std::vector<std::string> allowed_head_types;
  std::vector<std::string> allowed_tail_types;
  std::string description;
};

// User-authored ontology. File form mirrors the fields one to one:
//   {"name", "entity_types": [...], "relation_types": [...],
//    "allow_discovered_relations": false}
struct Schema {
  std::string name;
  std::vector<EntityType> entity_types;
  std::vector<RelationType> relation_types;
  bool allow_discovered_relations = false;

  const EntityType* entity_type(std::string_view type_name) const;
  const RelationType* relation(std::string_view relation_name) const;

  // Known relation whose endpoint types fit. An empty (untyped) endpoint type
  // fits any constraint.
  bool relation_permitted(std::string_view relation, std::string_view head_type,
                          std::string_view tail_type) const;

  // Empty when the type is unknown.
  std::string placeholder_for(std::string_view type_name) const;

  // Throws FormatError (bad shape) or ConfigError (duplicate names, empty
  // placeholder).
  static Schema from_json(const nlohmann::json& j);
  static Schema parse(std::string_view text);
  static Schema load(const std::string& path);
  nlohmann::ordered_json to_json() const;
};

}  // namespace kgsynth

#endif  // KGSYNTH_SCHEMA_H_
