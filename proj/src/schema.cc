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

#include "kgsynth/schema.h"

#include <algorithm>
#include <set>

#include "kgsynth/errors.h"
#include "kgsynth/json_locate.h"
#include "kgsynth/text.h"

namespace kgsynth {

using nlohmann::json;

const EntityType* Schema::entity_type(std::string_view type_name) const {
  for (const EntityType& t : entity_types) {
    if (t.type_name == type_name) return &t;
  }
  return nullptr;
}

const RelationType* Schema::relation(std::string_view relation_name) const {
  for (const RelationType& r : relation_types) {
    if (r.relation_name == relation_name) return &r;
  }
  return nullptr;
}

namespace {

bool fits(const std::vector<std::string>& allowed, std::string_view type) {
  return allowed.empty() || type.empty() ||
         std::find(allowed.begin(), allowed.end(), type) != allowed.end();
}

std::string str_field(const json& j, const char* key, const std::string& where,
                      bool required) {
  if (!j.contains(key)) {
    if (required) throw FormatError("missing field", where + "/" + key);
    return {};
  }
  if (!j[key].is_string()) throw FormatError("expected a string", where + "/" + key);
  return j[key].get<std::string>();
}

std::vector<std::string> list_field(const json& j, const char* key, const std::string& where) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) throw FormatError("expected an array", where + "/" + key);
  for (const json& v : j[key]) {
    if (!v.is_string()) throw FormatError("expected strings", where + "/" + key);
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

bool Schema::relation_permitted(std::string_view rel, std::string_view head_type,
                                std::string_view tail_type) const {
  const RelationType* r = relation(rel);
  return r && fits(r->allowed_head_types, head_type) && fits(r->allowed_tail_types, tail_type);
}

std::string Schema::placeholder_for(std::string_view type_name) const {
  const EntityType* t = entity_type(type_name);
  return t ? t->fuzzified_placeholder : std::string();
}

Schema Schema::from_json(const json& j) {
  if (!j.is_object()) throw FormatError("schema must be an object", "");
  Schema s;
  s.name = str_field(j, "name", "", true);
  if (s.name.empty()) throw ConfigError("schema name is empty");
  if (j.contains("entity_types")) {
    if (!j["entity_types"].is_array()) throw FormatError("expected an array", "/entity_types");
    for (std::size_t i = 0; i < j["entity_types"].size(); ++i) {
      const json& e = j["entity_types"][i];
      std::string at = "/entity_types/" + std::to_string(i);
      if (!e.is_object()) throw FormatError("expected an object", at);
      EntityType t;
      t.type_name = str_field(e, "type_name", at, true);
      t.description = str_field(e, "description", at, false);
      t.attribute_keys = list_field(e, "attribute_keys", at);
      t.fuzzified_placeholder = str_field(e, "fuzzified_placeholder", at, false);
      s.entity_types.push_back(std::move(t));
    }
  }
  if (j.contains("relation_types")) {
    if (!j["relation_types"].is_array()) throw FormatError("expected an array", "/relation_types");
    for (std::size_t i = 0; i < j["relation_types"].size(); ++i) {
      const json& e = j["relation_types"][i];
      std::string at = "/relation_types/" + std::to_string(i);
      if (!e.is_object()) throw FormatError("expected an object", at);
      RelationType r;
      r.relation_name = str_field(e, "relation_name", at, true);
      r.allowed_head_types = list_field(e, "allowed_head_types", at);
      r.allowed_tail_types = list_field(e, "allowed_tail_types", at);
      r.description = str_field(e, "description", at, false);
      s.relation_types.push_back(std::move(r));
    }
  }
  if (j.contains("allow_discovered_relations")) {
    if (!j["allow_discovered_relations"].is_boolean()) {
      throw FormatError("expected a boolean", "/allow_discovered_relations");
    }
    s.allow_discovered_relations = j["allow_discovered_relations"].get<bool>();
  }

  std::set<std::string> seen;
  for (const EntityType& t : s.entity_types) {
    if (t.type_name.empty()) throw ConfigError("entity type with empty name");
    if (!seen.insert(t.type_name).second) {
      throw ConfigError("duplicate entity type '" + t.type_name + "'");
    }
    if (trim(t.fuzzified_placeholder).empty()) {
      throw ConfigError("entity type '" + t.type_name + "' has no fuzzified_placeholder");
    }
  }
  seen.clear();
  for (const RelationType& r : s.relation_types) {
    if (r.relation_name.empty()) throw ConfigError("relation type with empty name");
    if (!seen.insert(r.relation_name).second) {
      throw ConfigError("duplicate relation type '" + r.relation_name + "'");
    }
  }
  return s;
}

Schema Schema::parse(std::string_view text) {
  LocatedJson doc = parse_located(text);
  try {
    return from_json(doc.value);
  } catch (const FormatError& e) {
    throw FormatError(e.what(), e.field(), doc.offset_of(e.field()));
  }
}

Schema Schema::load(const std::string& path) { return parse(read_file(path)); }

nlohmann::ordered_json Schema::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["entity_types"] = nlohmann::ordered_json::array();
  for (const EntityType& t : entity_types) {
    j["entity_types"].push_back({{"type_name", t.type_name},
                                 {"description", t.description},
                                 {"attribute_keys", t.attribute_keys},
                                 {"fuzzified_placeholder", t.fuzzified_placeholder}});
  }
  j["relation_types"] = nlohmann::ordered_json::array();
  for (const RelationType& r : relation_types) {
    j["relation_types"].push_back({{"relation_name", r.relation_name},
                                   {"allowed_head_types", r.allowed_head_types},
                                   {"allowed_tail_types", r.allowed_tail_types},
                                   {"description", r.description}});
  }
  j["allow_discovered_relations"] = allow_discovered_relations;
  return j;
}

}  // namespace kgsynth
