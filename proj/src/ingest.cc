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

#include <algorithm>
#include <filesystem>

#include "kgsynth/errors.h"
#include "kgsynth/ingest.h"
#include "kgsynth/json_locate.h"
#include "kgsynth/text.h"

namespace kgsynth {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view block_kind_name(BlockKind k) {
  switch (k) {
    case BlockKind::kText: return "text";
    case BlockKind::kImage: return "image";
    case BlockKind::kTable: return "table";
    case BlockKind::kFormula: return "formula";
  }
  return "?";
}

namespace {

std::optional<BlockKind> parse_block_kind(std::string_view s) {
  for (BlockKind k : {BlockKind::kText, BlockKind::kImage, BlockKind::kTable,
                      BlockKind::kFormula}) {
    if (block_kind_name(k) == s) return k;
  }
  return std::nullopt;
}

class RecordReader {
 public:
  explicit RecordReader(const LocatedJson& doc) : doc_(doc) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw FormatError(message, pointer, doc_.offset_of(pointer));
  }

  const json& require(const json& obj, const std::string& pointer, const char* key) const {
    if (!obj.is_object()) fail(pointer, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(pointer + "/" + key, std::string("missing field '") + key + "'");
    return *it;
  }

  std::string string_field(const json& obj, const std::string& pointer, const char* key) const {
    const json& v = require(obj, pointer, key);
    if (!v.is_string()) fail(pointer + "/" + key, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  std::optional<std::string> optional_string(const json& obj, const std::string& pointer,
                                             const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) fail(pointer + "/" + key, std::string("field '") + key + "' must be a string or null");
    return it->get<std::string>();
  }

 private:
  const LocatedJson& doc_;
};

std::size_t line_of(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

}  // namespace

ParsedDocument parse_document_record(std::string_view text, const std::string& corpus_root) {
  LocatedJson doc = parse_located(text);
  RecordReader r(doc);
  const json& root = doc.value;
  ParsedDocument out;
  out.corpus_root = corpus_root;
  out.title = r.string_field(root, "", "title");
  out.source_path = r.string_field(root, "", "source_path");
  out.schema = r.optional_string(root, "", "schema").value_or("");
  const json& blocks = r.require(root, "", "blocks");
  if (!blocks.is_array()) r.fail("/blocks", "field 'blocks' must be an array");

  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string ptr = "/blocks/" + std::to_string(i);
    const json& b = blocks[i];
    Block block;
    std::string kind = r.string_field(b, ptr, "kind");
    auto parsed = parse_block_kind(kind);
    if (!parsed) r.fail(ptr + "/kind", "unknown block kind '" + kind + "'");
    block.kind = *parsed;
    block.content = r.string_field(b, ptr, "content");
    block.caption = r.optional_string(b, ptr, "caption");
    block.asset_path = r.optional_string(b, ptr, "asset_path");
    const json& page = r.require(b, ptr, "page_index");
    if (!page.is_number_integer() || page.get<long long>() < 0) {
      r.fail(ptr + "/page_index", "page_index must be a non-negative integer");
    }
    block.page_index = page.get<int>();

    if (block.kind == BlockKind::kTable &&
        !contains(ascii_lower(block.content), "<table")) {
      r.fail(ptr + "/content", "table blocks must carry HTML content");
    }
    if (block.kind == BlockKind::kFormula && trim(block.content).empty()) {
      r.fail(ptr + "/content", "formula blocks must carry LaTeX content");
    }
    if (block.asset_path) {
      fs::path rel(*block.asset_path);
      bool escapes = rel.is_absolute() ||
                     std::any_of(rel.begin(), rel.end(), [](const fs::path& p) { return p == ".."; });
      if (escapes || !fs::exists(fs::path(corpus_root) / rel)) {
        throw MissingAsset("block " + std::to_string(i) + " asset '" + *block.asset_path +
                           "' does not resolve under '" + corpus_root + "'");
      }
    }
    out.blocks.push_back(std::move(block));
  }
  std::stable_sort(out.blocks.begin(), out.blocks.end(),
                   [](const Block& a, const Block& b) { return a.page_index < b.page_index; });
  return out;
}

ParsedDocument load_parsed_document(const std::string& path,
                                    std::optional<std::string> corpus_root) {
  std::string root = corpus_root.value_or(fs::path(path).parent_path().string());
  if (root.empty()) root = ".";
  return parse_document_record(read_file(path), root);
}

// ---------------------------------------------------------------------------
// Triplets

namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::vector<CsvRecord> parse_csv(std::string_view text, char delim) {
  std::vector<CsvRecord> records;
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool at_field_start = true;
    bool done = false;
    while (!done) {
      if (i >= text.size()) {
        rec.fields.push_back(std::move(field));
        break;
      }
      char c = text[i];
      if (at_field_start && c == '"') {
        ++i;
        bool closed = false;
        while (i < text.size()) {
          if (text[i] == '"') {
            if (i + 1 < text.size() && text[i + 1] == '"') {
              field += '"';
              i += 2;
              continue;
            }
            ++i;
            closed = true;
            break;
          }
          if (text[i] == '\n') ++line;
          field += text[i++];
        }
        if (!closed) throw FormatError("unterminated quoted field", "", FormatError::kNone, rec.line);
        if (i < text.size() && text[i] != delim && text[i] != '\n' && text[i] != '\r') {
          throw FormatError("unexpected character after closing quote", "", FormatError::kNone, line);
        }
        at_field_start = false;
        continue;
      }
      if (c == delim) {
        rec.fields.push_back(std::move(field));
        field.clear();
        at_field_start = true;
        ++i;
      } else if (c == '\r' || c == '\n') {
        rec.fields.push_back(std::move(field));
        if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
        ++i;
        ++line;
        done = true;
      } else {
        field += c;
        at_field_start = false;
        ++i;
      }
    }
    bool blank = rec.fields.size() == 1 && rec.fields[0].empty();
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::vector<RawTriplet> parse_triplets_csv(std::string_view text, char delimiter) {
  std::vector<CsvRecord> records = parse_csv(text, delimiter);
  if (records.empty()) throw FormatError("missing header row", "", FormatError::kNone, 1);
  const CsvRecord& header = records.front();
  auto column = [&](const char* name) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < header.fields.size(); ++c) {
      if (trim(header.fields[c]) == name) return c;
    }
    return std::nullopt;
  };
  auto head_col = column("head"), rel_col = column("relation"), tail_col = column("tail");
  auto desc_col = column("desc");
  for (auto [col, name] : {std::pair{head_col, "head"}, {rel_col, "relation"}, {tail_col, "tail"}}) {
    if (!col) throw FormatError("header lacks column", name, FormatError::kNone, header.line);
  }
  std::vector<RawTriplet> out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const CsvRecord& rec = records[r];
    if (rec.fields.size() != header.fields.size()) {
      throw FormatError("expected " + std::to_string(header.fields.size()) + " fields, found " +
                            std::to_string(rec.fields.size()),
                        "", FormatError::kNone, rec.line);
    }
    RawTriplet t{rec.fields[*head_col], rec.fields[*rel_col], rec.fields[*tail_col], std::nullopt};
    if (desc_col && !rec.fields[*desc_col].empty()) t.desc = rec.fields[*desc_col];
    if (trim(t.head).empty()) throw EmptyField("head", rec.line);
    if (trim(t.relation).empty()) throw EmptyField("relation", rec.line);
    if (trim(t.tail).empty()) throw EmptyField("tail", rec.line);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<RawTriplet> parse_triplets_json(std::string_view text) {
  LocatedJson doc;
  try {
    doc = parse_located(text);
  } catch (const FormatError& e) {
    throw FormatError("malformed triplet record file", "", FormatError::kNone,
                      line_of(text, e.offset()));
  }
  if (!doc.value.is_array()) {
    throw FormatError("expected an array of triplet records", "", FormatError::kNone, 1);
  }
  std::vector<RawTriplet> out;
  for (std::size_t i = 0; i < doc.value.size(); ++i) {
    const std::string ptr = "/" + std::to_string(i);
    std::size_t line = line_of(text, doc.offset_of(ptr));
    const json& rec = doc.value[i];
    auto get = [&](const char* key, bool required) -> std::optional<std::string> {
      auto it = rec.is_object() ? rec.find(key) : rec.end();
      if (!rec.is_object() || it == rec.end() || it->is_null()) {
        if (required) throw FormatError("missing field", key, FormatError::kNone, line);
        return std::nullopt;
      }
      if (!it->is_string()) throw FormatError("field must be a string", key, FormatError::kNone, line);
      return it->get<std::string>();
    };
    RawTriplet t{*get("head", true), *get("relation", true), *get("tail", true), get("desc", false)};
    if (trim(t.head).empty()) throw EmptyField("head", line);
    if (trim(t.relation).empty()) throw EmptyField("relation", line);
    if (trim(t.tail).empty()) throw EmptyField("tail", line);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<RawTriplet> load_triplets(const std::string& path) {
  std::string text = read_file(path);
  std::string ext = ascii_lower(fs::path(path).extension().string());
  if (ext == ".json") return parse_triplets_json(text);
  return parse_triplets_csv(text, ext == ".tsv" ? '\t' : ',');
}

}  // namespace kgsynth
