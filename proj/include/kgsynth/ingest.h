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

#ifndef KGSYNTH_INGEST_H_
#define KGSYNTH_INGEST_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgsynth {

enum class BlockKind { kText, kImage, kTable, kFormula };

std::string_view block_kind_name(BlockKind k);

struct Block {
  BlockKind kind = BlockKind::kText;
  // Text body, formalized image content, table HTML, or formula LaTeX.
  std::string content;
  std::optional<std::string> caption;
  int page_index = 0;
  std::optional<std::string> asset_path;

  bool operator==(const Block&) const = default;
};

// One parser-output document. `schema` is optional in the file; empty means
// "use the run's schema".
struct ParsedDocument {
  std::string title;
  std::string source_path;
  std::string schema;
  std::vector<Block> blocks;
  // Directory that asset_path locators are resolved against.
  std::string corpus_root;

  bool operator==(const ParsedDocument&) const = default;
};

// Loads a parsed-document record file. Blocks are stably ordered by
// page_index. Throws FormatError (with byte offset and field) or
// MissingAsset. `corpus_root` defaults to the file's directory.
ParsedDocument load_parsed_document(const std::string& path,
                                    std::optional<std::string> corpus_root = std::nullopt);

// Same, from an in-memory record; assets are resolved under corpus_root.
ParsedDocument parse_document_record(std::string_view text, const std::string& corpus_root);

struct RawTriplet {
  std::string head;
  std::string relation;
  std::string tail;
  std::optional<std::string> desc;

  bool operator==(const RawTriplet&) const = default;
};

// Loads a triplet file. ".json" files hold an array of
// {head, relation, tail[, desc]} objects; anything else is delimiter-separated
// with a required header row and standard double-quote quoting.
// Throws FormatError (line number) or EmptyField.
std::vector<RawTriplet> load_triplets(const std::string& path);
std::vector<RawTriplet> parse_triplets_csv(std::string_view text, char delimiter = ',');
std::vector<RawTriplet> parse_triplets_json(std::string_view text);

// Splits at separator occurrences (kept at the end of their segment), then
// greedily packs consecutive segments while the packed length stays within
// max_chars Unicode scalars. A single segment longer than max_chars is emitted
// unsplit. Concatenating the result reproduces `text`.
std::vector<std::string> chunk_text(std::string_view text,
                                    const std::vector<std::string>& separators,
                                    std::size_t max_chars);

// True when the chunk continues into its successor.
using ContinuationPredicate = std::function<bool(std::string_view)>;

// Default: the last non-space character is not one of . ! ? 。 ！ ？
bool ends_mid_sentence(std::string_view chunk);

// Index groups produced by merging; group i lists the input chunks joined
// into output chunk i.
std::vector<std::vector<std::size_t>> merge_cross_boundary_groups(
    const std::vector<std::string>& chunks,
    const ContinuationPredicate& continues = ends_mid_sentence);

std::vector<std::string> merge_cross_boundary_chunks(
    const std::vector<std::string>& chunks,
    const ContinuationPredicate& continues = ends_mid_sentence);

}  // namespace kgsynth

#endif  // KGSYNTH_INGEST_H_
