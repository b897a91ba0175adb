// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

namespace cf {

/// How token counts are derived from record text. Pipeline-level setting;
/// every operator that reasons in tokens sees the same mode.
enum class TokenMode { Whitespace, Bytes, Precomputed };

std::string_view token_mode_name(TokenMode mode);
TokenMode token_mode_from_name(std::string_view name);

/// One corpus document.
///
/// Invariants (enforced by validate_record):
///   - id is non-empty
///   - tokens >= 1 iff text is non-empty
///   - every score value is finite
///
/// Identity is the pair (dataset, id); `dataset` is assigned by the source
/// that loaded the record, not by the record itself.
struct Record {
  std::string dataset;
  std::string id;
  std::string text;
  uint64_t tokens = 0;
  std::map<std::string, double> scores;
  nlohmann::json extra = nlohmann::json::object();  // unknown input fields, passed through
  bool had_token_field = false;                     // raw "tokens" was present on input

  bool operator==(const Record& other) const {
    return dataset == other.dataset && id == other.id && text == other.text &&
           tokens == other.tokens && scores == other.scores && extra == other.extra;
  }
};

/// (dataset, id) lexicographic order; the global deterministic tie-break.
inline bool identity_less(const Record& a, const Record& b) {
  if (a.dataset != b.dataset) return a.dataset < b.dataset;
  return a.id < b.id;
}

inline bool identity_less(const std::pair<std::string, std::string>& a,
                          const std::pair<std::string, std::string>& b) {
  return a < b;
}

/// Count tokens of `text`. Whitespace mode counts maximal non-whitespace
/// runs (ASCII whitespace only); bytes mode counts the UTF-8 byte length.
/// Precomputed mode is record-level and rejected here.
uint64_t count_tokens(std::string_view text, TokenMode mode);

/// Parse and validate one record from a JSONL object. Throws Error with the
/// record id (when known) on any invariant violation. Unknown fields land in
/// Record::extra.
Record validate_record(const nlohmann::json& raw, TokenMode mode);

/// Deterministic serialization: sorted keys, shortest round-trip doubles.
/// parse(serialize(r)) == r for every valid record.
nlohmann::json record_to_json(const Record& r);
std::string record_to_line(const Record& r);
Record record_from_line(std::string_view line, TokenMode mode);

}  // namespace cf
