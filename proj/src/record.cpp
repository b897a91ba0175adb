// SPDX-License-Identifier: Apache-2.0

#include "cf/record.hpp"

#include <cmath>

#include "cf/error.hpp"

namespace cf {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingId: return "MissingId";
    case ErrorCode::MissingText: return "MissingText";
    case ErrorCode::MissingTokens: return "MissingTokens";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::TokenInvariant: return "TokenInvariant";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::BadRecordJson: return "BadRecordJson";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::ArityViolation: return "ArityViolation";
    case ErrorCode::ParamRange: return "ParamRange";
    case ErrorCode::ParamType: return "ParamType";
    case ErrorCode::MissingParam: return "MissingParam";
    case ErrorCode::UnknownParam: return "UnknownParam";
    case ErrorCode::DuplicateNodeName: return "DuplicateNodeName";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::MissingScoreKey: return "MissingScoreKey";
    case ErrorCode::KeyCollision: return "KeyCollision";
    case ErrorCode::EmptyShingleSet: return "EmptyShingleSet";
    case ErrorCode::InconsistentTotal: return "InconsistentTotal";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

std::string_view token_mode_name(TokenMode mode) {
  switch (mode) {
    case TokenMode::Whitespace: return "whitespace";
    case TokenMode::Bytes: return "bytes";
    case TokenMode::Precomputed: return "precomputed";
  }
  return "whitespace";
}

TokenMode token_mode_from_name(std::string_view name) {
  if (name == "whitespace") return TokenMode::Whitespace;
  if (name == "bytes") return TokenMode::Bytes;
  if (name == "precomputed") return TokenMode::Precomputed;
  throw Error(ErrorCode::ParamType,
              "unknown token_mode '" + std::string(name) +
                  "' (expected whitespace|bytes|precomputed)");
}

namespace {

// ASCII whitespace only; locale-independent by construction.
constexpr bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

uint64_t count_tokens(std::string_view text, TokenMode mode) {
  switch (mode) {
    case TokenMode::Bytes:
      return text.size();
    case TokenMode::Whitespace: {
      uint64_t runs = 0;
      bool in_run = false;
      for (char c : text) {
        if (is_space(c)) {
          in_run = false;
        } else if (!in_run) {
          in_run = true;
          ++runs;
        }
      }
      return runs;
    }
    case TokenMode::Precomputed:
      throw Error(ErrorCode::MissingTokens,
                  "precomputed token counting needs a record, not bare text");
  }
  return 0;
}

Record validate_record(const nlohmann::json& raw, TokenMode mode) {
  if (!raw.is_object())
    throw Error(ErrorCode::BadRecordJson, "record line is not a JSON object");

  Record r;
  auto id_it = raw.find("id");
  if (id_it == raw.end() || !id_it->is_string() || id_it->get<std::string>().empty()) {
    throw Error(ErrorCode::MissingId, "record has no usable 'id' field");
  }
  r.id = id_it->get<std::string>();

  auto text_it = raw.find("text");
  if (text_it == raw.end() || !text_it->is_string()) {
    throw Error(ErrorCode::MissingText, "record '" + r.id + "' has no 'text' field");
  }
  r.text = text_it->get<std::string>();

  if (auto it = raw.find("scores"); it != raw.end()) {
    if (!it->is_object())
      throw Error(ErrorCode::BadRecordJson, "record '" + r.id + "': 'scores' is not an object");
    for (auto& [key, value] : it->items()) {
      if (!value.is_number())
        throw Error(ErrorCode::NonFiniteScore,
                    "record '" + r.id + "': score '" + key + "' is not a number");
      double v = value.get<double>();
      if (!std::isfinite(v))
        throw Error(ErrorCode::NonFiniteScore,
                    "record '" + r.id + "': score '" + key + "' is not finite");
      r.scores[key] = v;
    }
  }

  if (auto it = raw.find("tokens"); it != raw.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<int64_t>() >= 0))
      throw Error(ErrorCode::BadRecordJson,
                  "record '" + r.id + "': 'tokens' is not a non-negative integer");
    r.tokens = it->get<uint64_t>();
    r.had_token_field = true;
  }

  if (auto it = raw.find("dataset"); it != raw.end() && it->is_string()) {
    r.dataset = it->get<std::string>();
  }

  if (mode == TokenMode::Precomputed) {
    if (!r.had_token_field)
      throw Error(ErrorCode::MissingTokens,
                  "record '" + r.id + "' has no 'tokens' field (token_mode=precomputed)");
  } else {
    r.tokens = count_tokens(r.text, mode);
    r.had_token_field = true;
  }

  // tokens >= 1 iff text non-empty. A whitespace-only text counts to zero
  // tokens and is rejected rather than silently kept.
  if (r.text.empty() ? r.tokens != 0 : r.tokens == 0) {
    throw Error(ErrorCode::TokenInvariant,
                "record '" + r.id + "': tokens=" + std::to_string(r.tokens) +
                    " inconsistent with text length " + std::to_string(r.text.size()));
  }

  for (auto& [key, value] : raw.items()) {
    if (key == "id" || key == "text" || key == "tokens" || key == "scores" || key == "dataset")
      continue;
    r.extra[key] = value;
  }
  return r;
}

nlohmann::json record_to_json(const Record& r) {
  nlohmann::json j = nlohmann::json::object();
  for (auto& [key, value] : r.extra.items()) j[key] = value;
  j["id"] = r.id;
  j["text"] = r.text;
  j["tokens"] = r.tokens;
  if (!r.scores.empty()) j["scores"] = r.scores;
  if (!r.dataset.empty()) j["dataset"] = r.dataset;
  return j;
}

std::string record_to_line(const Record& r) { return record_to_json(r).dump(); }

Record record_from_line(std::string_view line, TokenMode mode) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded())
    throw Error(ErrorCode::BadRecordJson, "line is not valid JSON");
  return validate_record(j, mode);
}

}  // namespace cf
