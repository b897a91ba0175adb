// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cf {

enum class ErrorCode {
  // record / manifest
  MissingId,
  MissingText,
  MissingTokens,
  NonFiniteScore,
  TokenInvariant,
  DuplicateId,
  BadRecordJson,
  // configuration
  UnknownKind,
  ArityViolation,
  ParamRange,
  ParamType,
  MissingParam,
  UnknownParam,
  DuplicateNodeName,
  BadConfig,
  // operators
  MissingScoreKey,
  KeyCollision,
  EmptyShingleSet,
  InconsistentTotal,
  // i/o and cli
  IoError,
  SchemaMismatch,
  Usage,
};

std::string_view error_code_name(ErrorCode code);

/// Structured failure carried through the pipeline. The message always names
/// the offending entity (record id, node path, file) so CLI output is
/// actionable without a debugger.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cf
