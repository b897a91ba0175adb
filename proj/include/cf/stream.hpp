// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "cf/record.hpp"

namespace cf {

/// Pull-based record stream. Operators compose by wrapping an upstream
/// stream; the root consumer drains the whole chain.
class RecordStream {
 public:
  virtual ~RecordStream() = default;
  virtual std::optional<Record> next() = 0;
};

using StreamPtr = std::unique_ptr<RecordStream>;

class VectorStream final : public RecordStream {
 public:
  explicit VectorStream(std::vector<Record> records)
      : records_(std::move(records)) {}

  std::optional<Record> next() override {
    if (pos_ >= records_.size()) return std::nullopt;
    return std::move(records_[pos_++]);
  }

 private:
  std::vector<Record> records_;
  size_t pos_ = 0;
};

/// Stream backed by a generator callable returning std::optional<Record>.
class FnStream final : public RecordStream {
 public:
  explicit FnStream(std::function<std::optional<Record>()> fn) : fn_(std::move(fn)) {}
  std::optional<Record> next() override { return fn_(); }

 private:
  std::function<std::optional<Record>()> fn_;
};

inline std::vector<Record> drain(RecordStream& s) {
  std::vector<Record> out;
  while (auto r = s.next()) out.push_back(std::move(*r));
  return out;
}

inline std::vector<Record> drain(StreamPtr s) { return drain(*s); }

}  // namespace cf
