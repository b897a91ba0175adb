// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "cf/record.hpp"

namespace cf {

/// Line-oriented reader over a plain or gzip-compressed file. Compression is
/// selected by the ".gz" suffix.
class LineReader {
 public:
  explicit LineReader(const std::string& path);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  /// Reads the next line (without the trailing newline). Returns false at EOF.
  bool next(std::string& line);

  const std::string& path() const { return path_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string path_;
};

/// Line-oriented writer; gzip-compressed when the path ends in ".gz".
class LineWriter {
 public:
  explicit LineWriter(const std::string& path);
  ~LineWriter();
  LineWriter(const LineWriter&) = delete;
  LineWriter& operator=(const LineWriter&) = delete;

  void write(std::string_view line);  // appends '\n'
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string path_;
};

/// Streams validated records out of one JSONL shard. Parse errors carry the
/// file and line number.
class ShardReader {
 public:
  ShardReader(const std::string& path, TokenMode mode);
  bool next(Record& out);

 private:
  LineReader reader_;
  TokenMode mode_;
  uint64_t line_no_ = 0;
};

/// Writes records into fixed-size shards `<stem>-NNNNN.jsonl` under a
/// directory. The last shard is ragged. Shard boundaries are deterministic:
/// they depend only on the record sequence and records_per_shard.
class ShardedWriter {
 public:
  ShardedWriter(std::string dir, std::string stem, uint64_t records_per_shard,
                bool gzip = false);

  void write(const Record& r);
  /// Closes the current shard and returns the list of shard paths.
  std::vector<std::string> finish();

  uint64_t records_written() const { return records_; }
  uint64_t tokens_written() const { return tokens_; }

 private:
  void roll();

  std::string dir_;
  std::string stem_;
  uint64_t per_shard_;
  bool gzip_;
  uint64_t records_ = 0;
  uint64_t tokens_ = 0;
  uint64_t in_current_ = 0;
  std::unique_ptr<LineWriter> current_;
  std::vector<std::string> shards_;
};

}  // namespace cf
