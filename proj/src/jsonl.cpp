// SPDX-License-Identifier: Apache-2.0

#include "cf/jsonl.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "cf/error.hpp"

namespace cf {

namespace {
bool has_gz_suffix(const std::string& path) {
  return path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}
}  // namespace

struct LineReader::Impl {
  std::ifstream plain;
  gzFile gz = nullptr;
  bool is_gz = false;
  std::string buf;  // carry-over for gz chunk reads
  size_t buf_pos = 0;
  bool eof = false;

  ~Impl() {
    if (gz) gzclose(gz);
  }
};

LineReader::LineReader(const std::string& path) : impl_(new Impl), path_(path) {
  impl_->is_gz = has_gz_suffix(path);
  if (impl_->is_gz) {
    impl_->gz = gzopen(path.c_str(), "rb");
    if (!impl_->gz) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  } else {
    impl_->plain.open(path, std::ios::binary);
    if (!impl_->plain) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  }
}

LineReader::~LineReader() = default;

bool LineReader::next(std::string& line) {
  if (!impl_->is_gz) {
    if (!std::getline(impl_->plain, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  line.clear();
  for (;;) {
    auto nl = impl_->buf.find('\n', impl_->buf_pos);
    if (nl != std::string::npos) {
      line.append(impl_->buf, impl_->buf_pos, nl - impl_->buf_pos);
      impl_->buf_pos = nl + 1;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    line.append(impl_->buf, impl_->buf_pos, impl_->buf.size() - impl_->buf_pos);
    impl_->buf.clear();
    impl_->buf_pos = 0;
    if (impl_->eof) return !line.empty();
    char chunk[1 << 16];
    int n = gzread(impl_->gz, chunk, sizeof(chunk));
    if (n < 0) throw Error(ErrorCode::IoError, "gzread failed on '" + path_ + "'");
    if (n == 0) {
      impl_->eof = true;
      continue;
    }
    impl_->buf.assign(chunk, static_cast<size_t>(n));
  }
}

struct LineWriter::Impl {
  std::ofstream plain;
  gzFile gz = nullptr;
  bool is_gz = false;
};

LineWriter::LineWriter(const std::string& path) : impl_(new Impl), path_(path) {
  impl_->is_gz = has_gz_suffix(path);
  if (impl_->is_gz) {
    impl_->gz = gzopen(path.c_str(), "wb");
    if (!impl_->gz) throw Error(ErrorCode::IoError, "cannot create '" + path + "'");
  } else {
    impl_->plain.open(path, std::ios::binary | std::ios::trunc);
    if (!impl_->plain) throw Error(ErrorCode::IoError, "cannot create '" + path + "'");
  }
}

LineWriter::~LineWriter() {
  try {
    close();
  } catch (...) {
  }
}

void LineWriter::write(std::string_view line) {
  if (impl_->is_gz) {
    if (!impl_->gz) throw Error(ErrorCode::IoError, "write on closed '" + path_ + "'");
    if (gzwrite(impl_->gz, line.data(), static_cast<unsigned>(line.size())) !=
            static_cast<int>(line.size()) ||
        gzwrite(impl_->gz, "\n", 1) != 1) {
      throw Error(ErrorCode::IoError, "gzwrite failed on '" + path_ + "'");
    }
    return;
  }
  impl_->plain.write(line.data(), static_cast<std::streamsize>(line.size()));
  impl_->plain.put('\n');
  if (!impl_->plain) throw Error(ErrorCode::IoError, "write failed on '" + path_ + "'");
}

void LineWriter::close() {
  if (impl_->is_gz) {
    if (impl_->gz) {
      int rc = gzclose(impl_->gz);
      impl_->gz = nullptr;
      if (rc != Z_OK) throw Error(ErrorCode::IoError, "gzclose failed on '" + path_ + "'");
    }
    return;
  }
  if (impl_->plain.is_open()) {
    impl_->plain.flush();
    if (!impl_->plain) throw Error(ErrorCode::IoError, "flush failed on '" + path_ + "'");
    impl_->plain.close();
  }
}

ShardReader::ShardReader(const std::string& path, TokenMode mode)
    : reader_(path), mode_(mode) {}

bool ShardReader::next(Record& out) {
  std::string line;
  for (;;) {
    if (!reader_.next(line)) return false;
    ++line_no_;
    if (line.empty()) continue;  // tolerate blank lines
    try {
      out = record_from_line(line, mode_);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (" + reader_.path() + ":" +
                                std::to_string(line_no_) + ")");
    }
    return true;
  }
}

ShardedWriter::ShardedWriter(std::string dir, std::string stem,
                             uint64_t records_per_shard, bool gzip)
    : dir_(std::move(dir)), stem_(std::move(stem)),
      per_shard_(records_per_shard == 0 ? 1 : records_per_shard), gzip_(gzip) {
  std::filesystem::create_directories(dir_);
}

void ShardedWriter::roll() {
  if (current_) current_->close();
  char name[64];
  std::snprintf(name, sizeof(name), "-%05zu.jsonl", shards_.size());
  std::string path = dir_ + "/" + stem_ + name + (gzip_ ? ".gz" : "");
  current_ = std::make_unique<LineWriter>(path);
  shards_.push_back(path);
  in_current_ = 0;
}

void ShardedWriter::write(const Record& r) {
  if (!current_ || in_current_ >= per_shard_) roll();
  current_->write(record_to_line(r));
  ++in_current_;
  ++records_;
  tokens_ += r.tokens;
}

std::vector<std::string> ShardedWriter::finish() {
  if (current_) {
    current_->close();
    current_.reset();
  } else if (shards_.empty()) {
    // An empty output still materializes one empty shard so downstream
    // consumers see an explicit dataset rather than a missing one.
    roll();
    current_->close();
    current_.reset();
  }
  return shards_;
}

}  // namespace cf
