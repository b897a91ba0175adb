// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include "cf/error.hpp"

namespace cf {

/// Spill directory resolution: CF_TMPDIR, else the system temp directory.
std::filesystem::path default_tmp_root();

/// Unique scratch directory, recursively removed on destruction.
class TmpDir {
 public:
  explicit TmpDir(const std::filesystem::path& root = default_tmp_root());
  ~TmpDir();
  TmpDir(const TmpDir&) = delete;
  TmpDir& operator=(const TmpDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct SortOptions {
  std::filesystem::path tmp_root = default_tmp_root();
  size_t buffer_entries = 1 << 16;  // spill threshold
  int workers = 1;                  // run sorting/spilling threads
};

// ---------------------------------------------------------------------------
// Sort keys. A key must provide encode(std::string&) and static decode().
// ---------------------------------------------------------------------------

/// (score, dataset, id). Used ascending for curriculum ranking and, via
/// ScoreDescLess, descending for top-ratio filtering and quantile probes.
/// The identity components make the order total and input-order-independent.
struct ScoreKey {
  double score = 0.0;
  std::string dataset;
  std::string id;

  void encode(std::string& out) const;
  static ScoreKey decode(const char*& p, const char* end);
};

struct ScoreAscLess {
  bool operator()(const ScoreKey& a, const ScoreKey& b) const {
    if (a.score != b.score) return a.score < b.score;
    if (a.dataset != b.dataset) return a.dataset < b.dataset;
    return a.id < b.id;
  }
};

struct ScoreDescLess {
  bool operator()(const ScoreKey& a, const ScoreKey& b) const {
    if (a.score != b.score) return a.score > b.score;
    if (a.dataset != b.dataset) return a.dataset < b.dataset;
    return a.id < b.id;
  }
};

struct SeqKey {
  uint64_t seq = 0;
  void encode(std::string& out) const;
  static SeqKey decode(const char*& p, const char* end);
};

struct SeqLess {
  bool operator()(const SeqKey& a, const SeqKey& b) const { return a.seq < b.seq; }
};

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

inline void put_u64(std::string& out, uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

inline uint32_t get_u32(const char*& p, const char* end) {
  if (end - p < 4) throw Error(ErrorCode::IoError, "truncated sort run");
  uint32_t v;
  std::memcpy(&v, p, 4);
  p += 4;
  return v;
}

inline uint64_t get_u64(const char*& p, const char* end) {
  if (end - p < 8) throw Error(ErrorCode::IoError, "truncated sort run");
  uint64_t v;
  std::memcpy(&v, p, 8);
  p += 8;
  return v;
}

inline std::string get_str(const char*& p, const char* end) {
  uint32_t len = get_u32(p, end);
  if (end - p < static_cast<ptrdiff_t>(len))
    throw Error(ErrorCode::IoError, "truncated sort run");
  std::string s(p, len);
  p += len;
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ExternalSorter
// ---------------------------------------------------------------------------

/// Bounded-memory stable sort. Entries are buffered up to `buffer_entries`,
/// spilled as sorted runs, and k-way merged on finish().
///
/// The output is the stable sort of the input by Less: ties keep input order
/// regardless of buffer size or worker count (run boundaries are cut at
/// deterministic positions, in-run sorts are stable, and the merge breaks
/// key ties by run index).
template <class Key, class Less>
class ExternalSorter {
 public:
  explicit ExternalSorter(const SortOptions& opt)
      : opt_(opt), dir_(opt.tmp_root) {}

  ~ExternalSorter() { wait_spills_nothrow(); }

  void push(Key key, std::string payload) {
    ++count_;
    buffer_.emplace_back(std::move(key), std::move(payload));
    if (buffer_.size() >= opt_.buffer_entries) spill();
  }

  size_t size() const { return count_; }

  /// Sorted pull cursor. Valid only while the parent sorter is alive.
  class Cursor {
   public:
    bool next(Key& key, std::string& payload) {
      if (merged_) return next_merged(key, payload);
      if (pos_ >= entries_.size()) return false;
      key = std::move(entries_[pos_].first);
      payload = std::move(entries_[pos_].second);
      ++pos_;
      return true;
    }

   private:
    friend class ExternalSorter;

    struct RunReader {
      std::ifstream in;
      Key key;
      std::string payload;
      bool ok = false;

      void advance() {
        uint32_t klen;
        if (!in.read(reinterpret_cast<char*>(&klen), 4)) {
          ok = false;
          return;
        }
        std::string kbuf(klen, '\0');
        in.read(kbuf.data(), klen);
        uint32_t plen = 0;
        in.read(reinterpret_cast<char*>(&plen), 4);
        payload.resize(plen);
        in.read(payload.data(), plen);
        if (!in) throw Error(ErrorCode::IoError, "truncated sort run");
        const char* p = kbuf.data();
        key = Key::decode(p, kbuf.data() + kbuf.size());
        ok = true;
      }
    };

    // Min-heap over run indices via std::push_heap/pop_heap with a
    // call-site lambda; no stored comparator, so Cursor stays movable.
    bool heap_after(size_t a, size_t b) const {
      Less less;
      if (less(readers_[b].key, readers_[a].key)) return true;
      if (less(readers_[a].key, readers_[b].key)) return false;
      return b < a;  // tie: lower run index first (stability)
    }

    void heap_push(size_t idx) {
      heap_.push_back(idx);
      std::push_heap(heap_.begin(), heap_.end(),
                     [this](size_t a, size_t b) { return heap_after(a, b); });
    }

    size_t heap_pop() {
      std::pop_heap(heap_.begin(), heap_.end(),
                    [this](size_t a, size_t b) { return heap_after(a, b); });
      size_t idx = heap_.back();
      heap_.pop_back();
      return idx;
    }

    bool next_merged(Key& key, std::string& payload) {
      if (heap_.empty()) return false;
      size_t idx = heap_pop();
      key = std::move(readers_[idx].key);
      payload = std::move(readers_[idx].payload);
      readers_[idx].advance();
      if (readers_[idx].ok) heap_push(idx);
      return true;
    }

    bool merged_ = false;
    std::vector<std::pair<Key, std::string>> entries_;
    size_t pos_ = 0;
    std::vector<RunReader> readers_;
    std::vector<size_t> heap_;
  };

  Cursor finish() {
    Cursor cur;
    if (runs_ == 0) {
      std::stable_sort(buffer_.begin(), buffer_.end(),
                       [](const auto& a, const auto& b) { return Less{}(a.first, b.first); });
      cur.entries_ = std::move(buffer_);
      buffer_.clear();
      return cur;
    }
    if (!buffer_.empty()) spill();
    wait_spills();
    cur.merged_ = true;
    cur.readers_ = std::vector<typename Cursor::RunReader>(runs_);
    for (size_t i = 0; i < runs_; ++i) {
      auto& rd = cur.readers_[i];
      rd.in.open(run_path(i), std::ios::binary);
      if (!rd.in) throw Error(ErrorCode::IoError, "cannot reopen sort run");
      rd.advance();
      if (rd.ok) cur.heap_push(i);
    }
    return cur;
  }

 private:
  std::string run_path(size_t idx) const {
    return (dir_.path() / ("run-" + std::to_string(idx) + ".bin")).string();
  }

  void spill() {
    size_t run_idx = runs_++;
    auto entries =
        std::make_shared<std::vector<std::pair<Key, std::string>>>(std::move(buffer_));
    buffer_.clear();
    buffer_.reserve(opt_.buffer_entries);
    std::string path = run_path(run_idx);

    auto job = [entries, path]() {
      std::stable_sort(entries->begin(), entries->end(),
                       [](const auto& a, const auto& b) { return Less{}(a.first, b.first); });
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::IoError, "cannot create sort run '" + path + "'");
      std::string kbuf;
      for (auto& [key, payload] : *entries) {
        kbuf.clear();
        key.encode(kbuf);
        uint32_t klen = static_cast<uint32_t>(kbuf.size());
        uint32_t plen = static_cast<uint32_t>(payload.size());
        out.write(reinterpret_cast<const char*>(&klen), 4);
        out.write(kbuf.data(), klen);
        out.write(reinterpret_cast<const char*>(&plen), 4);
        out.write(payload.data(), plen);
      }
      if (!out) throw Error(ErrorCode::IoError, "short write on sort run '" + path + "'");
    };

    if (opt_.workers <= 1) {
      job();
      return;
    }
    // Cap in-flight spill jobs at the worker count.
    if (pending_.size() >= static_cast<size_t>(opt_.workers)) {
      pending_.front().get();
      pending_.erase(pending_.begin());
    }
    pending_.push_back(std::async(std::launch::async, job));
  }

  void wait_spills() {
    for (auto& f : pending_) f.get();
    pending_.clear();
  }

  void wait_spills_nothrow() {
    for (auto& f : pending_) {
      try {
        f.get();
      } catch (...) {
      }
    }
    pending_.clear();
  }

  SortOptions opt_;
  TmpDir dir_;
  std::vector<std::pair<Key, std::string>> buffer_;
  std::vector<std::future<void>> pending_;
  size_t runs_ = 0;
  size_t count_ = 0;
};

}  // namespace cf
