// SPDX-License-Identifier: Apache-2.0

#include "cf/extsort.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdlib>

namespace cf {

std::filesystem::path default_tmp_root() {
  if (const char* env = std::getenv("CF_TMPDIR"); env && *env) {
    return std::filesystem::path(env);
  }
  return std::filesystem::temp_directory_path();
}

namespace {
std::atomic<uint64_t> tmp_counter{0};
}

TmpDir::TmpDir(const std::filesystem::path& root) {
  uint64_t n = tmp_counter.fetch_add(1);
  path_ = root / ("cf-" + std::to_string(static_cast<uint64_t>(::getpid())) + "-" +
                  std::to_string(n));
  std::error_code ec;
  std::filesystem::create_directories(path_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create tmp dir '" + path_.string() + "'");
}

TmpDir::~TmpDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void ScoreKey::encode(std::string& out) const {
  uint64_t bits;
  std::memcpy(&bits, &score, 8);
  detail::put_u64(out, bits);
  detail::put_u32(out, static_cast<uint32_t>(dataset.size()));
  out.append(dataset);
  detail::put_u32(out, static_cast<uint32_t>(id.size()));
  out.append(id);
}

ScoreKey ScoreKey::decode(const char*& p, const char* end) {
  ScoreKey k;
  uint64_t bits = detail::get_u64(p, end);
  std::memcpy(&k.score, &bits, 8);
  k.dataset = detail::get_str(p, end);
  k.id = detail::get_str(p, end);
  return k;
}

void SeqKey::encode(std::string& out) const { detail::put_u64(out, seq); }

SeqKey SeqKey::decode(const char*& p, const char* end) {
  return SeqKey{detail::get_u64(p, end)};
}

}  // namespace cf
