// SPDX-License-Identifier: Apache-2.0

#include "cf/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "cf/error.hpp"
#include "cf/hash.hpp"
#include "cf/jsonl.hpp"
#include "cf/parallel.hpp"

namespace cf {

void DedupConfig::validate() const {
  if (shingle_size < 1)
    throw Error(ErrorCode::ParamRange, "dedup: shingle_size must be >= 1");
  if (num_hashes < 1 || bands < 1 || rows < 1)
    throw Error(ErrorCode::ParamRange, "dedup: num_hashes/bands/rows must be >= 1");
  if (bands * rows != num_hashes)
    throw Error(ErrorCode::ParamRange,
                "dedup: bands*rows (" + std::to_string(bands * rows) +
                    ") != num_hashes (" + std::to_string(num_hashes) + ")");
  if (!(jaccard_threshold > 0.0 && jaccard_threshold <= 1.0))
    throw Error(ErrorCode::ParamRange, "dedup: jaccard_threshold must be in (0,1]");
}

std::vector<std::string> shingle(std::string_view text, int k) {
  if (k < 1) throw Error(ErrorCode::ParamRange, "shingle: k must be >= 1");

  std::vector<std::string> words;
  std::string word;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      if (!word.empty()) {
        words.push_back(std::move(word));
        word.clear();
      }
    } else {
      word.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
  }
  if (!word.empty()) words.push_back(std::move(word));

  std::vector<std::string> out;
  if (words.empty()) return out;
  if (words.size() < static_cast<size_t>(k)) {
    std::string whole = words[0];
    for (size_t i = 1; i < words.size(); ++i) {
      whole += ' ';
      whole += words[i];
    }
    out.push_back(std::move(whole));
    return out;
  }
  out.reserve(words.size() - k + 1);
  for (size_t i = 0; i + k <= words.size(); ++i) {
    std::string s = words[i];
    for (size_t j = 1; j < static_cast<size_t>(k); ++j) {
      s += ' ';
      s += words[i + j];
    }
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double MinHashSignature::estimate_jaccard(const MinHashSignature& other) const {
  if (values.size() != other.values.size() || values.empty()) return 0.0;
  size_t matches = 0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] == other.values[i]) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(values.size());
}

MinHashSignature minhash_signature(const std::vector<std::string>& shingles,
                                   const DedupConfig& cfg, uint64_t node_seed) {
  if (shingles.empty())
    throw Error(ErrorCode::EmptyShingleSet, "minhash_signature: empty shingle set");
  MinHashSignature sig;
  sig.values.assign(static_cast<size_t>(cfg.num_hashes), UINT64_MAX);
  // Each shingle is hashed once; the H per-function values are cheap mixes
  // of that base hash, seeded per position from the node seed.
  const uint64_t base_seed = mix(node_seed, 0x6d696e68);  // "minh"
  for (const auto& s : shingles) {
    uint64_t base = hash_bytes(s, base_seed);
    for (int i = 0; i < cfg.num_hashes; ++i) {
      uint64_t v = splitmix64(base ^ splitmix64(node_seed + static_cast<uint64_t>(i) + 1));
      if (v < sig.values[static_cast<size_t>(i)]) sig.values[static_cast<size_t>(i)] = v;
    }
  }
  return sig;
}

double lsh_candidate_probability(double jaccard, const DedupConfig& cfg) {
  return 1.0 - std::pow(1.0 - std::pow(jaccard, cfg.rows), cfg.bands);
}

namespace {

struct UnionFind {
  std::vector<uint32_t> parent;

  explicit UnionFind(size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }

  uint32_t find(uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(uint32_t a, uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

class DedupStream final : public RecordStream {
 public:
  DedupStream(StreamPtr in, DedupConfig cfg, uint64_t node_seed,
              const SortOptions& sort_opt, DedupStats* stats)
      : in_(std::move(in)), cfg_(cfg), node_seed_(node_seed), sort_opt_(sort_opt),
        stats_(stats) {}

  std::optional<Record> next() override {
    if (!ran_) run();
    Record r;
    while (reader_ && reader_->next(r)) {
      size_t idx = cursor_++;
      if (survivor_[idx]) return r;
    }
    return std::nullopt;
  }

 private:
  void run();

  StreamPtr in_;
  DedupConfig cfg_;
  uint64_t node_seed_;
  SortOptions sort_opt_;
  DedupStats* stats_;
  bool ran_ = false;
  std::unique_ptr<TmpDir> spool_dir_;
  std::unique_ptr<ShardReader> reader_;
  std::vector<bool> survivor_;
  size_t cursor_ = 0;
};

void DedupStream::run() {
  ran_ = true;
  cfg_.validate();
  DedupStats local;
  DedupStats& st = stats_ ? *stats_ : local;

  // Pass 1: spool the input and collect per-record identity + shingles.
  spool_dir_ = std::make_unique<TmpDir>(sort_opt_.tmp_root);
  std::string spool_path = (spool_dir_->path() / "spool.jsonl").string();
  std::vector<std::pair<std::string, std::string>> identities;  // (dataset, id)
  std::vector<std::vector<std::string>> shingle_sets;
  {
    LineWriter spool(spool_path);
    while (auto r = in_->next()) {
      spool.write(record_to_line(*r));
      identities.emplace_back(r->dataset, r->id);
      shingle_sets.push_back(shingle(r->text, cfg_.shingle_size));
    }
    spool.close();
  }
  in_.reset();
  const size_t n = identities.size();
  st.records_in = n;

  // Signatures, computed in deterministic chunk order.
  const size_t h = static_cast<size_t>(cfg_.num_hashes);
  std::vector<uint64_t> signatures(n * h);
  std::vector<uint8_t> bypass(n, 0);
  parallel_chunks(n, 1024, sort_opt_.workers, [&](size_t begin, size_t end, size_t) {
    for (size_t i = begin; i < end; ++i) {
      if (shingle_sets[i].empty()) {
        bypass[i] = 1;
        continue;
      }
      MinHashSignature sig = minhash_signature(shingle_sets[i], cfg_, node_seed_);
      std::copy(sig.values.begin(), sig.values.end(), signatures.begin() + i * h);
    }
  });
  shingle_sets.clear();
  shingle_sets.shrink_to_fit();

  // LSH banding: records sharing any band hash become candidate pairs.
  const size_t rows = static_cast<size_t>(cfg_.rows);
  std::vector<std::pair<uint32_t, uint32_t>> pairs;
  {
    std::unordered_map<uint64_t, std::vector<uint32_t>> buckets;
    std::unordered_set<uint64_t> seen_pairs;
    for (int band = 0; band < cfg_.bands; ++band) {
      buckets.clear();
      const uint64_t band_seed = mix(node_seed_, 0xba4d0000ULL + static_cast<uint64_t>(band));
      for (size_t i = 0; i < n; ++i) {
        if (bypass[i]) continue;
        const uint64_t* row0 = &signatures[i * h + static_cast<size_t>(band) * rows];
        uint64_t bh = hash_bytes(
            std::string_view(reinterpret_cast<const char*>(row0), rows * sizeof(uint64_t)),
            band_seed);
        buckets[bh].push_back(static_cast<uint32_t>(i));
      }
      for (auto& [bh, members] : buckets) {
        if (members.size() < 2) continue;
        for (size_t a = 0; a < members.size(); ++a) {
          for (size_t b = a + 1; b < members.size(); ++b) {
            uint64_t packed =
                (static_cast<uint64_t>(members[a]) << 32) | members[b];
            if (seen_pairs.insert(packed).second) pairs.emplace_back(members[a], members[b]);
          }
        }
      }
    }
  }
  st.candidate_pairs = pairs.size();

  // Verify candidates with the signature estimate and cluster via union-find.
  UnionFind uf(n);
  for (auto [a, b] : pairs) {
    const uint64_t* sa = &signatures[a * h];
    const uint64_t* sb = &signatures[b * h];
    size_t matches = 0;
    for (size_t i = 0; i < h; ++i) {
      if (sa[i] == sb[i]) ++matches;
    }
    double estimate = static_cast<double>(matches) / static_cast<double>(h);
    if (estimate >= cfg_.jaccard_threshold) {
      uf.unite(a, b);
      ++st.duplicate_edges;
    }
  }

  // One survivor per cluster: the smallest (dataset, id). Order-free, so the
  // result does not depend on input order.
  std::unordered_map<uint32_t, uint32_t> champion;
  for (size_t i = 0; i < n; ++i) {
    uint32_t root = uf.find(static_cast<uint32_t>(i));
    auto [it, fresh] = champion.try_emplace(root, static_cast<uint32_t>(i));
    if (!fresh && identities[i] < identities[it->second]) {
      it->second = static_cast<uint32_t>(i);
    }
  }
  std::unordered_map<uint32_t, uint32_t> cluster_size;
  for (size_t i = 0; i < n; ++i) ++cluster_size[uf.find(static_cast<uint32_t>(i))];

  survivor_.assign(n, false);
  for (auto& [root, champ] : champion) survivor_[champ] = true;
  st.records_out = champion.size();
  for (auto& [root, size] : cluster_size) {
    if (size >= 2) ++st.clusters;
  }
  st.bypass_count = static_cast<uint64_t>(std::count(bypass.begin(), bypass.end(), 1));

  reader_ = std::make_unique<ShardReader>(spool_path, TokenMode::Precomputed);
}

}  // namespace

StreamPtr dedup(StreamPtr in, DedupConfig cfg, uint64_t node_seed,
                const SortOptions& sort_opt, DedupStats* stats) {
  cfg.validate();
  return std::make_unique<DedupStream>(std::move(in), cfg, node_seed, sort_opt, stats);
}

}  // namespace cf
