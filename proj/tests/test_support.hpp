// Shared helpers for the test suites: synthetic corpora, temp dirs, and the
// independent brute-force oracles the unit and acceptance tests check
// against. Oracles here use only the standard library, never the library's
// own sort/merge machinery.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cf/jsonl.hpp"
#include "cf/record.hpp"

namespace cftest {

inline cf::Record rec(std::string id, std::string text, std::string dataset = "",
                      std::map<std::string, double> scores = {}) {
  cf::Record r;
  r.id = std::move(id);
  r.text = std::move(text);
  r.dataset = std::move(dataset);
  r.scores = std::move(scores);
  r.tokens = cf::count_tokens(r.text, cf::TokenMode::Whitespace);
  r.had_token_field = true;
  return r;
}

/// Scratch directory under the system temp root, removed on destruction.
struct ScratchDir {
  std::filesystem::path path;

  explicit ScratchDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("cftest-" + tag + "-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

inline void write_shard(const std::string& path, const std::vector<cf::Record>& records) {
  cf::LineWriter w(path);
  for (const auto& r : records) w.write(cf::record_to_line(r));
  w.close();
}

/// Random corpus: ids r000000.., word-salad texts, one score key.
/// `tie_values` > 0 draws scores from that many distinct values to force
/// score ties.
inline std::vector<cf::Record> make_corpus(size_t n, uint64_t seed,
                                           const std::string& score_key = "score",
                                           int min_words = 3, int max_words = 20,
                                           int tie_values = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> words(min_words, max_words);
  std::uniform_int_distribution<int> word_pick(0, 9999);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::uniform_int_distribution<int> tie_pick(0, tie_values > 0 ? tie_values - 1 : 0);

  std::vector<cf::Record> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "r%06zu", i);
    int w = words(rng);
    std::string text;
    for (int k = 0; k < w; ++k) {
      if (k) text += ' ';
      text += "w" + std::to_string(word_pick(rng));
    }
    double s = tie_values > 0 ? static_cast<double>(tie_pick(rng)) / tie_values
                              : score(rng);
    cf::Record r = rec(id, text, "", {{score_key, s}});
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Sort-descending-and-take-prefix reference for the top-ratio filter.
/// Returns the kept identity set; callers assert the implementation output
/// equals the input order restricted to this set.
inline std::set<std::pair<std::string, std::string>> oracle_top_ratio(
    const std::vector<cf::Record>& records, const std::string& key, double ratio,
    bool tokens_basis) {
  std::vector<const cf::Record*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [&](const cf::Record* a, const cf::Record* b) {
    double sa = a->scores.at(key), sb = b->scores.at(key);
    if (sa != sb) return sa > sb;
    if (a->dataset != b->dataset) return a->dataset < b->dataset;
    return a->id < b->id;
  });

  std::set<std::pair<std::string, std::string>> kept;
  if (tokens_basis) {
    uint64_t total = 0;
    for (const auto& r : records) total += r.tokens;
    const double target = ratio * static_cast<double>(total);
    uint64_t cum = 0;
    for (const cf::Record* r : sorted) {
      if (static_cast<double>(cum) >= target) break;
      kept.insert({r->dataset, r->id});
      cum += r->tokens;
    }
  } else {
    const double target = ratio * static_cast<double>(records.size());
    uint64_t taken = 0;
    for (const cf::Record* r : sorted) {
      if (static_cast<double>(taken + 1) > target) break;
      kept.insert({r->dataset, r->id});
      ++taken;
    }
  }
  return kept;
}

/// Brute-force multi-dataset curriculum: globally sort every record by the
/// exact rational R = r * N_total / N_A with tie-break (dataset index, r).
/// `scored[i]` holds dataset i's (order score, id) pairs; returns the merged
/// sequence of (dataset index, id).
inline std::vector<std::pair<uint32_t, std::string>> oracle_curriculum(
    const std::vector<std::vector<std::pair<double, std::string>>>& scored) {
  struct Entry {
    uint64_t rank;
    uint64_t n_a;
    uint32_t ds;
    std::string id;
  };
  uint64_t n_total = 0;
  for (const auto& d : scored) n_total += d.size();
  std::vector<Entry> all;
  all.reserve(n_total);
  for (uint32_t ds = 0; ds < scored.size(); ++ds) {
    auto sorted = scored[ds];
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second < b.second;  // within one dataset the tag is constant
    });
    for (uint64_t r = 0; r < sorted.size(); ++r) {
      all.push_back({r + 1, sorted.size(), ds, sorted[r].second});
    }
  }
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    unsigned __int128 lhs = static_cast<unsigned __int128>(a.rank) * b.n_a;
    unsigned __int128 rhs = static_cast<unsigned __int128>(b.rank) * a.n_a;
    if (lhs != rhs) return lhs < rhs;
    if (a.ds != b.ds) return a.ds < b.ds;
    return a.rank < b.rank;
  });
  std::vector<std::pair<uint32_t, std::string>> out;
  out.reserve(all.size());
  for (const auto& e : all) out.emplace_back(e.ds, e.id);
  return out;
}

/// Exact Jaccard of two shingle sets (inputs must be sorted unique, as
/// cf::shingle returns them).
inline double exact_jaccard(const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Kolmogorov–Smirnov statistic against the uniform [0,1] CDF.
inline double ks_uniform(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double hi = (static_cast<double>(i) + 1.0) / n - xs[i];
    double lo = xs[i] - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  return d;
}

inline std::vector<std::string> read_file_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace cftest
