#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "cf/dedup.hpp"
#include "cf/error.hpp"
#include "test_support.hpp"

using namespace cf;
using cftest::rec;

namespace {

StreamPtr stream_of(std::vector<Record> rs) {
  return std::make_unique<VectorStream>(std::move(rs));
}

SortOptions sort_opt() {
  SortOptions opt;
  opt.workers = 2;
  return opt;
}

std::vector<Record> run_dedup(std::vector<Record> rs, DedupStats* stats = nullptr,
                              uint64_t seed = 42, DedupConfig cfg = {}) {
  return drain(dedup(stream_of(std::move(rs)), cfg, seed, sort_opt(), stats));
}

/// k words drawn from a vocabulary; deterministic per seed.
std::string word_text(std::mt19937_64& rng, int words, int vocab = 50000) {
  std::string text;
  for (int i = 0; i < words; ++i) {
    if (i) text += ' ';
    text += "tok" + std::to_string(rng() % vocab);
  }
  return text;
}

/// Two shingle *sets* with exact Jaccard inter/uni. Each "shingle" is a
/// unique synthetic token.
std::pair<std::vector<std::string>, std::vector<std::string>> controlled_pair(
    std::mt19937_64& rng, size_t uni, double jaccard) {
  size_t inter = static_cast<size_t>(std::llround(jaccard * static_cast<double>(uni)));
  std::vector<std::string> common, a, b;
  auto fresh = [&] { return "s" + std::to_string(rng()); };
  for (size_t i = 0; i < inter; ++i) common.push_back(fresh());
  a = common;
  b = common;
  size_t rest = uni - inter;
  for (size_t i = 0; i < rest; ++i) {
    if (i % 2 == 0) a.push_back(fresh());
    else b.push_back(fresh());
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {a, b};
}

}  // namespace

TEST_CASE("shingle produces k-word windows with normalization") {
  CHECK(shingle("a b c", 2) == std::vector<std::string>{"a b", "b c"});
  CHECK(shingle("a", 5) == std::vector<std::string>{"a"});  // short-text rule
  CHECK(shingle("A  b", 1) == shingle("a b", 1));
  CHECK(shingle("", 3).empty());
  CHECK(shingle("  \t ", 3).empty());
  CHECK(shingle("Hello   WORLD again", 2) ==
        std::vector<std::string>{"hello world", "world again"});
}

TEST_CASE("identical texts give identical signatures") {
  DedupConfig cfg;
  auto s1 = minhash_signature(shingle("the quick brown fox jumps over the dog", 3), cfg, 7);
  auto s2 = minhash_signature(shingle("the quick  brown fox jumps over the dog", 3), cfg, 7);
  CHECK(s1.values == s2.values);
  CHECK(s1.estimate_jaccard(s2) == 1.0);
}

TEST_CASE("disjoint shingle sets estimate Jaccard near zero") {
  DedupConfig cfg;
  std::mt19937_64 rng(3);
  auto a = minhash_signature(shingle(word_text(rng, 60), cfg.shingle_size), cfg, 7);
  auto b = minhash_signature(shingle(word_text(rng, 60), cfg.shingle_size), cfg, 7);
  CHECK(a.estimate_jaccard(b) <= 0.02);
}

TEST_CASE("empty shingle set is rejected") {
  DedupConfig cfg;
  CHECK_THROWS_AS(minhash_signature({}, cfg, 7), Error);
}

TEST_CASE("signature estimates track true Jaccard within 0.1 at H=128") {
  DedupConfig cfg;
  std::mt19937_64 rng(11);
  for (double j : {0.2, 0.5, 0.8}) {
    for (int round = 0; round < 10; ++round) {
      auto [a, b] = controlled_pair(rng, 200, j);
      double truth = cftest::exact_jaccard(a, b);
      auto sa = minhash_signature(a, cfg, 99);
      auto sb = minhash_signature(b, cfg, 99);
      CHECK(std::abs(sa.estimate_jaccard(sb) - truth) <= 0.1);
    }
  }
}

TEST_CASE("estimator mean absolute error stays under 0.05 over 200 pairs") {
  DedupConfig cfg;
  std::mt19937_64 rng(13);
  double mae = 0.0;
  int pairs = 0;
  for (int round = 0; round < 200; ++round) {
    double j = 0.1 + 0.8 * (static_cast<double>(round) / 200.0);
    auto [a, b] = controlled_pair(rng, 150, j);
    double truth = cftest::exact_jaccard(a, b);
    auto sa = minhash_signature(a, cfg, 7);
    auto sb = minhash_signature(b, cfg, 7);
    mae += std::abs(sa.estimate_jaccard(sb) - truth);
    ++pairs;
  }
  mae /= pairs;
  CHECK(mae <= 0.05);
}

TEST_CASE("two byte-identical records leave the smaller id") {
  std::vector<Record> rs = {
      rec("zz", "the exact same text repeated here for dedup", "d"),
      rec("aa", "the exact same text repeated here for dedup", "d"),
  };
  DedupStats stats;
  auto out = run_dedup(rs, &stats);
  REQUIRE(out.size() == 1);
  CHECK(out[0].id == "aa");
  CHECK(stats.clusters == 1);
  CHECK(stats.records_in == 2);
  CHECK(stats.records_out == 1);
}

TEST_CASE("all-distinct corpus suffers zero removals") {
  std::mt19937_64 rng(17);
  std::vector<Record> rs;
  for (int i = 0; i < 1000; ++i) {
    rs.push_back(rec("r" + std::to_string(i), word_text(rng, 40), "d"));
  }
  DedupStats stats;
  auto out = run_dedup(rs, &stats);
  CHECK(out.size() == rs.size());
  CHECK(stats.clusters == 0);
}

TEST_CASE("planted near-duplicate cluster collapses to one survivor") {
  std::mt19937_64 rng(19);
  // 5 paraphrases: a long base text with one word substituted per variant.
  std::string base = word_text(rng, 200);
  std::vector<Record> rs;
  std::vector<std::vector<std::string>> shingles;
  for (int v = 0; v < 5; ++v) {
    std::string text = base;
    if (v > 0) {
      size_t start = 0;
      for (int w = 0; w < v * 20; ++w) start = text.find(' ', start) + 1;
      size_t end = text.find(' ', start);
      text = text.substr(0, start) + "swapped" + std::to_string(v) +
             (end == std::string::npos ? "" : text.substr(end));
    }
    rs.push_back(rec("v" + std::to_string(v), text, "d"));
    shingles.push_back(shingle(text, 5));
  }
  // precondition: pairwise Jaccard at least 0.85 by the exact oracle
  for (size_t i = 0; i < shingles.size(); ++i) {
    for (size_t j = i + 1; j < shingles.size(); ++j) {
      REQUIRE(cftest::exact_jaccard(shingles[i], shingles[j]) >= 0.85);
    }
  }
  for (int i = 0; i < 50; ++i) {
    rs.push_back(rec("pad" + std::to_string(i), word_text(rng, 50), "d"));
  }
  DedupStats stats;
  auto out = run_dedup(rs, &stats);
  int survivors_from_cluster = 0;
  for (const auto& r : out) {
    if (r.id[0] == 'v') ++survivors_from_cluster;
  }
  CHECK(survivors_from_cluster == 1);
  CHECK(stats.clusters == 1);
  CHECK(out.size() == 51);
}

TEST_CASE("dedup is idempotent") {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 10; ++round) {
    std::vector<Record> rs;
    size_t n = 50 + rng() % 150;
    for (size_t i = 0; i < n; ++i) {
      rs.push_back(rec("r" + std::to_string(i), word_text(rng, 10 + rng() % 40), "d"));
    }
    size_t dups = n / 5;
    for (size_t i = 0; i < dups; ++i) {
      Record copy = rs[rng() % n];
      copy.id = "dup" + std::to_string(i);
      rs.push_back(std::move(copy));
    }
    auto once = run_dedup(rs);
    auto twice = run_dedup(once);
    CHECK(once == twice);
  }
}

TEST_CASE("no two survivors share normalized text") {
  std::mt19937_64 rng(29);
  std::vector<Record> rs;
  for (int i = 0; i < 300; ++i) {
    rs.push_back(rec("r" + std::to_string(i), word_text(rng, 15, 200), "d"));
  }
  for (int i = 0; i < 100; ++i) {
    Record copy = rs[rng() % rs.size()];
    copy.id = "c" + std::to_string(i);
    rs.push_back(std::move(copy));
  }
  auto out = run_dedup(rs);
  std::set<std::vector<std::string>> seen;
  for (const auto& r : out) {
    auto sh = shingle(r.text, 5);
    CHECK(seen.insert(sh).second);
  }
}

TEST_CASE("survivors are independent of input order") {
  std::mt19937_64 rng(31);
  std::vector<Record> rs;
  for (int i = 0; i < 200; ++i) {
    rs.push_back(rec("r" + std::to_string(i), word_text(rng, 30), "d"));
  }
  for (int i = 0; i < 40; ++i) {
    Record copy = rs[static_cast<size_t>(i) * 3];
    copy.id = "dup" + std::to_string(i);
    rs.push_back(std::move(copy));
  }
  auto forward = run_dedup(rs);
  auto shuffled = rs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto permuted = run_dedup(shuffled);

  std::set<std::string> a, b;
  for (const auto& r : forward) a.insert(r.id);
  for (const auto& r : permuted) b.insert(r.id);
  CHECK(a == b);
}

TEST_CASE("empty-text records bypass dedup and survive") {
  std::vector<Record> rs = {rec("e1", "", "d"), rec("e2", "", "d"),
                            rec("t", "real text content here", "d")};
  DedupStats stats;
  auto out = run_dedup(rs, &stats);
  CHECK(out.size() == 3);
  CHECK(stats.bypass_count == 2);
}

TEST_CASE("empirical LSH candidate rate tracks 1-(1-J^r)^b") {
  DedupConfig cfg;
  std::mt19937_64 rng(37);
  for (double j : {0.5, 0.7, 0.8}) {
    int collisions = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
      auto [a, b] = controlled_pair(rng, 120, j);
      auto sa = minhash_signature(a, cfg, 1000 + t);
      auto sb = minhash_signature(b, cfg, 1000 + t);
      bool hit = false;
      for (int band = 0; band < cfg.bands && !hit; ++band) {
        bool all = true;
        for (int row = 0; row < cfg.rows; ++row) {
          size_t idx = static_cast<size_t>(band * cfg.rows + row);
          if (sa.values[idx] != sb.values[idx]) {
            all = false;
            break;
          }
        }
        hit = all;
      }
      if (hit) ++collisions;
    }
    double want = lsh_candidate_probability(j, cfg);
    double got = static_cast<double>(collisions) / trials;
    CHECK(std::abs(got - want) <= 0.05);
  }
}

TEST_CASE("dedup config validation") {
  DedupConfig bad;
  bad.bands = 10;  // 10*8 != 128
  CHECK_THROWS_AS(bad.validate(), Error);
  DedupConfig neg;
  neg.jaccard_threshold = 0.0;
  CHECK_THROWS_AS(neg.validate(), Error);
}
