#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cf/error.hpp"
#include "cf/jsonl.hpp"
#include "cf/manifest.hpp"
#include "cf/record.hpp"
#include "test_support.hpp"

using namespace cf;
using cftest::rec;

TEST_CASE("count_tokens whitespace counts maximal non-whitespace runs") {
  CHECK(count_tokens("a b  c", TokenMode::Whitespace) == 3);
  CHECK(count_tokens("", TokenMode::Whitespace) == 0);
  CHECK(count_tokens("  leading and trailing \t\n", TokenMode::Whitespace) == 3);
  CHECK(count_tokens("one", TokenMode::Whitespace) == 1);
  CHECK(count_tokens(" \t \n ", TokenMode::Whitespace) == 0);
}

TEST_CASE("count_tokens bytes counts UTF-8 byte length") {
  CHECK(count_tokens("héllo", TokenMode::Bytes) == 6);  // é is 2 bytes
  CHECK(count_tokens("", TokenMode::Bytes) == 0);
  CHECK(count_tokens("abc", TokenMode::Bytes) == 3);
}

TEST_CASE("count_tokens is pure: same input, same output") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    std::string s;
    int len = static_cast<int>(rng() % 60);
    for (int k = 0; k < len; ++k) s.push_back(" ab\tc d"[rng() % 7]);
    CHECK(count_tokens(s, TokenMode::Whitespace) == count_tokens(s, TokenMode::Whitespace));
    CHECK(count_tokens(s, TokenMode::Bytes) == s.size());
  }
}

TEST_CASE("validate_record accepts a minimal record and counts tokens") {
  nlohmann::json raw = {{"id", "a"}, {"text", "x"}, {"scores", {{"score", 0.5}}}};
  Record r = validate_record(raw, TokenMode::Whitespace);
  CHECK(r.id == "a");
  CHECK(r.tokens == 1);
  CHECK(r.scores.at("score") == 0.5);
}

TEST_CASE("validate_record rejects structured error cases") {
  CHECK_THROWS_WITH_AS(
      validate_record({{"text", "x"}}, TokenMode::Whitespace),
      doctest::Contains("MissingId"), Error);
  CHECK_THROWS_WITH_AS(
      validate_record({{"id", "a"}}, TokenMode::Whitespace),
      doctest::Contains("MissingText"), Error);

  nlohmann::json nan_score = {{"id", "a"}, {"text", "x"}};
  nan_score["scores"]["score"] = std::nan("");
  CHECK_THROWS_WITH_AS(validate_record(nan_score, TokenMode::Whitespace),
                       doctest::Contains("NonFiniteScore"), Error);

  // precomputed mode without a tokens field names the record
  CHECK_THROWS_WITH_AS(
      validate_record({{"id", "noct"}, {"text", "x"}}, TokenMode::Precomputed),
      doctest::Contains("noct"), Error);

  // whitespace-only text breaks tokens >= 1 iff text non-empty
  CHECK_THROWS_WITH_AS(
      validate_record({{"id", "a"}, {"text", "   "}}, TokenMode::Whitespace),
      doctest::Contains("TokenInvariant"), Error);
  // precomputed zero count on non-empty text likewise
  CHECK_THROWS_WITH_AS(
      validate_record({{"id", "a"}, {"text", "x"}, {"tokens", 0}}, TokenMode::Precomputed),
      doctest::Contains("TokenInvariant"), Error);
}

TEST_CASE("precomputed mode reads the tokens field verbatim") {
  Record r = validate_record({{"id", "a"}, {"text", "x y"}, {"tokens", 42}},
                             TokenMode::Precomputed);
  CHECK(r.tokens == 42);
}

TEST_CASE("serialization round-trip preserves every field") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> score(-10.0, 10.0);
  for (int i = 0; i < 500; ++i) {
    Record r = rec("id" + std::to_string(i), "some text " + std::to_string(rng() % 100),
                   "ds" + std::to_string(i % 3));
    r.scores["a"] = score(rng);
    r.scores["fasttext score"] = score(rng);
    r.extra["url"] = "http://example/" + std::to_string(i);
    r.extra["meta"] = {{"nested", true}};
    Record back = record_from_line(record_to_line(r), TokenMode::Whitespace);
    CHECK(back == r);
  }
}

TEST_CASE("unknown fields pass through") {
  auto r = record_from_line(R"({"id":"a","text":"x","custom":123,"other":"y"})",
                            TokenMode::Whitespace);
  CHECK(r.extra.at("custom") == 123);
  auto line = record_to_line(r);
  CHECK(line.find("custom") != std::string::npos);
  CHECK(line.find("other") != std::string::npos);
}

TEST_CASE("manifest: exact totals over multiple shards") {
  cftest::ScratchDir dir("manifest");
  std::vector<Record> a, b;
  for (int i = 0; i < 3; ++i) a.push_back(rec("a" + std::to_string(i), "t"));
  for (int i = 0; i < 3; ++i) b.push_back(rec("b" + std::to_string(i), "t"));
  cftest::write_shard(dir.sub("a.jsonl"), a);
  cftest::write_shard(dir.sub("b.jsonl"), b);

  auto m = build_manifest("demo", {dir.sub("a.jsonl"), dir.sub("b.jsonl")},
                          TokenMode::Whitespace);
  CHECK(m.total_records == 6);
  CHECK(m.total_tokens == 6);
}

TEST_CASE("manifest: score key union with coverage fractions") {
  cftest::ScratchDir dir("coverage");
  std::vector<Record> rs;
  for (int i = 0; i < 4; ++i) {
    auto r = rec("r" + std::to_string(i), "x", "", {{"score", 0.1 * i}});
    if (i < 1) r.scores["math_score"] = 0.5;
    rs.push_back(r);
  }
  cftest::write_shard(dir.sub("s.jsonl"), rs);
  auto m = build_manifest("mixed", {dir.sub("s.jsonl")}, TokenMode::Whitespace);
  CHECK(m.score_keys == std::vector<std::string>{"math_score", "score"});
  CHECK(m.score_coverage.at("score") == 1.0);
  CHECK(m.score_coverage.at("math_score") == doctest::Approx(0.25));
}

TEST_CASE("manifest: duplicate id across shards is a hard error") {
  cftest::ScratchDir dir("dup");
  cftest::write_shard(dir.sub("a.jsonl"), {rec("same", "x")});
  cftest::write_shard(dir.sub("b.jsonl"), {rec("same", "y z")});
  CHECK_THROWS_WITH_AS(build_manifest("d", {dir.sub("a.jsonl"), dir.sub("b.jsonl")},
                                      TokenMode::Whitespace),
                       doctest::Contains("DuplicateId"), Error);
}

TEST_CASE("manifest: unreadable shard is a hard error") {
  CHECK_THROWS_AS(build_manifest("d", {"/nonexistent/path.jsonl"}, TokenMode::Whitespace),
                  Error);
}

TEST_CASE("manifest totals equal a brute-force recount, parallel scan included") {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 5; ++round) {
    cftest::ScratchDir dir("recount");
    size_t n = 200 + rng() % 800;
    auto corpus = cftest::make_corpus(n, rng());
    uint64_t tokens = 0;
    for (const auto& r : corpus) tokens += r.tokens;

    // split into ragged shards
    std::vector<std::string> shards;
    size_t at = 0;
    int shard_no = 0;
    while (at < corpus.size()) {
      size_t take = std::min<size_t>(corpus.size() - at, 1 + rng() % 300);
      std::vector<Record> part(corpus.begin() + at, corpus.begin() + at + take);
      std::string path = dir.sub("s" + std::to_string(shard_no++) + ".jsonl");
      cftest::write_shard(path, part);
      shards.push_back(path);
      at += take;
    }
    auto m1 = build_manifest("c", shards, TokenMode::Whitespace, 1);
    auto m4 = build_manifest("c", shards, TokenMode::Whitespace, 4);
    CHECK(m1.total_records == n);
    CHECK(m1.total_tokens == tokens);
    CHECK(m4.total_records == m1.total_records);
    CHECK(m4.total_tokens == m1.total_tokens);
  }
}

TEST_CASE("gzip shards read back identically") {
  cftest::ScratchDir dir("gz");
  auto corpus = cftest::make_corpus(500, 9);
  std::string gz_path = dir.sub("c.jsonl.gz");
  {
    LineWriter w(gz_path);
    for (const auto& r : corpus) w.write(record_to_line(r));
    w.close();
  }
  ShardReader reader(gz_path, TokenMode::Whitespace);
  Record r;
  size_t i = 0;
  while (reader.next(r)) {
    REQUIRE(i < corpus.size());
    CHECK(r == corpus[i]);
    ++i;
  }
  CHECK(i == corpus.size());
}

TEST_CASE("manifest save/load round trip") {
  cftest::ScratchDir dir("mrt");
  cftest::write_shard(dir.sub("s.jsonl"), {rec("a", "x", "", {{"score", 1.0}})});
  auto m = build_manifest("demo", {dir.sub("s.jsonl")}, TokenMode::Whitespace);
  save_manifest(m, dir.sub("m.json"));
  auto back = load_manifest(dir.sub("m.json"));
  CHECK(back.name == m.name);
  CHECK(back.total_records == m.total_records);
  CHECK(back.total_tokens == m.total_tokens);
  CHECK(back.score_keys == m.score_keys);
}
