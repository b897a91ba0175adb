#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "cf/error.hpp"
#include "cf/operators.hpp"
#include "cf/probe.hpp"
#include "test_support.hpp"

using namespace cf;
using cftest::rec;

namespace {

StreamPtr stream_of(std::vector<Record> rs) {
  return std::make_unique<VectorStream>(std::move(rs));
}

SortOptions sort_opt() {
  SortOptions opt;
  opt.buffer_entries = 512;
  return opt;
}

/// n one-token records with distinct descending-friendly scores.
std::vector<Record> unit_corpus(size_t n, uint64_t seed) {
  auto rs = cftest::make_corpus(n, seed, "score", 1, 1);
  return rs;
}

}  // namespace

TEST_CASE("probe at quantile 0 with the full budget is the descending sort") {
  auto rs = cftest::make_corpus(500, 3);
  uint64_t total = 0;
  for (const auto& r : rs) total += r.tokens;
  ProbeSliceStats stats;
  auto out = drain(build_probe(stream_of(rs), "score", 0.0, total, sort_opt(), &stats));
  REQUIRE(out.size() == rs.size());
  for (size_t i = 1; i < out.size(); ++i) {
    CHECK(out[i - 1].scores.at("score") >= out[i].scores.at("score"));
  }
  CHECK(stats.start_rank == 1);
  CHECK(stats.tokens == total);
  CHECK_FALSE(stats.short_probe);
}

TEST_CASE("ten unit records, quantile 0.2, budget 3: ranks 3,4,5 by descending score") {
  std::vector<Record> rs;
  for (int i = 0; i < 10; ++i) {
    rs.push_back(rec("r" + std::to_string(i), "t", "d",
                     {{"score", static_cast<double>(i) / 10.0}}));
  }
  ProbeSliceStats stats;
  auto out = drain(build_probe(stream_of(rs), "score", 0.2, 3, sort_opt(), &stats));
  REQUIRE(out.size() == 3);
  // descending scores 0.9,0.8,... -> skip 0.9,0.8 (20% of 10 tokens), take next 3
  CHECK(out[0].scores.at("score") == doctest::Approx(0.7));
  CHECK(out[1].scores.at("score") == doctest::Approx(0.6));
  CHECK(out[2].scores.at("score") == doctest::Approx(0.5));
  CHECK(stats.start_rank == 3);
  CHECK(stats.tokens == 3);
}

TEST_CASE("a record straddling the skip boundary starts the probe") {
  // tokens: 5, 5, 5; quantile 0.3 -> skip mass 4.5; first record straddles
  std::vector<Record> rs = {
      rec("a", "1 2 3 4 5", "d", {{"score", 0.9}}),
      rec("b", "1 2 3 4 5", "d", {{"score", 0.5}}),
      rec("c", "1 2 3 4 5", "d", {{"score", 0.1}}),
  };
  ProbeSliceStats stats;
  auto out = drain(build_probe(stream_of(rs), "score", 0.3, 100, sort_opt(), &stats));
  REQUIRE(out.size() == 3);  // nothing fully inside 4.5 tokens; all emitted
  CHECK(out[0].id == "a");
  CHECK(stats.start_rank == 1);
  CHECK(stats.short_probe);  // budget 100 > 15 available
}

TEST_CASE("short tail sets the short_probe flag") {
  auto rs = unit_corpus(10, 5);
  ProbeSliceStats stats;
  auto out = drain(build_probe(stream_of(rs), "score", 0.8, 100, sort_opt(), &stats));
  CHECK(out.size() == 2);
  CHECK(stats.short_probe);
}

TEST_CASE("probe tokens land within one boundary record of the budget") {
  std::mt19937_64 rng(9);
  for (int round = 0; round < 10; ++round) {
    auto rs = cftest::make_corpus(2000, rng(), "score", 1, 30);
    uint64_t total = 0, max_tokens = 0;
    for (const auto& r : rs) {
      total += r.tokens;
      max_tokens = std::max(max_tokens, r.tokens);
    }
    uint64_t budget = total / 5;
    ProbeSliceStats stats;
    drain(build_probe(stream_of(rs), "score", 0.25, budget, sort_opt(), &stats));
    REQUIRE_FALSE(stats.short_probe);
    CHECK(stats.tokens >= budget);
    CHECK(stats.tokens < budget + max_tokens);
  }
}

TEST_CASE("probe at p=0 equals filter_top_ratio under the tokens basis") {
  std::mt19937_64 rng(15);
  for (int round = 0; round < 8; ++round) {
    auto rs = cftest::make_corpus(1500, rng(), "score", 1, 20);
    uint64_t total = 0;
    for (const auto& r : rs) total += r.tokens;
    double ratio = 0.1 + 0.2 * round / 8.0;
    uint64_t budget = static_cast<uint64_t>(ratio * static_cast<double>(total));
    if (budget == 0) continue;

    auto probe_out = drain(build_probe(stream_of(rs), "score", 0.0, budget, sort_opt()));
    auto filter_out = drain(filter_top_ratio(
        stream_of(rs),
        {"score", static_cast<double>(budget) / static_cast<double>(total),
         RatioBasis::Tokens},
        0, sort_opt()));
    // same kept set; probe emits rank order, filter preserves input order
    std::set<std::string> a, b;
    for (const auto& r : probe_out) a.insert(r.id);
    for (const auto& r : filter_out) b.insert(r.id);
    CHECK(a == b);
  }
}

TEST_CASE("probe monotonicity: every probe record scores at most the boundary") {
  auto rs = cftest::make_corpus(1000, 21);
  // sort a copy descending to find the score at the 30% token boundary
  auto sorted = rs;
  std::sort(sorted.begin(), sorted.end(), [](const Record& a, const Record& b) {
    return a.scores.at("score") > b.scores.at("score");
  });
  uint64_t total = 0;
  for (const auto& r : rs) total += r.tokens;
  auto out = drain(build_probe(stream_of(rs), "score", 0.3, total / 10, sort_opt()));
  // the skipped mass holds the highest scores; everything emitted scores <=
  // every record strictly above the boundary
  uint64_t cum = 0;
  double boundary_min = 1e300;
  for (const auto& r : sorted) {
    if (static_cast<double>(cum) + r.tokens > 0.3 * static_cast<double>(total)) break;
    boundary_min = std::min(boundary_min, r.scores.at("score"));
    cum += r.tokens;
  }
  for (const auto& r : out) CHECK(r.scores.at("score") <= boundary_min);
}

TEST_CASE("sweep: single quantile equals build_probe") {
  auto rs = unit_corpus(100, 33);
  ProbeSpec spec{"score", {0.25}, 20};
  std::vector<std::vector<std::string>> collected(1);
  auto stats = probe_sweep(stream_of(rs), spec, sort_opt(),
                           [&](size_t i, RecordStream& s) {
                             while (auto r = s.next()) collected[i].push_back(r->id);
                           });
  auto direct = drain(build_probe(stream_of(rs), "score", 0.25, 20, sort_opt()));
  REQUIRE(stats.size() == 1);
  REQUIRE(collected[0].size() == direct.size());
  for (size_t i = 0; i < direct.size(); ++i) CHECK(collected[0][i] == direct[i].id);
}

TEST_CASE("sweep: adjacent quantiles with budget <= spacing are disjoint") {
  auto rs = unit_corpus(1000, 41);
  // spacing 0.2 => 200 tokens; budget 150 < spacing
  ProbeSpec spec{"score", {0.0, 0.2, 0.4}, 150};
  std::vector<std::set<std::string>> sets(3);
  probe_sweep(stream_of(rs), spec, sort_opt(), [&](size_t i, RecordStream& s) {
    while (auto r = s.next()) sets[i].insert(r->id);
  });
  for (size_t i = 0; i < sets.size(); ++i) {
    for (size_t j = i + 1; j < sets.size(); ++j) {
      for (const auto& id : sets[i]) CHECK(sets[j].count(id) == 0);
    }
  }
}

TEST_CASE("sweep total equals the sum of per-probe tokens") {
  auto rs = cftest::make_corpus(3000, 47);
  uint64_t total = 0;
  for (const auto& r : rs) total += r.tokens;
  ProbeSpec spec{"score", {0.0, 0.15, 0.30, 0.45, 0.60}, total / 8};
  auto stats = probe_sweep(stream_of(rs), spec, sort_opt());
  uint64_t sum = 0;
  for (const auto& s : stats) sum += s.tokens;
  CHECK(stats.size() == 5);
  for (const auto& s : stats) CHECK_FALSE(s.short_probe);
  CHECK(sum >= 5 * (total / 8));
}

TEST_CASE("spec validation rejects bad quantile lists") {
  CHECK_THROWS_AS((ProbeSpec{"score", {0.2, 0.2}, 10}.validate()), Error);
  CHECK_THROWS_AS((ProbeSpec{"score", {0.5, 0.3}, 10}.validate()), Error);
  CHECK_THROWS_AS((ProbeSpec{"score", {1.0}, 10}.validate()), Error);
  CHECK_THROWS_AS((ProbeSpec{"score", {0.0}, 0}.validate()), Error);
  CHECK_THROWS_AS((ProbeSpec{"", {0.0}, 10}.validate()), Error);
  CHECK_NOTHROW((ProbeSpec{"score", {0.0, 0.15, 0.3, 0.45, 0.6}, 10}.validate()));
}

TEST_CASE("compute_cost is 6*N*D with positivity checks") {
  auto c = compute_cost(1.0, 1.0);
  CHECK(c.flops == 6.0);
  CHECK_THROWS_AS(compute_cost(0.0, 1.0), Error);
  CHECK_THROWS_AS(compute_cost(1.0, -2.0), Error);
}

TEST_CASE("cost ratio of the probing sweep vs the baseline run") {
  // 0.6e9 params on 42e9 tokens vs 2e9 params on 609e9 tokens
  auto probe_cost = compute_cost(0.6e9, 42e9);
  auto base_cost = compute_cost(2e9, 609e9);
  CHECK(cost_ratio(probe_cost, base_cost) == doctest::Approx(0.0207).epsilon(0.005));
}

TEST_CASE("compute_cost linearity: doubling N doubles C") {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 50; ++i) {
    double n = 1.0 + static_cast<double>(rng() % 1000);
    double d = 1.0 + static_cast<double>(rng() % 1000);
    CHECK(compute_cost(2 * n, d).flops == doctest::Approx(2 * compute_cost(n, d).flops));
    // the constant cancels in ratios
    CHECK(cost_ratio(compute_cost(n, d), compute_cost(n, 2 * d)) == doctest::Approx(0.5));
  }
}
