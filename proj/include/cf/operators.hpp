// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cf/extsort.hpp"
#include "cf/stream.hpp"

namespace cf {

enum class RatioBasis { Tokens, Records };

std::string_view ratio_basis_name(RatioBasis basis);
RatioBasis ratio_basis_from_name(std::string_view name);

/// Keep the top `ratio` fraction of the input under descending score.
struct TopRatioSpec {
  std::string score_key;
  double ratio = 1.0;  // in [0, 1]
  RatioBasis basis = RatioBasis::Tokens;
};

struct FilterStats {
  uint64_t records_before = 0;
  uint64_t records_after = 0;
  uint64_t tokens_before = 0;
  uint64_t tokens_after = 0;

  double actual_ratio() const {
    return tokens_before == 0 ? 0.0
                              : static_cast<double>(tokens_after) /
                                    static_cast<double>(tokens_before);
  }
};

/// Ranks the input by (score desc, dataset asc, id asc) and keeps the top
/// prefix: under the records basis the first floor(ratio * N) records; under
/// the tokens basis records are taken in rank order until cumulative tokens
/// first reach ratio * total_tokens, the boundary record included. Output
/// preserves input order among kept records. Both passes run through the
/// external sorter, so memory stays bounded.
///
/// Every record must carry spec.score_key; a missing key is a hard error
/// naming the record.
StreamPtr filter_top_ratio(StreamPtr in, TopRatioSpec spec, uint64_t node_seed,
                           const SortOptions& sort_opt, FilterStats* stats = nullptr,
                           const std::string& context = "filter_top_ratio");

/// Keeps each record independently with probability `ratio`, decided by a
/// hash of (node_seed, dataset, id). Order-preserving; per-record decisions
/// are unchanged by adding or removing other records.
StreamPtr sample_random(StreamPtr in, double ratio, uint64_t node_seed);

struct RepeatSpec {
  double ratio = 1.0;  // >= 0; 1.5 means 150%
};

/// Emits each record k times, k = floor(ratio) + Bernoulli(frac(ratio)) with
/// the Bernoulli decided by hash of (node_seed, dataset, id). The first copy
/// keeps the original id; further copies get `id#1`, `id#2`, ... so identity
/// stays unique downstream. ratio 1.0 is the identity.
StreamPtr repeat_records(StreamPtr in, RepeatSpec spec, uint64_t node_seed);

/// Adds scores[target_key] = uniform [0,1) derived from a hash of
/// (node_seed, dataset, id). A record that already carries target_key is a
/// KeyCollision error: real quality scores are never silently overwritten.
StreamPtr assign_random_score(StreamPtr in, std::string target_key, uint64_t node_seed);

/// Emits the inputs one after another in declared order.
StreamPtr concat(std::vector<StreamPtr> ins);

/// Fetch a record's score or fail naming the record. Shared by every
/// score-consuming operator.
double require_score(const Record& r, const std::string& key, const std::string& context);

}  // namespace cf
