// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cf/extsort.hpp"
#include "cf/stream.hpp"

namespace cf {

/// MinHash/LSH operating point. Defaults give an implied LSH threshold of
/// (1/b)^(1/r) = (1/16)^(1/8) ~ 0.71.
struct DedupConfig {
  int shingle_size = 5;  // words
  int num_hashes = 128;  // H
  int bands = 16;        // b
  int rows = 8;          // r; b * r must equal H
  double jaccard_threshold = 0.7;

  void validate() const;
};

/// All contiguous k-word windows of the text after whitespace normalization
/// and ASCII lowercasing, as a sorted unique set. Texts shorter than k words
/// yield the single whole-text shingle; empty/whitespace-only text yields an
/// empty set.
std::vector<std::string> shingle(std::string_view text, int k);

struct MinHashSignature {
  std::vector<uint64_t> values;  // length H

  /// Fraction of matching positions; unbiased estimate of Jaccard similarity.
  double estimate_jaccard(const MinHashSignature& other) const;
};

/// values[i] = min over shingles of hash_i(shingle), hash_i derived from
/// (node_seed, i). Identical shingle sets give identical signatures.
/// Throws EmptyShingleSet on an empty set.
MinHashSignature minhash_signature(const std::vector<std::string>& shingles,
                                   const DedupConfig& cfg, uint64_t node_seed);

/// Probability that two records with Jaccard similarity j collide in at
/// least one LSH band: 1 - (1 - j^r)^b.
double lsh_candidate_probability(double jaccard, const DedupConfig& cfg);

struct DedupStats {
  uint64_t records_in = 0;
  uint64_t records_out = 0;
  uint64_t clusters = 0;         // duplicate clusters of size >= 2
  uint64_t bypass_count = 0;     // empty-text records that skip dedup
  uint64_t candidate_pairs = 0;  // distinct pairs sharing >= 1 band
  uint64_t duplicate_edges = 0;  // candidates passing the similarity check
};

/// Near-duplicate removal. Records sharing any band hash become candidate
/// pairs; pairs whose signature-estimated Jaccard reaches the threshold form
/// edges; connected components are duplicate clusters and exactly one record
/// per cluster survives: the lexicographically smallest (dataset, id).
/// Output is the input order restricted to survivors, so the result is
/// independent of input order and worker count. Empty-text records bypass
/// dedup and always survive.
StreamPtr dedup(StreamPtr in, DedupConfig cfg, uint64_t node_seed,
                const SortOptions& sort_opt, DedupStats* stats = nullptr);

}  // namespace cf
