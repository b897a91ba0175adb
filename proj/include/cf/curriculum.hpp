// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cf/extsort.hpp"
#include "cf/stream.hpp"

namespace cf {

/// Global position key for one ranked record: the rescaled rank
/// R = r * N_total / N_A held as an exact rational, plus the documented
/// tie-break (dataset index in spec order, then within-dataset rank).
/// Comparisons cross-multiply in 128-bit integers; no floating point is
/// involved anywhere in the ordering.
struct CurriculumKey {
  uint64_t rank = 0;        // r in [1, N_A]
  uint64_t dataset_size = 0;  // N_A
  uint64_t total = 0;       // N_total (common across a merge)
  uint32_t dataset_index = 0;

  /// Exact numerator/denominator of R.
  uint64_t numerator() const { return rank * total; }
  uint64_t denominator() const { return dataset_size; }
  double approx() const {
    return static_cast<double>(rank) * static_cast<double>(total) /
           static_cast<double>(dataset_size);
  }

  bool operator<(const CurriculumKey& other) const {
    // r_a/N_a vs r_b/N_b; the common N_total factor cancels.
    using u128 = unsigned __int128;
    u128 lhs = static_cast<u128>(rank) * other.dataset_size;
    u128 rhs = static_cast<u128>(other.rank) * dataset_size;
    if (lhs != rhs) return lhs < rhs;
    if (dataset_index != other.dataset_index) return dataset_index < other.dataset_index;
    return rank < other.rank;
  }
  bool operator==(const CurriculumKey& other) const {
    return !(*this < other) && !(other < *this);
  }
};

/// R(x) = r * N_total / N_A as an exact rational. Validates
/// 1 <= r <= N_A <= N_total.
CurriculumKey rescale_rank(uint64_t r, uint64_t n_a, uint64_t n_total,
                           uint32_t dataset_index = 0);

/// Ranking directive for one input dataset: a score key, or random ordering
/// for datasets without quality labels.
struct DatasetRanking {
  std::string score_key;  // ignored when use_random_order
  bool use_random_order = false;
};

inline DatasetRanking ranking_by_key(std::string key) {
  return DatasetRanking{std::move(key), false};
}
inline DatasetRanking ranking_random() { return DatasetRanking{"", true}; }

/// Sorts one dataset ascending by its quality metric (ties by (dataset, id))
/// and assigns ordinal ranks 1..N. With use_random_order the sort key is a
/// uniform hash of (node_seed, dataset, id), which realizes a seeded shuffle.
/// In-memory helper used by tests and small standalone runs; the merge path
/// below streams through the external sorter instead.
std::vector<Record> rank_within_dataset(std::vector<Record> records,
                                        const DatasetRanking& ranking,
                                        uint64_t node_seed,
                                        const std::string& context = "curriculum");

struct CurriculumStats {
  uint64_t n_total = 0;
  std::vector<std::pair<std::string, uint64_t>> dataset_sizes;  // per input, in spec order
};

/// Algorithm: rank each input ascending by its metric, rescale ranks onto
/// the shared axis R = r * N_total / N_A, then k-way merge by (R, dataset
/// index, r). Low-quality records come first and every prefix keeps dataset
/// proportions stable to within one record per dataset.
///
/// `names` gives each input a label for stats; inputs are ranked and merged
/// in the given order, which defines the tie-break dataset index.
StreamPtr curriculum_merge(std::vector<StreamPtr> ins,
                           std::vector<DatasetRanking> rankings,
                           std::vector<std::string> names, uint64_t node_seed,
                           const SortOptions& sort_opt,
                           CurriculumStats* stats = nullptr,
                           const std::string& context = "curriculum");

/// Ranking score used for ordering: the record's score under `ranking`, or
/// the seeded uniform hash for random ordering.
double curriculum_order_score(const Record& r, const DatasetRanking& ranking,
                              uint64_t node_seed, const std::string& context);

}  // namespace cf
