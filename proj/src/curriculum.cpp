// SPDX-License-Identifier: Apache-2.0

#include "cf/curriculum.hpp"

#include <algorithm>
#include <memory>

#include "cf/error.hpp"
#include "cf/hash.hpp"
#include "cf/operators.hpp"

namespace cf {

CurriculumKey rescale_rank(uint64_t r, uint64_t n_a, uint64_t n_total,
                           uint32_t dataset_index) {
  if (n_a == 0)
    throw Error(ErrorCode::InconsistentTotal, "rescale_rank: dataset size is zero");
  if (r < 1 || r > n_a || n_a > n_total)
    throw Error(ErrorCode::InconsistentTotal,
                "rescale_rank: need 1 <= r <= N_A <= N_total, got r=" + std::to_string(r) +
                    " N_A=" + std::to_string(n_a) + " N_total=" + std::to_string(n_total));
  return CurriculumKey{r, n_a, n_total, dataset_index};
}

double curriculum_order_score(const Record& r, const DatasetRanking& ranking,
                              uint64_t node_seed, const std::string& context) {
  if (ranking.use_random_order) {
    return u01(decision_hash(node_seed, "rank", r.dataset, r.id));
  }
  return require_score(r, ranking.score_key, context);
}

std::vector<Record> rank_within_dataset(std::vector<Record> records,
                                        const DatasetRanking& ranking,
                                        uint64_t node_seed, const std::string& context) {
  std::vector<std::pair<ScoreKey, size_t>> keys;
  keys.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    double s = curriculum_order_score(records[i], ranking, node_seed, context);
    keys.emplace_back(ScoreKey{s, records[i].dataset, records[i].id}, i);
  }
  std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return ScoreAscLess{}(a.first, b.first);
  });
  std::vector<Record> out;
  out.reserve(records.size());
  for (auto& [key, idx] : keys) out.push_back(std::move(records[idx]));
  return out;
}

namespace {

/// One ranked input: an ascending-sorted cursor plus its size. Rank is the
/// 1-based position in the sorted order.
struct RankedInput {
  std::unique_ptr<ExternalSorter<ScoreKey, ScoreAscLess>> sorter;
  ExternalSorter<ScoreKey, ScoreAscLess>::Cursor cursor;
  uint64_t size = 0;
  uint64_t next_rank = 1;
  std::optional<Record> head;

  void advance() {
    ScoreKey key;
    std::string payload;
    if (cursor.next(key, payload)) {
      head = record_from_line(payload, TokenMode::Precomputed);
      ++next_rank;
    } else {
      head.reset();
    }
  }

  uint64_t head_rank() const { return next_rank - 1; }
};

class CurriculumMergeStream final : public RecordStream {
 public:
  CurriculumMergeStream(std::vector<StreamPtr> ins, std::vector<DatasetRanking> rankings,
                        std::vector<std::string> names, uint64_t node_seed,
                        const SortOptions& sort_opt, CurriculumStats* stats,
                        std::string context)
      : ins_(std::move(ins)), rankings_(std::move(rankings)), names_(std::move(names)),
        node_seed_(node_seed), sort_opt_(sort_opt), stats_(stats),
        context_(std::move(context)) {}

  std::optional<Record> next() override {
    if (!ran_) run();
    // Pick the input whose head has the smallest key; keys are strictly
    // ordered by (R, dataset index, rank).
    int best = -1;
    CurriculumKey best_key;
    for (size_t i = 0; i < inputs_.size(); ++i) {
      auto& input = inputs_[i];
      if (!input.head) continue;
      CurriculumKey key{input.head_rank(), input.size, n_total_,
                        static_cast<uint32_t>(i)};
      if (best < 0 || key < best_key) {
        best = static_cast<int>(i);
        best_key = key;
      }
    }
    if (best < 0) return std::nullopt;
    Record out = std::move(*inputs_[best].head);
    inputs_[best].advance();
    return out;
  }

 private:
  void run() {
    ran_ = true;
    inputs_.resize(ins_.size());
    for (size_t i = 0; i < ins_.size(); ++i) {
      auto& input = inputs_[i];
      input.sorter =
          std::make_unique<ExternalSorter<ScoreKey, ScoreAscLess>>(sort_opt_);
      while (auto r = ins_[i]->next()) {
        double s = curriculum_order_score(*r, rankings_[i], node_seed_, context_);
        input.sorter->push(ScoreKey{s, r->dataset, r->id}, record_to_line(*r));
        ++input.size;
      }
      ins_[i].reset();
      n_total_ += input.size;
    }
    if (stats_) {
      stats_->n_total = n_total_;
      for (size_t i = 0; i < inputs_.size(); ++i) {
        stats_->dataset_sizes.emplace_back(names_[i], inputs_[i].size);
      }
    }
    for (auto& input : inputs_) {
      input.cursor = input.sorter->finish();
      input.advance();
    }
  }

  std::vector<StreamPtr> ins_;
  std::vector<DatasetRanking> rankings_;
  std::vector<std::string> names_;
  uint64_t node_seed_;
  SortOptions sort_opt_;
  CurriculumStats* stats_;
  std::string context_;
  bool ran_ = false;
  std::vector<RankedInput> inputs_;
  uint64_t n_total_ = 0;
};

}  // namespace

StreamPtr curriculum_merge(std::vector<StreamPtr> ins,
                           std::vector<DatasetRanking> rankings,
                           std::vector<std::string> names, uint64_t node_seed,
                           const SortOptions& sort_opt, CurriculumStats* stats,
                           const std::string& context) {
  if (ins.empty())
    throw Error(ErrorCode::ArityViolation, context + ": needs at least one input");
  if (rankings.size() != ins.size() || names.size() != ins.size())
    throw Error(ErrorCode::InconsistentTotal,
                context + ": rankings/names must match input count");
  return std::make_unique<CurriculumMergeStream>(std::move(ins), std::move(rankings),
                                                 std::move(names), node_seed, sort_opt,
                                                 stats, context);
}

}  // namespace cf
