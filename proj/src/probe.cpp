// SPDX-License-Identifier: Apache-2.0

#include "cf/probe.hpp"

#include <cmath>
#include <memory>

#include "cf/error.hpp"
#include "cf/jsonl.hpp"
#include "cf/operators.hpp"

namespace cf {

void ProbeSpec::validate() const {
  if (score_key.empty()) throw Error(ErrorCode::MissingParam, "probe: score_key is required");
  if (quantiles.empty()) throw Error(ErrorCode::MissingParam, "probe: no quantiles given");
  double prev = -1.0;
  for (double q : quantiles) {
    if (!(q >= 0.0 && q < 1.0))
      throw Error(ErrorCode::ParamRange,
                  "probe: quantile " + std::to_string(q) + " outside [0,1)");
    if (q <= prev)
      throw Error(ErrorCode::ParamRange, "probe: quantiles must be strictly increasing");
    prev = q;
  }
  if (budget_tokens == 0)
    throw Error(ErrorCode::ParamRange, "probe: budget_tokens must be > 0");
}

namespace {

/// Sorted spool shared by every quantile of a sweep: records in descending
/// (score, dataset, id) order, materialized once to a temp file.
struct SortedSpool {
  TmpDir dir;
  std::string path;
  uint64_t total_tokens = 0;
  uint64_t total_records = 0;

  SortedSpool(StreamPtr in, const std::string& score_key, const SortOptions& sort_opt,
              const std::string& context)
      : dir(sort_opt.tmp_root), path((dir.path() / "ranked.jsonl").string()) {
    ExternalSorter<ScoreKey, ScoreDescLess> sorter(sort_opt);
    while (auto r = in->next()) {
      double s = require_score(*r, score_key, context);
      total_tokens += r->tokens;
      ++total_records;
      sorter.push(ScoreKey{s, r->dataset, r->id}, record_to_line(*r));
    }
    in.reset();
    LineWriter out(path);
    auto cur = sorter.finish();
    ScoreKey key;
    std::string payload;
    while (cur.next(key, payload)) out.write(payload);
    out.close();
  }
};

/// Streams one probe slice out of the sorted spool. Skip rule: records fully
/// inside the leading quantile * total_tokens mass are skipped; the first
/// record straddling the boundary starts the probe. Emission stops once
/// cumulative emitted tokens first reach the budget (boundary included).
class ProbeSliceStream final : public RecordStream {
 public:
  ProbeSliceStream(std::shared_ptr<SortedSpool> spool, double quantile,
                   uint64_t budget_tokens, ProbeSliceStats* stats)
      : spool_(std::move(spool)), quantile_(quantile), budget_(budget_tokens),
        stats_(stats) {
    if (stats_) {
      *stats_ = ProbeSliceStats{};
      stats_->quantile = quantile_;
    }
  }

  std::optional<Record> next() override {
    if (!started_) start();
    if (done_) return std::nullopt;
    if (emitted_tokens_ >= budget_) {
      finish(false);
      return std::nullopt;
    }
    Record r;
    if (pending_) {
      r = std::move(*pending_);
      pending_.reset();
    } else {
      if (!reader_->next(r)) {
        finish(emitted_tokens_ < budget_);
        return std::nullopt;
      }
      ++rank_;
    }
    if (stats_ && stats_->start_rank == 0) stats_->start_rank = rank_;
    emitted_tokens_ += r.tokens;
    if (stats_) {
      ++stats_->records;
      stats_->tokens = emitted_tokens_;
    }
    return r;
  }

 private:
  void start() {
    started_ = true;
    reader_ = std::make_unique<ShardReader>(spool_->path, TokenMode::Precomputed);
    const double skip_target = quantile_ * static_cast<double>(spool_->total_tokens);
    uint64_t skipped = 0;
    Record r;
    while (static_cast<double>(skipped) < skip_target) {
      if (!reader_->next(r)) {
        finish(true);
        return;
      }
      ++rank_;
      if (static_cast<double>(skipped) + static_cast<double>(r.tokens) > skip_target) {
        pending_ = std::move(r);  // straddles the boundary: first probe record
        return;
      }
      skipped += r.tokens;
    }
  }

  void finish(bool short_probe) {
    done_ = true;
    reader_.reset();
    if (stats_) stats_->short_probe = short_probe;
  }

  std::shared_ptr<SortedSpool> spool_;
  double quantile_;
  uint64_t budget_;
  ProbeSliceStats* stats_;
  std::unique_ptr<ShardReader> reader_;
  std::optional<Record> pending_;
  bool started_ = false;
  bool done_ = false;
  uint64_t rank_ = 0;
  uint64_t emitted_tokens_ = 0;
};

}  // namespace

StreamPtr build_probe(StreamPtr in, const std::string& score_key, double quantile,
                      uint64_t budget_tokens, const SortOptions& sort_opt,
                      ProbeSliceStats* stats, const std::string& context) {
  if (!(quantile >= 0.0 && quantile < 1.0))
    throw Error(ErrorCode::ParamRange,
                context + ": quantile " + std::to_string(quantile) + " outside [0,1)");
  auto spool = std::make_shared<SortedSpool>(std::move(in), score_key, sort_opt, context);
  return std::make_unique<ProbeSliceStream>(std::move(spool), quantile, budget_tokens,
                                            stats);
}

std::vector<ProbeSliceStats> probe_sweep(StreamPtr in, const ProbeSpec& spec,
                                         const SortOptions& sort_opt,
                                         const ProbeConsumer& consume,
                                         const std::string& context) {
  spec.validate();
  auto spool = std::make_shared<SortedSpool>(std::move(in), spec.score_key, sort_opt,
                                             context);
  std::vector<ProbeSliceStats> stats(spec.quantiles.size());
  for (size_t i = 0; i < spec.quantiles.size(); ++i) {
    ProbeSliceStream slice(spool, spec.quantiles[i], spec.budget_tokens, &stats[i]);
    if (consume) consume(i, slice);
    while (slice.next()) {
      // Drain whatever the consumer left so stats always cover the full slice.
    }
  }
  return stats;
}

ComputeCost compute_cost(double n_params, double d_tokens) {
  if (!(n_params > 0.0) || !(d_tokens > 0.0))
    throw Error(ErrorCode::ParamRange, "compute_cost: N and D must be positive");
  return ComputeCost{n_params, d_tokens, 6.0 * n_params * d_tokens};
}

double cost_ratio(const ComputeCost& a, const ComputeCost& b) {
  return a.flops / b.flops;
}

}  // namespace cf
