// SPDX-License-Identifier: Apache-2.0

#include "cf/operators.hpp"

#include <cmath>
#include <memory>

#include "cf/error.hpp"
#include "cf/hash.hpp"

namespace cf {

std::string_view ratio_basis_name(RatioBasis basis) {
  return basis == RatioBasis::Tokens ? "tokens" : "records";
}

RatioBasis ratio_basis_from_name(std::string_view name) {
  if (name == "tokens") return RatioBasis::Tokens;
  if (name == "records") return RatioBasis::Records;
  throw Error(ErrorCode::ParamType,
              "unknown basis '" + std::string(name) + "' (expected tokens|records)");
}

double require_score(const Record& r, const std::string& key, const std::string& context) {
  auto it = r.scores.find(key);
  if (it == r.scores.end()) {
    throw Error(ErrorCode::MissingScoreKey,
                context + ": record '" + r.id + "' (dataset '" + r.dataset +
                    "') lacks score key '" + key + "'");
  }
  return it->second;
}

namespace {

// Records travel through sort spills as (seq, jsonl) so the kept set can be
// restored to input order with a second bounded-memory sort.
std::string encode_seq_record(uint64_t seq, const Record& r) {
  std::string out;
  detail::put_u64(out, seq);
  out += record_to_line(r);
  return out;
}

std::pair<uint64_t, Record> decode_seq_record(const std::string& payload) {
  const char* p = payload.data();
  const char* end = p + payload.size();
  uint64_t seq = detail::get_u64(p, end);
  Record r = record_from_line(std::string_view(p, static_cast<size_t>(end - p)),
                              TokenMode::Precomputed);
  return {seq, std::move(r)};
}

class FilterTopRatioStream final : public RecordStream {
 public:
  FilterTopRatioStream(StreamPtr in, TopRatioSpec spec, const SortOptions& sort_opt,
                       FilterStats* stats, std::string context)
      : in_(std::move(in)), spec_(std::move(spec)), sort_opt_(sort_opt),
        stats_(stats), context_(std::move(context)) {}

  std::optional<Record> next() override {
    if (!ran_) run();
    SeqKey key;
    std::string payload;
    if (!cursor_.next(key, payload)) return std::nullopt;
    return record_from_line(payload, TokenMode::Precomputed);
  }

 private:
  void run() {
    ran_ = true;
    FilterStats local;
    FilterStats& st = stats_ ? *stats_ : local;

    ExternalSorter<ScoreKey, ScoreDescLess> ranked(sort_opt_);
    uint64_t seq = 0;
    while (auto r = in_->next()) {
      double score = require_score(*r, spec_.score_key, context_);
      ++st.records_before;
      st.tokens_before += r->tokens;
      ranked.push(ScoreKey{score, r->dataset, r->id}, encode_seq_record(seq++, *r));
    }
    in_.reset();

    const double target_records = spec_.ratio * static_cast<double>(st.records_before);
    const double target_tokens = spec_.ratio * static_cast<double>(st.tokens_before);

    keeper_ = std::make_unique<ExternalSorter<SeqKey, SeqLess>>(sort_opt_);
    auto cur = ranked.finish();
    ScoreKey key;
    std::string payload;
    uint64_t kept_records = 0;
    uint64_t kept_tokens = 0;
    while (cur.next(key, payload)) {
      if (spec_.basis == RatioBasis::Records) {
        // rank r (1-based) is kept iff r <= ratio * N
        if (static_cast<double>(kept_records + 1) > target_records) break;
      } else {
        // take until cumulative tokens first reach the target; the record
        // crossing the boundary is included, never split
        if (static_cast<double>(kept_tokens) >= target_tokens) break;
      }
      auto [seq_no, rec] = decode_seq_record(payload);
      ++kept_records;
      kept_tokens += rec.tokens;
      keeper_->push(SeqKey{seq_no}, record_to_line(rec));
    }
    st.records_after = kept_records;
    st.tokens_after = kept_tokens;
    cursor_ = keeper_->finish();
  }

  StreamPtr in_;
  TopRatioSpec spec_;
  SortOptions sort_opt_;
  FilterStats* stats_;
  std::string context_;
  bool ran_ = false;
  std::unique_ptr<ExternalSorter<SeqKey, SeqLess>> keeper_;
  ExternalSorter<SeqKey, SeqLess>::Cursor cursor_;
};

}  // namespace

StreamPtr filter_top_ratio(StreamPtr in, TopRatioSpec spec, uint64_t /*node_seed*/,
                           const SortOptions& sort_opt, FilterStats* stats,
                           const std::string& context) {
  if (!(spec.ratio >= 0.0 && spec.ratio <= 1.0)) {
    throw Error(ErrorCode::ParamRange,
                context + ": ratio " + std::to_string(spec.ratio) + " outside [0,1]");
  }
  return std::make_unique<FilterTopRatioStream>(std::move(in), std::move(spec), sort_opt,
                                                stats, context);
}

StreamPtr sample_random(StreamPtr in, double ratio, uint64_t node_seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw Error(ErrorCode::ParamRange,
                "sample_random: ratio " + std::to_string(ratio) + " outside [0,1]");
  }
  auto src = std::shared_ptr<RecordStream>(std::move(in));
  return std::make_unique<FnStream>([src, ratio, node_seed]() -> std::optional<Record> {
    while (auto r = src->next()) {
      uint64_t h = decision_hash(node_seed, "sample", r->dataset, r->id);
      if (u01(h) < ratio) return r;
    }
    return std::nullopt;
  });
}

namespace {

class RepeatStream final : public RecordStream {
 public:
  RepeatStream(StreamPtr in, RepeatSpec spec, uint64_t node_seed)
      : in_(std::move(in)), spec_(spec), node_seed_(node_seed) {}

  std::optional<Record> next() override {
    for (;;) {
      if (emitted_ < copies_) {
        Record copy = current_;
        if (emitted_ > 0) copy.id += "#" + std::to_string(emitted_);
        ++emitted_;
        return copy;
      }
      auto r = in_->next();
      if (!r) return std::nullopt;
      current_ = std::move(*r);
      uint64_t whole = static_cast<uint64_t>(std::floor(spec_.ratio));
      double frac = spec_.ratio - static_cast<double>(whole);
      uint64_t extra = 0;
      if (frac > 0.0) {
        uint64_t h = decision_hash(node_seed_, "repeat", current_.dataset, current_.id);
        extra = u01(h) < frac ? 1 : 0;
      }
      copies_ = whole + extra;
      emitted_ = 0;
    }
  }

 private:
  StreamPtr in_;
  RepeatSpec spec_;
  uint64_t node_seed_;
  Record current_;
  uint64_t copies_ = 0;
  uint64_t emitted_ = 0;
};

}  // namespace

StreamPtr repeat_records(StreamPtr in, RepeatSpec spec, uint64_t node_seed) {
  if (!(spec.ratio >= 0.0) || !std::isfinite(spec.ratio)) {
    throw Error(ErrorCode::ParamRange,
                "repeat: ratio " + std::to_string(spec.ratio) + " must be finite and >= 0");
  }
  return std::make_unique<RepeatStream>(std::move(in), spec, node_seed);
}

StreamPtr assign_random_score(StreamPtr in, std::string target_key, uint64_t node_seed) {
  auto src = std::shared_ptr<RecordStream>(std::move(in));
  auto key = std::make_shared<std::string>(std::move(target_key));
  return std::make_unique<FnStream>([src, key, node_seed]() -> std::optional<Record> {
    auto r = src->next();
    if (!r) return std::nullopt;
    if (r->scores.count(*key)) {
      throw Error(ErrorCode::KeyCollision,
                  "assign_random_score: record '" + r->id + "' already carries score key '" +
                      *key + "'");
    }
    r->scores[*key] = u01(decision_hash(node_seed, "score", r->dataset, r->id));
    return r;
  });
}

StreamPtr concat(std::vector<StreamPtr> ins) {
  if (ins.empty()) throw Error(ErrorCode::ArityViolation, "concat: needs at least one input");
  auto srcs = std::make_shared<std::vector<StreamPtr>>(std::move(ins));
  auto idx = std::make_shared<size_t>(0);
  return std::make_unique<FnStream>([srcs, idx]() -> std::optional<Record> {
    while (*idx < srcs->size()) {
      if (auto r = (*srcs)[*idx]->next()) return r;
      (*srcs)[*idx].reset();
      ++*idx;
    }
    return std::nullopt;
  });
}

}  // namespace cf
