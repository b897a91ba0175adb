// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cf/extsort.hpp"
#include "cf/stream.hpp"

namespace cf {

/// A fixed-token-budget slice of a dataset starting at a quality-score
/// quantile, measured in cumulative token mass under descending score.
struct ProbeSpec {
  std::string score_key;
  std::vector<double> quantiles;  // strictly increasing, each in [0, 1)
  uint64_t budget_tokens = 0;     // > 0

  void validate() const;
};

struct ProbeSliceStats {
  double quantile = 0.0;
  uint64_t start_rank = 0;  // 1-based rank of the first emitted record; 0 if empty
  uint64_t records = 0;
  uint64_t tokens = 0;
  bool short_probe = false;  // tail ran out before the budget was met
};

/// Single-quantile probe as a stream: sort descending by (score, identity),
/// skip the records fully inside the leading p * total_tokens mass (a record
/// straddling the boundary starts the probe), then emit until cumulative
/// emitted tokens first reach the budget, final boundary record included.
/// If the tail holds fewer tokens than the budget the probe is flagged
/// short.
StreamPtr build_probe(StreamPtr in, const std::string& score_key, double quantile,
                      uint64_t budget_tokens, const SortOptions& sort_opt,
                      ProbeSliceStats* stats = nullptr,
                      const std::string& context = "probe");

/// All quantiles of a sweep share one descending sort of the dataset. The
/// callback receives each probe's stream in quantile order (and may drain
/// it, e.g. into shards); slices may overlap when the budget exceeds the
/// quantile spacing in tokens. Returned stats cover the full slices.
using ProbeConsumer = std::function<void(size_t, RecordStream&)>;
std::vector<ProbeSliceStats> probe_sweep(StreamPtr in, const ProbeSpec& spec,
                                         const SortOptions& sort_opt,
                                         const ProbeConsumer& consume = nullptr,
                                         const std::string& context = "probe");

/// Training-compute estimate C = 6 * N * D for N parameters over D tokens.
struct ComputeCost {
  double params = 0.0;
  double tokens = 0.0;
  double flops = 0.0;
};

ComputeCost compute_cost(double n_params, double d_tokens);

/// flops(a) / flops(b); the constant 6 cancels.
double cost_ratio(const ComputeCost& a, const ComputeCost& b);

}  // namespace cf
