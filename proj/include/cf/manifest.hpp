// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cf/record.hpp"

namespace cf {

/// A named, sharded dataset with exact totals. total_records is the N_A used
/// by curriculum rank rescaling; score_keys lists every score key observed
/// anywhere in the dataset, with per-key coverage (fraction of records
/// carrying it).
struct DatasetManifest {
  std::string name;
  std::vector<std::string> shards;
  std::vector<std::string> score_keys;
  std::map<std::string, double> score_coverage;
  uint64_t total_records = 0;
  uint64_t total_tokens = 0;
  TokenMode token_mode = TokenMode::Whitespace;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

/// Scans every shard (in parallel when workers > 1), validates each record,
/// and produces exact totals. Totals are order-independent sums; duplicate
/// ids across shards of the same dataset are a hard error naming the id.
DatasetManifest build_manifest(const std::string& name,
                               const std::vector<std::string>& shards,
                               TokenMode mode, int workers = 1);

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace cf
