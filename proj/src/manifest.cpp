// SPDX-License-Identifier: Apache-2.0

#include "cf/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include "cf/error.hpp"
#include "cf/jsonl.hpp"
#include "cf/parallel.hpp"

namespace cf {

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["shards"] = shards;
  j["score_keys"] = score_keys;
  j["score_coverage"] = score_coverage;
  j["total_records"] = total_records;
  j["total_tokens"] = total_tokens;
  j["token_mode"] = std::string(token_mode_name(token_mode));
  return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    m.shards = j.at("shards").get<std::vector<std::string>>();
    m.score_keys = j.value("score_keys", std::vector<std::string>{});
    m.score_coverage = j.value("score_coverage", std::map<std::string, double>{});
    m.total_records = j.at("total_records").get<uint64_t>();
    m.total_tokens = j.at("total_tokens").get<uint64_t>();
    m.token_mode = token_mode_from_name(j.value("token_mode", "whitespace"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("bad manifest: ") + e.what());
  }
  return m;
}

DatasetManifest build_manifest(const std::string& name,
                               const std::vector<std::string>& shards,
                               TokenMode mode, int workers) {
  struct ShardScan {
    uint64_t records = 0;
    uint64_t tokens = 0;
    std::map<std::string, uint64_t> key_counts;
    std::vector<std::string> ids;
  };
  std::vector<ShardScan> scans(shards.size());

  parallel_chunks(shards.size(), 1, workers, [&](size_t begin, size_t end, size_t) {
    for (size_t i = begin; i < end; ++i) {
      ShardReader reader(shards[i], mode);
      ShardScan& scan = scans[i];
      Record r;
      while (reader.next(r)) {
        ++scan.records;
        scan.tokens += r.tokens;
        for (auto& [key, value] : r.scores) ++scan.key_counts[key];
        scan.ids.push_back(std::move(r.id));
      }
    }
  });

  DatasetManifest m;
  m.name = name;
  m.shards = shards;
  m.token_mode = mode;
  std::map<std::string, uint64_t> key_counts;
  std::unordered_set<std::string> seen;
  for (size_t i = 0; i < scans.size(); ++i) {
    m.total_records += scans[i].records;
    m.total_tokens += scans[i].tokens;
    for (auto& [key, n] : scans[i].key_counts) key_counts[key] += n;
    // Sequential duplicate scan in shard order: deterministic first offender.
    for (auto& id : scans[i].ids) {
      if (!seen.insert(id).second) {
        throw Error(ErrorCode::DuplicateId,
                    "id '" + id + "' appears more than once in dataset '" + name +
                        "' (shard " + shards[i] + ")");
      }
    }
  }
  for (auto& [key, n] : key_counts) {
    m.score_keys.push_back(key);
    m.score_coverage[key] =
        m.total_records == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(m.total_records);
  }
  return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create '" + path + "'");
  out << m.to_json().dump(2) << "\n";
  if (!out) throw Error(ErrorCode::IoError, "write failed on '" + path + "'");
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw Error(ErrorCode::SchemaMismatch, "manifest '" + path + "' is not valid JSON");
  return DatasetManifest::from_json(j);
}

}  // namespace cf
