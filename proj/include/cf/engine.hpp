// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cf/config.hpp"
#include "cf/record.hpp"
#include "cf/stream.hpp"

namespace cf {

struct NodeStats {
  std::string kind;
  std::vector<std::string> children;
  uint64_t records_in = 0;
  uint64_t tokens_in = 0;
  uint64_t records_out = 0;
  uint64_t tokens_out = 0;
  // Output breakdown by source dataset tag.
  std::map<std::string, std::pair<uint64_t, uint64_t>> per_dataset;  // records, tokens
  nlohmann::json details = nlohmann::json::object();
};

/// Provenance record of one run: configuration digest, seed, per-node
/// before/after statistics. Identical (config bytes, seed, inputs) give a
/// byte-identical fingerprint; worker count, scratch paths and timing are
/// deliberately excluded.
struct RunFingerprint {
  std::string config_hash;
  uint64_t seed = 0;
  TokenMode token_mode = TokenMode::Whitespace;
  std::string root;
  nlohmann::json tree;  // canonical node tree, for reporting
  std::map<std::string, NodeStats> nodes;
  uint64_t output_records = 0;
  uint64_t output_tokens = 0;
  std::vector<std::string> output_shards;  // relative to the output directory

  nlohmann::json to_json() const;
  static RunFingerprint from_json(const nlohmann::json& j);
};

void save_fingerprint(const RunFingerprint& fp, const std::string& path);
RunFingerprint load_fingerprint(const std::string& path);

struct ExecOptions {
  std::string out_dir;
  int workers = 1;
  uint64_t shard_size_override = 0;     // 0: take the config value
  uint64_t sort_buffer_override = 0;    // 0: config value or library default
  std::string tmp_root;                 // empty: CF_TMPDIR or system temp
};

/// Runs the pipeline depth-first and writes the root output as sharded
/// JSONL under out_dir. Each node's output is a deterministic function of
/// (inputs, params, node_seed) with node_seed = mix(seed, node name); two
/// executions of the same (config, seed, inputs) produce byte-identical
/// shards and fingerprints regardless of worker count. On failure an
/// `.invalid` marker naming the error is left in out_dir.
RunFingerprint execute(const PipelineConfig& config, const ExecOptions& options);

/// Evaluates one subtree in isolation and materializes its output stream.
/// Produces exactly the intermediate stream the full run feeds to the
/// subtree's parent. Debug/test aid; nothing is written to disk.
std::vector<Record> run_subtree(const PipelineConfig& config, const std::string& node_name,
                                const ExecOptions& options);

}  // namespace cf
