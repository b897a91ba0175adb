// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cf/record.hpp"

namespace cf {

enum class NodeKind {
  Source,
  FilterTopRatio,
  SampleRandom,
  Repeat,
  AssignRandomScore,
  DedupMinhash,
  QuantileChunk,
  CurriculumMerge,
  Concat,
};

std::string_view node_kind_name(NodeKind kind);
NodeKind node_kind_from_name(std::string_view name);

/// One validated pipeline node. `params` is the canonical parameter object:
/// type-checked, range-checked, defaults filled in.
struct NodeSpec {
  std::string name;
  NodeKind kind = NodeKind::Source;
  nlohmann::json params = nlohmann::json::object();
  std::vector<NodeSpec> children;

  nlohmann::json to_json() const;
};

/// Parsed pipeline configuration. Leaves are dataset sources, internal nodes
/// are operators, the root produces the final output.
///
/// config_hash covers the canonical structure (token_mode, shard_size and
/// the node tree) but not the seed: the same pipeline under a different seed
/// draws different samples while keeping the same hash.
struct PipelineConfig {
  uint64_t seed = 0;
  TokenMode token_mode = TokenMode::Whitespace;
  uint64_t shard_size = 100000;        // output records per shard
  uint64_t sort_buffer_records = 0;    // 0 = library default; tuning only, unhashed
  NodeSpec root;
  std::string config_hash;             // hex SHA-256
  std::string base_dir;                // for resolving relative source paths
};

/// Parses and validates a YAML pipeline document. Every error names the
/// offending node path (e.g. "root/web/shards").
PipelineConfig parse_config(const std::string& yaml_text);

/// Reads the file and records its directory for relative path resolution.
PipelineConfig parse_config_file(const std::string& path);

}  // namespace cf
