// SPDX-License-Identifier: Apache-2.0

#include "cf/config.hpp"

#include <openssl/sha.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cf/error.hpp"

namespace cf {

std::string_view node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Source: return "source";
    case NodeKind::FilterTopRatio: return "filter_top_ratio";
    case NodeKind::SampleRandom: return "sample_random";
    case NodeKind::Repeat: return "repeat";
    case NodeKind::AssignRandomScore: return "assign_random_score";
    case NodeKind::DedupMinhash: return "dedup_minhash";
    case NodeKind::QuantileChunk: return "quantile_chunk";
    case NodeKind::CurriculumMerge: return "curriculum_merge";
    case NodeKind::Concat: return "concat";
  }
  return "source";
}

NodeKind node_kind_from_name(std::string_view name) {
  if (name == "source") return NodeKind::Source;
  if (name == "filter_top_ratio") return NodeKind::FilterTopRatio;
  if (name == "sample_random") return NodeKind::SampleRandom;
  if (name == "repeat") return NodeKind::Repeat;
  if (name == "assign_random_score") return NodeKind::AssignRandomScore;
  if (name == "dedup_minhash") return NodeKind::DedupMinhash;
  if (name == "quantile_chunk") return NodeKind::QuantileChunk;
  if (name == "curriculum_merge") return NodeKind::CurriculumMerge;
  if (name == "concat") return NodeKind::Concat;
  throw Error(ErrorCode::UnknownKind, "unknown node kind '" + std::string(name) + "'");
}

nlohmann::json NodeSpec::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["kind"] = std::string(node_kind_name(kind));
  j["params"] = params;
  nlohmann::json kids = nlohmann::json::array();
  for (const auto& c : children) kids.push_back(c.to_json());
  j["inputs"] = kids;
  return j;
}

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& path, const std::string& what) {
  throw Error(code, path + ": " + what);
}

std::string get_string(const YAML::Node& params, const char* key, const std::string& path,
                       bool required, const std::string& fallback = "") {
  if (!params || !params[key]) {
    if (required) fail(ErrorCode::MissingParam, path, std::string("missing param '") + key + "'");
    return fallback;
  }
  try {
    return params[key].as<std::string>();
  } catch (const YAML::Exception&) {
    fail(ErrorCode::ParamType, path, std::string("param '") + key + "' is not a string");
  }
}

double get_double(const YAML::Node& params, const char* key, const std::string& path,
                  bool required, double fallback = 0.0) {
  if (!params || !params[key]) {
    if (required) fail(ErrorCode::MissingParam, path, std::string("missing param '") + key + "'");
    return fallback;
  }
  try {
    double v = params[key].as<double>();
    if (!std::isfinite(v))
      fail(ErrorCode::ParamRange, path, std::string("param '") + key + "' is not finite");
    return v;
  } catch (const YAML::Exception&) {
    fail(ErrorCode::ParamType, path, std::string("param '") + key + "' is not a number");
  }
}

uint64_t get_u64(const YAML::Node& params, const char* key, const std::string& path,
                 bool required, uint64_t fallback = 0) {
  if (!params || !params[key]) {
    if (required) fail(ErrorCode::MissingParam, path, std::string("missing param '") + key + "'");
    return fallback;
  }
  try {
    return params[key].as<uint64_t>();
  } catch (const YAML::Exception&) {
  }
  try {
    if (params[key].as<int64_t>() < 0)
      fail(ErrorCode::ParamRange, path, std::string("param '") + key + "' must be >= 0");
  } catch (const YAML::Exception&) {
  }
  fail(ErrorCode::ParamType, path,
       std::string("param '") + key + "' is not a non-negative integer");
}

int get_int(const YAML::Node& params, const char* key, const std::string& path,
            bool required, int fallback) {
  if (!params || !params[key]) {
    if (required) fail(ErrorCode::MissingParam, path, std::string("missing param '") + key + "'");
    return fallback;
  }
  try {
    return params[key].as<int>();
  } catch (const YAML::Exception&) {
    fail(ErrorCode::ParamType, path, std::string("param '") + key + "' is not an integer");
  }
}

void check_param_keys(const YAML::Node& params, const std::string& path,
                      const std::set<std::string>& allowed) {
  if (!params) return;
  if (!params.IsMap()) fail(ErrorCode::ParamType, path, "'params' must be a mapping");
  for (const auto& kv : params) {
    std::string key = kv.first.as<std::string>();
    if (!allowed.count(key))
      fail(ErrorCode::UnknownParam, path, "unknown param '" + key + "'");
  }
}

NodeSpec parse_node(const YAML::Node& y, const std::string& parent_path,
                    std::set<std::string>& names);

std::vector<NodeSpec> parse_children(const YAML::Node& y, const std::string& path,
                                     std::set<std::string>& names) {
  std::vector<NodeSpec> out;
  const YAML::Node inputs = y["inputs"];
  if (!inputs) return out;
  if (!inputs.IsSequence()) fail(ErrorCode::BadConfig, path, "'inputs' must be a sequence");
  for (const auto& child : inputs) out.push_back(parse_node(child, path, names));
  return out;
}

NodeSpec parse_node(const YAML::Node& y, const std::string& parent_path,
                    std::set<std::string>& names) {
  if (!y.IsMap())
    fail(ErrorCode::BadConfig, parent_path, "node must be a mapping with name/kind");
  std::string name;
  if (y["name"]) {
    try {
      name = y["name"].as<std::string>();
    } catch (const YAML::Exception&) {
      fail(ErrorCode::BadConfig, parent_path, "node 'name' is not a string");
    }
  }
  if (name.empty())
    fail(ErrorCode::BadConfig, parent_path, "node is missing a non-empty 'name'");
  const std::string path = parent_path.empty() ? name : parent_path + "/" + name;
  if (!names.insert(name).second)
    fail(ErrorCode::DuplicateNodeName, path, "node name '" + name + "' is not unique");

  if (!y["kind"]) fail(ErrorCode::BadConfig, path, "node is missing 'kind'");
  std::string kind_str;
  try {
    kind_str = y["kind"].as<std::string>();
  } catch (const YAML::Exception&) {
    fail(ErrorCode::BadConfig, path, "node 'kind' is not a string");
  }
  NodeKind kind;
  try {
    kind = node_kind_from_name(kind_str);
  } catch (const Error&) {
    fail(ErrorCode::UnknownKind, path, "unknown node kind '" + kind_str + "'");
  }

  for (const auto& kv : y) {
    std::string key = kv.first.as<std::string>();
    if (key != "name" && key != "kind" && key != "params" && key != "inputs")
      fail(ErrorCode::BadConfig, path, "unknown node field '" + key + "'");
  }

  NodeSpec node;
  node.name = name;
  node.kind = kind;
  node.children = parse_children(y, path, names);
  const YAML::Node params = y["params"];
  const size_t arity = node.children.size();

  auto require_arity = [&](size_t lo, size_t hi) {
    if (arity < lo || arity > hi) {
      std::string expect = lo == hi ? std::to_string(lo)
                                    : (">= " + std::to_string(lo));
      fail(ErrorCode::ArityViolation, path,
           std::string(node_kind_name(kind)) + " expects " + expect + " input(s), got " +
               std::to_string(arity));
    }
  };

  switch (kind) {
    case NodeKind::Source: {
      require_arity(0, 0);
      check_param_keys(params, path, {"manifest", "shards", "dataset"});
      std::string manifest = get_string(params, "manifest", path, false);
      std::vector<std::string> shards;
      if (params && params["shards"]) {
        try {
          shards = params["shards"].as<std::vector<std::string>>();
        } catch (const YAML::Exception&) {
          fail(ErrorCode::ParamType, path, "param 'shards' is not a string list");
        }
      }
      if (manifest.empty() == shards.empty())
        fail(ErrorCode::MissingParam, path,
             "source needs exactly one of 'manifest' or 'shards'");
      if (!manifest.empty()) {
        if (params && params["dataset"])
          fail(ErrorCode::UnknownParam, path,
               "'dataset' only applies with inline 'shards' (manifests carry their name)");
        node.params["manifest"] = manifest;
      } else {
        node.params["shards"] = shards;
        node.params["dataset"] = get_string(params, "dataset", path, false, name);
      }
      break;
    }
    case NodeKind::FilterTopRatio: {
      require_arity(1, 1);
      check_param_keys(params, path, {"score_key", "ratio", "basis"});
      std::string key = get_string(params, "score_key", path, true);
      double ratio = get_double(params, "ratio", path, true);
      if (ratio < 0.0 || ratio > 1.0)
        fail(ErrorCode::ParamRange, path, "ratio must be in [0,1]");
      std::string basis = get_string(params, "basis", path, false, "tokens");
      if (basis != "tokens" && basis != "records")
        fail(ErrorCode::ParamRange, path, "basis must be 'tokens' or 'records'");
      node.params = {{"score_key", key}, {"ratio", ratio}, {"basis", basis}};
      break;
    }
    case NodeKind::SampleRandom: {
      require_arity(1, 1);
      check_param_keys(params, path, {"ratio"});
      double ratio = get_double(params, "ratio", path, true);
      if (ratio < 0.0 || ratio > 1.0)
        fail(ErrorCode::ParamRange, path, "ratio must be in [0,1]");
      node.params = {{"ratio", ratio}};
      break;
    }
    case NodeKind::Repeat: {
      require_arity(1, 1);
      check_param_keys(params, path, {"ratio"});
      double ratio = get_double(params, "ratio", path, true);
      if (ratio < 0.0)
        fail(ErrorCode::ParamRange, path, "ratio must be >= 0");
      node.params = {{"ratio", ratio}};
      break;
    }
    case NodeKind::AssignRandomScore: {
      require_arity(1, 1);
      check_param_keys(params, path, {"target_key"});
      std::string key = get_string(params, "target_key", path, true);
      if (key.empty()) fail(ErrorCode::ParamRange, path, "target_key must be non-empty");
      node.params = {{"target_key", key}};
      break;
    }
    case NodeKind::DedupMinhash: {
      require_arity(1, 1);
      check_param_keys(params, path,
                       {"shingle_size", "num_hashes", "bands", "rows", "jaccard_threshold"});
      int shingle_size = get_int(params, "shingle_size", path, false, 5);
      int num_hashes = get_int(params, "num_hashes", path, false, 128);
      int bands = get_int(params, "bands", path, false, 16);
      int rows = get_int(params, "rows", path, false, 8);
      double threshold = get_double(params, "jaccard_threshold", path, false, 0.7);
      if (shingle_size < 1) fail(ErrorCode::ParamRange, path, "shingle_size must be >= 1");
      if (num_hashes < 1 || bands < 1 || rows < 1)
        fail(ErrorCode::ParamRange, path, "num_hashes/bands/rows must be >= 1");
      if (bands * rows != num_hashes)
        fail(ErrorCode::ParamRange, path, "bands*rows must equal num_hashes");
      if (!(threshold > 0.0 && threshold <= 1.0))
        fail(ErrorCode::ParamRange, path, "jaccard_threshold must be in (0,1]");
      node.params = {{"shingle_size", shingle_size},
                     {"num_hashes", num_hashes},
                     {"bands", bands},
                     {"rows", rows},
                     {"jaccard_threshold", threshold}};
      break;
    }
    case NodeKind::QuantileChunk: {
      require_arity(1, 1);
      check_param_keys(params, path, {"score_key", "quantile", "budget_tokens"});
      std::string key = get_string(params, "score_key", path, true);
      double quantile = get_double(params, "quantile", path, true);
      if (!(quantile >= 0.0 && quantile < 1.0))
        fail(ErrorCode::ParamRange, path, "quantile must be in [0,1)");
      uint64_t budget = get_u64(params, "budget_tokens", path, true);
      node.params = {{"score_key", key}, {"quantile", quantile}, {"budget_tokens", budget}};
      break;
    }
    case NodeKind::CurriculumMerge: {
      require_arity(1, SIZE_MAX);
      check_param_keys(params, path, {"score_keys"});
      std::vector<std::string> keys;
      if (params && params["score_keys"]) {
        try {
          keys = params["score_keys"].as<std::vector<std::string>>();
        } catch (const YAML::Exception&) {
          fail(ErrorCode::ParamType, path, "param 'score_keys' is not a string list");
        }
      } else {
        fail(ErrorCode::MissingParam, path, "missing param 'score_keys'");
      }
      if (keys.size() != arity)
        fail(ErrorCode::ParamRange, path,
             "score_keys has " + std::to_string(keys.size()) + " entries for " +
                 std::to_string(arity) + " input(s)");
      for (const auto& k : keys) {
        if (k.empty())
          fail(ErrorCode::ParamRange, path, "score_keys entries must be non-empty");
      }
      node.params = {{"score_keys", keys}};
      break;
    }
    case NodeKind::Concat: {
      require_arity(1, SIZE_MAX);
      check_param_keys(params, path, {});
      break;
    }
  }
  return node;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 0xf]);
  }
  return out;
}

}  // namespace

PipelineConfig parse_config(const std::string& yaml_text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("invalid YAML: ") + e.what());
  }
  if (!doc.IsMap())
    throw Error(ErrorCode::BadConfig, "configuration must be a YAML mapping");

  for (const auto& kv : doc) {
    std::string key = kv.first.as<std::string>();
    if (key != "seed" && key != "token_mode" && key != "shard_size" &&
        key != "sort_buffer_records" && key != "pipeline")
      throw Error(ErrorCode::BadConfig, "unknown top-level key '" + key + "'");
  }

  PipelineConfig cfg;
  cfg.seed = get_u64(doc, "seed", "config", false, 0);
  cfg.token_mode = token_mode_from_name(get_string(doc, "token_mode", "config", false,
                                                   "whitespace"));
  cfg.shard_size = get_u64(doc, "shard_size", "config", false, 100000);
  if (cfg.shard_size == 0)
    throw Error(ErrorCode::ParamRange, "config: shard_size must be >= 1");
  cfg.sort_buffer_records = get_u64(doc, "sort_buffer_records", "config", false, 0);

  if (!doc["pipeline"])
    throw Error(ErrorCode::BadConfig, "configuration is missing 'pipeline'");
  std::set<std::string> names;
  cfg.root = parse_node(doc["pipeline"], "", names);

  nlohmann::json canonical;
  canonical["token_mode"] = std::string(token_mode_name(cfg.token_mode));
  canonical["shard_size"] = cfg.shard_size;
  canonical["pipeline"] = cfg.root.to_json();
  cfg.config_hash = sha256_hex(canonical.dump());
  return cfg;
}

PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  PipelineConfig cfg = parse_config(buf.str());
  cfg.base_dir = std::filesystem::path(path).parent_path().string();
  return cfg;
}

}  // namespace cf
