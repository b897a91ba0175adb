// SPDX-License-Identifier: Apache-2.0

#include "cf/engine.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>

#include "cf/curriculum.hpp"
#include "cf/dedup.hpp"
#include "cf/error.hpp"
#include "cf/extsort.hpp"
#include "cf/hash.hpp"
#include "cf/jsonl.hpp"
#include "cf/log.hpp"
#include "cf/manifest.hpp"
#include "cf/operators.hpp"
#include "cf/parallel.hpp"
#include "cf/probe.hpp"

namespace cf {

namespace {

nlohmann::json stats_to_json(const NodeStats& s) {
  nlohmann::json j;
  j["kind"] = s.kind;
  j["children"] = s.children;
  j["records_in"] = s.records_in;
  j["tokens_in"] = s.tokens_in;
  j["records_out"] = s.records_out;
  j["tokens_out"] = s.tokens_out;
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [name, rt] : s.per_dataset) {
    per[name] = {{"records", rt.first}, {"tokens", rt.second}};
  }
  j["per_dataset"] = per;
  j["details"] = s.details;
  return j;
}

NodeStats stats_from_json(const nlohmann::json& j) {
  NodeStats s;
  s.kind = j.at("kind").get<std::string>();
  s.children = j.at("children").get<std::vector<std::string>>();
  s.records_in = j.at("records_in").get<uint64_t>();
  s.tokens_in = j.at("tokens_in").get<uint64_t>();
  s.records_out = j.at("records_out").get<uint64_t>();
  s.tokens_out = j.at("tokens_out").get<uint64_t>();
  for (const auto& [name, rt] : j.at("per_dataset").items()) {
    s.per_dataset[name] = {rt.at("records").get<uint64_t>(), rt.at("tokens").get<uint64_t>()};
  }
  s.details = j.value("details", nlohmann::json::object());
  return s;
}

}  // namespace

nlohmann::json RunFingerprint::to_json() const {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["token_mode"] = std::string(token_mode_name(token_mode));
  j["root"] = root;
  j["tree"] = tree;
  nlohmann::json ns = nlohmann::json::object();
  for (const auto& [name, stats] : nodes) ns[name] = stats_to_json(stats);
  j["nodes"] = ns;
  j["output"] = {{"records", output_records},
                 {"tokens", output_tokens},
                 {"shards", output_shards}};
  return j;
}

RunFingerprint RunFingerprint::from_json(const nlohmann::json& j) {
  RunFingerprint fp;
  try {
    fp.config_hash = j.at("config_hash").get<std::string>();
    fp.seed = j.at("seed").get<uint64_t>();
    fp.token_mode = token_mode_from_name(j.at("token_mode").get<std::string>());
    fp.root = j.at("root").get<std::string>();
    fp.tree = j.at("tree");
    for (const auto& [name, stats] : j.at("nodes").items()) {
      fp.nodes[name] = stats_from_json(stats);
    }
    fp.output_records = j.at("output").at("records").get<uint64_t>();
    fp.output_tokens = j.at("output").at("tokens").get<uint64_t>();
    fp.output_shards = j.at("output").at("shards").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("bad fingerprint: ") + e.what());
  }
  return fp;
}

void save_fingerprint(const RunFingerprint& fp, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create '" + path + "'");
  out << fp.to_json().dump(2) << "\n";
  if (!out) throw Error(ErrorCode::IoError, "write failed on '" + path + "'");
}

RunFingerprint load_fingerprint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open fingerprint '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw Error(ErrorCode::SchemaMismatch, "fingerprint '" + path + "' is not valid JSON");
  return RunFingerprint::from_json(j);
}

namespace {

/// Tallies a node's output and per-dataset breakdown as records flow by.
class CountingStream final : public RecordStream {
 public:
  CountingStream(StreamPtr inner, NodeStats* stats)
      : inner_(std::move(inner)), stats_(stats) {}

  std::optional<Record> next() override {
    auto r = inner_->next();
    if (r) {
      ++stats_->records_out;
      stats_->tokens_out += r->tokens;
      auto& slot = stats_->per_dataset[r->dataset];
      ++slot.first;
      slot.second += r->tokens;
    }
    return r;
  }

 private:
  StreamPtr inner_;
  NodeStats* stats_;
};

/// Streams a dataset off its shards, retagging every record with the
/// dataset name so identity stays (dataset, id) downstream.
class SourceStream final : public RecordStream {
 public:
  SourceStream(std::string dataset, std::vector<std::string> shards, TokenMode mode)
      : dataset_(std::move(dataset)), shards_(std::move(shards)), mode_(mode) {}

  std::optional<Record> next() override {
    Record r;
    for (;;) {
      if (!reader_) {
        if (shard_idx_ >= shards_.size()) return std::nullopt;
        reader_ = std::make_unique<ShardReader>(shards_[shard_idx_], mode_);
      }
      if (reader_->next(r)) {
        r.dataset = dataset_;
        return r;
      }
      reader_.reset();
      ++shard_idx_;
    }
  }

 private:
  std::string dataset_;
  std::vector<std::string> shards_;
  TokenMode mode_;
  std::unique_ptr<ShardReader> reader_;
  size_t shard_idx_ = 0;
};

struct BuildContext {
  const PipelineConfig* config = nullptr;
  SortOptions sort_opt;
  RunFingerprint* fp = nullptr;
  // Deferred copies of operator-specific stats into the fingerprint, run
  // after the root is drained.
  std::vector<std::function<void()>> finalizers;
};

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

StreamPtr build_node(const NodeSpec& node, BuildContext& ctx) {
  NodeStats& stats = ctx.fp->nodes[node.name];
  stats.kind = std::string(node_kind_name(node.kind));
  for (const auto& c : node.children) stats.children.push_back(c.name);

  std::vector<StreamPtr> inputs;
  inputs.reserve(node.children.size());
  for (const auto& c : node.children) inputs.push_back(build_node(c, ctx));

  const uint64_t node_seed = derive_node_seed(ctx.config->seed, node.name);
  const auto& p = node.params;
  StreamPtr out;

  switch (node.kind) {
    case NodeKind::Source: {
      std::string dataset;
      std::vector<std::string> shards;
      if (p.contains("manifest")) {
        auto m = load_manifest(
            resolve_path(ctx.config->base_dir, p.at("manifest").get<std::string>()));
        dataset = m.name;
        shards.reserve(m.shards.size());
        for (const auto& s : m.shards) {
          shards.push_back(resolve_path(ctx.config->base_dir, s));
        }
      } else {
        dataset = p.at("dataset").get<std::string>();
        for (const auto& s : p.at("shards").get<std::vector<std::string>>()) {
          shards.push_back(resolve_path(ctx.config->base_dir, s));
        }
      }
      stats.details["dataset"] = dataset;
      stats.details["shard_count"] = shards.size();
      out = std::make_unique<SourceStream>(dataset, std::move(shards),
                                           ctx.config->token_mode);
      break;
    }
    case NodeKind::FilterTopRatio: {
      TopRatioSpec spec;
      spec.score_key = p.at("score_key").get<std::string>();
      spec.ratio = p.at("ratio").get<double>();
      spec.basis = ratio_basis_from_name(p.at("basis").get<std::string>());
      auto fstats = std::make_shared<FilterStats>();
      out = filter_top_ratio(std::move(inputs[0]), spec, node_seed, ctx.sort_opt,
                             fstats.get(), "node '" + node.name + "'");
      ctx.finalizers.push_back([fstats, &stats] {
        stats.details["tokens_before"] = fstats->tokens_before;
        stats.details["tokens_after"] = fstats->tokens_after;
        stats.details["actual_ratio"] = fstats->actual_ratio();
      });
      break;
    }
    case NodeKind::SampleRandom:
      out = sample_random(std::move(inputs[0]), p.at("ratio").get<double>(), node_seed);
      break;
    case NodeKind::Repeat:
      out = repeat_records(std::move(inputs[0]), RepeatSpec{p.at("ratio").get<double>()},
                           node_seed);
      break;
    case NodeKind::AssignRandomScore:
      out = assign_random_score(std::move(inputs[0]), p.at("target_key").get<std::string>(),
                                node_seed);
      break;
    case NodeKind::DedupMinhash: {
      DedupConfig cfg;
      cfg.shingle_size = p.at("shingle_size").get<int>();
      cfg.num_hashes = p.at("num_hashes").get<int>();
      cfg.bands = p.at("bands").get<int>();
      cfg.rows = p.at("rows").get<int>();
      cfg.jaccard_threshold = p.at("jaccard_threshold").get<double>();
      auto dstats = std::make_shared<DedupStats>();
      out = dedup(std::move(inputs[0]), cfg, node_seed, ctx.sort_opt, dstats.get());
      ctx.finalizers.push_back([dstats, &stats] {
        stats.details["clusters"] = dstats->clusters;
        stats.details["bypass_count"] = dstats->bypass_count;
        stats.details["candidate_pairs"] = dstats->candidate_pairs;
        stats.details["duplicate_edges"] = dstats->duplicate_edges;
      });
      break;
    }
    case NodeKind::QuantileChunk: {
      auto pstats = std::make_shared<ProbeSliceStats>();
      out = build_probe(std::move(inputs[0]), p.at("score_key").get<std::string>(),
                        p.at("quantile").get<double>(),
                        p.at("budget_tokens").get<uint64_t>(), ctx.sort_opt, pstats.get(),
                        "node '" + node.name + "'");
      ctx.finalizers.push_back([pstats, &stats] {
        stats.details["start_rank"] = pstats->start_rank;
        stats.details["short_probe"] = pstats->short_probe;
      });
      break;
    }
    case NodeKind::CurriculumMerge: {
      std::vector<DatasetRanking> rankings;
      std::vector<std::string> names;
      for (size_t i = 0; i < node.children.size(); ++i) {
        std::string key = p.at("score_keys").at(i).get<std::string>();
        rankings.push_back(key == "random" ? ranking_random() : ranking_by_key(key));
        names.push_back(node.children[i].name);
      }
      auto cstats = std::make_shared<CurriculumStats>();
      out = curriculum_merge(std::move(inputs), std::move(rankings), std::move(names),
                             node_seed, ctx.sort_opt, cstats.get(),
                             "node '" + node.name + "'");
      ctx.finalizers.push_back([cstats, &stats] {
        stats.details["n_total"] = cstats->n_total;
        nlohmann::json ds = nlohmann::json::array();
        for (const auto& [name, n] : cstats->dataset_sizes) {
          ds.push_back({{"input", name}, {"n", n}});
        }
        stats.details["datasets"] = ds;
      });
      break;
    }
    case NodeKind::Concat:
      out = concat(std::move(inputs));
      break;
  }
  return std::make_unique<CountingStream>(std::move(out), &stats);
}

void fill_input_totals(const NodeSpec& node, RunFingerprint& fp) {
  for (const auto& c : node.children) fill_input_totals(c, fp);
  NodeStats& stats = fp.nodes[node.name];
  for (const auto& c : node.children) {
    stats.records_in += fp.nodes[c.name].records_out;
    stats.tokens_in += fp.nodes[c.name].tokens_out;
  }
}

SortOptions make_sort_options(const PipelineConfig& config, const ExecOptions& options) {
  SortOptions opt;
  if (!options.tmp_root.empty()) opt.tmp_root = options.tmp_root;
  uint64_t buffer = options.sort_buffer_override ? options.sort_buffer_override
                                                 : config.sort_buffer_records;
  if (buffer > 0) opt.buffer_entries = buffer;
  opt.workers = resolve_workers(options.workers);
  return opt;
}

}  // namespace

RunFingerprint execute(const PipelineConfig& config, const ExecOptions& options) {
  if (options.out_dir.empty())
    throw Error(ErrorCode::Usage, "execute: output directory is required");
  std::filesystem::path out_dir(options.out_dir);
  if (std::filesystem::exists(out_dir) && !std::filesystem::is_empty(out_dir))
    throw Error(ErrorCode::IoError,
                "output directory '" + options.out_dir + "' exists and is not empty");
  std::filesystem::create_directories(out_dir);

  RunFingerprint fp;
  fp.config_hash = config.config_hash;
  fp.seed = config.seed;
  fp.token_mode = config.token_mode;
  fp.root = config.root.name;
  fp.tree = config.root.to_json();

  BuildContext ctx;
  ctx.config = &config;
  ctx.sort_opt = make_sort_options(config, options);
  ctx.fp = &fp;

  const uint64_t shard_size =
      options.shard_size_override ? options.shard_size_override : config.shard_size;

  try {
    StreamPtr root = build_node(config.root, ctx);
    ShardedWriter writer(options.out_dir, "shard", shard_size);
    while (auto r = root->next()) writer.write(*r);
    auto shard_paths = writer.finish();
    fp.output_records = writer.records_written();
    fp.output_tokens = writer.tokens_written();
    for (const auto& path : shard_paths) {
      fp.output_shards.push_back(std::filesystem::path(path).filename().string());
    }
  } catch (const std::exception& e) {
    // Partial outputs are marked rather than removed: the marker names the
    // failure and consumers must treat the directory as invalid.
    std::ofstream marker(out_dir / ".invalid", std::ios::trunc);
    marker << e.what() << "\n";
    throw;
  }

  for (auto& fin : ctx.finalizers) fin();
  fill_input_totals(config.root, fp);
  log_info("run complete: " + std::to_string(fp.output_records) + " records, " +
           std::to_string(fp.output_tokens) + " tokens, " +
           std::to_string(fp.output_shards.size()) + " shard(s)");
  return fp;
}

namespace {

const NodeSpec* find_node(const NodeSpec& node, const std::string& name) {
  if (node.name == name) return &node;
  for (const auto& c : node.children) {
    if (const NodeSpec* hit = find_node(c, name)) return hit;
  }
  return nullptr;
}

}  // namespace

std::vector<Record> run_subtree(const PipelineConfig& config, const std::string& node_name,
                                const ExecOptions& options) {
  const NodeSpec* node = find_node(config.root, node_name);
  if (!node)
    throw Error(ErrorCode::BadConfig, "no node named '" + node_name + "' in the pipeline");

  RunFingerprint fp;
  BuildContext ctx;
  ctx.config = &config;
  ctx.sort_opt = make_sort_options(config, options);
  ctx.fp = &fp;
  StreamPtr stream = build_node(*node, ctx);
  std::vector<Record> out = drain(*stream);
  for (auto& fin : ctx.finalizers) fin();
  return out;
}

}  // namespace cf
