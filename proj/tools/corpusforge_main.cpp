// SPDX-License-Identifier: Apache-2.0
//
// corpusforge — deterministic pretraining-corpus construction.
//
// Subcommands:
//   build       run a YAML pipeline and write shards + fingerprint + report
//   manifest    scan shards into a dataset manifest with exact totals
//   probe       cut fixed-budget quality-quantile slices of a dataset
//   dedup       standalone MinHash near-duplicate removal
//   curriculum  standalone multi-dataset curriculum ordering
//   report      render or validate a phase report from a fingerprint

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "cf/curriculum.hpp"
#include "cf/dedup.hpp"
#include "cf/engine.hpp"
#include "cf/error.hpp"
#include "cf/extsort.hpp"
#include "cf/hash.hpp"
#include "cf/jsonl.hpp"
#include "cf/log.hpp"
#include "cf/manifest.hpp"
#include "cf/operators.hpp"
#include "cf/parallel.hpp"
#include "cf/probe.hpp"
#include "cf/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct InputDataset {
  std::string name;
  std::vector<std::string> shards;
};

/// Resolve --manifest or (--name, --shards) into a dataset.
InputDataset resolve_input(const std::string& manifest_path, const std::string& name,
                           const std::vector<std::string>& shards) {
  if (!manifest_path.empty()) {
    auto m = cf::load_manifest(manifest_path);
    std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    InputDataset d;
    d.name = m.name;
    for (const auto& s : m.shards) {
      std::filesystem::path p(s);
      d.shards.push_back(p.is_absolute() ? s : (base / p).string());
    }
    return d;
  }
  if (shards.empty())
    throw cf::Error(cf::ErrorCode::Usage, "give --manifest or --shards");
  return InputDataset{name.empty() ? "dataset" : name, shards};
}

cf::StreamPtr open_dataset(const InputDataset& d, cf::TokenMode mode) {
  auto shards = std::make_shared<std::vector<std::string>>(d.shards);
  auto reader = std::make_shared<std::unique_ptr<cf::ShardReader>>();
  auto idx = std::make_shared<size_t>(0);
  auto name = std::make_shared<std::string>(d.name);
  return std::make_unique<cf::FnStream>([=]() -> std::optional<cf::Record> {
    cf::Record r;
    for (;;) {
      if (!*reader) {
        if (*idx >= shards->size()) return std::nullopt;
        *reader = std::make_unique<cf::ShardReader>((*shards)[*idx], mode);
      }
      if ((*reader)->next(r)) {
        r.dataset = *name;
        return r;
      }
      reader->reset();
      ++*idx;
    }
  });
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw cf::Error(cf::ErrorCode::IoError, "cannot create '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) throw cf::Error(cf::ErrorCode::IoError, "write failed on '" + path + "'");
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw cf::Error(cf::ErrorCode::IoError, "cannot create '" + path + "'");
  out << text;
  if (!out) throw cf::Error(cf::ErrorCode::IoError, "write failed on '" + path + "'");
}

cf::SortOptions make_sort_options(const std::string& tmp_root, uint64_t buffer,
                                  int workers) {
  cf::SortOptions opt;
  if (!tmp_root.empty()) opt.tmp_root = tmp_root;
  if (buffer > 0) opt.buffer_entries = buffer;
  opt.workers = cf::resolve_workers(workers);
  return opt;
}

// ---------------------------------------------------------------------------

int cmd_build(const std::string& config_path, std::optional<uint64_t> seed,
              const std::string& out_dir, int workers, uint64_t shard_size,
              uint64_t sort_buffer, const std::string& tmp_root) {
  cf::PipelineConfig config = cf::parse_config_file(config_path);
  if (seed) config.seed = *seed;

  cf::ExecOptions opt;
  opt.out_dir = out_dir;
  opt.workers = workers;
  opt.shard_size_override = shard_size;
  opt.sort_buffer_override = sort_buffer;
  opt.tmp_root = tmp_root;

  cf::RunFingerprint fp = cf::execute(config, opt);
  cf::save_fingerprint(fp, out_dir + "/run.fingerprint.json");
  auto rows = cf::emit_phase_report(fp);
  write_text_file(cf::format_report(rows, cf::ReportFormat::Tsv), out_dir + "/report.tsv");
  write_text_file(cf::format_report(rows, cf::ReportFormat::Markdown),
                  out_dir + "/report.md");
  std::cout << "wrote " << fp.output_shards.size() << " shard(s), "
            << fp.output_records << " records, " << fp.output_tokens << " tokens to "
            << out_dir << "\n";
  return kExitOk;
}

int cmd_manifest(const std::string& name, const std::vector<std::string>& shards,
                 const std::string& mode_name, const std::string& out_path, int workers) {
  auto mode = cf::token_mode_from_name(mode_name);
  auto m = cf::build_manifest(name, shards, mode, workers);
  if (out_path.empty()) {
    std::cout << m.to_json().dump(2) << "\n";
  } else {
    cf::save_manifest(m, out_path);
    std::cout << "wrote manifest for '" << name << "': " << m.total_records
              << " records, " << m.total_tokens << " tokens\n";
  }
  return kExitOk;
}

int cmd_probe(const InputDataset& input, const std::string& mode_name,
              const std::string& score_key, const std::vector<double>& quantiles,
              uint64_t budget_tokens, const std::string& out_dir, double ref_params,
              uint64_t shard_size, uint64_t sort_buffer, const std::string& tmp_root,
              int workers) {
  auto mode = cf::token_mode_from_name(mode_name);
  cf::ProbeSpec spec{score_key, quantiles, budget_tokens};
  spec.validate();
  std::filesystem::create_directories(out_dir);

  auto sort_opt = make_sort_options(tmp_root, sort_buffer, workers);
  std::vector<std::vector<std::string>> shard_lists(quantiles.size());
  auto stats = cf::probe_sweep(
      open_dataset(input, mode), spec, sort_opt,
      [&](size_t i, cf::RecordStream& slice) {
        char stem[48];
        std::snprintf(stem, sizeof(stem), "probe-%02zu", i);
        cf::ShardedWriter writer(out_dir, stem, shard_size);
        while (auto r = slice.next()) writer.write(*r);
        for (const auto& p : writer.finish()) {
          shard_lists[i].push_back(std::filesystem::path(p).filename().string());
        }
      });

  nlohmann::json sweep;
  sweep["dataset"] = input.name;
  sweep["score_key"] = score_key;
  sweep["budget_tokens"] = budget_tokens;
  nlohmann::json probes = nlohmann::json::array();
  uint64_t total_tokens = 0;
  for (size_t i = 0; i < stats.size(); ++i) {
    nlohmann::json p;
    p["quantile"] = stats[i].quantile;
    p["start_rank"] = stats[i].start_rank;
    p["records"] = stats[i].records;
    p["tokens"] = stats[i].tokens;
    p["short_probe"] = stats[i].short_probe;
    p["shards"] = shard_lists[i];
    if (ref_params > 0.0 && stats[i].tokens > 0) {
      p["flops"] = cf::compute_cost(ref_params, static_cast<double>(stats[i].tokens)).flops;
    }
    total_tokens += stats[i].tokens;
    probes.push_back(std::move(p));
  }
  sweep["probes"] = probes;
  sweep["total_tokens"] = total_tokens;
  if (ref_params > 0.0) {
    sweep["ref_params"] = ref_params;
    if (total_tokens > 0) {
      sweep["total_flops"] =
          cf::compute_cost(ref_params, static_cast<double>(total_tokens)).flops;
    }
  }
  write_json_file(sweep, out_dir + "/probe_sweep.json");
  std::cout << "wrote " << stats.size() << " probe(s), " << total_tokens
            << " tokens total to " << out_dir << "\n";
  return kExitOk;
}

int cmd_dedup(const InputDataset& input, const std::string& mode_name, uint64_t seed,
              const cf::DedupConfig& cfg, const std::string& out_dir, uint64_t shard_size,
              uint64_t sort_buffer, const std::string& tmp_root, int workers) {
  auto mode = cf::token_mode_from_name(mode_name);
  std::filesystem::create_directories(out_dir);
  auto sort_opt = make_sort_options(tmp_root, sort_buffer, workers);

  cf::DedupStats stats;
  auto out = cf::dedup(open_dataset(input, mode), cfg,
                       cf::derive_node_seed(seed, "dedup"), sort_opt, &stats);
  cf::ShardedWriter writer(out_dir, "shard", shard_size);
  while (auto r = out->next()) writer.write(*r);
  writer.finish();

  nlohmann::json j;
  j["records_in"] = stats.records_in;
  j["records_out"] = stats.records_out;
  j["clusters"] = stats.clusters;
  j["bypass_count"] = stats.bypass_count;
  j["candidate_pairs"] = stats.candidate_pairs;
  j["duplicate_edges"] = stats.duplicate_edges;
  write_json_file(j, out_dir + "/dedup_stats.json");
  std::cout << "kept " << stats.records_out << " of " << stats.records_in
            << " records (" << stats.clusters << " duplicate cluster(s))\n";
  return kExitOk;
}

int cmd_curriculum(const std::vector<std::string>& manifests,
                   const std::vector<std::string>& score_keys,
                   const std::string& mode_name, uint64_t seed,
                   const std::string& out_dir, uint64_t shard_size, uint64_t sort_buffer,
                   const std::string& tmp_root, int workers) {
  if (manifests.empty())
    throw cf::Error(cf::ErrorCode::Usage, "curriculum: give at least one --manifests entry");
  if (score_keys.size() != manifests.size())
    throw cf::Error(cf::ErrorCode::Usage,
                    "curriculum: --score-keys must match --manifests (use 'random' for "
                    "unlabeled datasets)");
  auto mode = cf::token_mode_from_name(mode_name);
  std::filesystem::create_directories(out_dir);
  auto sort_opt = make_sort_options(tmp_root, sort_buffer, workers);

  std::vector<cf::StreamPtr> ins;
  std::vector<cf::DatasetRanking> rankings;
  std::vector<std::string> names;
  for (size_t i = 0; i < manifests.size(); ++i) {
    InputDataset d = resolve_input(manifests[i], "", {});
    names.push_back(d.name);
    ins.push_back(open_dataset(d, mode));
    rankings.push_back(score_keys[i] == "random" ? cf::ranking_random()
                                                 : cf::ranking_by_key(score_keys[i]));
  }

  cf::CurriculumStats stats;
  auto merged = cf::curriculum_merge(std::move(ins), std::move(rankings), std::move(names),
                                     cf::derive_node_seed(seed, "curriculum"), sort_opt,
                                     &stats);
  cf::ShardedWriter writer(out_dir, "shard", shard_size);
  while (auto r = merged->next()) writer.write(*r);
  writer.finish();

  nlohmann::json j;
  j["n_total"] = stats.n_total;
  nlohmann::json ds = nlohmann::json::array();
  for (const auto& [name, n] : stats.dataset_sizes) ds.push_back({{"input", name}, {"n", n}});
  j["datasets"] = ds;
  write_json_file(j, out_dir + "/curriculum_stats.json");
  std::cout << "interleaved " << stats.n_total << " records from " << ds.size()
            << " dataset(s)\n";
  return kExitOk;
}

int cmd_report(const std::string& fingerprint_path, const std::string& format_name,
               const std::string& expected_path) {
  auto fp = cf::load_fingerprint(fingerprint_path);
  auto rows = cf::emit_phase_report(fp);
  std::cout << cf::format_report(rows, cf::report_format_from_name(format_name));
  if (expected_path.empty()) return kExitOk;

  std::ifstream in(expected_path);
  if (!in)
    throw cf::Error(cf::ErrorCode::IoError, "cannot open expected '" + expected_path + "'");
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw cf::Error(cf::ErrorCode::SchemaMismatch, "expected table is not valid JSON");
  auto diffs = cf::validate_against_expected(rows, cf::report_from_json(j));
  if (diffs.empty()) {
    std::cout << "report matches expected rows\n";
    return kExitOk;
  }
  for (const auto& d : diffs) {
    std::cerr << "diff: " << d.dataset << "." << d.column << ": expected " << d.expected
              << ", got " << d.actual << "\n";
  }
  return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic pretraining-corpus construction toolkit"};
  app.require_subcommand(1);

  // -- build ---------------------------------------------------------------
  auto* build = app.add_subcommand("build", "run a YAML pipeline configuration");
  std::string build_config, build_out, build_tmp;
  std::optional<uint64_t> build_seed;
  int build_workers = 1;
  uint64_t build_shard_size = 0, build_sort_buffer = 0;
  build->add_option("--config", build_config, "pipeline YAML")->required();
  build->add_option("--out", build_out, "output directory")->required();
  build->add_option("--seed", build_seed, "override the config seed");
  build->add_option("--workers", build_workers, "worker threads (0 = all cores)");
  build->add_option("--shard-size", build_shard_size, "records per output shard");
  build->add_option("--sort-buffer", build_sort_buffer, "external-sort buffer entries");
  build->add_option("--tmp", build_tmp, "spill directory (default CF_TMPDIR)");

  // -- manifest ------------------------------------------------------------
  auto* manifest = app.add_subcommand("manifest", "build a dataset manifest");
  std::string mf_name, mf_mode = "whitespace", mf_out;
  std::vector<std::string> mf_shards;
  int mf_workers = 1;
  manifest->add_option("--name", mf_name, "dataset name")->required();
  manifest->add_option("--shards", mf_shards, "JSONL shard paths")->required();
  manifest->add_option("--token-mode", mf_mode, "whitespace|bytes|precomputed");
  manifest->add_option("--out", mf_out, "manifest path (default: stdout)");
  manifest->add_option("--workers", mf_workers, "scan threads");

  // -- probe ---------------------------------------------------------------
  auto* probe = app.add_subcommand("probe", "cut quality-quantile probing datasets");
  std::string pr_manifest, pr_name, pr_mode = "whitespace";
  std::vector<std::string> pr_shards;
  std::string pr_score_key, pr_out, pr_tmp;
  std::vector<double> pr_quantiles;
  uint64_t pr_budget = 0, pr_shard_size = 100000, pr_sort_buffer = 0;
  double pr_ref_params = 0.0;
  int pr_workers = 1;
  probe->add_option("--manifest", pr_manifest, "dataset manifest JSON");
  probe->add_option("--name", pr_name, "dataset name (with --shards)");
  probe->add_option("--shards", pr_shards, "shard paths (alternative to --manifest)");
  probe->add_option("--token-mode", pr_mode, "whitespace|bytes|precomputed");
  probe->add_option("--score-key", pr_score_key, "quality score key")->required();
  probe->add_option("--quantiles", pr_quantiles, "start quantiles, e.g. 0,0.15,0.3")
      ->required()
      ->delimiter(',');
  probe->add_option("--budget-tokens", pr_budget, "tokens per probe")->required();
  probe->add_option("--out", pr_out, "output directory")->required();
  probe->add_option("--ref-params", pr_ref_params,
                    "reference model parameter count for the compute-cost table");
  probe->add_option("--shard-size", pr_shard_size, "records per output shard");
  probe->add_option("--sort-buffer", pr_sort_buffer, "external-sort buffer entries");
  probe->add_option("--tmp", pr_tmp, "spill directory");
  probe->add_option("--workers", pr_workers, "worker threads");

  // -- dedup ---------------------------------------------------------------
  auto* dedup = app.add_subcommand("dedup", "MinHash near-duplicate removal");
  std::string dd_manifest, dd_name, dd_mode = "whitespace", dd_out, dd_tmp;
  std::vector<std::string> dd_shards;
  uint64_t dd_seed = 0, dd_shard_size = 100000, dd_sort_buffer = 0;
  cf::DedupConfig dd_cfg;
  int dd_workers = 1;
  dedup->add_option("--manifest", dd_manifest, "dataset manifest JSON");
  dedup->add_option("--name", dd_name, "dataset name (with --shards)");
  dedup->add_option("--shards", dd_shards, "shard paths (alternative to --manifest)");
  dedup->add_option("--token-mode", dd_mode, "whitespace|bytes|precomputed");
  dedup->add_option("--seed", dd_seed, "hash seed");
  dedup->add_option("--shingle-size", dd_cfg.shingle_size, "words per shingle");
  dedup->add_option("--num-hashes", dd_cfg.num_hashes, "MinHash functions (H)");
  dedup->add_option("--bands", dd_cfg.bands, "LSH bands (b)");
  dedup->add_option("--rows", dd_cfg.rows, "rows per band (r)");
  dedup->add_option("--threshold", dd_cfg.jaccard_threshold, "Jaccard threshold");
  dedup->add_option("--out", dd_out, "output directory")->required();
  dedup->add_option("--shard-size", dd_shard_size, "records per output shard");
  dedup->add_option("--sort-buffer", dd_sort_buffer, "external-sort buffer entries");
  dedup->add_option("--tmp", dd_tmp, "spill directory");
  dedup->add_option("--workers", dd_workers, "worker threads");

  // -- curriculum ------------------------------------------------------------
  auto* curriculum = app.add_subcommand("curriculum", "multi-dataset curriculum ordering");
  std::vector<std::string> cu_manifests, cu_score_keys;
  std::string cu_mode = "whitespace", cu_out, cu_tmp;
  uint64_t cu_seed = 0, cu_shard_size = 100000, cu_sort_buffer = 0;
  int cu_workers = 1;
  curriculum->add_option("--manifests", cu_manifests, "dataset manifests, in mix order")
      ->required();
  curriculum
      ->add_option("--score-keys", cu_score_keys,
                   "per-dataset quality key, or 'random' for unlabeled datasets")
      ->required();
  curriculum->add_option("--token-mode", cu_mode, "whitespace|bytes|precomputed");
  curriculum->add_option("--seed", cu_seed, "seed for random ordering scores");
  curriculum->add_option("--out", cu_out, "output directory")->required();
  curriculum->add_option("--shard-size", cu_shard_size, "records per output shard");
  curriculum->add_option("--sort-buffer", cu_sort_buffer, "external-sort buffer entries");
  curriculum->add_option("--tmp", cu_tmp, "spill directory");
  curriculum->add_option("--workers", cu_workers, "worker threads");

  // -- report ----------------------------------------------------------------
  auto* report = app.add_subcommand("report", "render a phase report from a fingerprint");
  std::string rp_fingerprint, rp_format = "tsv", rp_expected;
  report->add_option("--fingerprint", rp_fingerprint, "run.fingerprint.json")->required();
  report->add_option("--format", rp_format, "tsv|md|json");
  report->add_option("--validate", rp_expected, "expected rows JSON; non-empty diff fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (build->parsed()) {
      return cmd_build(build_config, build_seed, build_out, build_workers,
                       build_shard_size, build_sort_buffer, build_tmp);
    }
    if (manifest->parsed()) {
      return cmd_manifest(mf_name, mf_shards, mf_mode, mf_out, mf_workers);
    }
    if (probe->parsed()) {
      return cmd_probe(resolve_input(pr_manifest, pr_name, pr_shards), pr_mode,
                       pr_score_key, pr_quantiles, pr_budget, pr_out, pr_ref_params,
                       pr_shard_size, pr_sort_buffer, pr_tmp, pr_workers);
    }
    if (dedup->parsed()) {
      return cmd_dedup(resolve_input(dd_manifest, dd_name, dd_shards), dd_mode, dd_seed,
                       dd_cfg, dd_out, dd_shard_size, dd_sort_buffer, dd_tmp, dd_workers);
    }
    if (curriculum->parsed()) {
      return cmd_curriculum(cu_manifests, cu_score_keys, cu_mode, cu_seed, cu_out,
                            cu_shard_size, cu_sort_buffer, cu_tmp, cu_workers);
    }
    if (report->parsed()) {
      return cmd_report(rp_fingerprint, rp_format, rp_expected);
    }
  } catch (const cf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == cf::ErrorCode::Usage ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
