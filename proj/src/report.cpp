// SPDX-License-Identifier: Apache-2.0

#include "cf/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "cf/error.hpp"

namespace cf {

namespace {

struct PathOps {
  double repeat_product = 1.0;
  bool has_repeat = false;
  std::string filter_key;     // innermost-to-root filter/quantile key wins
  bool has_filter = false;
  bool has_sample = false;
  bool has_dedup = false;
};

struct SourceRow {
  std::string dataset;
  PathOps ops;
  uint64_t tokens_before = 0;
  size_t order = 0;
};

/// Walk the canonical tree; for each source leaf record the operators on its
/// path to the root.
void walk(const nlohmann::json& node, PathOps ops, const RunFingerprint& fp,
          std::map<std::string, SourceRow>& rows, size_t& order) {
  const std::string kind = node.at("kind").get<std::string>();
  const auto& params = node.at("params");

  if (kind == "repeat") {
    double ratio = params.at("ratio").get<double>();
    if (ratio != 1.0) {
      ops.has_repeat = true;
      ops.repeat_product *= ratio;
    }
  } else if (kind == "filter_top_ratio") {
    if (params.at("ratio").get<double>() != 1.0) {
      // Nearest-to-root filter names the row; walking down, the first
      // filter seen is the closest to the root.
      if (!ops.has_filter) ops.filter_key = params.at("score_key").get<std::string>();
      ops.has_filter = true;
    }
  } else if (kind == "quantile_chunk") {
    if (!ops.has_filter) ops.filter_key = params.at("score_key").get<std::string>();
    ops.has_filter = true;
  } else if (kind == "sample_random") {
    if (params.at("ratio").get<double>() != 1.0) ops.has_sample = true;
  } else if (kind == "dedup_minhash") {
    ops.has_dedup = true;
  } else if (kind == "source") {
    const std::string name = node.at("name").get<std::string>();
    auto it = fp.nodes.find(name);
    if (it == fp.nodes.end())
      throw Error(ErrorCode::SchemaMismatch,
                  "fingerprint has no stats for source node '" + name + "'");
    std::string dataset = it->second.details.value("dataset", name);
    auto [row_it, fresh] = rows.try_emplace(dataset);
    SourceRow& row = row_it->second;
    if (fresh) {
      row.dataset = dataset;
      row.ops = ops;
      row.order = order++;
    }
    row.tokens_before += it->second.tokens_out;
    return;
  }

  for (const auto& child : node.at("inputs")) walk(child, ops, fp, rows, order);
}

double pct(uint64_t after, uint64_t before) {
  if (before == 0) return 0.0;
  return 100.0 * static_cast<double>(after) / static_cast<double>(before);
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::vector<PhaseReportRow> emit_phase_report(const RunFingerprint& fp) {
  std::map<std::string, SourceRow> sources;
  size_t order = 0;
  walk(fp.tree, PathOps{}, fp, sources, order);

  auto root_it = fp.nodes.find(fp.root);
  if (root_it == fp.nodes.end())
    throw Error(ErrorCode::SchemaMismatch, "fingerprint has no stats for the root node");
  const auto& root_breakdown = root_it->second.per_dataset;

  std::vector<const SourceRow*> ordered(sources.size());
  for (const auto& [dataset, row] : sources) ordered[row.order] = &row;

  std::vector<PhaseReportRow> rows;
  rows.reserve(ordered.size());
  for (const SourceRow* src : ordered) {
    PhaseReportRow row;
    row.dataset = src->dataset;
    row.tokens_before = src->tokens_before;
    if (auto it = root_breakdown.find(src->dataset); it != root_breakdown.end()) {
      row.tokens_after = it->second.second;
    }
    const double realized = round1(pct(row.tokens_after, row.tokens_before));
    const PathOps& ops = src->ops;
    if (ops.has_repeat) {
      row.score_col = "duplicate";
      row.actual_ratio_pct = round1(100.0 * ops.repeat_product);
      row.realized_ratio_pct = realized;
    } else if (ops.has_filter) {
      row.score_col = ops.filter_key;
      row.actual_ratio_pct = realized;
    } else if (ops.has_sample) {
      row.score_col = "random";
      row.actual_ratio_pct = realized;
    } else if (ops.has_dedup && realized != 100.0) {
      row.score_col = "dedup";
      row.actual_ratio_pct = realized;
    } else {
      row.score_col = "(fully used)";
      row.actual_ratio_pct = realized;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ReportFormat report_format_from_name(std::string_view name) {
  if (name == "tsv") return ReportFormat::Tsv;
  if (name == "md") return ReportFormat::Markdown;
  if (name == "json") return ReportFormat::Json;
  throw Error(ErrorCode::Usage, "unknown report format '" + std::string(name) +
                                    "' (expected tsv|md|json)");
}

std::string format_report(const std::vector<PhaseReportRow>& rows, ReportFormat format) {
  if (format == ReportFormat::Json) return report_to_json(rows).dump(2) + "\n";

  std::ostringstream out;
  const bool md = format == ReportFormat::Markdown;
  const char* sep = md ? " | " : "\t";
  auto line = [&](const std::string& a, const std::string& b, const std::string& c,
                  const std::string& d, const std::string& e, const std::string& f) {
    if (md) out << "| ";
    out << a << sep << b << sep << c << sep << d << sep << e << sep << f;
    if (md) out << " |";
    out << "\n";
  };
  line("Dataset", "Score Col", "Token Before (B)", "Token After (B)", "Actual Ratio",
       "Realized Ratio");
  if (md) out << "|---|---|---|---|---|---|\n";
  for (const auto& row : rows) {
    line(row.dataset, row.score_col, fmt(row.tokens_before_b(), 2),
         fmt(row.tokens_after_b(), 2), fmt(row.actual_ratio_pct, 1) + "%",
         row.realized_ratio_pct ? fmt(*row.realized_ratio_pct, 1) + "%" : "");
  }
  return out.str();
}

nlohmann::json report_to_json(const std::vector<PhaseReportRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j;
    j["dataset"] = row.dataset;
    j["score_col"] = row.score_col;
    j["tokens_before"] = row.tokens_before;
    j["tokens_after"] = row.tokens_after;
    j["tokens_before_b"] = row.tokens_before_b();
    j["tokens_after_b"] = row.tokens_after_b();
    j["actual_ratio_pct"] = row.actual_ratio_pct;
    if (row.realized_ratio_pct) j["realized_ratio_pct"] = *row.realized_ratio_pct;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<PhaseReportRow> report_from_json(const nlohmann::json& j) {
  if (!j.is_array())
    throw Error(ErrorCode::SchemaMismatch, "report JSON must be an array of rows");
  std::vector<PhaseReportRow> rows;
  for (const auto& item : j) {
    PhaseReportRow row;
    try {
      row.dataset = item.at("dataset").get<std::string>();
      row.score_col = item.at("score_col").get<std::string>();
      if (item.contains("tokens_before")) {
        row.tokens_before = item.at("tokens_before").get<uint64_t>();
        row.tokens_after = item.at("tokens_after").get<uint64_t>();
      } else {
        row.tokens_before =
            static_cast<uint64_t>(std::llround(item.at("tokens_before_b").get<double>() * 1e9));
        row.tokens_after =
            static_cast<uint64_t>(std::llround(item.at("tokens_after_b").get<double>() * 1e9));
      }
      row.actual_ratio_pct = item.at("actual_ratio_pct").get<double>();
      if (item.contains("realized_ratio_pct"))
        row.realized_ratio_pct = item.at("realized_ratio_pct").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, std::string("bad report row: ") + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CellDiff> validate_against_expected(const std::vector<PhaseReportRow>& report,
                                                const std::vector<PhaseReportRow>& expected) {
  constexpr double kTokenTolB = 0.05;
  constexpr double kRatioTol = 0.1;

  std::map<std::string, const PhaseReportRow*> actual_by_dataset;
  for (const auto& row : report) {
    if (!actual_by_dataset.emplace(row.dataset, &row).second)
      throw Error(ErrorCode::SchemaMismatch,
                  "report has duplicate rows for dataset '" + row.dataset + "'");
  }

  std::vector<CellDiff> diffs;
  std::set<std::string> seen;
  for (const auto& want : expected) {
    seen.insert(want.dataset);
    auto it = actual_by_dataset.find(want.dataset);
    if (it == actual_by_dataset.end()) {
      diffs.push_back({want.dataset, "row", "present", "missing"});
      continue;
    }
    const PhaseReportRow& got = *it->second;
    if (got.score_col != want.score_col)
      diffs.push_back({want.dataset, "score_col", want.score_col, got.score_col});
    if (std::abs(got.tokens_before_b() - want.tokens_before_b()) > kTokenTolB)
      diffs.push_back({want.dataset, "tokens_before_b", fmt(want.tokens_before_b(), 2),
                       fmt(got.tokens_before_b(), 2)});
    if (std::abs(got.tokens_after_b() - want.tokens_after_b()) > kTokenTolB)
      diffs.push_back({want.dataset, "tokens_after_b", fmt(want.tokens_after_b(), 2),
                       fmt(got.tokens_after_b(), 2)});
    if (std::abs(got.actual_ratio_pct - want.actual_ratio_pct) > kRatioTol)
      diffs.push_back({want.dataset, "actual_ratio_pct", fmt(want.actual_ratio_pct, 1),
                       fmt(got.actual_ratio_pct, 1)});
  }
  for (const auto& row : report) {
    if (!seen.count(row.dataset))
      diffs.push_back({row.dataset, "row", "absent", "present"});
  }
  return diffs;
}

}  // namespace cf
