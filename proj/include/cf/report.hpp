// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cf/engine.hpp"

namespace cf {

/// One phase-report row: how one source dataset flowed into the root
/// output. score_col classifies the selection applied along the way:
///   "(fully used)"  identity path, ratio exactly 100.0%
///   <score key>     quality filter (or quantile slice) on that key
///   "random"        seeded random sampling
///   "duplicate"     repetition; actual_ratio is the configured repeat
///                   ratio, realized_ratio_pct the measured token ratio
///   "dedup"         only near-duplicate removal changed the counts
struct PhaseReportRow {
  std::string dataset;
  std::string score_col;
  uint64_t tokens_before = 0;
  uint64_t tokens_after = 0;
  double actual_ratio_pct = 0.0;
  std::optional<double> realized_ratio_pct;  // duplicate rows only

  double tokens_before_b() const { return static_cast<double>(tokens_before) / 1e9; }
  double tokens_after_b() const { return static_cast<double>(tokens_after) / 1e9; }
};

/// One row per source dataset reaching the root, in configuration order.
std::vector<PhaseReportRow> emit_phase_report(const RunFingerprint& fp);

enum class ReportFormat { Tsv, Markdown, Json };

ReportFormat report_format_from_name(std::string_view name);

/// Tokens in billions with two decimals, ratios with one decimal.
std::string format_report(const std::vector<PhaseReportRow>& rows, ReportFormat format);

nlohmann::json report_to_json(const std::vector<PhaseReportRow>& rows);
std::vector<PhaseReportRow> report_from_json(const nlohmann::json& j);

struct CellDiff {
  std::string dataset;
  std::string column;
  std::string expected;
  std::string actual;
};

/// Per-cell comparison of a report against expected rows: tolerance 0.05 on
/// token billions, 0.1 on ratio percent, exact on score_col. Missing or
/// extra datasets each produce one diff. Throws SchemaMismatch when the
/// expected table lacks the report columns.
std::vector<CellDiff> validate_against_expected(const std::vector<PhaseReportRow>& report,
                                                const std::vector<PhaseReportRow>& expected);

}  // namespace cf
