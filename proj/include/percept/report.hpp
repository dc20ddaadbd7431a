#pragma once

#include <string>
#include <vector>

#include "percept/orchestrator.hpp"

namespace percept {

/// Presentation artifacts derived from aggregated reports: the summary
/// metrics table, per-scenario bias matrices (grid + heatmap), score
/// decompositions, response proportions and the bias-amount/accuracy scatter.
/// Numeric files are the normative artifact; the SVG heatmaps are derived.
struct ReportPaths {
  std::string tables_csv;
  std::vector<std::string> matrix_csvs;
  std::vector<std::string> matrix_svgs;
  std::vector<std::string> decomposition_csvs;
  std::vector<std::string> proportions_csvs;
  std::string scatter_csv;
  std::string correlation_csv;
};

/// "0.146 (0.02)" -> ".15 (.02)" style table cell.
std::string format_table_cell(const MetricSummary& summary,
                              Rational::Round rounding);

/// Fixed two-decimal rendering with the leading zero dropped (".15", "-.03").
std::string format_metric(const Rational& value, Rational::Round rounding);

/// Grid cell for bias matrices: value scaled by 100, one decimal.
std::string format_matrix_cell(const Rational& value, Rational::Round rounding);

std::string emit_tables(const std::vector<AggregatedReport>& reports,
                        const std::string& out_dir, Rational::Round rounding);

/// One grid per scenario: personas (default first) x targets, then the
/// overall target-bias, bias-amount and persona-shift columns. Writes the CSV
/// grid and an SVG heatmap whose shading is monotone in |value|.
std::pair<std::string, std::string> emit_matrix(const AggregatedReport& report,
                                                const std::string& out_dir,
                                                Rational::Round rounding);

/// Per-target score decomposition for the default persona: positive share,
/// negative share, |TB| and BAmt. positive + negative = TB and
/// positive + |negative| = BAmt hold exactly on every row.
std::string emit_decomposition(const AggregatedReport& report,
                               const std::string& out_dir);

std::string emit_proportions(const AggregatedReport& report,
                             const std::string& out_dir);

/// Scatter of (default-persona bias amount, accuracy) per scenario plus the
/// Pearson coefficient over all points.
std::pair<std::string, std::string> emit_scatter(
    const std::vector<AggregatedReport>& reports, const std::string& out_dir);

ReportPaths emit_report_bundle(const std::vector<AggregatedReport>& reports,
                               const std::string& out_dir,
                               Rational::Round rounding);

/// JSON (de)serialization of per-iteration and aggregated reports.
std::string reports_to_json(const std::vector<MetricsReport>& reports);
std::vector<MetricsReport> reports_from_json(const std::string& text);
std::string aggregated_to_json(const std::vector<AggregatedReport>& reports);
std::vector<AggregatedReport> aggregated_from_json(const std::string& text);

}  // namespace percept
