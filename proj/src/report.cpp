#include "percept/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace percept {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string drop_leading_zero(std::string text) {
  if (text.rfind("0.", 0) == 0) return text.substr(1);
  if (text.rfind("-0.", 0) == 0) return "-" + text.substr(2);
  return text;
}

std::string format_std(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return drop_leading_zero(buf);
}

std::string sanitize(const std::string& text) {
  std::string out;
  for (char c : text)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '-');
  return out;
}

std::string scenario_slug(const AggregatedReport& report) {
  return sanitize(report.model_id) + "_" + to_string(report.domain) + "_" +
         to_string(report.condition);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

/// Personas with the default first, then lexicographic.
std::vector<std::string> persona_order(const AggregatedReport& report) {
  std::vector<std::string> order;
  if (report.personas.count(kDefaultPersonaId))
    order.push_back(kDefaultPersonaId);
  for (const auto& [persona_id, metrics] : report.personas)
    if (persona_id != kDefaultPersonaId) order.push_back(persona_id);
  return order;
}

// Monotone shading in |value|: white at zero up to a saturated hue at the
// grid maximum; blue for positive, red for negative.
std::string heat_color(double value, double max_abs) {
  double t = max_abs > 0.0 ? std::min(std::abs(value) / max_abs, 1.0) : 0.0;
  int r, g, b;
  if (value >= 0.0) {
    r = static_cast<int>(255 + t * (8 - 255));
    g = static_cast<int>(255 + t * (48 - 255));
    b = static_cast<int>(255 + t * (107 - 255));
  } else {
    r = static_cast<int>(255 + t * (103 - 255));
    g = static_cast<int>(255 + t * (0 - 255));
    b = static_cast<int>(255 + t * (13 - 255));
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string format_metric(const Rational& value, Rational::Round rounding) {
  return drop_leading_zero(value.to_decimal(2, rounding));
}

std::string format_table_cell(const MetricSummary& summary,
                              Rational::Round rounding) {
  return format_metric(summary.mean, rounding) + " (" +
         format_std(summary.stddev) + ")";
}

std::string format_matrix_cell(const Rational& value,
                               Rational::Round rounding) {
  return (value * Rational{100}).to_decimal(1, rounding);
}

std::string emit_tables(const std::vector<AggregatedReport>& reports,
                        const std::string& out_dir, Rational::Round rounding) {
  std::string path = out_dir + "/tables.csv";
  std::string out = "domain,model,condition,tb_overall,bamt_overall,pb,bs,acc\n";
  for (const auto& report : reports) {
    const auto defaults = report.personas.find(kDefaultPersonaId);
    std::string tb = "-", bamt = "-", bs = "-", acc = "-";
    if (defaults != report.personas.end()) {
      tb = format_table_cell(defaults->second.tb_overall, rounding);
      bamt = format_table_cell(defaults->second.bamt_overall, rounding);
      bs = format_table_cell(defaults->second.bias_score, rounding);
      acc = format_table_cell(defaults->second.accuracy, rounding);
    }
    std::string pb = report.pb_overall
                         ? format_table_cell(*report.pb_overall, rounding)
                         : "-";
    out += csv_field(to_string(report.domain)) + "," +
           csv_field(report.model_id) + "," +
           csv_field(to_string(report.condition)) + "," + csv_field(tb) + "," +
           csv_field(bamt) + "," + csv_field(pb) + "," + csv_field(bs) + "," +
           csv_field(acc) + "\n";
  }
  write_file(path, out);
  return path;
}

std::pair<std::string, std::string> emit_matrix(const AggregatedReport& report,
                                                const std::string& out_dir,
                                                Rational::Round rounding) {
  std::vector<std::string> targets;
  if (!report.personas.empty())
    for (const auto& [target_id, cells] :
         report.personas.begin()->second.targets)
      targets.push_back(target_id);
  std::vector<std::string> personas = persona_order(report);

  std::string csv_path = out_dir + "/matrix_" + scenario_slug(report) + ".csv";
  std::string csv = "persona";
  for (const auto& t : targets) csv += "," + csv_field(t);
  csv += ",tb_overall,bamt_overall,pb\n";

  struct GridCell {
    double value;
    std::string text;
  };
  std::vector<std::vector<GridCell>> grid;

  for (const auto& persona_id : personas) {
    const AggregatedPersona& metrics = report.personas.at(persona_id);
    csv += csv_field(persona_id);
    std::vector<GridCell> row;
    for (const auto& target_id : targets) {
      const Rational& tb = metrics.targets.at(target_id).tb.mean;
      std::string cell = format_matrix_cell(tb, rounding);
      csv += "," + cell;
      row.push_back({tb.to_double() * 100.0, cell});
    }
    std::string tb_cell = format_matrix_cell(metrics.tb_overall.mean, rounding);
    std::string bamt_cell =
        format_matrix_cell(metrics.bamt_overall.mean, rounding);
    std::string pb_cell =
        metrics.pb ? format_matrix_cell(metrics.pb->mean, rounding) : "-";
    csv += "," + tb_cell + "," + bamt_cell + "," + pb_cell + "\n";
    row.push_back({metrics.tb_overall.mean.to_double() * 100.0, tb_cell});
    row.push_back({metrics.bamt_overall.mean.to_double() * 100.0, bamt_cell});
    row.push_back(
        {metrics.pb ? metrics.pb->mean.to_double() * 100.0 : 0.0, pb_cell});
    grid.push_back(std::move(row));
  }
  write_file(csv_path, csv);

  // SVG heatmap.
  std::vector<std::string> columns = targets;
  columns.push_back("TB overall");
  columns.push_back("BAmt overall");
  columns.push_back("PB");
  double max_abs = 0.0;
  for (const auto& row : grid)
    for (const auto& cell : row)
      max_abs = std::max(max_abs, std::abs(cell.value));

  constexpr int kCellW = 84, kCellH = 26, kLeft = 150, kTop = 96;
  int width = kLeft + kCellW * static_cast<int>(columns.size()) + 10;
  int height = kTop + kCellH * static_cast<int>(personas.size()) + 10;
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<text x=\"6\" y=\"18\" font-size=\"13\">" + scenario_slug(report) +
         " (values x100)</text>\n";
  for (size_t c = 0; c < columns.size(); ++c) {
    int x = kLeft + static_cast<int>(c) * kCellW + kCellW / 2;
    svg += "<text x=\"" + std::to_string(x) + "\" y=\"" +
           std::to_string(kTop - 8) +
           "\" text-anchor=\"end\" transform=\"rotate(-45 " +
           std::to_string(x) + " " + std::to_string(kTop - 8) + ")\">" +
           columns[c] + "</text>\n";
  }
  for (size_t r = 0; r < personas.size(); ++r) {
    int y = kTop + static_cast<int>(r) * kCellH;
    svg += "<text x=\"" + std::to_string(kLeft - 6) + "\" y=\"" +
           std::to_string(y + kCellH / 2 + 4) + "\" text-anchor=\"end\">" +
           personas[r] + "</text>\n";
    for (size_t c = 0; c < grid[r].size(); ++c) {
      int x = kLeft + static_cast<int>(c) * kCellW;
      const GridCell& cell = grid[r][c];
      double shade =
          max_abs > 0.0 ? std::min(std::abs(cell.value) / max_abs, 1.0) : 0.0;
      svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
             "\" width=\"" + std::to_string(kCellW - 2) + "\" height=\"" +
             std::to_string(kCellH - 2) + "\" fill=\"" +
             heat_color(cell.value, max_abs) + "\"/>\n";
      svg += "<text x=\"" + std::to_string(x + kCellW / 2 - 1) + "\" y=\"" +
             std::to_string(y + kCellH / 2 + 4) +
             "\" text-anchor=\"middle\" fill=\"" +
             (shade > 0.6 ? "#ffffff" : "#000000") + "\">" + cell.text +
             "</text>\n";
    }
  }
  svg += "</svg>\n";
  std::string svg_path = out_dir + "/matrix_" + scenario_slug(report) + ".svg";
  write_file(svg_path, svg);
  return {csv_path, svg_path};
}

std::string emit_decomposition(const AggregatedReport& report,
                               const std::string& out_dir) {
  std::string path =
      out_dir + "/decomposition_" + scenario_slug(report) + ".csv";
  std::string out = "persona,target,positive,negative,abs_tb,bamt\n";
  char buf[64];
  auto fmt = [&](const Rational& value) {
    std::snprintf(buf, sizeof(buf), "%.12g", value.to_double());
    return std::string(buf);
  };
  for (const auto& persona_id : persona_order(report)) {
    const AggregatedPersona& metrics = report.personas.at(persona_id);
    for (const auto& [target_id, cells] : metrics.targets) {
      Rational tb = cells.tb.mean;
      out += csv_field(persona_id) + "," + csv_field(target_id) + "," +
             fmt(cells.pos_share.mean) + "," + fmt(cells.neg_share.mean) +
             "," + fmt(tb.abs()) + "," + fmt(cells.bamt.mean) + "\n";
    }
  }
  write_file(path, out);
  return path;
}

std::string emit_proportions(const AggregatedReport& report,
                             const std::string& out_dir) {
  std::string path = out_dir + "/proportions_" + scenario_slug(report) + ".csv";
  std::string out = "persona,target,positive,neutral,negative\n";
  char buf[64];
  auto fmt = [&](const Rational& value) {
    std::snprintf(buf, sizeof(buf), "%.12g", value.to_double());
    return std::string(buf);
  };
  for (const auto& persona_id : persona_order(report)) {
    const AggregatedPersona& metrics = report.personas.at(persona_id);
    for (const auto& [target_id, cells] : metrics.targets)
      out += csv_field(persona_id) + "," + csv_field(target_id) + "," +
             fmt(cells.prop_pos.mean) + "," + fmt(cells.prop_neutral.mean) +
             "," + fmt(cells.prop_neg.mean) + "\n";
  }
  write_file(path, out);
  return path;
}

std::pair<std::string, std::string> emit_scatter(
    const std::vector<AggregatedReport>& reports, const std::string& out_dir) {
  std::string scatter_path = out_dir + "/scatter.csv";
  std::string out = "model,domain,condition,bamt_overall,accuracy\n";
  std::vector<std::pair<double, double>> points;
  char buf[64];
  for (const auto& report : reports) {
    auto defaults = report.personas.find(kDefaultPersonaId);
    if (defaults == report.personas.end()) continue;
    double bamt = defaults->second.bamt_overall.mean.to_double();
    double acc = defaults->second.accuracy.mean.to_double();
    points.emplace_back(bamt, acc);
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g", bamt, acc);
    out += csv_field(report.model_id) + "," + to_string(report.domain) + "," +
           to_string(report.condition) + "," + buf + "\n";
  }
  write_file(scatter_path, out);

  std::string corr_path = out_dir + "/correlation.csv";
  std::string corr = "n_points,pearson_r\n";
  corr += std::to_string(points.size()) + ",";
  try {
    std::snprintf(buf, sizeof(buf), "%.6f", pearson_correlation(points));
    corr += buf;
  } catch (const MetricsError&) {
    corr += "-";  // fewer than two points or degenerate variance
  }
  corr += "\n";
  write_file(corr_path, corr);
  return {scatter_path, corr_path};
}

ReportPaths emit_report_bundle(const std::vector<AggregatedReport>& reports,
                               const std::string& out_dir,
                               Rational::Round rounding) {
  ReportPaths paths;
  paths.tables_csv = emit_tables(reports, out_dir, rounding);
  for (const auto& report : reports) {
    auto [csv, svg] = emit_matrix(report, out_dir, rounding);
    paths.matrix_csvs.push_back(csv);
    paths.matrix_svgs.push_back(svg);
    paths.decomposition_csvs.push_back(emit_decomposition(report, out_dir));
    paths.proportions_csvs.push_back(emit_proportions(report, out_dir));
  }
  auto [scatter, correlation] = emit_scatter(reports, out_dir);
  paths.scatter_csv = scatter;
  paths.correlation_csv = correlation;
  return paths;
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace {

ordered_json rational_to_json(const Rational& value) {
  ordered_json j;
  j["num"] = value.num();
  j["den"] = value.den();
  j["value"] = value.to_double();
  return j;
}

Rational rational_from_json(const nlohmann::json& j) {
  return Rational{j.at("num").get<long long>(), j.at("den").get<long long>()};
}

ordered_json summary_to_json(const MetricSummary& summary) {
  ordered_json j = rational_to_json(summary.mean);
  j["std"] = summary.stddev;
  return j;
}

MetricSummary summary_from_json(const nlohmann::json& j) {
  MetricSummary summary;
  summary.mean = rational_from_json(j);
  summary.stddev = j.at("std").get<double>();
  return summary;
}

}  // namespace

std::string reports_to_json(const std::vector<MetricsReport>& reports) {
  ordered_json root = ordered_json::array();
  for (const auto& report : reports) {
    ordered_json j;
    j["model"] = report.model_id;
    j["domain"] = to_string(report.domain);
    j["condition"] = to_string(report.condition);
    j["iteration"] = report.iteration;
    ordered_json personas;
    for (const auto& [persona_id, metrics] : report.personas) {
      ordered_json p;
      ordered_json targets;
      for (const auto& [target_id, cells] : metrics.targets) {
        ordered_json t;
        t["tb"] = rational_to_json(cells.tb);
        t["bamt"] = rational_to_json(cells.bamt);
        t["positive"] = rational_to_json(cells.pos_share);
        t["negative"] = rational_to_json(cells.neg_share);
        t["prop_pos"] = rational_to_json(cells.prop_pos);
        t["prop_neutral"] = rational_to_json(cells.prop_neutral);
        t["prop_neg"] = rational_to_json(cells.prop_neg);
        targets[target_id] = std::move(t);
      }
      p["targets"] = std::move(targets);
      p["tb_overall"] = rational_to_json(metrics.tb_overall);
      p["bamt_overall"] = rational_to_json(metrics.bamt_overall);
      p["pb"] = metrics.pb ? rational_to_json(*metrics.pb) : ordered_json();
      p["accuracy"] = rational_to_json(metrics.accuracy);
      p["bias_score"] = rational_to_json(metrics.bias_score);
      p["n_questions"] = metrics.n_questions;
      personas[persona_id] = std::move(p);
    }
    j["personas"] = std::move(personas);
    j["pb_overall"] =
        report.pb_overall ? rational_to_json(*report.pb_overall) : ordered_json();
    root.push_back(std::move(j));
  }
  return root.dump(2) + "\n";
}

std::vector<MetricsReport> reports_from_json(const std::string& text) {
  nlohmann::json root = nlohmann::json::parse(text);
  std::vector<MetricsReport> reports;
  for (const auto& j : root) {
    MetricsReport report;
    report.model_id = j.at("model").get<std::string>();
    report.domain = *parse_domain(j.at("domain").get<std::string>());
    report.condition = *parse_condition(j.at("condition").get<std::string>());
    report.iteration = j.at("iteration").get<int>();
    for (const auto& [persona_id, p] : j.at("personas").items()) {
      PersonaMetrics metrics;
      for (const auto& [target_id, t] : p.at("targets").items()) {
        TargetCells cells;
        cells.tb = rational_from_json(t.at("tb"));
        cells.bamt = rational_from_json(t.at("bamt"));
        cells.pos_share = rational_from_json(t.at("positive"));
        cells.neg_share = rational_from_json(t.at("negative"));
        cells.prop_pos = rational_from_json(t.at("prop_pos"));
        cells.prop_neutral = rational_from_json(t.at("prop_neutral"));
        cells.prop_neg = rational_from_json(t.at("prop_neg"));
        metrics.targets[target_id] = std::move(cells);
      }
      metrics.tb_overall = rational_from_json(p.at("tb_overall"));
      metrics.bamt_overall = rational_from_json(p.at("bamt_overall"));
      if (!p.at("pb").is_null()) metrics.pb = rational_from_json(p.at("pb"));
      metrics.accuracy = rational_from_json(p.at("accuracy"));
      metrics.bias_score = rational_from_json(p.at("bias_score"));
      metrics.n_questions = p.at("n_questions").get<long long>();
      report.personas[persona_id] = std::move(metrics);
    }
    if (!j.at("pb_overall").is_null())
      report.pb_overall = rational_from_json(j.at("pb_overall"));
    reports.push_back(std::move(report));
  }
  return reports;
}

std::string aggregated_to_json(const std::vector<AggregatedReport>& reports) {
  ordered_json root = ordered_json::array();
  for (const auto& report : reports) {
    ordered_json j;
    j["model"] = report.model_id;
    j["domain"] = to_string(report.domain);
    j["condition"] = to_string(report.condition);
    j["iterations"] = report.iterations;
    ordered_json personas;
    for (const auto& [persona_id, metrics] : report.personas) {
      ordered_json p;
      ordered_json targets;
      for (const auto& [target_id, cells] : metrics.targets) {
        ordered_json t;
        t["tb"] = summary_to_json(cells.tb);
        t["bamt"] = summary_to_json(cells.bamt);
        t["positive"] = summary_to_json(cells.pos_share);
        t["negative"] = summary_to_json(cells.neg_share);
        t["prop_pos"] = summary_to_json(cells.prop_pos);
        t["prop_neutral"] = summary_to_json(cells.prop_neutral);
        t["prop_neg"] = summary_to_json(cells.prop_neg);
        targets[target_id] = std::move(t);
      }
      p["targets"] = std::move(targets);
      p["tb_overall"] = summary_to_json(metrics.tb_overall);
      p["bamt_overall"] = summary_to_json(metrics.bamt_overall);
      p["pb"] = metrics.pb ? summary_to_json(*metrics.pb) : ordered_json();
      p["accuracy"] = summary_to_json(metrics.accuracy);
      p["bias_score"] = summary_to_json(metrics.bias_score);
      personas[persona_id] = std::move(p);
    }
    j["personas"] = std::move(personas);
    j["pb_overall"] =
        report.pb_overall ? summary_to_json(*report.pb_overall) : ordered_json();
    root.push_back(std::move(j));
  }
  return root.dump(2) + "\n";
}

std::vector<AggregatedReport> aggregated_from_json(const std::string& text) {
  nlohmann::json root = nlohmann::json::parse(text);
  std::vector<AggregatedReport> reports;
  for (const auto& j : root) {
    AggregatedReport report;
    report.model_id = j.at("model").get<std::string>();
    report.domain = *parse_domain(j.at("domain").get<std::string>());
    report.condition = *parse_condition(j.at("condition").get<std::string>());
    report.iterations = j.at("iterations").get<int>();
    for (const auto& [persona_id, p] : j.at("personas").items()) {
      AggregatedPersona metrics;
      for (const auto& [target_id, t] : p.at("targets").items()) {
        AggregatedTargetCells cells;
        cells.tb = summary_from_json(t.at("tb"));
        cells.bamt = summary_from_json(t.at("bamt"));
        cells.pos_share = summary_from_json(t.at("positive"));
        cells.neg_share = summary_from_json(t.at("negative"));
        cells.prop_pos = summary_from_json(t.at("prop_pos"));
        cells.prop_neutral = summary_from_json(t.at("prop_neutral"));
        cells.prop_neg = summary_from_json(t.at("prop_neg"));
        metrics.targets[target_id] = std::move(cells);
      }
      metrics.tb_overall = summary_from_json(p.at("tb_overall"));
      metrics.bamt_overall = summary_from_json(p.at("bamt_overall"));
      if (!p.at("pb").is_null()) metrics.pb = summary_from_json(p.at("pb"));
      metrics.accuracy = summary_from_json(p.at("accuracy"));
      metrics.bias_score = summary_from_json(p.at("bias_score"));
      report.personas[persona_id] = std::move(metrics);
    }
    if (!j.at("pb_overall").is_null())
      report.pb_overall = summary_from_json(j.at("pb_overall"));
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace percept
