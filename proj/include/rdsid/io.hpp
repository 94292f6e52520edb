#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdsid/error.hpp"
#include "rdsid/experiments.hpp"
#include "rdsid/numeric.hpp"
#include "rdsid/scenario.hpp"
#include "rdsid/types.hpp"

namespace rdsid {

// --- RDS CSV ----------------------------------------------------------------
//
// Header (exact): id,degree,outcome,recruiter_id,wave
// One row per respondent; an empty recruiter_id marks a seed (wave 0).

inline constexpr std::string_view rds_csv_header = "id,degree,outcome,recruiter_id,wave";

struct IngestResult {
  Sample sample;
  std::vector<std::string> ids;
  /// Non-fatal findings, e.g. a recruit whose wave is not recruiter's + 1.
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline ValidationError line_error(std::size_t line, const std::string& what) {
  return ValidationError("line " + std::to_string(line) + ": " + what);
}

}  // namespace detail

/// Reads and validates an RDS CSV stream. Throws ValidationError naming the
/// offending line for duplicate ids, dangling or self recruiter ids,
/// degree < 1, seeds with nonzero wave, and malformed rows.
inline IngestResult ingest_rds_csv(std::istream& in) {
  struct Row {
    std::string id;
    Degree degree;
    double outcome;
    std::string recruiter;
    std::uint32_t wave;
    std::size_t line;
  };
  std::string text;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> bool {
    if (!std::getline(in, text)) return false;
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    return true;
  };
  if (!next_line()) throw detail::line_error(1, "empty file; expected header");
  if (text != rds_csv_header) {
    throw detail::line_error(1, "header must be exactly '" + std::string(rds_csv_header) + "'");
  }

  std::vector<Row> rows;
  std::unordered_map<std::string, std::size_t> index_of;
  while (next_line()) {
    if (text.empty()) continue;
    const auto fields = detail::split_commas(text);
    if (fields.size() != 5) {
      throw detail::line_error(line_no, "expected 5 fields, found " + std::to_string(fields.size()));
    }
    Row row;
    row.line = line_no;
    row.id = std::string(fields[0]);
    if (row.id.empty()) throw detail::line_error(line_no, "empty id");
    try {
      row.degree = detail::parse_integer<Degree>(fields[1], "degree");
      row.outcome = detail::parse_real(fields[2], "outcome");
      row.wave = detail::parse_integer<std::uint32_t>(fields[4], "wave");
    } catch (const ValidationError& e) {
      throw detail::line_error(line_no, e.what());
    }
    if (row.degree < 1) throw detail::line_error(line_no, "degree must be >= 1");
    if (!std::isfinite(row.outcome)) throw detail::line_error(line_no, "outcome must be finite");
    row.recruiter = std::string(fields[3]);
    if (row.recruiter.empty() && row.wave != 0) {
      throw detail::line_error(line_no, "seed (empty recruiter_id) must have wave 0");
    }
    if (row.recruiter == row.id) throw detail::line_error(line_no, "record recruits itself");
    if (!index_of.emplace(row.id, rows.size()).second) {
      throw detail::line_error(line_no, "duplicate id '" + row.id + "'");
    }
    rows.push_back(std::move(row));
  }

  IngestResult result;
  result.sample.with_replacement = false;
  result.sample.records.reserve(rows.size());
  for (const auto& row : rows) {
    std::optional<std::size_t> recruiter;
    if (!row.recruiter.empty()) {
      const auto it = index_of.find(row.recruiter);
      if (it == index_of.end()) {
        throw detail::line_error(row.line, "recruiter_id '" + row.recruiter + "' matches no record");
      }
      recruiter = it->second;
      const auto expected = rows[it->second].wave + 1;
      if (row.wave != expected) {
        result.warnings.push_back("line " + std::to_string(row.line) + ": wave " +
                                  std::to_string(row.wave) + " but recruiter is wave " +
                                  std::to_string(rows[it->second].wave));
      }
    }
    result.sample.records.emplace_back(std::nullopt, row.outcome, row.degree, recruiter, row.wave);
    result.ids.push_back(row.id);
  }
  return result;
}

inline IngestResult ingest_rds_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return ingest_rds_csv(in);
}

/// Writes a sample in the RDS CSV schema; ids are record indices.
inline void write_rds_csv(const Sample& sample, std::ostream& out) {
  out << rds_csv_header << '\n';
  for (std::size_t i = 0; i < sample.records.size(); ++i) {
    const auto& r = sample.records[i];
    out << i << ',' << r.reported_degree() << ',' << format_double(r.outcome()) << ',';
    if (r.recruiter()) out << *r.recruiter();
    out << ',' << r.wave() << '\n';
  }
}

// --- scenario files ---------------------------------------------------------

inline Scenario parse_scenario(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

inline Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_scenario(in);
}

// --- reports ----------------------------------------------------------------

inline constexpr const char* report_schema = "rdsid.report/1";

namespace detail {

inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json report_to_json(const StudyReport& r) {
  using nlohmann::json;
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"estimator", c.estimator},
                     {"n_nominal", c.n_nominal},
                     {"replicates_used", c.replicates_used},
                     {"n_realized_mean", c.n_realized_mean},
                     {"mean_estimate", c.mean_estimate},
                     {"mean_truth", c.mean_truth},
                     {"bias", c.bias},
                     {"sd", c.sd},
                     {"rmse", c.rmse},
                     {"mc_se", c.mc_se},
                     {"plim", detail::optional_number(c.plim)}});
  }
  json network = nullptr;
  if (r.network) {
    network = {{"realizations", r.network->realizations},
               {"connected", r.network->connected},
               {"bipartite", r.network->bipartite},
               {"min_components", r.network->min_components},
               {"max_components", r.network->max_components},
               {"self_loops", r.network->self_loops},
               {"multi_edges", r.network->multi_edges}};
  }
  return {{"schema", report_schema},
          {"scenario", scenario_to_json(r.scenario)},
          {"truth", r.truth},
          {"cells", cells},
          {"flags",
           {{"truncated_replicates", r.truncated_replicates},
            {"total_restarts", r.total_restarts},
            {"empty_samples", r.empty_samples}}},
          {"network", network}};
}

inline StudyReport report_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", "") != report_schema) {
    throw ValidationError(std::string("not a ") + report_schema + " document");
  }
  StudyReport r;
  try {
    r.scenario = scenario_from_json(j.at("scenario"));
    r.truth = j.at("truth").get<double>();
    for (const auto& c : j.at("cells")) {
      CellReport cell;
      cell.estimator = c.at("estimator").get<std::string>();
      cell.n_nominal = c.at("n_nominal").get<std::size_t>();
      cell.replicates_used = c.at("replicates_used").get<std::size_t>();
      cell.n_realized_mean = c.at("n_realized_mean").get<double>();
      cell.mean_estimate = c.at("mean_estimate").get<double>();
      cell.mean_truth = c.at("mean_truth").get<double>();
      cell.bias = c.at("bias").get<double>();
      cell.sd = c.at("sd").get<double>();
      cell.rmse = c.at("rmse").get<double>();
      cell.mc_se = c.at("mc_se").get<double>();
      if (!c.at("plim").is_null()) cell.plim = c.at("plim").get<double>();
      r.cells.push_back(std::move(cell));
    }
    const auto& flags = j.at("flags");
    r.truncated_replicates = flags.at("truncated_replicates").get<std::size_t>();
    r.total_restarts = flags.at("total_restarts").get<std::size_t>();
    r.empty_samples = flags.at("empty_samples").get<std::size_t>();
    if (const auto& n = j.at("network"); !n.is_null()) {
      NetworkReport net;
      net.realizations = n.at("realizations").get<std::size_t>();
      net.connected = n.at("connected").get<std::size_t>();
      net.bipartite = n.at("bipartite").get<std::size_t>();
      net.min_components = n.at("min_components").get<std::size_t>();
      net.max_components = n.at("max_components").get<std::size_t>();
      net.self_loops = n.at("self_loops").get<std::size_t>();
      net.multi_edges = n.at("multi_edges").get<std::size_t>();
      r.network = net;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return r;
}

enum class ReportFormat { structured, tabular };

inline constexpr std::string_view tabular_header =
    "estimator,n_nominal,n_realized_mean,mean_estimate,bias,sd,rmse,mc_se,plim";

/// Structured: one JSON document (2-space indent). Tabular: CSV with one row
/// per (estimator, size); an empty plim field means no exact limit exists.
inline void emit_report(const StudyReport& r, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::structured) {
    out << report_to_json(r).dump(2) << '\n';
    return;
  }
  out << tabular_header << '\n';
  for (const auto& c : r.cells) {
    if (c.estimator.find(',') != std::string::npos) {
      out << '"' << c.estimator << '"';
    } else {
      out << c.estimator;
    }
    out << ',' << c.n_nominal << ',' << format_double(c.n_realized_mean) << ','
        << format_double(c.mean_estimate) << ',' << format_double(c.bias) << ','
        << format_double(c.sd) << ',' << format_double(c.rmse) << ',' << format_double(c.mc_se)
        << ',' << (c.plim ? format_double(*c.plim) : std::string()) << '\n';
  }
}

}  // namespace rdsid
