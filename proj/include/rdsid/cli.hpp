#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rdsid/error.hpp"
#include "rdsid/estimators.hpp"
#include "rdsid/experiments.hpp"
#include "rdsid/io.hpp"
#include "rdsid/scenario.hpp"

namespace rdsid {

/// Process exit codes.
enum ExitCode : int {
  exit_ok = 0,
  exit_runtime = 1,
  exit_usage = 2,
  exit_validation = 3,
};

namespace detail {

inline ReportFormat parse_format(const std::string& f) {
  return f == "tabular" ? ReportFormat::tabular : ReportFormat::structured;
}

/// Writes `text` to `path`, or to `out` when no path is given.
inline void deliver(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  file << text;
}

inline nlohmann::json nan_to_null(double v) {
  return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}

inline std::string csv_field(const std::string& s) {
  return s.find(',') == std::string::npos ? s : "\"" + s + "\"";
}

inline nlohmann::json oracle_document(const Scenario& s) {
  using nlohmann::json;
  const World world = fixed_world(s);
  const auto& pop = world.population;
  const Graph* graph = world.graph ? &*world.graph : nullptr;
  const std::size_t n = s.sample_sizes.front();
  const DesignSpec design = design_for_size(s, n);

  json doc;
  doc["scenario"] = s.name;
  doc["seed"] = s.seed;
  doc["sample_size"] = n;
  doc["population_size"] = pop.size();
  doc["true_mean"] = true_mean(pop);
  doc["outcome_degree_correlation"] = outcome_degree_correlation(pop);
  try {
    doc["identification"] = identification_oracle(pop, design, graph);
  } catch (const UnsupportedDesign& e) {
    doc["identification"] = {{"unsupported", e.what()}};
  }
  try {
    json plims = json::object();
    for (const auto& e : s.estimators) plims[e.name()] = plim_oracle(pop, design, e.assumed_shape(), graph);
    doc["plim"] = plims;
    json audit = json::array();
    for (const auto& [k, row] : ignorability_audit(pop, design, graph)) {
      audit.push_back({{"degree", k},
                       {"count", row.count},
                       {"population_mean", row.population_mean},
                       {"sampled_mean", nan_to_null(row.sampled_mean)},
                       {"gap", nan_to_null(row.gap)}});
    }
    doc["audit"] = audit;
  } catch (const UnsupportedDesign& e) {
    doc["plim"] = {{"unsupported", e.what()}};
    doc["audit"] = {{"unsupported", e.what()}};
  }
  if (graph != nullptr) {
    doc["network"] = {{"components", graph->component_count()},
                      {"connected", graph->is_connected()},
                      {"bipartite", graph->is_bipartite()},
                      {"self_loops", graph->self_loops()},
                      {"multi_edges", graph->multi_edges()}};
  } else {
    doc["network"] = nullptr;
  }
  return doc;
}

inline std::vector<GridAxis> parse_axes(const std::vector<std::string>& specs) {
  std::vector<GridAxis> axes;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("--axis expects name=<JSON array>, got '" + spec + "'");
    }
    nlohmann::json values;
    try {
      values = nlohmann::json::parse(spec.substr(eq + 1));
    } catch (const nlohmann::json::parse_error&) {
      throw ValidationError("--axis values for '" + spec.substr(0, eq) + "' are not valid JSON");
    }
    if (!values.is_array()) throw ValidationError("--axis values must be a JSON array");
    axes.emplace_back(spec.substr(0, eq), std::vector<nlohmann::json>(values.begin(), values.end()));
  }
  return axes;
}

inline std::string render_report(const StudyReport& r, ReportFormat format) {
  std::ostringstream s;
  emit_report(r, format, s);
  return s.str();
}

}  // namespace detail

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Exit 2 on usage errors, 3 on validation errors, 1 otherwise.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Degree-weighted estimators for respondent-driven samples, with a simulation lab"};
  app.name("rdsid");
  app.require_subcommand(1);

  std::string format = "structured";
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string input;

  const auto add_common = [&](CLI::App* sub, bool randomized) {
    sub->add_option("--out", out_path, "Write output here instead of stdout");
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"structured", "tabular"}));
    if (randomized) {
      sub->add_option("--seed", seed, "Root seed; overrides the scenario's seed");
      sub->add_option("--threads", threads, "Worker threads (results do not depend on it)")
          ->check(CLI::PositiveNumber);
    }
  };

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and report bias/SD/RMSE");
  simulate->add_option("scenario", input, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  add_common(simulate, true);

  std::vector<std::string> fspecs;
  auto* estimate = app.add_subcommand("estimate", "Point estimates from an RDS CSV file");
  estimate->add_option("data", input, "CSV with header id,degree,outcome,recruiter_id,wave")
      ->required()
      ->check(CLI::ExistingFile);
  estimate->add_option("--f", fspecs, "Sampling shape: power:<a>, constant, or table:<k=v,...>");
  add_common(estimate, false);

  auto* oracle = app.add_subcommand("oracle", "Exact identification/plim/ignorability outputs");
  oracle->add_option("scenario", input, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  add_common(oracle, true);

  std::vector<std::string> axis_specs;
  auto* grid = app.add_subcommand("grid", "Expand a scenario over axes and run every cell");
  grid->add_option("scenario", input, "Base scenario JSON file")->required()->check(CLI::ExistingFile);
  grid->add_option("--axis", axis_specs, "name=<JSON array of values>; repeatable");
  add_common(grid, true);

  std::vector<std::string> argv_storage{"rdsid"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return exit_ok;
    }
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  }

  const auto fmt = detail::parse_format(format);
  try {
    if (simulate->parsed()) {
      auto scenario = parse_scenario(input);
      if (seed) scenario.seed = *seed;
      detail::deliver(detail::render_report(run_study(scenario, threads), fmt), out_path, out);
    } else if (estimate->parsed()) {
      const auto data = ingest_rds_csv(input);
      for (const auto& w : data.warnings) err << "warning: " << w << '\n';
      std::vector<EstimateResult> results{naive_estimate(data.sample), vh_estimate(data.sample)};
      for (const auto& f : fspecs) results.push_back(generalized_estimate(data.sample, FSpec::parse(f)));
      std::ostringstream text;
      if (fmt == ReportFormat::structured) {
        nlohmann::json doc;
        doc["n"] = data.sample.size();
        doc["estimates"] = nlohmann::json::array();
        for (const auto& r : results) doc["estimates"].push_back({{"estimator", r.estimator_name}, {"value", r.value}});
        nlohmann::json counts = nlohmann::json::object();
        for (const auto& [k, c] : results.front().degree_class_counts) counts[std::to_string(k)] = c;
        doc["degree_class_counts"] = counts;
        doc["warnings"] = data.warnings;
        text << doc.dump(2) << '\n';
      } else {
        text << "estimator,value,n\n";
        for (const auto& r : results) {
          text << detail::csv_field(r.estimator_name) << ',' << format_double(r.value) << ',' << r.n << '\n';
        }
      }
      detail::deliver(text.str(), out_path, out);
    } else if (oracle->parsed()) {
      auto scenario = parse_scenario(input);
      if (seed) scenario.seed = *seed;
      detail::deliver(detail::oracle_document(scenario).dump(2) + "\n", out_path, out);
    } else if (grid->parsed()) {
      auto base = parse_scenario(input);
      if (seed) base.seed = *seed;
      const auto cells = scenario_grid(base, detail::parse_axes(axis_specs));
      if (!out_path.empty()) std::filesystem::create_directories(out_path);
      nlohmann::json all = nlohmann::json::array();
      std::ostringstream tables;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto report = run_study(cells[i], threads);
        if (!out_path.empty()) {
          char name[32];
          std::snprintf(name, sizeof(name), "cell_%03zu.%s", i, fmt == ReportFormat::structured ? "json" : "csv");
          detail::deliver(detail::render_report(report, fmt), (std::filesystem::path(out_path) / name).string(), out);
        } else if (fmt == ReportFormat::structured) {
          all.push_back(report_to_json(report));
        } else {
          tables << "# " << cells[i].name << '\n' << detail::render_report(report, fmt);
        }
      }
      if (out_path.empty()) out << (fmt == ReportFormat::structured ? all.dump(2) + "\n" : tables.str());
    }
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return exit_validation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_runtime;
  }
  return exit_ok;
}

}  // namespace rdsid
