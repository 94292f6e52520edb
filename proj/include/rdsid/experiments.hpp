#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdsid/error.hpp"
#include "rdsid/estimators.hpp"
#include "rdsid/network.hpp"
#include "rdsid/numeric.hpp"
#include "rdsid/population.hpp"
#include "rdsid/rng.hpp"
#include "rdsid/sampling.hpp"
#include "rdsid/scenario.hpp"

namespace rdsid {

/// A realized population and, when the scenario asks for one, its network.
struct World {
  Population population;
  std::optional<Graph> graph;
};

inline World build_world(const Scenario& s, std::uint64_t population_seed, std::uint64_t network_seed) {
  GenerateOptions gen;
  gen.even_degree_sum = s.network.has_value();
  auto pop = generate_population(s.population.size, s.population.degrees, s.population.outcome,
                                 s.population.groups, population_seed, gen);
  std::optional<Graph> graph;
  if (s.network) graph = build_network(pop, *s.network, network_seed);
  return {std::move(pop), std::move(graph)};
}

/// The population used by every replicate in fixed mode.
inline World fixed_world(const Scenario& s) {
  return build_world(s, derive_seed(s.seed, {stream_id(Stream::population)}),
                     derive_seed(s.seed, {stream_id(Stream::network)}));
}

struct GraphSummary {
  std::size_t components = 0;
  bool connected = false;
  bool bipartite = false;
  std::size_t self_loops = 0;
  std::size_t multi_edges = 0;
};

struct ReplicateResult {
  std::size_t size = 0;
  std::size_t replicate = 0;
  double truth = 0.0;
  std::size_t n_realized = 0;
  bool truncated = false;
  std::size_t restarts = 0;
  /// Per configured estimator; empty when the drawn sample was empty.
  std::vector<std::optional<double>> estimates;
  /// Per configured estimator; empty when the design has no exact law here.
  std::vector<std::optional<double>> plims;
  std::optional<GraphSummary> network;
};

inline double apply_estimator(const EstimatorSpec& e, const Sample& sample) {
  switch (e.kind()) {
    case EstimatorSpec::Kind::naive: return naive_estimate(sample).value;
    case EstimatorSpec::Kind::vh: return vh_estimate(sample).value;
    case EstimatorSpec::Kind::generalized: break;
  }
  return generalized_estimate(sample, e.assumed_shape()).value;
}

/// One replicate on a given world. Stream seeds derive from
/// (scenario seed, size, replicate) only.
inline ReplicateResult run_replicate(const Scenario& s, std::size_t size, std::size_t replicate,
                                     const World& world) {
  ReplicateResult r;
  r.size = size;
  r.replicate = replicate;
  r.truth = true_mean(world.population);
  const DesignSpec design = design_for_size(s, size);
  const Graph* graph = world.graph ? &*world.graph : nullptr;

  Sample sample = draw_sample(world.population, graph, design,
                              derive_seed(s.seed, {size, replicate, stream_id(Stream::sample)}));
  if (s.misreport) {
    sample = misreport_degrees(sample, *s.misreport,
                               derive_seed(s.seed, {size, replicate, stream_id(Stream::misreport)}));
  }
  r.n_realized = sample.size();
  r.truncated = sample.truncated;
  r.restarts = sample.restarts;

  r.estimates.resize(s.estimators.size());
  if (!sample.empty()) {
    for (std::size_t e = 0; e < s.estimators.size(); ++e) {
      r.estimates[e] = apply_estimator(s.estimators[e], sample);
    }
  }

  r.plims.resize(s.estimators.size());
  if (!s.misreport) {
    try {
      for (std::size_t e = 0; e < s.estimators.size(); ++e) {
        r.plims[e] = plim_oracle(world.population, design, s.estimators[e].assumed_shape(), graph);
      }
    } catch (const UnsupportedDesign&) {
      std::fill(r.plims.begin(), r.plims.end(), std::nullopt);
    }
  }

  if (graph != nullptr) {
    r.network = GraphSummary{graph->component_count(), graph->is_connected(), graph->is_bipartite(),
                             graph->self_loops(), graph->multi_edges()};
  }
  return r;
}

/// Builds the replicate's world per the scenario mode, then runs it.
inline ReplicateResult run_replicate(const Scenario& s, std::size_t size, std::size_t replicate) {
  if (s.mode == PopulationMode::fixed) return run_replicate(s, size, replicate, fixed_world(s));
  const World world =
      build_world(s, derive_seed(s.seed, {size, replicate, stream_id(Stream::population)}),
                  derive_seed(s.seed, {size, replicate, stream_id(Stream::network)}));
  return run_replicate(s, size, replicate, world);
}

/// Monte Carlo summary for one (estimator, nominal size) cell. Errors are
/// estimate - truth per replicate; sd uses divisor R so rmse^2 = bias^2 + sd^2.
struct CellReport {
  std::string estimator;
  std::size_t n_nominal = 0;
  std::size_t replicates_used = 0;
  double n_realized_mean = 0.0;
  double mean_estimate = 0.0;
  double mean_truth = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  double mc_se = 0.0;
  /// Mean probability limit over replicates, when every replicate had one.
  std::optional<double> plim;
  friend bool operator==(const CellReport&, const CellReport&) = default;
};

struct NetworkReport {
  std::size_t realizations = 0;
  std::size_t connected = 0;
  std::size_t bipartite = 0;
  std::size_t min_components = 0;
  std::size_t max_components = 0;
  std::size_t self_loops = 0;
  std::size_t multi_edges = 0;
  friend bool operator==(const NetworkReport&, const NetworkReport&) = default;
};

struct StudyReport {
  Scenario scenario;
  /// Mean of the per-replicate truth over every replicate.
  double truth = 0.0;
  std::vector<CellReport> cells;
  std::size_t truncated_replicates = 0;
  std::size_t total_restarts = 0;
  std::size_t empty_samples = 0;
  std::optional<NetworkReport> network;
  friend bool operator==(const StudyReport&, const StudyReport&) = default;
};

namespace detail {

inline StudyReport aggregate(const Scenario& s, const std::vector<ReplicateResult>& results) {
  StudyReport report;
  report.scenario = s;
  CompensatedSum truth_sum;
  for (const auto& r : results) {
    truth_sum += r.truth;
    report.truncated_replicates += r.truncated ? 1 : 0;
    report.total_restarts += r.restarts;
    report.empty_samples += r.estimates.empty() || !r.estimates.front() ? 1 : 0;
    if (r.network) {
      if (!report.network) {
        report.network = NetworkReport{};
        report.network->min_components = r.network->components;
      }
      auto& n = *report.network;
      ++n.realizations;
      n.connected += r.network->connected ? 1 : 0;
      n.bipartite += r.network->bipartite ? 1 : 0;
      n.min_components = std::min(n.min_components, r.network->components);
      n.max_components = std::max(n.max_components, r.network->components);
      n.self_loops += r.network->self_loops;
      n.multi_edges += r.network->multi_edges;
    }
  }
  report.truth = truth_sum.value() / static_cast<double>(results.size());

  const std::size_t reps = s.replicates;
  for (std::size_t e = 0; e < s.estimators.size(); ++e) {
    for (std::size_t si = 0; si < s.sample_sizes.size(); ++si) {
      CellReport cell;
      cell.estimator = s.estimators[e].name();
      cell.n_nominal = s.sample_sizes[si];
      CompensatedSum n_sum, est_sum, truth_cell, err_sum, plim_sum;
      bool all_plims = true;
      std::vector<double> errors;
      for (std::size_t r = 0; r < reps; ++r) {
        const auto& res = results[si * reps + r];
        n_sum += static_cast<double>(res.n_realized);
        if (res.plims[e]) {
          plim_sum += *res.plims[e];
        } else {
          all_plims = false;
        }
        if (!res.estimates[e]) continue;
        est_sum += *res.estimates[e];
        truth_cell += res.truth;
        errors.push_back(*res.estimates[e] - res.truth);
        err_sum += errors.back();
      }
      cell.n_realized_mean = n_sum.value() / static_cast<double>(reps);
      if (all_plims) cell.plim = plim_sum.value() / static_cast<double>(reps);
      cell.replicates_used = errors.size();
      if (!errors.empty()) {
        const auto used = static_cast<double>(errors.size());
        cell.mean_estimate = est_sum.value() / used;
        cell.mean_truth = truth_cell.value() / used;
        cell.bias = err_sum.value() / used;
        CompensatedSum centered, squared;
        for (const double x : errors) {
          centered += (x - cell.bias) * (x - cell.bias);
          squared += x * x;
        }
        cell.sd = std::sqrt(centered.value() / used);
        cell.rmse = std::sqrt(squared.value() / used);
        cell.mc_se = cell.sd / std::sqrt(used);
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace detail

/// Runs every (size, replicate) pair, on up to `threads` workers, and
/// aggregates in (size, replicate) order. Results do not depend on `threads`.
inline StudyReport run_study(const Scenario& s, std::size_t threads = 1) {
  validate(s);
  const std::size_t total = s.sample_sizes.size() * s.replicates;
  std::optional<World> fixed;
  if (s.mode == PopulationMode::fixed) fixed = fixed_world(s);

  std::vector<ReplicateResult> results(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto work = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const std::size_t size = s.sample_sizes[i / s.replicates];
      const std::size_t rep = i % s.replicates;
      try {
        results[i] = fixed ? run_replicate(s, size, rep, *fixed) : run_replicate(s, size, rep);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(total, 1));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return detail::aggregate(s, results);
}

/// Axis names accepted by scenario_grid and the JSON location each sets.
inline const std::map<std::string, nlohmann::json::json_pointer>& grid_axes() {
  using ptr = nlohmann::json::json_pointer;
  static const std::map<std::string, ptr> axes{
      {"replicates", ptr("/replicates")},
      {"sample_sizes", ptr("/sample_sizes")},
      {"mode", ptr("/mode")},
      {"population.size", ptr("/population/size")},
      {"population.degrees", ptr("/population/degrees")},
      {"population.outcome", ptr("/population/outcome")},
      {"population.groups", ptr("/population/groups")},
      {"network", ptr("/network")},
      {"network.homophily", ptr("/network/homophily")},
      {"network.cross_fraction", ptr("/network/bottleneck/cross_fraction")},
      {"network.simple", ptr("/network/simple")},
      {"design", ptr("/design")},
      {"design.f", ptr("/design/f")},
      {"design.gamma", ptr("/design/gamma")},
      {"design.seeds", ptr("/design/seeds")},
      {"design.seed_rule", ptr("/design/seed_rule")},
      {"design.coupons", ptr("/design/coupons")},
      {"design.max_waves", ptr("/design/max_waves")},
      {"design.with_replacement", ptr("/design/with_replacement")},
      {"design.referral", ptr("/design/referral")},
      {"misreport", ptr("/misreport")},
      {"estimators", ptr("/estimators")},
  };
  return axes;
}

using GridAxis = std::pair<std::string, std::vector<nlohmann::json>>;

/// Cartesian expansion of `base` over the axes, first axis varying slowest.
/// Cell i gets seed derive_seed(base.seed, {grid, i}) and a name listing its
/// axis values. Every cell is re-validated.
inline std::vector<Scenario> scenario_grid(const Scenario& base, const std::vector<GridAxis>& axes) {
  for (const auto& [name, values] : axes) {
    if (!grid_axes().contains(name)) throw ValidationError("unknown grid axis '" + name + "'");
    if (values.empty()) throw ValidationError("grid axis '" + name + "' has no values");
  }
  std::size_t cells = 1;
  for (const auto& a : axes) cells *= a.second.size();
  if (axes.empty()) return {base};

  const auto base_json = scenario_to_json(base);
  std::vector<Scenario> out;
  out.reserve(cells);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    auto j = base_json;
    std::string label;
    std::size_t rest = cell;
    std::vector<std::size_t> index(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      index[a] = rest % axes[a].second.size();
      rest /= axes[a].second.size();
    }
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto& value = axes[a].second[index[a]];
      j[grid_axes().at(axes[a].first)] = value;
      if (!label.empty()) label += ';';
      label += axes[a].first + "=" + value.dump();
    }
    j["name"] = base.name + "[" + label + "]";
    j["seed"] = derive_seed(base.seed, {stream_id(Stream::grid), cell});
    out.push_back(scenario_from_json(j));
  }
  return out;
}

}  // namespace rdsid
