#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "rdsid/error.hpp"
#include "rdsid/network.hpp"
#include "rdsid/numeric.hpp"
#include "rdsid/rng.hpp"
#include "rdsid/types.hpp"

namespace rdsid {

/// Independent inclusion with probability c * f(reported degree).
struct BernoulliDegree {
  FSpec f;
  double c = 1.0;
  friend bool operator==(const BernoulliDegree&, const BernoulliDegree&) = default;
};

enum class SeedRule { uniform, degree_proportional, fixed };

struct SeedPlacement {
  SeedRule rule = SeedRule::degree_proportional;
  /// Node used by SeedRule::fixed.
  std::size_t fixed_index = 0;
  friend bool operator==(const SeedPlacement&, const SeedPlacement&) = default;
};

enum class ReferralKind {
  /// Uniform over neighbor ties: the classical random-walk model.
  uniform,
  /// Neighbor chosen with probability proportional to its degree.
  degree_biased,
  /// Same-group neighbors weighted by `same_group_weight`, others by 1.
  group_biased,
};

struct Referral {
  ReferralKind kind = ReferralKind::uniform;
  double same_group_weight = 4.0;
  friend bool operator==(const Referral&, const Referral&) = default;
};

/// Single non-branching referral chain per seed.
struct RandomWalk {
  std::size_t steps = 1;
  std::size_t seeds = 1;
  SeedPlacement placement;
  bool with_replacement = true;
  Referral referral;
  /// Without replacement: reseed at an unvisited node when stuck.
  bool allow_restart = true;
  friend bool operator==(const RandomWalk&, const RandomWalk&) = default;
};

/// Branching coupon-based recruitment; every coupon given is redeemed.
struct CouponRds {
  std::size_t seeds = 1;
  std::size_t coupons = 3;
  std::optional<std::uint32_t> max_waves;
  std::size_t target_n = 1;
  bool with_replacement = false;
  SeedPlacement placement;
  friend bool operator==(const CouponRds&, const CouponRds&) = default;
};

/// Inclusion probability c * f(d_i) * exp(gamma * y_i - max_j gamma * y_j):
/// an outcome-dependent tilt that violates ignorability for gamma != 0.
struct NonIgnorableTilt {
  FSpec f;
  double c = 1.0;
  double gamma = 0.0;
  friend bool operator==(const NonIgnorableTilt&, const NonIgnorableTilt&) = default;
};

using DesignSpec = std::variant<BernoulliDegree, RandomWalk, CouponRds, NonIgnorableTilt>;

namespace detail {

inline void check_probability(double p, double c, Degree k) {
  if (!(p <= 1.0) || !(p >= 0.0)) {
    throw ValidationError("inclusion probability c*f(k) = " + format_double(p) + " for c=" +
                          format_double(c) + " at degree class " + std::to_string(k) +
                          " is not in [0, 1]");
  }
}

inline std::vector<double> bernoulli_probabilities(const Population& pop, const FSpec& f, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("scale c must be positive");
  std::vector<double> pi(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const Degree k = pop[i].reported_degree();
    pi[i] = c * f(k);
    check_probability(pi[i], c, k);
  }
  return pi;
}

inline std::vector<double> tilt_probabilities(const Population& pop, const FSpec& f, double c,
                                              double gamma) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("scale c must be positive");
  if (!std::isfinite(gamma)) throw ValidationError("tilt gamma must be finite");
  double top = gamma * pop[0].outcome();
  for (const auto& u : pop.units()) top = std::max(top, gamma * u.outcome());
  std::vector<double> pi(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const Degree k = pop[i].reported_degree();
    pi[i] = c * f(k) * std::exp(gamma * pop[i].outcome() - top);
    check_probability(pi[i], c, k);
  }
  return pi;
}

inline Sample independent_sample(const Population& pop, const std::vector<double>& pi,
                                 std::uint64_t seed) {
  Rng rng(seed);
  Sample s;
  s.with_replacement = false;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (uniform01(rng) < pi[i]) {
      s.records.emplace_back(i, pop[i].outcome(), pop[i].reported_degree());
    }
  }
  return s;
}

/// Picks a chain seed per `placement`, skipping nodes marked in `excluded`
/// when given. Returns nullopt when every node is excluded.
inline std::optional<Graph::NodeId> select_seed(Rng& rng, const Graph& graph,
                                                const SeedPlacement& placement,
                                                const std::vector<bool>* excluded) {
  const std::size_t n = graph.node_count();
  const auto allowed = [&](std::size_t i) { return excluded == nullptr || !(*excluded)[i]; };
  if (placement.rule == SeedRule::fixed) {
    if (placement.fixed_index >= n) {
      throw ValidationError("fixed seed index " + std::to_string(placement.fixed_index) +
                            " outside graph of size " + std::to_string(n));
    }
    if (allowed(placement.fixed_index)) return placement.fixed_index;
  }
  if (excluded == nullptr) {
    if (placement.rule == SeedRule::degree_proportional) {
      // uniform stub, then its owner
      std::size_t r = uniform_index(rng, graph.stub_count());
      for (std::size_t i = 0; i < n; ++i) {
        if (r < graph.degree(i)) return i;
        r -= graph.degree(i);
      }
    }
    return uniform_index(rng, n);
  }
  std::vector<Graph::NodeId> open;
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!allowed(i)) continue;
    open.push_back(i);
    total += placement.rule == SeedRule::degree_proportional ? static_cast<double>(graph.degree(i)) : 1.0;
    cumulative.push_back(total);
  }
  if (open.empty()) return std::nullopt;
  if (placement.rule != SeedRule::degree_proportional) return open[uniform_index(rng, open.size())];
  const double u = uniform01(rng) * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return open[std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), open.size() - 1)];
}

/// Draws one entry of `candidates` per the referral rule.
inline Graph::NodeId refer(Rng& rng, const Graph& graph, const Population& pop, Graph::NodeId from,
                           const std::vector<Graph::NodeId>& candidates, const Referral& referral) {
  if (referral.kind == ReferralKind::uniform) return candidates[uniform_index(rng, candidates.size())];
  std::vector<double> cumulative;
  cumulative.reserve(candidates.size());
  double total = 0.0;
  for (const auto t : candidates) {
    double w = 1.0;
    if (referral.kind == ReferralKind::degree_biased) {
      w = static_cast<double>(graph.degree(t));
    } else if (pop[t].group() && pop[from].group() && *pop[t].group() == *pop[from].group()) {
      w = referral.same_group_weight;
    }
    total += w;
    cumulative.push_back(total);
  }
  const double u = uniform01(rng) * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return candidates[std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                          candidates.size() - 1)];
}

inline void check_graph_matches(const Graph& graph, const Population& pop) {
  if (graph.node_count() != pop.size()) {
    throw ValidationError("graph has " + std::to_string(graph.node_count()) +
                          " nodes but population has " + std::to_string(pop.size()) + " units");
  }
  if (graph.node_count() == 0) throw ValidationError("graph must be nonempty");
}

inline SampleRecord record_for(const Population& pop, Graph::NodeId node,
                               std::optional<std::size_t> recruiter, std::uint32_t wave) {
  return SampleRecord(node, pop[node].outcome(), pop[node].reported_degree(), recruiter, wave);
}

}  // namespace detail

/// Ignorable degree-driven design: unit i enters independently with
/// probability c * f(reported degree). No network is consulted.
inline Sample bernoulli_degree_sample(const Population& pop, const FSpec& f, double c,
                                      std::uint64_t seed) {
  return detail::independent_sample(pop, detail::bernoulli_probabilities(pop, f, c), seed);
}

/// Outcome-tilted design. gamma = 0 is bit-identical to
/// bernoulli_degree_sample under the same seed.
inline Sample nonignorable_sample(const Population& pop, const FSpec& f, double c, double gamma,
                                  std::uint64_t seed) {
  return detail::independent_sample(pop, detail::tilt_probabilities(pop, f, c, gamma), seed);
}

/// Referral chains on `graph`. With replacement every visit is a record;
/// without, visited neighbors are ineligible and a stuck chain reseeds at an
/// unvisited node (counted in `restarts`) or, if restarts are disabled or no
/// node is left, the sample is returned short with `truncated` set.
/// Wave is the step index within the current chain.
inline Sample random_walk_sample(const Graph& graph, const Population& pop, const RandomWalk& design,
                                 std::uint64_t seed) {
  detail::check_graph_matches(graph, pop);
  if (design.steps < 1) throw ValidationError("random walk needs at least one step");
  if (design.seeds < 1 || design.seeds > design.steps) {
    throw ValidationError("random walk seed count must lie in [1, steps]");
  }
  Rng rng(seed);
  Sample s;
  s.with_replacement = design.with_replacement;
  s.records.reserve(design.steps);
  std::vector<bool> visited(graph.node_count(), false);
  const auto* exclusion = design.with_replacement ? nullptr : &visited;
  std::vector<Graph::NodeId> candidates;

  for (std::size_t chain = 0; chain < design.seeds && !s.truncated; ++chain) {
    const std::size_t length =
        design.steps / design.seeds + (chain < design.steps % design.seeds ? 1 : 0);
    auto start = detail::select_seed(rng, graph, design.placement, exclusion);
    if (!start) {
      s.truncated = true;
      break;
    }
    Graph::NodeId current = *start;
    visited[current] = true;
    s.records.push_back(detail::record_for(pop, current, std::nullopt, 0));
    std::uint32_t wave = 0;

    for (std::size_t step = 1; step < length; ++step) {
      const auto nbrs = graph.neighbors(current);
      Graph::NodeId next = 0;
      if (design.with_replacement && design.referral.kind == ReferralKind::uniform) {
        next = nbrs[uniform_index(rng, nbrs.size())];
      } else {
        candidates.clear();
        for (const auto t : nbrs) {
          if (design.with_replacement || !visited[t]) candidates.push_back(t);
        }
        if (candidates.empty()) {
          const auto restart =
              design.allow_restart ? detail::select_seed(rng, graph, design.placement, exclusion)
                                   : std::nullopt;
          if (!restart) {
            s.truncated = true;
            break;
          }
          ++s.restarts;
          current = *restart;
          visited[current] = true;
          wave = 0;
          s.records.push_back(detail::record_for(pop, current, std::nullopt, 0));
          continue;
        }
        next = detail::refer(rng, graph, pop, current, candidates, design.referral);
      }
      const std::size_t recruiter = s.records.size() - 1;
      current = next;
      visited[current] = true;
      ++wave;
      s.records.push_back(detail::record_for(pop, current, recruiter, wave));
    }
  }
  return s;
}

/// Breadth-wise coupon recruitment. Each subject, in recruitment order,
/// passes up to `coupons` coupons to distinct eligible neighbors (ties drawn
/// uniformly; already-sampled nodes are ineligible without replacement).
/// Stops at `target_n` records or when no coupon can be redeemed.
inline Sample coupon_rds_sample(const Graph& graph, const Population& pop, const CouponRds& design,
                                std::uint64_t seed) {
  detail::check_graph_matches(graph, pop);
  if (design.seeds < 1) throw ValidationError("coupon RDS needs at least one seed");
  if (design.coupons < 1) throw ValidationError("coupon RDS needs at least one coupon per subject");
  if (design.target_n < 1) throw ValidationError("coupon RDS target_n must be >= 1");
  Rng rng(seed);
  Sample s;
  s.with_replacement = design.with_replacement;
  std::vector<bool> visited(graph.node_count(), false);
  const auto* exclusion = design.with_replacement ? nullptr : &visited;
  std::deque<std::size_t> queue;
  std::vector<Graph::NodeId> node_of;

  const auto add = [&](Graph::NodeId node, std::optional<std::size_t> recruiter, std::uint32_t wave) {
    visited[node] = true;
    s.records.push_back(detail::record_for(pop, node, recruiter, wave));
    node_of.push_back(node);
    queue.push_back(s.records.size() - 1);
  };

  for (std::size_t i = 0; i < design.seeds && s.records.size() < design.target_n; ++i) {
    const auto node = detail::select_seed(rng, graph, design.placement, exclusion);
    if (!node) break;
    add(*node, std::nullopt, 0);
  }

  std::vector<Graph::NodeId> chosen;
  std::vector<Graph::NodeId> candidates;
  while (!queue.empty() && s.records.size() < design.target_n) {
    const std::size_t r = queue.front();
    queue.pop_front();
    const std::uint32_t wave = s.records[r].wave();
    if (design.max_waves && wave >= *design.max_waves) continue;
    const Graph::NodeId v = node_of[r];
    chosen.clear();
    for (std::size_t c = 0; c < design.coupons && s.records.size() < design.target_n; ++c) {
      candidates.clear();
      for (const auto t : graph.neighbors(v)) {
        if (std::find(chosen.begin(), chosen.end(), t) != chosen.end()) continue;
        if (!design.with_replacement && visited[t]) continue;
        candidates.push_back(t);
      }
      if (candidates.empty()) break;
      const auto t = candidates[uniform_index(rng, candidates.size())];
      chosen.push_back(t);
      add(t, r, wave + 1);
    }
  }
  s.truncated = s.records.size() < design.target_n;
  return s;
}

struct IdentityReport {
  friend bool operator==(const IdentityReport&, const IdentityReport&) = default;
};
/// d' = round(d * factor).
struct MultiplicativeBias {
  double factor = 1.0;
  friend bool operator==(const MultiplicativeBias&, const MultiplicativeBias&) = default;
};
/// d' = d + U{-m..m}.
struct UniformJitter {
  int m = 1;
  friend bool operator==(const UniformJitter&, const UniformJitter&) = default;
};
/// d' = nearest multiple of `base`.
struct Heaping {
  int base = 5;
  friend bool operator==(const Heaping&, const Heaping&) = default;
};

using MisreportModel = std::variant<IdentityReport, MultiplicativeBias, UniformJitter, Heaping>;

/// Perturbs reported degrees per `model`, flooring at 1. Everything else in
/// each record is kept.
inline Sample misreport_degrees(const Sample& sample, const MisreportModel& model, std::uint64_t seed) {
  if (std::holds_alternative<IdentityReport>(model)) return sample;
  Rng rng(seed);
  Sample out = sample;
  for (auto& r : out.records) {
    const Degree d = r.reported_degree();
    const Degree perturbed = std::visit(
        [&](const auto& m) -> Degree {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, MultiplicativeBias>) {
            return static_cast<Degree>(std::lround(static_cast<double>(d) * m.factor));
          } else if constexpr (std::is_same_v<M, UniformJitter>) {
            return d + std::uniform_int_distribution<int>(-m.m, m.m)(rng);
          } else if constexpr (std::is_same_v<M, Heaping>) {
            const int rem = d % m.base;
            return 2 * rem < m.base ? d - rem : d - rem + m.base;
          } else {
            return d;
          }
        },
        model);
    r = r.with_reported_degree(std::max(perturbed, 1));
  }
  return out;
}

/// Exact per-unit inclusion probabilities: c*f(d_i) for Bernoulli designs,
/// the normalized tilt for NonIgnorableTilt, and the stationary per-step visit
/// law d_i / sum_j d_j for a uniform-referral walk on a connected,
/// non-bipartite graph. Coupon RDS has no tractable exact law.
inline std::vector<double> inclusion_probabilities(const Population& pop, const DesignSpec& design,
                                                   const Graph* graph = nullptr) {
  return std::visit(
      [&](const auto& d) -> std::vector<double> {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, BernoulliDegree>) {
          return detail::bernoulli_probabilities(pop, d.f, d.c);
        } else if constexpr (std::is_same_v<D, NonIgnorableTilt>) {
          return detail::tilt_probabilities(pop, d.f, d.c, d.gamma);
        } else if constexpr (std::is_same_v<D, RandomWalk>) {
          if (graph == nullptr) throw ValidationError("random-walk inclusion law needs the graph");
          detail::check_graph_matches(*graph, pop);
          if (d.referral.kind != ReferralKind::uniform) {
            throw UnsupportedDesign("stationary law is only known for uniform referral");
          }
          if (!graph->is_connected()) {
            throw UnsupportedDesign("graph is disconnected; the walk has no unique stationary law");
          }
          if (graph->is_bipartite()) {
            throw UnsupportedDesign("graph is bipartite; the walk is periodic");
          }
          std::vector<double> pi(pop.size());
          const auto total = static_cast<double>(graph->stub_count());
          for (std::size_t i = 0; i < pop.size(); ++i) {
            pi[i] = static_cast<double>(graph->degree(i)) / total;
          }
          return pi;
        } else {
          throw UnsupportedDesign("coupon RDS has no tractable exact inclusion law; "
                                  "only Monte Carlo evidence applies");
        }
      },
      design);
}

/// Draws one sample under any design. Walk-based designs need `graph`.
inline Sample draw_sample(const Population& pop, const Graph* graph, const DesignSpec& design,
                          std::uint64_t seed) {
  return std::visit(
      [&](const auto& d) -> Sample {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, BernoulliDegree>) {
          return bernoulli_degree_sample(pop, d.f, d.c, seed);
        } else if constexpr (std::is_same_v<D, NonIgnorableTilt>) {
          return nonignorable_sample(pop, d.f, d.c, d.gamma, seed);
        } else {
          if (graph == nullptr) throw ValidationError("walk-based designs need a network");
          if constexpr (std::is_same_v<D, RandomWalk>) {
            return random_walk_sample(*graph, pop, d, seed);
          } else {
            return coupon_rds_sample(*graph, pop, d, seed);
          }
        }
      },
      design);
}

/// Share of records per population group label, for composition skew checks.
inline std::map<GroupLabel, double> sample_group_shares(const Sample& sample, const Population& pop) {
  std::map<GroupLabel, std::size_t> counts;
  std::size_t labelled = 0;
  for (const auto& r : sample.records) {
    if (!r.unit_index()) continue;
    const auto g = pop[*r.unit_index()].group();
    if (!g) continue;
    ++counts[*g];
    ++labelled;
  }
  std::map<GroupLabel, double> out;
  for (const auto& [g, c] : counts) out[g] = static_cast<double>(c) / static_cast<double>(labelled);
  return out;
}

}  // namespace rdsid
