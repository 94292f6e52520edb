#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rdsid/error.hpp"
#include "rdsid/rng.hpp"
#include "rdsid/types.hpp"

namespace rdsid {

/// Undirected multigraph over population indices. A self-loop at i lists i
/// twice in i's adjacency, so adjacency length always equals degree.
class Graph {
 public:
  using NodeId = std::size_t;
  static constexpr std::size_t no_component = std::numeric_limits<std::size_t>::max();

  explicit Graph(std::vector<std::vector<NodeId>> adjacency) : adjacency_(std::move(adjacency)) {
    validate_and_count();
    label_components();
  }

  static Graph from_edges(std::size_t node_count, std::span<const std::pair<NodeId, NodeId>> edges) {
    std::vector<std::vector<NodeId>> adj(node_count);
    for (const auto& [a, b] : edges) {
      if (a >= node_count || b >= node_count) throw ValidationError("edge endpoint out of range");
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    return Graph(std::move(adj));
  }

  [[nodiscard]] std::size_t node_count() const noexcept { return adjacency_.size(); }
  [[nodiscard]] std::span<const NodeId> neighbors(NodeId i) const { return adjacency_[i]; }
  [[nodiscard]] std::size_t degree(NodeId i) const { return adjacency_[i].size(); }
  [[nodiscard]] std::size_t edge_count() const noexcept { return stub_count_ / 2; }
  [[nodiscard]] std::size_t stub_count() const noexcept { return stub_count_; }

  [[nodiscard]] std::size_t component_count() const noexcept { return component_count_; }
  [[nodiscard]] bool is_connected() const noexcept { return component_count_ == 1; }
  [[nodiscard]] bool is_bipartite() const noexcept { return bipartite_; }
  [[nodiscard]] std::size_t component_of(NodeId i) const { return component_[i]; }
  [[nodiscard]] std::size_t self_loops() const noexcept { return self_loops_; }
  /// Parallel edges beyond the first between each pair (loops included).
  [[nodiscard]] std::size_t multi_edges() const noexcept { return multi_edges_; }
  [[nodiscard]] bool is_simple() const noexcept { return self_loops_ == 0 && multi_edges_ == 0; }

  friend bool operator==(const Graph& a, const Graph& b) { return a.adjacency_ == b.adjacency_; }

 private:
  void validate_and_count() {
    const std::size_t n = adjacency_.size();
    std::vector<std::vector<NodeId>> sorted(adjacency_);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto j : adjacency_[i]) {
        if (j >= n) throw ValidationError("adjacency references node " + std::to_string(j) +
                                          " outside graph of size " + std::to_string(n));
      }
      std::sort(sorted[i].begin(), sorted[i].end());
      stub_count_ += adjacency_[i].size();
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& row = sorted[i];
      for (std::size_t a = 0; a < row.size();) {
        std::size_t b = a;
        while (b < row.size() && row[b] == row[a]) ++b;
        const std::size_t j = row[a];
        const std::size_t mult = b - a;
        if (j == i) {
          if (mult % 2 != 0) {
            throw ValidationError("self-loop at node " + std::to_string(i) +
                                  " must appear an even number of times");
          }
          self_loops_ += mult / 2;
          multi_edges_ += mult / 2 - 1;
        } else {
          const auto& other = sorted[j];
          const auto range = std::equal_range(other.begin(), other.end(), i);
          if (static_cast<std::size_t>(range.second - range.first) != mult) {
            throw ValidationError("adjacency is not symmetric between nodes " + std::to_string(i) +
                                  " and " + std::to_string(j));
          }
          if (i < j) multi_edges_ += mult - 1;
        }
        a = b;
      }
    }
  }

  void label_components() {
    const std::size_t n = adjacency_.size();
    component_.assign(n, no_component);
    std::vector<std::uint8_t> colour(n, 0);
    bipartite_ = true;
    std::vector<NodeId> stack;
    for (NodeId start = 0; start < n; ++start) {
      if (component_[start] != no_component) continue;
      component_[start] = component_count_;
      stack.push_back(start);
      while (!stack.empty()) {
        const NodeId v = stack.back();
        stack.pop_back();
        for (const auto w : adjacency_[v]) {
          if (component_[w] == no_component) {
            component_[w] = component_count_;
            colour[w] = colour[v] ^ 1U;
            stack.push_back(w);
          } else if (colour[w] == colour[v]) {
            bipartite_ = false;
          }
        }
      }
      ++component_count_;
    }
  }

  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::size_t> component_;
  std::size_t stub_count_ = 0;
  std::size_t component_count_ = 0;
  std::size_t self_loops_ = 0;
  std::size_t multi_edges_ = 0;
  bool bipartite_ = true;
};

/// Sparse cut between group-defined communities.
struct Bottleneck {
  /// Cross-community stubs are capped at this fraction of all stubs.
  double cross_fraction = 0.01;
  friend bool operator==(const Bottleneck&, const Bottleneck&) = default;
};

struct NetworkOptions {
  /// Probability a stub prefers a same-group partner; uniform otherwise.
  double homophily = 0.0;
  std::optional<Bottleneck> bottleneck;
  /// Reject self-loops and multi-edges, retrying the whole matching.
  bool simple = false;
  std::size_t max_attempts = 1000;
  friend bool operator==(const NetworkOptions&, const NetworkOptions&) = default;
};

namespace detail {

/// Unordered set of stub ids with O(1) uniform draw and removal.
class StubPool {
 public:
  explicit StubPool(std::size_t universe) : pos_(universe, absent) {}

  void insert(std::size_t stub) {
    pos_[stub] = items_.size();
    items_.push_back(stub);
  }
  void erase(std::size_t stub) {
    const std::size_t p = pos_[stub];
    const std::size_t last = items_.back();
    items_[p] = last;
    pos_[last] = p;
    items_.pop_back();
    pos_[stub] = absent;
  }
  [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
  [[nodiscard]] bool empty() const noexcept { return items_.empty(); }
  [[nodiscard]] std::size_t at(std::size_t i) const { return items_[i]; }
  [[nodiscard]] std::size_t draw(Rng& rng) const { return items_[uniform_index(rng, items_.size())]; }

 private:
  static constexpr std::size_t absent = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> items_;
  std::vector<std::size_t> pos_;
};

}  // namespace detail

/// Configuration-model stub matching over the population's true degrees.
///
/// Each unmatched stub, taken in random order, picks a partner from the
/// same group with probability `homophily` (falling back to any stub when its
/// group has none left) and uniformly otherwise. With a bottleneck, once the
/// cross-group cap is reached every stub matches within its group; a single
/// parity-forced cross edge may exceed the cap. Multigraph mode keeps loops
/// and parallel edges. Simple mode retries, and throws std::runtime_error
/// after `max_attempts` failed matchings.
inline Graph build_network(const Population& pop, const NetworkOptions& options, std::uint64_t seed) {
  if (pop.true_degree_sum() % 2 != 0) {
    throw ValidationError("sum of true degrees is odd; no network realizes this degree sequence");
  }
  if (!(options.homophily >= 0.0 && options.homophily <= 1.0)) {
    throw ValidationError("homophily must lie in [0, 1]");
  }
  if (options.bottleneck && !(options.bottleneck->cross_fraction >= 0.0 &&
                              options.bottleneck->cross_fraction <= 1.0)) {
    throw ValidationError("bottleneck cross_fraction must lie in [0, 1]");
  }
  const bool use_groups = options.homophily > 0.0 || options.bottleneck.has_value();
  GroupLabel group_count = 1;
  if (use_groups) {
    for (std::size_t i = 0; i < pop.size(); ++i) {
      const auto g = pop[i].group();
      if (!g || *g < 0) {
        throw ValidationError("homophily or bottleneck requested but unit " + std::to_string(i) +
                              " has no group label");
      }
      group_count = std::max(group_count, *g + 1);
    }
  }

  std::vector<Graph::NodeId> stub_node;
  stub_node.reserve(pop.true_degree_sum());
  for (std::size_t i = 0; i < pop.size(); ++i) {
    for (Degree d = 0; d < pop[i].true_degree(); ++d) stub_node.push_back(i);
  }
  const std::size_t stubs = stub_node.size();
  const auto group_of = [&](std::size_t stub) -> std::size_t {
    return use_groups ? static_cast<std::size_t>(*pop[stub_node[stub]].group()) : 0;
  };
  const std::size_t cross_cap =
      options.bottleneck
          ? static_cast<std::size_t>(std::floor(options.bottleneck->cross_fraction *
                                                static_cast<double>(stubs) / 2.0))
          : std::numeric_limits<std::size_t>::max();

  Rng rng(seed);
  std::vector<std::vector<Graph::NodeId>> adj(pop.size());

  if (!use_groups && !options.simple) {
    std::vector<std::size_t> order(stubs);
    for (std::size_t s = 0; s < stubs; ++s) order[s] = s;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s + 1 < stubs; s += 2) {
      const auto a = stub_node[order[s]];
      const auto b = stub_node[order[s + 1]];
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    return Graph(std::move(adj));
  }

  const auto adjacent = [&](Graph::NodeId a, Graph::NodeId b) {
    return std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end();
  };

  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(options.max_attempts, 1); ++attempt) {
    for (auto& row : adj) row.clear();
    detail::StubPool all(stubs);
    std::vector<detail::StubPool> by_group(static_cast<std::size_t>(group_count),
                                           detail::StubPool(stubs));
    for (std::size_t s = 0; s < stubs; ++s) {
      all.insert(s);
      by_group[group_of(s)].insert(s);
    }
    const auto remove = [&](std::size_t s) {
      all.erase(s);
      by_group[group_of(s)].erase(s);
    };
    const auto acceptable = [&](std::size_t s, std::size_t t) {
      if (!options.simple) return true;
      const auto a = stub_node[s];
      const auto b = stub_node[t];
      return a != b && !adjacent(a, b);
    };
    const auto pick_from = [&](const detail::StubPool& pool, std::size_t s) -> std::optional<std::size_t> {
      if (pool.empty()) return std::nullopt;
      constexpr int random_tries = 32;
      for (int i = 0; i < random_tries; ++i) {
        const auto t = pool.draw(rng);
        if (acceptable(s, t)) return t;
      }
      std::vector<std::size_t> ok;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (acceptable(s, pool.at(i))) ok.push_back(pool.at(i));
      }
      if (ok.empty()) return std::nullopt;
      return ok[uniform_index(rng, ok.size())];
    };

    std::size_t cross_edges = 0;
    bool failed = false;
    while (!all.empty()) {
      const std::size_t s = all.draw(rng);
      remove(s);
      const auto& same = by_group[group_of(s)];
      const bool cap_reached = cross_edges >= cross_cap;
      const bool prefer_same =
          cap_reached || (options.homophily > 0.0 && uniform01(rng) < options.homophily);
      std::optional<std::size_t> t;
      if (prefer_same) t = pick_from(same, s);
      if (!t) t = pick_from(all, s);
      if (!t) {
        failed = true;
        break;
      }
      remove(*t);
      if (group_of(s) != group_of(*t)) ++cross_edges;
      const auto a = stub_node[s];
      const auto b = stub_node[*t];
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    if (!failed) return Graph(std::move(adj));
  }
  throw std::runtime_error("stub matching failed after " + std::to_string(options.max_attempts) +
                           " attempts; the degree sequence may not have a simple realization "
                           "(change the degree sequence or use multigraph mode)");
}

struct GroupMixing {
  std::size_t cross_group_edges = 0;
  std::size_t within_group_edges = 0;
  /// Newman's categorical assortativity; NaN when undefined.
  double assortativity = std::numeric_limits<double>::quiet_NaN();
};

/// Measures realized group mixing. Units without labels are skipped.
inline GroupMixing measure_mixing(const Graph& graph, const Population& pop) {
  GroupMixing out;
  std::size_t groups = 0;
  for (const auto& u : pop.units()) {
    if (u.group()) groups = std::max(groups, static_cast<std::size_t>(*u.group()) + 1);
  }
  if (groups == 0) return out;
  // mixing[a][b] counts edge ends, so every edge (loops included) is seen twice
  std::vector<std::vector<double>> mixing(groups, std::vector<double>(groups, 0.0));
  double total = 0.0;
  std::size_t within = 0;
  std::size_t cross = 0;
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    const auto gi = pop[i].group();
    if (!gi) continue;
    for (const auto j : graph.neighbors(i)) {
      const auto gj = pop[j].group();
      if (!gj) continue;
      mixing[static_cast<std::size_t>(*gi)][static_cast<std::size_t>(*gj)] += 1.0;
      total += 1.0;
      (*gi == *gj ? within : cross) += 1;
    }
  }
  out.within_group_edges = within / 2;
  out.cross_group_edges = cross / 2;
  if (total <= 0.0) return out;
  double trace = 0.0;
  double sum_sq = 0.0;
  for (std::size_t a = 0; a < groups; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < groups; ++b) row += mixing[a][b] / total;
    trace += mixing[a][a] / total;
    sum_sq += row * row;
  }
  if (sum_sq < 1.0) out.assortativity = (trace - sum_sq) / (1.0 - sum_sq);
  return out;
}

}  // namespace rdsid
