#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "rdsid/error.hpp"
#include "rdsid/numeric.hpp"
#include "rdsid/rng.hpp"
#include "rdsid/types.hpp"

namespace rdsid {

struct UniformDegrees {
  Degree max_degree = 1;
  friend bool operator==(const UniformDegrees&, const UniformDegrees&) = default;
};

/// Pr[D = k] proportional to k^(-exponent) on {1..K}.
struct TruncatedPowerLaw {
  double exponent = 2.5;
  Degree max_degree = 50;
  friend bool operator==(const TruncatedPowerLaw&, const TruncatedPowerLaw&) = default;
};

/// probabilities[k - 1] = Pr[D = k].
struct DegreeTable {
  std::vector<double> probabilities;
  friend bool operator==(const DegreeTable&, const DegreeTable&) = default;
};

/// Marginal degree law on {1..K}.
class DegreeDistribution {
 public:
  using Kind = std::variant<UniformDegrees, TruncatedPowerLaw, DegreeTable>;

  DegreeDistribution(Kind kind) : kind_(std::move(kind)) {  // NOLINT(google-explicit-constructor)
    probabilities_ = compute_probabilities();
  }

  static DegreeDistribution uniform(Degree max_degree) { return {UniformDegrees{max_degree}}; }
  static DegreeDistribution power_law(double exponent, Degree max_degree) {
    return {TruncatedPowerLaw{exponent, max_degree}};
  }
  static DegreeDistribution table(std::vector<double> probabilities) {
    return {DegreeTable{std::move(probabilities)}};
  }

  [[nodiscard]] const Kind& kind() const noexcept { return kind_; }
  [[nodiscard]] Degree max_degree() const noexcept {
    return static_cast<Degree>(probabilities_.size());
  }
  /// Element k-1 is Pr[D = k].
  [[nodiscard]] const std::vector<double>& probabilities() const noexcept {
    return probabilities_;
  }

  /// E[g(D)] under this law.
  template <class F>
  [[nodiscard]] double expectation(F&& g) const {
    CompensatedSum s;
    for (std::size_t i = 0; i < probabilities_.size(); ++i) {
      if (probabilities_[i] > 0.0) s += probabilities_[i] * g(static_cast<Degree>(i + 1));
    }
    return s.value();
  }

  friend bool operator==(const DegreeDistribution& a, const DegreeDistribution& b) {
    return a.kind_ == b.kind_;
  }

 private:
  std::vector<double> compute_probabilities() const {
    return std::visit(
        [](const auto& k) -> std::vector<double> {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, UniformDegrees>) {
            if (k.max_degree < 1) throw ValidationError("uniform degree law needs K >= 1");
            return std::vector<double>(static_cast<std::size_t>(k.max_degree),
                                       1.0 / static_cast<double>(k.max_degree));
          } else if constexpr (std::is_same_v<K, TruncatedPowerLaw>) {
            if (k.max_degree < 1) throw ValidationError("power-law degree law needs K >= 1");
            if (!std::isfinite(k.exponent)) {
              throw ValidationError("power-law exponent must be finite");
            }
            std::vector<double> p(static_cast<std::size_t>(k.max_degree));
            CompensatedSum z;
            for (std::size_t i = 0; i < p.size(); ++i) {
              p[i] = std::pow(static_cast<double>(i + 1), -k.exponent);
              z += p[i];
            }
            const double norm = z.value();
            for (auto& x : p) x /= norm;
            return p;
          } else {
            if (k.probabilities.empty()) {
              throw ValidationError("degree table must cover at least degree 1");
            }
            CompensatedSum z;
            for (const double x : k.probabilities) {
              if (!(x >= 0.0) || !std::isfinite(x)) {
                throw ValidationError("degree table probabilities must be nonnegative");
              }
              z += x;
            }
            if (std::abs(z.value() - 1.0) > 1e-9) {
              throw ValidationError("degree table probabilities must sum to 1 (got " +
                                    format_double(z.value()) + ")");
            }
            return k.probabilities;
          }
        },
        kind_);
  }

  Kind kind_;
  std::vector<double> probabilities_;
};

/// E[Y | D = k] = 1 / (1 + exp(-(intercept + slope * k))).
struct LogisticInDegree {
  double intercept = 0.0;
  double slope = 0.0;
  friend bool operator==(const LogisticInDegree&, const LogisticInDegree&) = default;
};

/// E[Y | D = k] looked up per class; every class in {1..K} must be present.
struct TableMean {
  std::map<Degree, double> means;
  friend bool operator==(const TableMean&, const TableMean&) = default;
};

using BaseOutcome = std::variant<LogisticInDegree, TableMean>;

/// Base model plus an additive shift per group label.
struct GroupShift {
  BaseOutcome base;
  std::vector<double> shifts;
  friend bool operator==(const GroupShift&, const GroupShift&) = default;
};

struct BernoulliNoise {
  friend bool operator==(const BernoulliNoise&, const BernoulliNoise&) = default;
};

/// y = clamp(mean + sd * z, bounds), z standard normal. sd = 0 gives y = mean.
struct GaussianNoise {
  double sd = 0.0;
  friend bool operator==(const GaussianNoise&, const GaussianNoise&) = default;
};

using OutcomeNoise = std::variant<BernoulliNoise, GaussianNoise>;

class OutcomeModel {
 public:
  using Kind = std::variant<LogisticInDegree, TableMean, GroupShift>;

  OutcomeModel(Kind kind, OutcomeNoise noise = BernoulliNoise{}, OutcomeBounds bounds = {})
      : kind_(std::move(kind)), noise_(noise), bounds_(bounds) {
    if (!(bounds_.lo <= bounds_.hi)) throw ValidationError("outcome bounds must satisfy lo <= hi");
    if (std::holds_alternative<BernoulliNoise>(noise_) && !(bounds_.lo <= 0.0 && bounds_.hi >= 1.0)) {
      throw ValidationError("Bernoulli outcomes need bounds containing [0, 1]");
    }
    if (const auto* g = std::get_if<GaussianNoise>(&noise_); g && !(g->sd >= 0.0)) {
      throw ValidationError("Gaussian noise sd must be >= 0");
    }
  }

  [[nodiscard]] const Kind& kind() const noexcept { return kind_; }
  [[nodiscard]] const OutcomeNoise& noise() const noexcept { return noise_; }
  [[nodiscard]] OutcomeBounds bounds() const noexcept { return bounds_; }

  /// Implied conditional mean of Y given degree and (optional) group.
  [[nodiscard]] double mean(Degree k, std::optional<GroupLabel> group = std::nullopt) const {
    return std::visit(
        [&](const auto& m) -> double {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, GroupShift>) {
            double shift = 0.0;
            if (group) {
              if (*group < 0 || static_cast<std::size_t>(*group) >= m.shifts.size()) {
                throw ValidationError("group " + std::to_string(*group) +
                                      " has no outcome shift");
              }
              shift = m.shifts[static_cast<std::size_t>(*group)];
            }
            return base_mean(m.base, k) + shift;
          } else {
            return base_mean(BaseOutcome{m}, k);
          }
        },
        kind_);
  }

  /// Checks every implied mean over {1..K} x groups lies within bounds.
  void validate(Degree max_degree, std::size_t group_count) const {
    const auto check = [&](Degree k, std::optional<GroupLabel> g) {
      const double m = mean(k, g);
      if (!bounds_.contains(m)) {
        throw ValidationError("outcome mean " + format_double(m) + " at degree " +
                              std::to_string(k) + " lies outside outcome bounds");
      }
    };
    for (Degree k = 1; k <= max_degree; ++k) {
      if (group_count == 0) {
        check(k, std::nullopt);
      } else {
        for (std::size_t g = 0; g < group_count; ++g) check(k, static_cast<GroupLabel>(g));
      }
    }
  }

  [[nodiscard]] double draw(Rng& rng, Degree k, std::optional<GroupLabel> group) const {
    const double m = mean(k, group);
    if (std::holds_alternative<BernoulliNoise>(noise_)) {
      return uniform01(rng) < m ? 1.0 : 0.0;
    }
    const double sd = std::get<GaussianNoise>(noise_).sd;
    if (sd == 0.0) return m;
    const double y = m + sd * std::normal_distribution<double>(0.0, 1.0)(rng);
    return std::clamp(y, bounds_.lo, bounds_.hi);
  }

  friend bool operator==(const OutcomeModel&, const OutcomeModel&) = default;

 private:
  static double base_mean(const BaseOutcome& base, Degree k) {
    return std::visit(
        [k](const auto& b) -> double {
          using B = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<B, LogisticInDegree>) {
            return 1.0 / (1.0 + std::exp(-(b.intercept + b.slope * static_cast<double>(k))));
          } else {
            const auto it = b.means.find(k);
            if (it == b.means.end()) {
              throw ValidationError("outcome mean table has no entry for degree " +
                                    std::to_string(k));
            }
            return it->second;
          }
        },
        base);
  }

  Kind kind_;
  OutcomeNoise noise_;
  OutcomeBounds bounds_;
};

struct GenerateOptions {
  /// Redraw the final unit until the true-degree sum is even, so that a
  /// network can be realized over the population.
  bool even_degree_sum = false;
};

/// Draws `size` i.i.d. units: degree from `degrees`, group from
/// `group_proportions` (if any), outcome from `outcome` given both.
/// reported_degree equals true_degree. Deterministic in `seed`.
inline Population generate_population(std::size_t size, const DegreeDistribution& degrees,
                                      const OutcomeModel& outcome,
                                      const std::optional<std::vector<double>>& group_proportions,
                                      std::uint64_t seed, GenerateOptions options = {}) {
  if (size == 0) throw ValidationError("population size must be >= 1");
  const std::size_t group_count = group_proportions ? group_proportions->size() : 0;
  if (group_proportions) {
    if (group_proportions->empty()) throw ValidationError("group proportions must be nonempty");
    for (const double p : *group_proportions) {
      if (!(p >= 0.0)) throw ValidationError("group proportions must be nonnegative");
    }
  }
  const Degree max_degree = degrees.max_degree();
  outcome.validate(max_degree, group_count);

  std::vector<std::string> warnings;
  if (static_cast<std::size_t>(max_degree) >= size) {
    warnings.push_back("K=" + std::to_string(max_degree) + " >= population size " +
                       std::to_string(size) + "; a simple-graph realization may be infeasible");
  }

  Rng rng(seed);
  const auto& p = degrees.probabilities();
  std::discrete_distribution<int> degree_dist(p.begin(), p.end());
  std::optional<std::discrete_distribution<int>> group_dist;
  if (group_proportions) group_dist.emplace(group_proportions->begin(), group_proportions->end());

  const auto draw_unit = [&]() {
    const Degree d = degree_dist(rng) + 1;
    std::optional<GroupLabel> g;
    if (group_dist) g = (*group_dist)(rng);
    const double y = outcome.draw(rng, d, g);
    return Unit(y, d, d, g);
  };

  std::vector<Unit> units;
  units.reserve(size);
  std::uint64_t degree_sum = 0;
  for (std::size_t i = 0; i < size; ++i) {
    units.push_back(draw_unit());
    degree_sum += static_cast<std::uint64_t>(units.back().true_degree());
  }

  if (options.even_degree_sum && degree_sum % 2 != 0) {
    bool has_odd = false;
    bool has_even = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] > 0.0) ((i + 1) % 2 == 0 ? has_even : has_odd) = true;
    }
    if (!(has_odd && has_even)) {
      throw ValidationError("degree law has single-parity support; an even degree sum is "
                            "impossible for this population size");
    }
    const auto last_degree = static_cast<std::uint64_t>(units.back().true_degree());
    for (;;) {
      Unit candidate = draw_unit();
      if ((static_cast<std::uint64_t>(candidate.true_degree()) + last_degree) % 2 != 0) {
        units.back() = candidate;
        break;
      }
    }
  }

  return Population(std::move(units), max_degree, outcome.bounds(), std::move(warnings));
}

/// The estimand: arithmetic mean of outcomes over the whole population.
inline double true_mean(const Population& pop) {
  CompensatedSum s;
  for (const auto& u : pop.units()) s += u.outcome();
  return s.value() / static_cast<double>(pop.size());
}

struct ClassMean {
  double mean = 0.0;
  std::size_t count = 0;
  friend bool operator==(const ClassMean&, const ClassMean&) = default;
};

/// Exact E[Y | D = k] over the population, by reported degree. Classes with
/// no units are omitted.
inline std::map<Degree, ClassMean> conditional_means(const Population& pop) {
  std::map<Degree, CompensatedSum> sums;
  std::map<Degree, std::size_t> counts;
  for (const auto& u : pop.units()) {
    sums[u.reported_degree()] += u.outcome();
    ++counts[u.reported_degree()];
  }
  std::map<Degree, ClassMean> out;
  for (const auto& [k, s] : sums) {
    const auto n = counts[k];
    out.emplace(k, ClassMean{s.value() / static_cast<double>(n), n});
  }
  return out;
}

/// Pearson correlation between outcome and reported degree. Zero when either
/// is constant.
inline double outcome_degree_correlation(const Population& pop) {
  const double n = static_cast<double>(pop.size());
  CompensatedSum sy, sd;
  for (const auto& u : pop.units()) {
    sy += u.outcome();
    sd += u.reported_degree();
  }
  const double my = sy.value() / n;
  const double md = sd.value() / n;
  CompensatedSum cov, vy, vd;
  for (const auto& u : pop.units()) {
    const double ey = u.outcome() - my;
    const double ed = u.reported_degree() - md;
    cov += ey * ed;
    vy += ey * ey;
    vd += ed * ed;
  }
  if (vy.value() <= 0.0 || vd.value() <= 0.0) return 0.0;
  return cov.value() / std::sqrt(vy.value() * vd.value());
}

/// Share of units per group label; unlabelled units are ignored.
inline std::map<GroupLabel, double> group_shares(const Population& pop) {
  std::map<GroupLabel, std::size_t> counts;
  std::size_t labelled = 0;
  for (const auto& u : pop.units()) {
    if (u.group()) {
      ++counts[*u.group()];
      ++labelled;
    }
  }
  std::map<GroupLabel, double> out;
  for (const auto& [g, c] : counts) out[g] = static_cast<double>(c) / static_cast<double>(labelled);
  return out;
}

}  // namespace rdsid
