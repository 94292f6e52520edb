#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "rdsid/error.hpp"
#include "rdsid/network.hpp"
#include "rdsid/numeric.hpp"
#include "rdsid/population.hpp"
#include "rdsid/sampling.hpp"
#include "rdsid/types.hpp"

namespace rdsid {

namespace detail {

inline void require_nonempty(const Sample& sample, const char* estimator) {
  if (sample.empty()) throw ValidationError(std::string(estimator) + " needs a nonempty sample");
}

inline std::map<Degree, std::size_t> class_counts(const Sample& sample) {
  std::map<Degree, std::size_t> counts;
  for (const auto& r : sample.records) ++counts[r.reported_degree()];
  return counts;
}

/// A ratio of positively weighted outcomes lies in [min y, max y]; rounding
/// can push it a few ulps outside, so pin it back.
inline double clamp_to_sample_range(double value, const Sample& sample) {
  double lo = sample.records.front().outcome();
  double hi = lo;
  for (const auto& r : sample.records) {
    lo = std::min(lo, r.outcome());
    hi = std::max(hi, r.outcome());
  }
  return std::clamp(value, lo, hi);
}

inline EstimateResult make_result(std::string name, double value, const Sample& sample) {
  return {std::move(name), clamp_to_sample_range(value, sample), sample.size(), class_counts(sample)};
}

/// Per reported-degree class: sum of pi_i and sum of pi_i * y_i.
struct WeightedClass {
  CompensatedSum weight;
  CompensatedSum weighted_outcome;
  CompensatedSum outcome;
  std::size_t count = 0;
};

inline std::map<Degree, WeightedClass> weighted_classes(const Population& pop,
                                                        const std::vector<double>& pi) {
  std::map<Degree, WeightedClass> classes;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    auto& c = classes[pop[i].reported_degree()];
    c.weight += pi[i];
    c.weighted_outcome += pi[i] * pop[i].outcome();
    c.outcome += pop[i].outcome();
    ++c.count;
  }
  return classes;
}

}  // namespace detail

/// Unweighted mean of record outcomes.
inline EstimateResult naive_estimate(const Sample& sample) {
  detail::require_nonempty(sample, "naive estimator");
  CompensatedSum s;
  for (const auto& r : sample.records) s += r.outcome();
  return detail::make_result("naive", s.value() / static_cast<double>(sample.size()), sample);
}

/// Volz-Heckathorn: (sum y_i / d_i) / (sum 1 / d_i) over records, using
/// reported degrees. Repeated records each count.
inline EstimateResult vh_estimate(const Sample& sample) {
  detail::require_nonempty(sample, "VH estimator");
  CompensatedSum num;
  CompensatedSum den;
  for (const auto& r : sample.records) {
    const double w = 1.0 / static_cast<double>(r.reported_degree());
    num += r.outcome() * w;
    den += w;
  }
  return detail::make_result("vh", num.value() / den.value(), sample);
}

/// Plug-in estimate of the identification formula, grouped by degree class:
///
///   sum_k ybar_k * (p_k / f(k)) / sum_k (p_k / f(k))
///
/// with ybar_k the within-class sample mean and p_k the class share. Only
/// classes present in the sample contribute. The unknown scale of f cancels.
inline EstimateResult generalized_estimate(const Sample& sample, const FSpec& f) {
  detail::require_nonempty(sample, "generalized estimator");
  std::map<Degree, CompensatedSum> sums;
  std::map<Degree, std::size_t> counts;
  for (const auto& r : sample.records) {
    sums[r.reported_degree()] += r.outcome();
    ++counts[r.reported_degree()];
  }
  const auto n = static_cast<double>(sample.size());
  CompensatedSum num;
  CompensatedSum den;
  for (const auto& [k, sum] : sums) {
    const auto nk = static_cast<double>(counts[k]);
    const double class_mean = sum.value() / nk;
    const double share_over_f = (nk / n) / f(k);
    num += class_mean * share_over_f;
    den += share_over_f;
  }
  return detail::make_result("generalized[" + f.to_string() + "]", num.value() / den.value(), sample);
}

/// Record-level form of generalized_estimate: (sum y_i / f(d_i)) / (sum 1 / f(d_i)).
inline EstimateResult generalized_estimate_records(const Sample& sample, const FSpec& f) {
  detail::require_nonempty(sample, "generalized estimator");
  CompensatedSum num;
  CompensatedSum den;
  for (const auto& r : sample.records) {
    const double w = 1.0 / f(r.reported_degree());
    num += r.outcome() * w;
    den += w;
  }
  return detail::make_result("generalized[" + f.to_string() + "]", num.value() / den.value(), sample);
}

/// The f(k) an ignorable design implies, or UnsupportedDesign.
inline FSpec design_shape(const DesignSpec& design) {
  if (const auto* b = std::get_if<BernoulliDegree>(&design)) return b->f;
  if (const auto* w = std::get_if<RandomWalk>(&design)) {
    if (w->referral.kind != ReferralKind::uniform) {
      throw UnsupportedDesign("non-uniform referral has no known degree shape");
    }
    return FSpec::power(1.0);
  }
  if (const auto* t = std::get_if<NonIgnorableTilt>(&design)) {
    if (t->gamma != 0.0) {
      throw UnsupportedDesign("outcome-tilted design violates ignorability; identification "
                              "formula premise fails");
    }
    return t->f;
  }
  throw UnsupportedDesign("coupon RDS has no tractable exact inclusion law");
}

/// Evaluates the identification formula with exact population quantities:
///
///   E[Y] = sum_k E[Y|S=1,D=k] Pr[D=k|S=1] / f(k)  /  sum_k Pr[D=k|S=1] / f(k)
///
/// where the sampled-conditional quantities come from the exact inclusion
/// probabilities. For an ignorable design whose inclusion law is c * f(D)
/// the result equals true_mean(pop). Refuses non-ignorable designs.
inline double identification_oracle(const Population& pop, const DesignSpec& design,
                                    const Graph* graph = nullptr) {
  const FSpec f = design_shape(design);
  const auto pi = inclusion_probabilities(pop, design, graph);
  const auto classes = detail::weighted_classes(pop, pi);
  CompensatedSum total_weight;
  for (const auto& [k, c] : classes) total_weight += c.weight.value();
  CompensatedSum num;
  CompensatedSum den;
  for (const auto& [k, c] : classes) {
    const double wk = c.weight.value();
    if (wk <= 0.0) continue;
    const double sampled_mean = c.weighted_outcome.value() / wk;
    const double share = wk / total_weight.value();
    num += sampled_mean * share / f(k);
    den += share / f(k);
  }
  return num.value() / den.value();
}

/// Probability limit of generalized_estimate(., f_assumed) under `design`:
/// (sum_i y_i pi_i / f_assumed(d_i)) / (sum_i pi_i / f_assumed(d_i)).
inline double plim_oracle(const Population& pop, const DesignSpec& design, const FSpec& f_assumed,
                          const Graph* graph = nullptr) {
  const auto pi = inclusion_probabilities(pop, design, graph);
  CompensatedSum num;
  CompensatedSum den;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double w = pi[i] / f_assumed(pop[i].reported_degree());
    num += pop[i].outcome() * w;
    den += w;
  }
  return num.value() / den.value();
}

struct AuditRow {
  /// E[Y | D = k] over the population.
  double population_mean = 0.0;
  /// E[Y | S = 1, D = k] under the design's exact inclusion law; NaN when
  /// the class has zero inclusion probability.
  double sampled_mean = 0.0;
  double gap = 0.0;
  std::size_t count = 0;
};

/// Per degree class, compares the population conditional mean with the
/// sampled conditional mean. All gaps are zero exactly when ignorability
/// holds for this (population, design) pair. This uses unit-level inclusion
/// probabilities of unsampled units, which no real survey observes.
inline std::map<Degree, AuditRow> ignorability_audit(const Population& pop, const DesignSpec& design,
                                                     const Graph* graph = nullptr) {
  const auto pi = inclusion_probabilities(pop, design, graph);
  std::map<Degree, AuditRow> out;
  for (const auto& [k, c] : detail::weighted_classes(pop, pi)) {
    AuditRow row;
    row.count = c.count;
    row.population_mean = c.outcome.value() / static_cast<double>(c.count);
    const double wk = c.weight.value();
    row.sampled_mean = wk > 0.0 ? c.weighted_outcome.value() / wk
                                : std::numeric_limits<double>::quiet_NaN();
    row.gap = row.sampled_mean - row.population_mean;
    out.emplace(k, row);
  }
  return out;
}

}  // namespace rdsid
