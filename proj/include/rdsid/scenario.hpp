#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rdsid/error.hpp"
#include "rdsid/network.hpp"
#include "rdsid/population.hpp"
#include "rdsid/sampling.hpp"
#include "rdsid/types.hpp"

namespace rdsid {

inline constexpr const char* scenario_schema = "rdsid.scenario/1";

struct PopulationSpec {
  std::size_t size = 1000;
  DegreeDistribution degrees = DegreeDistribution::uniform(1);
  OutcomeModel outcome = OutcomeModel(LogisticInDegree{});
  std::optional<std::vector<double>> groups;
  friend bool operator==(const PopulationSpec&, const PopulationSpec&) = default;
};

/// `redraw`: a fresh population (and network) per replicate, the i.i.d.
/// superpopulation reading. `fixed`: one realization shared by all replicates.
enum class PopulationMode { redraw, fixed };

class EstimatorSpec {
 public:
  enum class Kind { naive, vh, generalized };

  static EstimatorSpec naive() { return EstimatorSpec(Kind::naive, FSpec::constant()); }
  static EstimatorSpec vh() { return EstimatorSpec(Kind::vh, FSpec::power(1.0)); }
  static EstimatorSpec generalized(FSpec f) { return EstimatorSpec(Kind::generalized, std::move(f)); }

  /// `naive`, `vh`, or `generalized:<f-spec>`.
  static EstimatorSpec parse(std::string_view text) {
    if (text == "naive") return naive();
    if (text == "vh") return vh();
    if (text.starts_with("generalized:")) return generalized(FSpec::parse(text.substr(12)));
    throw ValidationError("unknown estimator '" + std::string(text) +
                          "' (expected naive, vh, or generalized:<f-spec>)");
  }

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  /// The degree shape the estimator weights by.
  [[nodiscard]] const FSpec& assumed_shape() const noexcept { return f_; }
  [[nodiscard]] std::string name() const {
    switch (kind_) {
      case Kind::naive: return "naive";
      case Kind::vh: return "vh";
      case Kind::generalized: break;
    }
    return "generalized:" + f_.to_string();
  }

  friend bool operator==(const EstimatorSpec&, const EstimatorSpec&) = default;

 private:
  EstimatorSpec(Kind kind, FSpec f) : kind_(kind), f_(std::move(f)) {}
  Kind kind_;
  FSpec f_;
};

/// Full generative configuration of a Monte Carlo study.
///
/// For Bernoulli-type designs the scale is derived per nominal size n as
/// c = n / (N * E[f(D)]) under the degree law, so n is the expected sample
/// size of the untilted design. For walks n is the step count, and for coupon
/// RDS the target sample size; the `c`, `steps` and `target_n` fields of
/// `design` are overwritten per size.
struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  PopulationMode mode = PopulationMode::redraw;
  PopulationSpec population;
  std::optional<NetworkOptions> network;
  DesignSpec design = BernoulliDegree{FSpec::power(1.0), 1.0};
  std::optional<MisreportModel> misreport;
  std::vector<EstimatorSpec> estimators;
  std::vector<std::size_t> sample_sizes{100};
  std::size_t replicates = 100;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// The design with its size-dependent field resolved for nominal size n.
inline DesignSpec design_for_size(const Scenario& scenario, std::size_t n) {
  const auto bernoulli_scale = [&](const FSpec& f) {
    const double mean_f = scenario.population.degrees.expectation([&](Degree k) { return f(k); });
    return static_cast<double>(n) / (static_cast<double>(scenario.population.size) * mean_f);
  };
  return std::visit(
      [&](auto d) -> DesignSpec {
        using D = decltype(d);
        if constexpr (std::is_same_v<D, BernoulliDegree> || std::is_same_v<D, NonIgnorableTilt>) {
          d.c = bernoulli_scale(d.f);
        } else if constexpr (std::is_same_v<D, RandomWalk>) {
          d.steps = n;
        } else {
          d.target_n = n;
        }
        return d;
      },
      scenario.design);
}

inline bool design_needs_network(const DesignSpec& design) {
  return std::holds_alternative<RandomWalk>(design) || std::holds_alternative<CouponRds>(design);
}

/// Throws ValidationError naming the first violated constraint.
inline void validate(const Scenario& s) {
  if (s.replicates < 1) throw ValidationError("replicates must be >= 1");
  if (s.population.size < 1) throw ValidationError("population.size must be >= 1");
  if (s.sample_sizes.empty()) throw ValidationError("sample_sizes must be nonempty");
  for (std::size_t i = 0; i < s.sample_sizes.size(); ++i) {
    if (s.sample_sizes[i] < 1) throw ValidationError("sample sizes must be >= 1");
    if (i > 0 && s.sample_sizes[i] <= s.sample_sizes[i - 1]) {
      throw ValidationError("sample_sizes must be strictly ascending");
    }
  }
  if (s.estimators.empty()) throw ValidationError("at least one estimator is required");
  const Degree max_degree = s.population.degrees.max_degree();
  for (const auto& e : s.estimators) {
    for (Degree k = 1; k <= max_degree; ++k) {
      try {
        (void)e.assumed_shape()(k);
      } catch (const ValidationError& err) {
        throw ValidationError("estimator " + e.name() + " is not defined on {1..K}: " + err.what());
      }
    }
  }
  const std::size_t group_count = s.population.groups ? s.population.groups->size() : 0;
  s.population.outcome.validate(max_degree, group_count);

  if (design_needs_network(s.design) && !s.network) {
    throw ValidationError("walk-based designs need a network section");
  }
  if (s.network) {
    if (!(s.network->homophily >= 0.0 && s.network->homophily <= 1.0)) {
      throw ValidationError("network.homophily must lie in [0, 1]");
    }
    if ((s.network->homophily > 0.0 || s.network->bottleneck) && !s.population.groups) {
      throw ValidationError("homophily or bottleneck needs population.groups");
    }
  }

  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, BernoulliDegree> || std::is_same_v<D, NonIgnorableTilt>) {
          const double fmax = d.f.max_over(max_degree);
          for (const auto n : s.sample_sizes) {
            const auto resolved = std::get<D>(design_for_size(s, n));
            if (resolved.c * fmax > 1.0) {
              throw ValidationError("BernoulliDegree constraint violated: c*f(k) = " +
                                    format_double(resolved.c * fmax) + " > 1 (c=" +
                                    format_double(resolved.c) + ", sample size " +
                                    std::to_string(n) + ")");
            }
          }
          if constexpr (std::is_same_v<D, NonIgnorableTilt>) {
            if (!std::isfinite(d.gamma)) throw ValidationError("design.gamma must be finite");
          }
        } else if constexpr (std::is_same_v<D, RandomWalk>) {
          if (d.seeds < 1 || d.seeds > s.sample_sizes.front()) {
            throw ValidationError("random walk seeds must lie in [1, smallest sample size]");
          }
          if (d.placement.rule == SeedRule::fixed && d.placement.fixed_index >= s.population.size) {
            throw ValidationError("fixed seed index outside population");
          }
          if (d.referral.kind == ReferralKind::group_biased && !s.population.groups) {
            throw ValidationError("group-biased referral needs population.groups");
          }
        } else {
          if (d.seeds < 1) throw ValidationError("coupon RDS needs at least one seed");
          if (d.coupons < 1) throw ValidationError("coupon RDS needs at least one coupon");
          if (d.placement.rule == SeedRule::fixed && d.placement.fixed_index >= s.population.size) {
            throw ValidationError("fixed seed index outside population");
          }
        }
      },
      s.design);
}

// --- JSON ------------------------------------------------------------------

namespace detail {

using nlohmann::json;

/// Reads keys off a JSON object and rejects any it did not consume.
class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_ + " must be an object");
  }

  [[nodiscard]] bool has(const std::string& key) const {
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& required(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) throw ValidationError("missing required key " + where(key));
    return j_.at(key);
  }

  [[nodiscard]] const json* optional(const std::string& key) {
    seen_.insert(key);
    return has(key) ? &j_.at(key) : nullptr;
  }

  double real(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = fallback ? optional(key) : &required(key);
    if (v == nullptr) return *fallback;
    if (!v->is_number()) throw ValidationError(where(key) + " must be a number");
    return v->get<double>();
  }

  static bool nonnegative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  }

  std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) {
    const json* v = fallback ? optional(key) : &required(key);
    if (v == nullptr) return *fallback;
    if (!nonnegative_integer(*v)) throw ValidationError(where(key) + " must be a nonnegative integer");
    return v->get<std::uint64_t>();
  }

  bool flag(const std::string& key, bool fallback) {
    const json* v = optional(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) throw ValidationError(where(key) + " must be true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = fallback ? optional(key) : &required(key);
    if (v == nullptr) return *fallback;
    if (!v->is_string()) throw ValidationError(where(key) + " must be a string");
    return v->get<std::string>();
  }

  [[nodiscard]] std::string where(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) throw ValidationError("unknown key " + where(key));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::vector<double> real_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw ValidationError(path + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline std::map<Degree, double> degree_map(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + " must map degree classes to numbers");
  std::map<Degree, double> out;
  for (const auto& [key, v] : j.items()) {
    const auto k = parse_integer<Degree>(key, path + " degree class");
    if (!v.is_number()) throw ValidationError(path + "." + key + " must be a number");
    out[k] = v.get<double>();
  }
  return out;
}

inline json degree_map_json(const std::map<Degree, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

inline DegreeDistribution degrees_from_json(const json& j) {
  StrictObject o(j, "population.degrees");
  const auto kind = o.text("kind");
  std::optional<DegreeDistribution> out;
  if (kind == "uniform") {
    out = DegreeDistribution::uniform(static_cast<Degree>(o.count("K")));
  } else if (kind == "power_law") {
    const double exponent = o.real("exponent");
    out = DegreeDistribution::power_law(exponent, static_cast<Degree>(o.count("K")));
  } else if (kind == "table") {
    out = DegreeDistribution::table(real_array(o.required("probabilities"), o.where("probabilities")));
  } else {
    throw ValidationError("unknown population.degrees.kind '" + kind + "'");
  }
  o.finish();
  return *out;
}

inline json degrees_to_json(const DegreeDistribution& d) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, UniformDegrees>) {
          return {{"kind", "uniform"}, {"K", k.max_degree}};
        } else if constexpr (std::is_same_v<K, TruncatedPowerLaw>) {
          return {{"kind", "power_law"}, {"exponent", k.exponent}, {"K", k.max_degree}};
        } else {
          return {{"kind", "table"}, {"probabilities", k.probabilities}};
        }
      },
      d.kind());
}

inline BaseOutcome base_outcome_from_json(const json& j, const std::string& path) {
  StrictObject o(j, path);
  const auto kind = o.text("kind");
  std::optional<BaseOutcome> out;
  if (kind == "logistic") {
    const double a = o.real("intercept");
    out = LogisticInDegree{a, o.real("slope")};
  } else if (kind == "table_mean") {
    out = TableMean{degree_map(o.required("means"), o.where("means"))};
  } else {
    throw ValidationError("unknown " + path + ".kind '" + kind + "'");
  }
  o.finish();
  return *out;
}

inline json base_outcome_to_json(const BaseOutcome& b) {
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LogisticInDegree>) {
          return {{"kind", "logistic"}, {"intercept", m.intercept}, {"slope", m.slope}};
        } else {
          return {{"kind", "table_mean"}, {"means", degree_map_json(m.means)}};
        }
      },
      b);
}

inline OutcomeModel outcome_from_json(const json& j) {
  const std::string path = "population.outcome";
  StrictObject o(j, path);
  const auto kind = o.text("kind", "logistic");
  OutcomeModel::Kind model = LogisticInDegree{};
  if (kind == "group_shift") {
    model = GroupShift{base_outcome_from_json(o.required("base"), o.where("base")),
                       real_array(o.required("shifts"), o.where("shifts"))};
  } else {
    json base = json::object();
    base["kind"] = kind;
    if (kind == "logistic") {
      base["intercept"] = o.real("intercept", 0.0);
      base["slope"] = o.real("slope", 0.0);
    } else if (kind == "table_mean") {
      base["means"] = o.required("means");
    }
    model = std::visit([](auto b) -> OutcomeModel::Kind { return b; }, base_outcome_from_json(base, path));
  }
  OutcomeNoise noise = BernoulliNoise{};
  if (const json* n = o.optional("noise")) {
    if (n->is_string() && n->get<std::string>() == "bernoulli") {
      noise = BernoulliNoise{};
    } else if (n->is_string() && n->get<std::string>() == "none") {
      noise = GaussianNoise{0.0};
    } else if (n->is_object()) {
      StrictObject no(*n, path + ".noise");
      noise = GaussianNoise{no.real("gaussian_sd")};
      no.finish();
    } else {
      throw ValidationError(path + ".noise must be \"bernoulli\", \"none\", or {\"gaussian_sd\": x}");
    }
  }
  OutcomeBounds bounds;
  if (const json* b = o.optional("bounds")) {
    const auto v = real_array(*b, path + ".bounds");
    if (v.size() != 2) throw ValidationError(path + ".bounds must be [lo, hi]");
    bounds = {v[0], v[1]};
  }
  o.finish();
  return OutcomeModel(std::move(model), noise, bounds);
}

inline json outcome_to_json(const OutcomeModel& m) {
  json j = std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, GroupShift>) {
          return {{"kind", "group_shift"}, {"base", base_outcome_to_json(k.base)}, {"shifts", k.shifts}};
        } else {
          return base_outcome_to_json(BaseOutcome{k});
        }
      },
      m.kind());
  if (std::holds_alternative<BernoulliNoise>(m.noise())) {
    j["noise"] = "bernoulli";
  } else {
    j["noise"] = {{"gaussian_sd", std::get<GaussianNoise>(m.noise()).sd}};
  }
  j["bounds"] = {m.bounds().lo, m.bounds().hi};
  return j;
}

inline const char* seed_rule_name(SeedRule r) {
  switch (r) {
    case SeedRule::uniform: return "uniform";
    case SeedRule::degree_proportional: return "degree_proportional";
    case SeedRule::fixed: return "fixed";
  }
  return "uniform";
}

inline SeedPlacement placement_from(StrictObject& o, SeedRule fallback) {
  SeedPlacement p;
  const auto rule = o.text("seed_rule", seed_rule_name(fallback));
  if (rule == "uniform") {
    p.rule = SeedRule::uniform;
  } else if (rule == "degree_proportional") {
    p.rule = SeedRule::degree_proportional;
  } else if (rule == "fixed") {
    p.rule = SeedRule::fixed;
  } else {
    throw ValidationError("unknown seed_rule '" + rule + "'");
  }
  p.fixed_index = o.count("fixed_index", 0);
  return p;
}

inline const char* referral_name(ReferralKind k) {
  switch (k) {
    case ReferralKind::uniform: return "uniform";
    case ReferralKind::degree_biased: return "degree_biased";
    case ReferralKind::group_biased: return "group_biased";
  }
  return "uniform";
}

inline DesignSpec design_from_json(const json& j) {
  StrictObject o(j, "design");
  const auto kind = o.text("kind", "bernoulli_degree");
  std::optional<DesignSpec> out;
  if (kind == "bernoulli_degree") {
    out = BernoulliDegree{FSpec::parse(o.text("f", "power:1")), 1.0};
  } else if (kind == "nonignorable_tilt") {
    const auto f = FSpec::parse(o.text("f", "power:1"));
    out = NonIgnorableTilt{f, 1.0, o.real("gamma", 0.0)};
  } else if (kind == "random_walk") {
    RandomWalk w;
    w.seeds = o.count("seeds", 1);
    w.placement = placement_from(o, SeedRule::degree_proportional);
    w.with_replacement = o.flag("with_replacement", true);
    const auto referral = o.text("referral", "uniform");
    if (referral == "uniform") {
      w.referral.kind = ReferralKind::uniform;
    } else if (referral == "degree_biased") {
      w.referral.kind = ReferralKind::degree_biased;
    } else if (referral == "group_biased") {
      w.referral.kind = ReferralKind::group_biased;
    } else {
      throw ValidationError("unknown design.referral '" + referral + "'");
    }
    w.referral.same_group_weight = o.real("same_group_weight", 4.0);
    w.allow_restart = o.flag("allow_restart", true);
    out = w;
  } else if (kind == "coupon_rds") {
    CouponRds c;
    c.seeds = o.count("seeds", 1);
    c.coupons = o.count("coupons", 3);
    if (o.has("max_waves")) c.max_waves = static_cast<std::uint32_t>(o.count("max_waves"));
    (void)o.optional("max_waves");
    c.with_replacement = o.flag("with_replacement", false);
    c.placement = placement_from(o, SeedRule::uniform);
    out = c;
  } else {
    throw ValidationError("unknown design.kind '" + kind + "'");
  }
  o.finish();
  return *out;
}

inline json design_to_json(const DesignSpec& design) {
  return std::visit(
      [](const auto& d) -> json {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, BernoulliDegree>) {
          return {{"kind", "bernoulli_degree"}, {"f", d.f.to_string()}};
        } else if constexpr (std::is_same_v<D, NonIgnorableTilt>) {
          return {{"kind", "nonignorable_tilt"}, {"f", d.f.to_string()}, {"gamma", d.gamma}};
        } else if constexpr (std::is_same_v<D, RandomWalk>) {
          return {{"kind", "random_walk"},
                  {"seeds", d.seeds},
                  {"seed_rule", seed_rule_name(d.placement.rule)},
                  {"fixed_index", d.placement.fixed_index},
                  {"with_replacement", d.with_replacement},
                  {"referral", referral_name(d.referral.kind)},
                  {"same_group_weight", d.referral.same_group_weight},
                  {"allow_restart", d.allow_restart}};
        } else {
          return {{"kind", "coupon_rds"},
                  {"seeds", d.seeds},
                  {"coupons", d.coupons},
                  {"max_waves", d.max_waves ? json(*d.max_waves) : json(nullptr)},
                  {"with_replacement", d.with_replacement},
                  {"seed_rule", seed_rule_name(d.placement.rule)},
                  {"fixed_index", d.placement.fixed_index}};
        }
      },
      design);
}

inline MisreportModel misreport_from_json(const json& j) {
  StrictObject o(j, "misreport");
  const auto kind = o.text("kind");
  std::optional<MisreportModel> out;
  if (kind == "identity") {
    out = IdentityReport{};
  } else if (kind == "multiplicative") {
    out = MultiplicativeBias{o.real("factor")};
  } else if (kind == "jitter") {
    out = UniformJitter{static_cast<int>(o.count("m"))};
  } else if (kind == "heaping") {
    const auto base = o.count("base", 5);
    if (base < 1) throw ValidationError("misreport.base must be >= 1");
    out = Heaping{static_cast<int>(base)};
  } else {
    throw ValidationError("unknown misreport.kind '" + kind + "'");
  }
  o.finish();
  return *out;
}

inline json misreport_to_json(const MisreportModel& m) {
  return std::visit(
      [](const auto& x) -> json {
        using M = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<M, IdentityReport>) {
          return {{"kind", "identity"}};
        } else if constexpr (std::is_same_v<M, MultiplicativeBias>) {
          return {{"kind", "multiplicative"}, {"factor", x.factor}};
        } else if constexpr (std::is_same_v<M, UniformJitter>) {
          return {{"kind", "jitter"}, {"m", x.m}};
        } else {
          return {{"kind", "heaping"}, {"base", x.base}};
        }
      },
      m);
}

inline NetworkOptions network_from_json(const json& j) {
  StrictObject o(j, "network");
  NetworkOptions n;
  n.homophily = o.real("homophily", 0.0);
  if (const json* b = o.optional("bottleneck")) {
    StrictObject bo(*b, "network.bottleneck");
    n.bottleneck = Bottleneck{bo.real("cross_fraction")};
    bo.finish();
  }
  n.simple = o.flag("simple", false);
  n.max_attempts = o.count("max_attempts", 1000);
  o.finish();
  return n;
}

inline json network_to_json(const NetworkOptions& n) {
  return {{"homophily", n.homophily},
          {"bottleneck", n.bottleneck ? json{{"cross_fraction", n.bottleneck->cross_fraction}} : json(nullptr)},
          {"simple", n.simple},
          {"max_attempts", n.max_attempts}};
}

}  // namespace detail

/// Parses and validates a scenario document. Unknown keys are errors.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::StrictObject;
  using nlohmann::json;
  StrictObject o(j, "scenario");
  const auto schema = o.text("schema", scenario_schema);
  if (schema != scenario_schema) {
    throw ValidationError("unsupported scenario schema '" + schema + "' (expected " +
                          scenario_schema + ")");
  }
  Scenario s;
  s.name = o.text("name", "scenario");
  s.seed = o.count("seed", 1);
  const auto mode = o.text("mode", "redraw");
  if (mode == "redraw") {
    s.mode = PopulationMode::redraw;
  } else if (mode == "fixed") {
    s.mode = PopulationMode::fixed;
  } else {
    throw ValidationError("scenario.mode must be \"redraw\" or \"fixed\"");
  }
  s.replicates = o.count("replicates", 100);
  if (const json* sizes = o.optional("sample_sizes")) {
    if (!sizes->is_array()) throw ValidationError("scenario.sample_sizes must be an array");
    s.sample_sizes.clear();
    for (const auto& x : *sizes) {
      if (!StrictObject::nonnegative_integer(x) || x.get<std::int64_t>() == 0) {
        throw ValidationError("sample sizes must be positive integers");
      }
      s.sample_sizes.push_back(x.get<std::size_t>());
    }
  }

  StrictObject p(o.required("population"), "population");
  s.population.size = p.count("size");
  s.population.degrees = detail::degrees_from_json(p.required("degrees"));
  if (const json* out = p.optional("outcome")) s.population.outcome = detail::outcome_from_json(*out);
  if (const json* g = p.optional("groups")) s.population.groups = detail::real_array(*g, "population.groups");
  p.finish();

  if (const json* n = o.optional("network")) s.network = detail::network_from_json(*n);
  if (const json* d = o.optional("design")) s.design = detail::design_from_json(*d);
  if (const json* m = o.optional("misreport")) s.misreport = detail::misreport_from_json(*m);

  const json& est = o.required("estimators");
  if (!est.is_array()) throw ValidationError("scenario.estimators must be an array of strings");
  for (const auto& e : est) {
    if (!e.is_string()) throw ValidationError("scenario.estimators must be an array of strings");
    s.estimators.push_back(EstimatorSpec::parse(e.get<std::string>()));
  }
  o.finish();
  validate(s);
  return s;
}

/// Fully resolved scenario document; every default is written out.
inline nlohmann::json scenario_to_json(const Scenario& s) {
  using nlohmann::json;
  json est = json::array();
  for (const auto& e : s.estimators) est.push_back(e.name());
  return {
      {"schema", scenario_schema},
      {"name", s.name},
      {"seed", s.seed},
      {"mode", s.mode == PopulationMode::redraw ? "redraw" : "fixed"},
      {"replicates", s.replicates},
      {"sample_sizes", s.sample_sizes},
      {"population",
       {{"size", s.population.size},
        {"degrees", detail::degrees_to_json(s.population.degrees)},
        {"outcome", detail::outcome_to_json(s.population.outcome)},
        {"groups", s.population.groups ? json(*s.population.groups) : json(nullptr)}}},
      {"network", s.network ? detail::network_to_json(*s.network) : json(nullptr)},
      {"design", detail::design_to_json(s.design)},
      {"misreport", s.misreport ? detail::misreport_to_json(*s.misreport) : json(nullptr)},
      {"estimators", est},
  };
}

}  // namespace rdsid
