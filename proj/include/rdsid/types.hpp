#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "rdsid/error.hpp"
#include "rdsid/numeric.hpp"

namespace rdsid {

using Degree = int;
using GroupLabel = int;

/// Closed interval of admissible outcome values.
struct OutcomeBounds {
  double lo = 0.0;
  double hi = 1.0;

  [[nodiscard]] bool contains(double y) const noexcept { return y >= lo && y <= hi; }
  friend bool operator==(const OutcomeBounds&, const OutcomeBounds&) = default;
};

/// One member of the study population. Degrees are at least 1.
class Unit {
 public:
  Unit(double outcome, Degree true_degree, Degree reported_degree,
       std::optional<GroupLabel> group = std::nullopt)
      : outcome_(outcome),
        true_degree_(true_degree),
        reported_degree_(reported_degree),
        group_(group) {
    if (true_degree < 1 || reported_degree < 1) {
      throw ValidationError("unit degree must be >= 1 (got true=" + std::to_string(true_degree) +
                            ", reported=" + std::to_string(reported_degree) + ")");
    }
    if (!std::isfinite(outcome)) {
      throw ValidationError("unit outcome must be finite");
    }
  }

  Unit(double outcome, Degree degree) : Unit(outcome, degree, degree) {}

  [[nodiscard]] double outcome() const noexcept { return outcome_; }
  [[nodiscard]] Degree true_degree() const noexcept { return true_degree_; }
  [[nodiscard]] Degree reported_degree() const noexcept { return reported_degree_; }
  [[nodiscard]] std::optional<GroupLabel> group() const noexcept { return group_; }

  friend bool operator==(const Unit&, const Unit&) = default;

 private:
  double outcome_;
  Degree true_degree_;
  Degree reported_degree_;
  std::optional<GroupLabel> group_;
};

/// A finite population: nonempty, every degree in {1..K}, outcomes in bounds.
class Population {
 public:
  Population(std::vector<Unit> units, Degree max_degree, OutcomeBounds bounds = {},
             std::vector<std::string> warnings = {})
      : units_(std::move(units)),
        max_degree_(max_degree),
        bounds_(bounds),
        warnings_(std::move(warnings)) {
    if (units_.empty()) {
      throw ValidationError("population must be nonempty");
    }
    if (max_degree_ < 1) {
      throw ValidationError("population max degree K must be >= 1");
    }
    if (!(bounds_.lo <= bounds_.hi)) {
      throw ValidationError("outcome bounds must satisfy lo <= hi");
    }
    for (std::size_t i = 0; i < units_.size(); ++i) {
      const auto& u = units_[i];
      if (u.true_degree() > max_degree_ || u.reported_degree() > max_degree_) {
        throw ValidationError("unit " + std::to_string(i) + " has degree above K=" +
                              std::to_string(max_degree_));
      }
      if (!bounds_.contains(u.outcome())) {
        throw ValidationError("unit " + std::to_string(i) + " outcome " +
                              format_double(u.outcome()) + " outside declared bounds");
      }
    }
  }

  [[nodiscard]] std::span<const Unit> units() const noexcept { return units_; }
  [[nodiscard]] const Unit& operator[](std::size_t i) const { return units_[i]; }
  [[nodiscard]] std::size_t size() const noexcept { return units_.size(); }
  [[nodiscard]] Degree max_degree() const noexcept { return max_degree_; }
  [[nodiscard]] OutcomeBounds outcome_bounds() const noexcept { return bounds_; }
  [[nodiscard]] std::span<const std::string> warnings() const noexcept { return warnings_; }

  [[nodiscard]] std::uint64_t true_degree_sum() const noexcept {
    std::uint64_t s = 0;
    for (const auto& u : units_) s += static_cast<std::uint64_t>(u.true_degree());
    return s;
  }

  friend bool operator==(const Population&, const Population&) = default;

 private:
  std::vector<Unit> units_;
  Degree max_degree_;
  OutcomeBounds bounds_;
  std::vector<std::string> warnings_;
};

struct PowerShape {
  double alpha = 1.0;
  friend bool operator==(const PowerShape&, const PowerShape&) = default;
};

struct ConstantShape {
  friend bool operator==(const ConstantShape&, const ConstantShape&) = default;
};

struct TableShape {
  std::map<Degree, double> values;
  friend bool operator==(const TableShape&, const TableShape&) = default;
};

/// Shape of the sampling probability as a function of degree, known only up
/// to an unknown positive scale. The scale is deliberately not represented.
class FSpec {
 public:
  using Shape = std::variant<PowerShape, ConstantShape, TableShape>;

  FSpec() : shape_(ConstantShape{}) {}

  static FSpec power(double alpha) {
    if (!std::isfinite(alpha)) throw ValidationError("power exponent must be finite");
    return FSpec(PowerShape{alpha});
  }
  static FSpec constant() { return FSpec(ConstantShape{}); }
  static FSpec table(std::map<Degree, double> values) {
    if (values.empty()) throw ValidationError("table f-spec must have at least one entry");
    for (const auto& [k, v] : values) {
      if (k < 1) throw ValidationError("table f-spec degree class must be >= 1");
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError("table f-spec value for class " + std::to_string(k) +
                              " must be positive and finite");
      }
    }
    return FSpec(TableShape{std::move(values)});
  }

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] bool is_table() const noexcept { return std::holds_alternative<TableShape>(shape_); }

  /// Unscaled f(k). Throws ValidationError for k < 1 or a class missing
  /// from a table shape.
  [[nodiscard]] double operator()(Degree k) const {
    if (k < 1) throw ValidationError("f evaluated at degree " + std::to_string(k) + " < 1");
    return std::visit(
        [k](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, PowerShape>) {
            if (s.alpha == 1.0) return static_cast<double>(k);
            if (s.alpha == 0.0) return 1.0;
            return std::pow(static_cast<double>(k), s.alpha);
          } else if constexpr (std::is_same_v<S, ConstantShape>) {
            return 1.0;
          } else {
            const auto it = s.values.find(k);
            if (it == s.values.end()) {
              throw ValidationError("f-spec table has no entry for degree class " +
                                    std::to_string(k));
            }
            return it->second;
          }
        },
        shape_);
  }

  /// max f(k) over k in {1..K}.
  [[nodiscard]] double max_over(Degree max_degree) const {
    double m = 0.0;
    for (Degree k = 1; k <= max_degree; ++k) m = std::max(m, (*this)(k));
    return m;
  }

  /// Table shape with every value multiplied by `factor`.
  [[nodiscard]] FSpec scaled(double factor) const {
    const auto* t = std::get_if<TableShape>(&shape_);
    if (t == nullptr) throw ValidationError("only table f-specs can be rescaled");
    auto values = t->values;
    for (auto& [k, v] : values) v *= factor;
    return table(std::move(values));
  }

  /// Canonical text: `power:<alpha>`, `constant`, or `table:<k=v,...>`.
  [[nodiscard]] std::string to_string() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, PowerShape>) {
            return "power:" + format_double(s.alpha);
          } else if constexpr (std::is_same_v<S, ConstantShape>) {
            return "constant";
          } else {
            std::string out = "table:";
            bool first = true;
            for (const auto& [k, v] : s.values) {
              if (!first) out += ',';
              first = false;
              out += std::to_string(k) + "=" + format_double(v);
            }
            return out;
          }
        },
        shape_);
  }

  static FSpec parse(std::string_view text);

  friend bool operator==(const FSpec&, const FSpec&) = default;

 private:
  explicit FSpec(Shape s) : shape_(std::move(s)) {}
  Shape shape_;
};

inline double f_eval(const FSpec& spec, Degree k) { return spec(k); }

namespace detail {

inline double parse_real(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || s.empty()) {
    throw ValidationError("malformed " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

template <class Int>
Int parse_integer(std::string_view s, std::string_view what) {
  Int v{};
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || s.empty()) {
    throw ValidationError("malformed " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

inline FSpec FSpec::parse(std::string_view text) {
  if (text == "constant") return constant();
  if (text.starts_with("power:")) {
    return power(detail::parse_real(text.substr(6), "power exponent"));
  }
  if (text.starts_with("table:")) {
    std::map<Degree, double> values;
    auto rest = text.substr(6);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw ValidationError("malformed table entry '" + std::string(item) + "', expected k=v");
      }
      const auto k = detail::parse_integer<Degree>(item.substr(0, eq), "table degree class");
      const auto v = detail::parse_real(item.substr(eq + 1), "table value");
      if (!values.emplace(k, v).second) {
        throw ValidationError("duplicate table degree class " + std::to_string(k));
      }
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return table(std::move(values));
  }
  throw ValidationError("unknown f-spec '" + std::string(text) +
                        "' (expected power:<alpha>, constant, or table:<k=v,...>)");
}

/// One observed respondent. A record without a recruiter is a seed (wave 0).
class SampleRecord {
 public:
  SampleRecord(std::optional<std::size_t> unit_index, double outcome, Degree reported_degree,
               std::optional<std::size_t> recruiter = std::nullopt, std::uint32_t wave = 0)
      : unit_index_(unit_index),
        outcome_(outcome),
        reported_degree_(reported_degree),
        recruiter_(recruiter),
        wave_(wave) {
    if (reported_degree < 1) {
      throw ValidationError("sample record degree must be >= 1 (got " +
                            std::to_string(reported_degree) + ")");
    }
    if (!std::isfinite(outcome)) throw ValidationError("sample record outcome must be finite");
    if (!recruiter && wave != 0) {
      throw ValidationError("seed record (no recruiter) must have wave 0");
    }
  }

  [[nodiscard]] std::optional<std::size_t> unit_index() const noexcept { return unit_index_; }
  [[nodiscard]] double outcome() const noexcept { return outcome_; }
  [[nodiscard]] Degree reported_degree() const noexcept { return reported_degree_; }
  [[nodiscard]] std::optional<std::size_t> recruiter() const noexcept { return recruiter_; }
  [[nodiscard]] std::uint32_t wave() const noexcept { return wave_; }
  [[nodiscard]] bool is_seed() const noexcept { return !recruiter_; }

  [[nodiscard]] SampleRecord with_reported_degree(Degree d) const {
    return SampleRecord(unit_index_, outcome_, d, recruiter_, wave_);
  }

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;

 private:
  std::optional<std::size_t> unit_index_;
  double outcome_;
  Degree reported_degree_;
  std::optional<std::size_t> recruiter_;
  std::uint32_t wave_;
};

/// Ordered records; repeats of the same unit are separate records.
struct Sample {
  std::vector<SampleRecord> records;
  bool with_replacement = false;
  /// Chain-referral samplers stopped before reaching the requested size.
  bool truncated = false;
  /// Number of times a without-replacement walk reseeded after getting stuck.
  std::size_t restarts = 0;

  [[nodiscard]] std::size_t size() const noexcept { return records.size(); }
  [[nodiscard]] bool empty() const noexcept { return records.empty(); }

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct EstimateResult {
  std::string estimator_name;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
  std::map<Degree, std::size_t> degree_class_counts;
};

}  // namespace rdsid
