#pragma once

#include <cstddef>
#include <limits>
#include <span>

#include <boost/math/special_functions/gamma.hpp>

#include "rdsid/error.hpp"
#include "rdsid/numeric.hpp"

namespace rdsid {

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t degrees_of_freedom = 0;
  double p_value = 1.0;
};

/// Pearson goodness-of-fit of observed counts against cell probabilities.
/// Cells with zero probability are dropped (any count there gives p = 0).
inline ChiSquareResult chi_square_gof(std::span<const std::size_t> observed,
                                      std::span<const double> probabilities) {
  if (observed.size() != probabilities.size() || observed.empty()) {
    throw ValidationError("chi-square needs matching, nonempty observed/probability vectors");
  }
  double total = 0.0;
  for (const auto o : observed) total += static_cast<double>(o);
  CompensatedSum stat;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probabilities[i] <= 0.0) {
      if (observed[i] > 0) return {std::numeric_limits<double>::infinity(), 0, 0.0};
      continue;
    }
    const double e = total * probabilities[i];
    const double d = static_cast<double>(observed[i]) - e;
    stat += d * d / e;
    ++cells;
  }
  ChiSquareResult r;
  r.statistic = stat.value();
  r.degrees_of_freedom = cells > 0 ? cells - 1 : 0;
  r.p_value = r.degrees_of_freedom == 0
                  ? 1.0
                  : boost::math::gamma_q(static_cast<double>(r.degrees_of_freedom) / 2.0,
                                         r.statistic / 2.0);
  return r;
}

}  // namespace rdsid
