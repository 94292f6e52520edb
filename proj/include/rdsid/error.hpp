#pragma once

#include <stdexcept>
#include <string>

namespace rdsid {

/// Invalid input data, configuration, or argument values.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested exact computation has no tractable or well-defined answer
/// for this design (e.g. the stationary law of a walk on a bipartite graph).
class UnsupportedDesign : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace rdsid
