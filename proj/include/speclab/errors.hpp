#pragma once

#include <stdexcept>
#include <string>

namespace speclab {

// Precondition violations: bad dimensions, probabilities outside [0,1],
// malformed vertex pairs and the like.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace speclab
