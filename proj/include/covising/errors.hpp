#pragma once

#include <stdexcept>
#include <string>

namespace covising {

// Shapes of inputs disagree with the model dimensions.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A parameter value is outside its allowed range.
struct ValueError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A response column is constant, so the unpenalized intercept of that
// node's regression diverges.
struct DegenerateResponseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact enumeration requested beyond the q <= 20 guard.
struct EnumerationLimitError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed input file; message carries file/row/column where known.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failure (open/write/rename).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace covising
