#pragma once

#include <stdexcept>
#include <string>

namespace afca {

// Validation-class errors (bad input, bad config, bad shapes). The CLI maps
// these to exit code 1.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ShapeError : ValidationError {
  using ValidationError::ValidationError;
};

struct ConfigError : ValidationError {
  using ValidationError::ValidationError;
};

struct DataError : ValidationError {
  using ValidationError::ValidationError;
};

struct AlignmentError : DataError {
  using DataError::DataError;
};

struct ParseError : ValidationError {
  using ValidationError::ValidationError;
};

// Runtime-class errors. The CLI maps these to exit code 2.
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FetchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace afca
