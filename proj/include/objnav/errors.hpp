#pragma once

#include <stdexcept>
#include <string>

namespace objnav {

// Error hierarchy. The category decides the CLI exit code:
// ConfigError -> 1, DataError -> 2, InvariantError -> 3.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

struct PlacementFailure : DataError {
  using DataError::DataError;
};

struct DegenerateDistance : InvariantError {
  using InvariantError::InvariantError;
};

struct EmptyRegion : InvariantError {
  using InvariantError::InvariantError;
};

struct DegenerateArea : InvariantError {
  using InvariantError::InvariantError;
};

struct EpisodeAlreadyDone : InvariantError {
  using InvariantError::InvariantError;
};

struct NoParentCoverage : DataError {
  explicit NoParentCoverage(const std::string& target)
      : DataError("target class '" + target + "' never co-occurs with a parent class"),
        target_class(target) {}
  std::string target_class;
};

struct UnknownTarget : DataError {
  explicit UnknownTarget(const std::string& target)
      : DataError("unknown target class '" + target + "'"), target_class(target) {}
  std::string target_class;
};

struct UnreachableStart : DataError {
  using DataError::DataError;
};

struct EmptyStratum : DataError {
  using DataError::DataError;
};

struct InvalidLength : DataError {
  using DataError::DataError;
};

struct MissingMode : DataError {
  using DataError::DataError;
};

struct MissingCheckpoint : DataError {
  using DataError::DataError;
};

}  // namespace objnav
