#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace streamcqr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad grid, bad bandwidth, alpha out of range, ...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Input data rejected (non-finite values, too few samples).
class DataError : public Error {
public:
  using Error::Error;
};

/// Estimation requested on a state that cannot support it (e.g. no data yet).
class StateError : public Error {
public:
  using Error::Error;
};

class DensityTooSmall : public Error {
public:
  using Error::Error;
};

class LevelSetEmpty : public Error {
public:
  using Error::Error;
};

class DegenerateSeparation : public Error {
public:
  using Error::Error;
};

class NegativeVariance : public Error {
public:
  using Error::Error;
};

class ZeroDenominator : public Error {
public:
  using Error::Error;
};

class SingularMomentSystem : public Error {
public:
  using Error::Error;
};

class ChunkTooSmall : public Error {
public:
  using Error::Error;
};

/// An estimation failure at one covariate grid point.
class GridPointError : public Error {
public:
  GridPointError(std::size_t index, const std::string& what)
      : Error("grid point " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public DataError {
public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Missing, corrupt or incompatible checkpoint.
class CheckpointError : public StateError {
public:
  using StateError::StateError;
};

}  // namespace streamcqr
