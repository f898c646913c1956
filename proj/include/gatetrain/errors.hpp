#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gatetrain {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid sizes, rates, budgets or other user-supplied settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch between a network, a vector, or a dataset.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value outside its valid range, e.g. a class label >= n_classes.
class InputError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// Broken internal contract (should never reach a user).
class InternalError : public Error {
 public:
  using Error::Error;
};

/// IDX parse failure. `field()` names the offending part of the file:
/// "magic", "dims", "pixels", "labels" or "count".
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace gatetrain
