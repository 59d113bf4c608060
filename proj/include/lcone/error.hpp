#pragma once

#include <stdexcept>
#include <string>

namespace lcone {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration or argument failed validation. `path` names the offending
/// field (e.g. "checks.lightcone.v"), empty when not tied to a config field.
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// The box is too small for the requested evolution time.
class PreflightError : public Error {
 public:
  PreflightError(const std::string& what, int suggested_half_width)
      : Error(what), suggested_half_width_(suggested_half_width) {}
  int suggested_half_width() const noexcept { return suggested_half_width_; }

 private:
  int suggested_half_width_;
};

/// A numerical routine could not meet its accuracy contract.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace lcone
