#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace autochar {

// Base for every error raised by the library. The CLI maps these to exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// File missing, unreadable or unwritable.
class IoError : public Error {
public:
  using Error::Error;
};

// File present but its content violates the declared format.
class FormatError : public Error {
public:
  using Error::Error;
};

// Numeric input outside an operation's precondition.
class DomainError : public Error {
public:
  using Error::Error;
};

// Band-gap extraction produced no admissible candidate line.
class NoFitError : public Error {
public:
  using Error::Error;
};

// Singular or ill-posed model fit.
class FitError : public Error {
public:
  using Error::Error;
};

// Region centroids that could not be matched to the printer raster path.
class UnmatchedRegionsError : public Error {
public:
  UnmatchedRegionsError(const std::string &what, std::vector<int> ids)
      : Error(what), ids_(std::move(ids)) {}
  const std::vector<int> &ids() const { return ids_; }

private:
  std::vector<int> ids_;
};

} // namespace autochar
