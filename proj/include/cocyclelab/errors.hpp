#pragma once

#include <stdexcept>
#include <string>

namespace cocyclelab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live on different (or differently sized) measure spaces.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A builder cannot produce an exact kernel on the requested partition.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// A pointwise map produced a value outside [0,1).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its documented domain.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An object violates one of its structural invariants. `check()` names
/// the failing check, e.g. "weights sum".
class InvariantError : public Error {
 public:
  InvariantError(std::string check, const std::string& what)
      : Error(check + ": " + what), check_(std::move(check)) {}
  const std::string& check() const noexcept { return check_; }

 private:
  std::string check_;
};

/// An orbit-schedule observable map was queried off its orbit.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// Horizon exceeds what the symbolic model can represent faithfully.
class HorizonError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Scenario ingestion failure (parse, unresolved reference, bad field).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cocyclelab
