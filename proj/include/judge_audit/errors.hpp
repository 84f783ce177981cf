#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace judge_audit {

// Base for every error the toolkit raises on purpose. The CLI maps the
// concrete type to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// A score token was found but lies outside 1..5.
class RangeError : public ParseError {
 public:
  using ParseError::ParseError;
};

class IncompleteTournamentError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class MissingCacheError : public Error {
 public:
  explicit MissingCacheError(std::vector<std::string> digests);

  const std::vector<std::string>& digests() const { return digests_; }

 private:
  std::vector<std::string> digests_;
};

// Carries the last iterate so callers can inspect a stalled fit.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate)
      : Error(what), last_iterate_(std::move(last_iterate)) {}

  const std::vector<double>& last_iterate() const { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

}  // namespace judge_audit
