#pragma once

#include <stdexcept>
#include <string>

namespace chaowalk {

// Every failure surfaced by the library derives from Error so callers (the
// CLI in particular) can map categories to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid values handed to a constructor (probabilities outside (0,1), ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A generator produced a value that violates an Environment invariant.
class GenerationError : public Error {
 public:
  GenerationError(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// An operation needs more environment sites (or a longer sequence) than exist.
class BoundsError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// A Gaussian density was asked for at zero variance.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// A configured resource cap (pushforward depth, exact-engine size) was hit.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

// Experiment configuration failed schema validation; pointer is a JSON
// pointer to the offending node.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(pointer) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

// Numeric quality gate failed (e.g. pmf mass drifted beyond tolerance).
class NumericQualityError : public Error {
 public:
  using Error::Error;
};

}  // namespace chaowalk
