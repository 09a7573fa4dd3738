#pragma once

#include <stdexcept>
#include <string>

namespace discourse {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration or command usage; the CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Scenario template problems: missing or duplicated placeholder.
class TemplateError : public Error {
 public:
  using Error::Error;
};

// Out-of-range parameter values (e.g. probability outside [0, 100]).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Assembly violations: duplicate roles, empty roster, moderator count.
class InvalidAssemblyError : public Error {
 public:
  using Error::Error;
};

// Transport-level backend failure after retries were exhausted.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Scripted replay problems: exhausted, unreadable or malformed fixture.
class ReplayError : public Error {
 public:
  using Error::Error;
};

// A turn could not be completed (e.g. empty completion after retries).
class TurnError : public Error {
 public:
  using Error::Error;
};

// aggregate_batch received runs with mixed scenarios in one group.
class GroupingError : public Error {
 public:
  using Error::Error;
};

}  // namespace discourse
