#pragma once

#include <stdexcept>
#include <string>

namespace oerrec {

/// Base of every exception thrown by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data (unreadable files, malformed rows).
class IngestError : public Error {
 public:
  using Error::Error;
};

/// A required input column is missing.
class SchemaError : public Error {
 public:
  explicit SchemaError(std::string column)
      : Error("missing required column: " + column), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// A parameter is outside its documented range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument to an engine operation (bad key, bad value, mismatched ids).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConnectorError : public Error {
 public:
  ConnectorError(std::string repository, const std::string& what)
      : Error(repository + ": " + what), repository_(std::move(repository)) {}
  const std::string& repository() const noexcept { return repository_; }

 private:
  std::string repository_;
};

/// Illegal state transition (e.g. second feedback on one recommendation).
class StateError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

/// Snapshot or event log failed validation.
class PersistenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace oerrec
