#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace balent {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument or data object violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A special function was evaluated outside its domain.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A file exists but its contents do not follow the expected layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Opening, reading or writing a file failed.
class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A computation produced a value that cannot be trusted (NaN, divergence).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Training diverged; carries the epoch at which the loss became non-finite.
class TrainingError : public NumericError {
 public:
  TrainingError(const std::string& what, std::size_t epoch)
      : NumericError(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Malformed configuration text; carries the offending key and line.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& what, std::string key, std::size_t line)
      : ValidationError("config line " + std::to_string(line) + ", key '" + key + "': " + what),
        key_(std::move(key)),
        line_(line) {}

  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string key_;
  std::size_t line_;
};

}  // namespace balent
