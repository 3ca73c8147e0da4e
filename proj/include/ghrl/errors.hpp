#pragma once

#include <stdexcept>
#include <string>

namespace ghrl {

// Base of every error raised by the library. The CLI maps the three
// families below onto exit codes 2 (config), 3 (data) and 4 (training).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class WeatherFormatError : public DataError {
 public:
  WeatherFormatError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class WeatherGapError : public DataError {
 public:
  using DataError::DataError;
};

class WeatherDomainError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class IntegrationDomainError : public DataError {
 public:
  using DataError::DataError;
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

}  // namespace ghrl
