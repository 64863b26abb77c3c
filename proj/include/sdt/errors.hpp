// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sdt {

/// Base of every error the library throws. The category is a stable prefix
/// (CONFIG, DATA, NUMERIC, IO) surfaced by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("CONFIG", what) {}
};

/// Shape algebra violation. Treated as a configuration problem.
class DimensionError : public ConfigError {
 public:
  explicit DimensionError(const std::string& what) : ConfigError("dimension: " + what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("DATA", what) {}
};

class FormatError : public DataError {
 public:
  explicit FormatError(const std::string& what) : DataError("format: " + what) {}
};

class LengthError : public DataError {
 public:
  explicit LengthError(const std::string& what) : DataError("length: " + what) {}
};

class EmptyMaskError : public DataError {
 public:
  explicit EmptyMaskError(const std::string& what) : DataError("empty mask: " + what) {}
};

/// A spike-only operation received a non-binary tensor.
class ContractError : public DataError {
 public:
  explicit ContractError(const std::string& what) : DataError("contract: " + what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("NUMERIC", what) {}
};

class StaleTapeError : public NumericError {
 public:
  explicit StaleTapeError(const std::string& what) : NumericError("stale tape: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("IO", what) {}
};

}  // namespace sdt
