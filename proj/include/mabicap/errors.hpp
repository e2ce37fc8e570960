#ifndef MABICAP_ERRORS_HPP_
#define MABICAP_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mabicap {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor extents do not fit the operation.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// An index (token, row, target) is out of range.
class IndexError : public Error {
 public:
  explicit IndexError(const std::string& msg) : Error(msg) {}
};

// An operation was called outside its contract (e.g. backward on a
// non-scalar loss).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration value or missing required input.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Structurally invalid data (wrong sentinels, inconsistent dimensions).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Unparseable input file.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Checkpoint file is damaged (checksum or truncation).
class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& msg) : Error(msg) {}
};

// Checkpoint was written by an incompatible format version.
class VersionError : public Error {
 public:
  explicit VersionError(const std::string& msg) : Error(msg) {}
};

}  // namespace mabicap

#endif  // MABICAP_ERRORS_HPP_
