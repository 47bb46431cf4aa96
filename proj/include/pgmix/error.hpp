#pragma once

#include <stdexcept>
#include <string>

namespace pgmix {

/// Malformed or inconsistent inputs (bad CSV values, invalid parameters).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// A requested computation is undefined for the given inputs
/// (e.g. bounded LRs across propositions with different parameter spaces).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace pgmix
