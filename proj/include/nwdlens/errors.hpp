#pragma once

#include <stdexcept>
#include <string>

namespace nwdlens {

// Fatal configuration problems: bad JSON, unknown keys, wrong types.
// Invariant *violations* are data (see validate_config), not exceptions.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QueryParseError : public std::runtime_error {
 public:
  QueryParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A GrowthSpec whose count targets cannot all be met at once.
class InfeasibleSpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nwdlens
