#pragma once

#include <stdexcept>
#include <string>

namespace tcil {

// Malformed input files (taxonomy, dataset, checkpoint, config).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input whose values violate a documented constraint.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tcil
