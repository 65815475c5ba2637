#pragma once

#include <stdexcept>
#include <string>

namespace tampsim {

/// Argument outside the mathematical domain of a model function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operation invoked on a region in the wrong lifecycle state.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid or unknown configuration entry. `key()` is the dotted key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simulation invariant broken at a specific slot and region.
class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(long slot, int region, const std::string& what)
      : std::runtime_error("slot " + std::to_string(slot) + ", region " + std::to_string(region) +
                           ": " + what),
        slot_(slot),
        region_(region) {}
  long slot() const noexcept { return slot_; }
  int region() const noexcept { return region_; }

 private:
  long slot_;
  int region_;
};

}  // namespace tampsim
