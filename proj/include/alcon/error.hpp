#pragma once

#include <stdexcept>
#include <string>

namespace alcon {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the local planner when no path to the requested subgoal exists
// on the observed map. Episode drivers catch this and fall back.
class UnreachableError : public Error {
 public:
  UnreachableError() : Error("unreachable subgoal") {}
};

// A configuration value failed validation; `key()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace alcon
