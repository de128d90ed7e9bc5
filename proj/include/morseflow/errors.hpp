#pragma once

#include <stdexcept>
#include <string>

namespace morseflow {

// Invalid user-supplied configuration (grids, partitions, scenario files).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A noise path was evaluated outside its stored horizon.
class OutOfHorizonError : public std::runtime_error {
 public:
  explicit OutOfHorizonError(const std::string& what)
      : std::runtime_error(what) {}
};

// A state-space point lies outside the system's box.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// An operation that needs a nonempty cell set received an empty one.
class EmptySetError : public std::runtime_error {
 public:
  explicit EmptySetError(const std::string& what)
      : std::runtime_error(what) {}
};

// An operation's structural precondition was violated by the caller
// (e.g. mismatched partitions, non-nested filtrations).
class MisuseError : public std::runtime_error {
 public:
  explicit MisuseError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine failed to converge.
class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace morseflow
