#pragma once

#include <stdexcept>
#include <string>

namespace spd {

// Caller broke a documented precondition (bad shape, empty input, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A non-finite value showed up in a forward or backward pass.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset construction failed (e.g. persona pool too small for N distractors).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedOperation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const char* message) {
  if (!ok) throw ContractViolation(message);
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ContractViolation(message);
}

}  // namespace spd
