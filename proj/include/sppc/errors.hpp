#pragma once

#include <stdexcept>
#include <string>

namespace sppc {

/// Precondition or dimension check failed at an API boundary.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model or weight matrix failed validation (non-PD weight, unreachable pair).
class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative method hit its cap without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double defect)
      : std::runtime_error(what), defect_(defect) {}
  double defect() const noexcept { return defect_; }

 private:
  double defect_;
};

/// Stability constants came out outside their admissible range.
class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

#define SPPC_EXPECT(cond, msg)                                     \
  do {                                                             \
    if (!(cond)) throw ::sppc::ContractViolation(std::string(msg)); \
  } while (0)

}  // namespace sppc
