#pragma once

#include <stdexcept>
#include <string>

namespace oqctrl {

/// Caller handed an argument that violates a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

/// A polynomial propagator failed to converge (spectral enclosure misestimate,
/// step-size underflow in the oracle, ...).
class PropagationError : public std::runtime_error {
 public:
  explicit PropagationError(const std::string& what) : std::runtime_error(what) {}
};

/// Phase retrieval detected a per-step phase jump too large for reliable
/// unwrapping; the time grid must be refined.
class UndersampledGridError : public PropagationError {
 public:
  explicit UndersampledGridError(const std::string& what) : PropagationError(what) {}
};

/// The generator's kernel is not one-dimensional; there is no unique attractor.
class AttractorMultiplicityError : public std::runtime_error {
 public:
  AttractorMultiplicityError(const std::string& what, int kernel_dim)
      : std::runtime_error(what), kernel_dim(kernel_dim) {}
  int kernel_dim;
};

/// Raised by the config parser with the offending line and field.
class InvalidConfig : public std::runtime_error {
 public:
  InvalidConfig(const std::string& what, int line, std::string field)
      : std::runtime_error(what), line(line), field(std::move(field)) {}
  int line;
  std::string field;
};

}  // namespace oqctrl
