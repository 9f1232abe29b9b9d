#pragma once

#include <stdexcept>
#include <string>

namespace biphoton {

// Raised when adaptive quadrature cannot reach the requested tolerance
// within its refinement budget.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The measurement map of a tomography setting set does not have full rank.
class SingularMapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientCountsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No imperfection parameter set reproduces the requested targets.
class InfeasibleTargetsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace biphoton
