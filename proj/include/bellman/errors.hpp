#pragma once

#include <stdexcept>
#include <string>

namespace bellman {

/// A point, interval or parameter lies outside the domain an operation is defined on.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A dyadic interval is finer than the step function it is applied to.
struct LevelTooDeepError : DomainError {
  using DomainError::DomainError;
};

/// A +-1 assignment leaves an interval with a nonzero coefficient uncovered.
struct MissingEpsilonError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ZeroDenominatorError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A finite-difference stencil does not fit inside the smooth region.
struct StencilError : DomainError {
  using DomainError::DomainError;
};

/// A replayed witness disagrees with what it claims.
struct MismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Split or admissibility constraints of the main inequality are violated.
struct ConstraintError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace bellman
