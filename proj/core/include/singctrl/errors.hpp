#pragma once

#include <stdexcept>
#include <string>

namespace singctrl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rollout produced NaN/Inf; `step` is the first bad node index.
struct RolloutDiverged : Error {
  int step;
  explicit RolloutDiverged(int k)
      : Error("state rollout produced a non-finite value at step " + std::to_string(k)), step(k) {}
};

// Running cost undefined at a node (e.g. log of a nonpositive state).
struct CostEvaluationError : Error {
  int step;
  explicit CostEvaluationError(int k)
      : Error("running cost is non-finite at step " + std::to_string(k)), step(k) {}
};

struct ContractViolation : Error {
  using Error::Error;
};

struct InfeasibleProjection : Error {
  using Error::Error;
};

struct ParameterDomainError : Error {
  using Error::Error;
};

struct InternalConsistencyError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace singctrl
