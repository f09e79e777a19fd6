#pragma once

#include <stdexcept>
#include <string>

namespace ccy {

// All recoverable failures are reported through typed exceptions so the CLI
// can map them onto exit codes (2 = bad input, 3 = numerical failure,
// 4 = broken internal invariant).

struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnstableRangeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularPointError : std::domain_error {
  using std::domain_error::domain_error;
};

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProbeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConditioningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotModeledError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SetupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PositivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPositiveMetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace ccy
