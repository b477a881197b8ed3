#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mnld {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Category of a failure raised by the library. Every public operation reports
/// contract violations by throwing `Error` with one of these kinds.
enum class ErrorKind {
  InvalidInstance,
  InvalidAssortment,
  NonFinite,
  ModelMismatch,
  DomainError,
  NotPositiveDefinite,
  BudgetExceeded,
  InfeasibleConstraints,
  IterationCap,
  NonUniqueMaximizer,
  RejectionCap,
  CannotAchievePd,
  RoundCap,
  NumericalFailure,
  Io,
  Internal,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Internal invariant check that stays on in release builds.
#define MNLD_ASSERT(cond, msg)                                                     \
  do {                                                                             \
    if (!(cond)) throw ::mnld::Error(::mnld::ErrorKind::Internal,                  \
                                     std::string(msg) + " [" #cond "]");           \
  } while (0)

}  // namespace mnld
