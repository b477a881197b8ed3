#pragma once

#include "mnldesign/common.hpp"

#include <string>

namespace mnld {

/// min c^T x  s.t.  A_eq x = b_eq,  A_le x <= b_le,  lower <= x <= upper.
/// Every variable needs a finite lower and upper bound.
struct LpProblem {
  Vec c;
  Mat A_eq;
  Vec b_eq;
  Mat A_le;
  Vec b_le;
  Vec lower;
  Vec upper;
};

enum class LpStatus { Optimal, Infeasible };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vec x;
  double objective = 0.0;
  int pivots = 0;
  bool used_bland = false;
  std::string diagnostic;
};

struct LpOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-9;
  int reinvert_every = 100;
  int max_pivots = 0;  // 0 = 50 * (rows + cols)
};

/// Two-phase bounded-variable primal simplex on a dense tableau. Dantzig
/// pricing; switches to Bland's rule after 5n consecutive degenerate pivots.
/// If the basis loses primal feasibility or becomes singular, or Phase I
/// reports infeasibility, the solve is repeated once with reinversion after
/// every pivot; a second failure ends with status Infeasible and a diagnostic.
LpResult lp_simplex(const LpProblem& lp, const LpOptions& opts = {});

}  // namespace mnld
