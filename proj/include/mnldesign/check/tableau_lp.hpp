#pragma once

#include "mnldesign/lp_simplex.hpp"

namespace mnld::check {

struct TableauResult {
  bool feasible = false;
  double objective = 0.0;
  Vec x;
};

/// Textbook two-phase dense tableau simplex with Bland's rule on the
/// standard-form rewrite (shift by lower bounds, upper bounds as rows).
/// Slow and independent of lp_simplex; used only as a reference.
TableauResult tableau_lp(const LpProblem& lp);

}  // namespace mnld::check
