#pragma once

#include "mnldesign/lmo.hpp"

#include <vector>

namespace mnld {

/// Expected revenue sum_{i in S} e^{u_i} r_i / (1 + sum_{j in S} e^{u_j}),
/// evaluated with a max shift. S may be empty (revenue 0).
double revenue_of(const Vec& utilities, const Vec& revenues, std::span<const int> items);

/// Checked form for an outside-option instance and admissible S.
double revenue(const Instance& inst, const Assortment& S, const Vec& utilities);

struct RevenueQuery {
  Vec utilities;
  Vec revenues;
  int K = 1;
  std::vector<int> forced_in;
  std::vector<int> forced_out;
};

struct RevenueSolution {
  Assortment S;
  double value = 0.0;
};

/// Exact revenue maximizer over {forced_in <= S, S disjoint from
/// forced_out, 1 <= |S| <= K}. Never returns the empty set.
RevenueSolution best_assortment(const RevenueQuery& q);

struct BestAlternative {
  Assortment best;         // maximizer under the pessimistic utilities
  Assortment alternative;  // maximizer over S != best under the optimistic ones
  double best_value = 0.0; // pessimistic revenue of `best`
  double alt_value = 0.0;  // optimistic revenue of `alternative`
};

/// The alternative is searched over one exclusion solve per item of the
/// best set, one inclusion solve per item outside it, and the empty set.
BestAlternative best_and_alternative(const Instance& inst, const Vec& u_plus, const Vec& u_minus, int K);

struct TrueGap {
  Assortment S_star;
  Assortment runner_up;
  double delta_min = 0.0;
};

/// Optimal assortment under theta* and its revenue margin over every other
/// set. Throws NonUniqueMaximizer when the margin is <= `margin`.
TrueGap true_gap(const Instance& inst, double margin = 1e-9);

}  // namespace mnld
