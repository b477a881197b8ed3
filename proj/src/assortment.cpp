#include "mnldesign/assortment.hpp"

#include <algorithm>
#include <cmath>

namespace mnld {

double revenue_of(const Vec& u, const Vec& r, std::span<const int> items) {
  if (items.empty()) return 0.0;
  double shift = 0.0;
  for (int i : items) shift = std::max(shift, u[i]);
  double num = 0.0, den = std::exp(-shift);
  for (int i : items) {
    const double e = std::exp(u[i] - shift);
    num += e * r[i];
    den += e;
  }
  return num / den;
}

double revenue(const Instance& inst, const Assortment& S, const Vec& utilities) {
  if (!inst.outside_option()) throw Error(ErrorKind::ModelMismatch, "revenue requires the outside-option model");
  validate_assortment(inst, S);
  if (utilities.size() != inst.num_arms() || !utilities.allFinite()) {
    throw Error(ErrorKind::DomainError, "utilities must be finite with one entry per arm");
  }
  return revenue_of(utilities, inst.revenues(), S.items());
}

RevenueSolution best_assortment(const RevenueQuery& q) {
  const int n = static_cast<int>(q.utilities.size());
  if (q.revenues.size() != n) throw Error(ErrorKind::DomainError, "utilities and revenues lengths differ");
  if (!q.utilities.allFinite()) throw Error(ErrorKind::NonFinite, "utilities must be finite");
  RatioProblem p;
  const double shift = std::max(0.0, q.utilities.maxCoeff());
  p.w = (q.utilities.array() - shift).exp().matrix();
  p.s = q.revenues;
  p.denom_const = std::exp(-shift);
  p.num_const = 0.0;
  p.K = q.K;
  p.min_size = std::max<int>(1, static_cast<int>(q.forced_in.size()));
  p.forced_in = q.forced_in;
  p.forced_out = q.forced_out;
  const RatioSolution sol = dinkelbach(p);
  RevenueSolution out;
  out.S = sol.S;
  out.value = revenue_of(q.utilities, q.revenues, out.S.items());
  return out;
}

namespace {

// Higher value, then smaller set, then lexicographically smaller items.
bool better(double va, const Assortment& a, double vb, const Assortment& b) {
  if (va != vb) return va > vb;
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

BestAlternative best_and_alternative(const Instance& inst, const Vec& u_plus, const Vec& u_minus, int K) {
  const int n = inst.num_arms();
  if (u_plus.size() != n || u_minus.size() != n) throw Error(ErrorKind::DomainError, "utility vectors need N entries");
  BestAlternative out;
  RevenueQuery q;
  q.revenues = inst.revenues();
  q.K = K;
  q.utilities = u_minus;
  const RevenueSolution best = best_assortment(q);
  out.best = best.S;
  out.best_value = best.value;

  q.utilities = u_plus;
  out.alternative = Assortment();
  out.alt_value = 0.0;
  auto consider = [&](const RevenueSolution& s) {
    if (better(s.value, s.S, out.alt_value, out.alternative)) {
      out.alt_value = s.value;
      out.alternative = s.S;
    }
  };
  for (int i : out.best.items()) {
    if (n - 1 < 1) continue;
    q.forced_in.clear();
    q.forced_out = {i};
    consider(best_assortment(q));
  }
  q.forced_out.clear();
  for (int j = 0; j < n; ++j) {
    if (out.best.contains(j)) continue;
    q.forced_in = {j};
    consider(best_assortment(q));
  }
  return out;
}

TrueGap true_gap(const Instance& inst, double margin) {
  if (!inst.outside_option()) throw Error(ErrorKind::ModelMismatch, "true_gap requires the outside-option model");
  if (!inst.theta_star()) throw Error(ErrorKind::DomainError, "true_gap needs theta_star");
  const Vec u = utilities(inst, *inst.theta_star());
  const BestAlternative ba = best_and_alternative(inst, u, u, inst.capacity());
  TrueGap g;
  g.S_star = ba.best;
  g.runner_up = ba.alternative;
  g.delta_min = ba.best_value - ba.alt_value;
  if (!(g.delta_min > margin)) {
    throw Error(ErrorKind::NonUniqueMaximizer, "revenue gap " + std::to_string(g.delta_min) + " is not above " +
                                                   std::to_string(margin));
  }
  return g;
}

}  // namespace mnld
