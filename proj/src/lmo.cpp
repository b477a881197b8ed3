#include "mnldesign/lmo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mnld {

const char* to_string(Backend b) {
  switch (b) {
    case Backend::Brute: return "brute";
    case Backend::Milp: return "milp";
    case Backend::Lifted: return "lifted";
  }
  return "unknown";
}

Backend backend_from_string(const std::string& s) {
  if (s == "brute") return Backend::Brute;
  if (s == "milp") return Backend::Milp;
  if (s == "lifted") return Backend::Lifted;
  throw Error(ErrorKind::DomainError, "unknown backend '" + s + "'");
}

namespace {

Eigen::LLT<Mat> factor_pd(const Mat& M, const char* what) {
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, std::string(what) + " is not positive definite");
  return llt;
}

// Shift keeps the largest weight (including the outside option's) at 1.
double weight_shift(const Instance& inst, const Vec& u) {
  double shift = u.maxCoeff();
  if (inst.outside_option()) shift = std::max(shift, 0.0);
  return shift;
}

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

TraceTerms trace_terms(const Instance& inst, const Vec& theta0, const Mat& M) {
  const auto llt = factor_pd(M, "design matrix");
  TraceTerms t;
  const Vec u = utilities(inst, theta0);
  const double shift = weight_shift(inst, u);
  t.w = (u.array() - shift).exp().matrix();
  t.c = inst.outside_option() ? std::exp(-shift) : 0.0;
  const Mat& F = inst.features();
  const Mat Z = llt.matrixL().solve(F.transpose());  // columns L^{-1} a_i
  t.G = Z.transpose() * Z;
  t.G = 0.5 * (t.G + t.G.transpose()).eval();
  t.s = t.G.diagonal();
  t.K = inst.capacity();
  t.min_size = inst.min_assortment_size();
  return t;
}

double trace_value(const TraceTerms& t, std::span<const int> items) {
  double W = t.c, num = 0.0, quad = 0.0;
  for (size_t a = 0; a < items.size(); ++a) {
    const int i = items[a];
    W += t.w[i];
    num += t.w[i] * t.s[i];
    double cross = 0.0;
    for (size_t b = 0; b < a; ++b) cross += t.w[items[b]] * t.G(items[b], i);
    quad += t.w[i] * (t.w[i] * t.G(i, i) + 2.0 * cross);
  }
  return num / W - quad / (W * W);
}

double trace_direct(const Instance& inst, const Vec& theta0, const Mat& M, const Assortment& S) {
  const auto llt = factor_pd(M, "design matrix");
  const Mat I = fisher_info(inst, S, theta0);
  return llt.solve(I).trace();
}

uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (r > std::numeric_limits<uint64_t>::max()) return std::numeric_limits<uint64_t>::max();
  }
  return static_cast<uint64_t>(r);
}

uint64_t count_assortments(int n, int lo, int hi) {
  uint64_t total = 0;
  for (int k = std::max(lo, 0); k <= hi; ++k) {
    const uint64_t b = binomial(n, k);
    if (b > std::numeric_limits<uint64_t>::max() - total) return std::numeric_limits<uint64_t>::max();
    total += b;
  }
  return total;
}

LmoResult lmo_brute(const Instance& inst, const Vec& theta0, const Mat& M, const BruteOptions& opts) {
  const auto t0 = Clock::now();
  const int n = inst.num_arms();
  const int K = inst.capacity();
  const int lo = inst.min_assortment_size();
  const uint64_t total = count_assortments(n, lo, K);
  if (total > opts.budget) {
    throw Error(ErrorKind::BudgetExceeded, std::to_string(total) + " assortments exceed the enumeration budget of " +
                                               std::to_string(opts.budget));
  }
  const TraceTerms t = trace_terms(inst, theta0, M);

  std::vector<int> stack;
  stack.reserve(static_cast<size_t>(K));
  // Running sums for each depth: W (with c), sum w s, quadratic form.
  std::vector<double> Ws(static_cast<size_t>(K) + 1), Ns(static_cast<size_t>(K) + 1), Qs(static_cast<size_t>(K) + 1);
  Ws[0] = t.c;
  Ns[0] = 0.0;
  Qs[0] = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> best_set;
  uint64_t evaluated = 0;

  // Preorder DFS visits sorted tuples in lexicographic order.
  auto visit = [&](auto&& self, int start) -> void {
    const size_t depth = stack.size();
    for (int j = start; j < n; ++j) {
      double cross = 0.0;
      for (int i : stack) cross += t.w[i] * t.G(i, j);
      const double wj = t.w[j];
      Ws[depth + 1] = Ws[depth] + wj;
      Ns[depth + 1] = Ns[depth] + wj * t.s[j];
      Qs[depth + 1] = Qs[depth] + wj * (wj * t.G(j, j) + 2.0 * cross);
      stack.push_back(j);
      if (static_cast<int>(depth) + 1 >= lo) {
        const double W = Ws[depth + 1];
        const double val = Ns[depth + 1] / W - Qs[depth + 1] / (W * W);
        if (val > best) {
          best = val;
          best_set = stack;
        }
        if ((++evaluated & 0xFFFF) == 0 && opts.deadline && Clock::now() > *opts.deadline) {
          throw Error(ErrorKind::BudgetExceeded, "brute-force LMO deadline exceeded");
        }
      }
      if (static_cast<int>(depth) + 1 < K) self(self, j + 1);
      stack.pop_back();
    }
  };
  visit(visit, 0);

  LmoResult res;
  res.assortment = Assortment(best_set);
  res.value = best;
  res.certified_gap = 0.0;
  res.backend = Backend::Brute;
  res.stats.evaluated = evaluated;
  res.stats.seconds = elapsed(t0);
  res.stats.status = "optimal";
  return res;
}

double ratio_value(const RatioProblem& p, std::span<const int> items) {
  double num = p.num_const, den = p.denom_const;
  for (int i : items) {
    num += p.w[i] * p.s[i];
    den += p.w[i];
  }
  return num / den;
}

namespace {

struct Inner {
  std::vector<int> items;
  double value = 0.0;
};

// Exact maximizer of sum_{i in S} w_i (s_i - lam) over the constrained
// cardinality family. `free_items` is the sorted list of non-forced items.
Inner inner_step(const RatioProblem& p, const std::vector<int>& free_items, double lam, std::vector<double>& terms,
                 std::vector<int>& order) {
  Inner out;
  out.items = p.forced_in;
  for (int i : p.forced_in) out.value += p.w[i] * (p.s[i] - lam);
  terms.resize(free_items.size());
  order.resize(free_items.size());
  for (size_t k = 0; k < free_items.size(); ++k) {
    const int i = free_items[k];
    terms[k] = p.w[i] * (p.s[i] - lam);
    order[k] = static_cast<int>(k);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return terms[static_cast<size_t>(a)] > terms[static_cast<size_t>(b)]; });
  size_t k = 0;
  while (k < order.size() && static_cast<int>(out.items.size()) < p.K && terms[static_cast<size_t>(order[k])] > 0.0) {
    out.items.push_back(free_items[static_cast<size_t>(order[k])]);
    out.value += terms[static_cast<size_t>(order[k])];
    ++k;
  }
  while (k < order.size() && static_cast<int>(out.items.size()) < p.min_size) {
    out.items.push_back(free_items[static_cast<size_t>(order[k])]);
    out.value += terms[static_cast<size_t>(order[k])];
    ++k;
  }
  std::sort(out.items.begin(), out.items.end());
  return out;
}

}  // namespace

RatioSolution dinkelbach(const RatioProblem& p) {
  const int n = static_cast<int>(p.w.size());
  if (p.s.size() != n) throw Error(ErrorKind::DomainError, "w and s lengths differ");
  std::vector<char> state(static_cast<size_t>(n), 0);  // 1 = forced in, 2 = forced out
  for (int i : p.forced_in) {
    if (i < 0 || i >= n || state[static_cast<size_t>(i)]) throw Error(ErrorKind::InfeasibleConstraints, "bad forced_in item");
    state[static_cast<size_t>(i)] = 1;
  }
  for (int i : p.forced_out) {
    if (i < 0 || i >= n) throw Error(ErrorKind::InfeasibleConstraints, "bad forced_out item");
    if (state[static_cast<size_t>(i)] == 1) throw Error(ErrorKind::InfeasibleConstraints, "item both forced in and out");
    state[static_cast<size_t>(i)] = 2;
  }
  std::vector<int> free_items;
  for (int i = 0; i < n; ++i) {
    if (state[static_cast<size_t>(i)] == 0) free_items.push_back(i);
    if (!(p.w[i] > 0.0)) throw Error(ErrorKind::DomainError, "weights must be positive");
  }
  const int n_forced = static_cast<int>(p.forced_in.size());
  if (n_forced > p.K || p.min_size > p.K || n_forced + static_cast<int>(free_items.size()) < p.min_size) {
    throw Error(ErrorKind::InfeasibleConstraints, "no set satisfies the cardinality and forcing constraints");
  }
  if (p.min_size < 1 && p.denom_const <= 0.0) {
    throw Error(ErrorKind::DomainError, "empty set has zero denominator");
  }

  std::vector<double> terms;
  std::vector<int> order;
  Inner cur = inner_step(p, free_items, 0.0, terms, order);
  double lam = ratio_value(p, cur.items);
  RatioSolution sol;
  for (int it = 1; it <= 100; ++it) {
    Inner next = inner_step(p, free_items, lam, terms, order);
    const double h = next.value + p.num_const - lam * p.denom_const;
    double scale = std::abs(p.num_const) + std::abs(lam) * p.denom_const;
    for (int i : next.items) scale += std::abs(p.w[i] * p.s[i]) + std::abs(lam) * p.w[i];
    if (h <= 1e-12 * std::max(scale, 1e-300) || next.items == cur.items) {
      sol.S = Assortment(cur.items);
      sol.ratio = lam;
      sol.iterations = it;
      return sol;
    }
    const double lam_next = ratio_value(p, next.items);
    MNLD_ASSERT(lam_next > lam, "Dinkelbach parameter must increase strictly");
    cur = std::move(next);
    lam = lam_next;
  }
  throw Error(ErrorKind::IterationCap, "Dinkelbach did not converge in 100 iterations");
}

RatioProblem lifted_ratio_problem(const Instance& inst, const Vec& theta0, const Mat& Mt) {
  const int d = inst.dim();
  if (Mt.rows() != d + 1 || Mt.cols() != d + 1) throw Error(ErrorKind::DomainError, "lifted matrix has wrong shape");
  const auto llt = factor_pd(Mt, "lifted design matrix");
  const int n = inst.num_arms();
  Mat At(d + 1, n);
  At.topRows(d) = inst.features().transpose();
  At.row(d).setOnes();
  const Mat Z = llt.matrixL().solve(At);
  RatioProblem p;
  p.s = Z.colwise().squaredNorm().transpose();
  const Vec u = utilities(inst, theta0);
  const double shift = weight_shift(inst, u);
  p.w = (u.array() - shift).exp().matrix();
  if (inst.outside_option()) {
    Vec e = Vec::Zero(d + 1);
    e[d] = 1.0;
    const double s0 = llt.matrixL().solve(e).squaredNorm();
    p.denom_const = std::exp(-shift);
    p.num_const = p.denom_const * s0;
  }
  p.K = inst.capacity();
  p.min_size = inst.min_assortment_size();
  return p;
}

LmoResult lmo_lifted(const Instance& inst, const Vec& theta0, const Mat& Mt) {
  const auto t0 = Clock::now();
  const RatioProblem p = lifted_ratio_problem(inst, theta0, Mt);
  const RatioSolution sol = dinkelbach(p);
  LmoResult res;
  res.assortment = sol.S;
  res.value = sol.ratio;
  res.certified_gap = 0.0;
  res.backend = Backend::Lifted;
  res.stats.evaluated = static_cast<uint64_t>(sol.iterations);
  res.stats.seconds = elapsed(t0);
  res.stats.status = "optimal";
  return res;
}

}  // namespace mnld
