#include "mnldesign/check/tableau_lp.hpp"

#include <cmath>
#include <vector>

namespace mnld::check {

namespace {

constexpr double kTol = 1e-10;

struct Tableau {
  // rows 0..m-1 constraints, row m objective; last column is the rhs.
  std::vector<std::vector<double>> t;
  std::vector<int> basis;
  int m = 0;
  int ncol = 0;  // without rhs

  double& rhs(int i) { return t[static_cast<size_t>(i)][static_cast<size_t>(ncol)]; }

  void pivot(int r, int c) {
    auto& pr = t[static_cast<size_t>(r)];
    const double p = pr[static_cast<size_t>(c)];
    for (double& v : pr) v /= p;
    for (int i = 0; i <= m; ++i) {
      if (i == r) continue;
      auto& row = t[static_cast<size_t>(i)];
      const double f = row[static_cast<size_t>(c)];
      if (f == 0.0) continue;
      for (int j = 0; j <= ncol; ++j) row[static_cast<size_t>(j)] -= f * pr[static_cast<size_t>(j)];
    }
    basis[static_cast<size_t>(r)] = c;
  }

  // Minimizes the objective row (stored as reduced costs). Columns >= limit
  // may not enter. Returns false if unbounded.
  bool solve(int limit) {
    for (;;) {
      int enter = -1;
      for (int j = 0; j < limit; ++j) {
        if (t[static_cast<size_t>(m)][static_cast<size_t>(j)] < -kTol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        const double a = t[static_cast<size_t>(i)][static_cast<size_t>(enter)];
        if (a <= kTol) continue;
        const double ratio = rhs(i) / a;
        if (leave < 0 || ratio < best - 1e-12 ||
            (std::abs(ratio - best) <= 1e-12 && basis[static_cast<size_t>(i)] < basis[static_cast<size_t>(leave)])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }
};

}  // namespace

TableauResult tableau_lp(const LpProblem& lp) {
  const int n = static_cast<int>(lp.c.size());
  const int me = static_cast<int>(lp.b_eq.size());
  const int ml = static_cast<int>(lp.b_le.size());
  // Rows: equalities, <= rows, then y_j <= u_j - l_j.
  struct Row {
    std::vector<double> a;
    double b;
    int kind;  // 0 eq, 1 le
  };
  std::vector<Row> rows;
  for (int i = 0; i < me; ++i) {
    Row r{std::vector<double>(static_cast<size_t>(n)), lp.b_eq[i], 0};
    for (int j = 0; j < n; ++j) {
      r.a[static_cast<size_t>(j)] = lp.A_eq(i, j);
      r.b -= lp.A_eq(i, j) * lp.lower[j];
    }
    rows.push_back(r);
  }
  for (int i = 0; i < ml; ++i) {
    Row r{std::vector<double>(static_cast<size_t>(n)), lp.b_le[i], 1};
    for (int j = 0; j < n; ++j) {
      r.a[static_cast<size_t>(j)] = lp.A_le(i, j);
      r.b -= lp.A_le(i, j) * lp.lower[j];
    }
    rows.push_back(r);
  }
  for (int j = 0; j < n; ++j) {
    Row r{std::vector<double>(static_cast<size_t>(n)), lp.upper[j] - lp.lower[j], 1};
    r.a[static_cast<size_t>(j)] = 1.0;
    rows.push_back(r);
  }
  const int m = static_cast<int>(rows.size());
  int n_slack = 0;
  for (const Row& r : rows) n_slack += r.kind == 1 ? 1 : 0;
  // Every row gets an artificial; simple and textbook.
  const int ncol = n + n_slack + m;
  Tableau T;
  T.m = m;
  T.ncol = ncol;
  T.t.assign(static_cast<size_t>(m + 1), std::vector<double>(static_cast<size_t>(ncol + 1), 0.0));
  T.basis.assign(static_cast<size_t>(m), -1);
  int slack = n;
  for (int i = 0; i < m; ++i) {
    Row& r = rows[static_cast<size_t>(i)];
    auto& row = T.t[static_cast<size_t>(i)];
    double sign = r.b < 0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) row[static_cast<size_t>(j)] = sign * r.a[static_cast<size_t>(j)];
    if (r.kind == 1) row[static_cast<size_t>(slack++)] = sign;
    row[static_cast<size_t>(n + n_slack + i)] = 1.0;
    row[static_cast<size_t>(ncol)] = sign * r.b;
    T.basis[static_cast<size_t>(i)] = n + n_slack + i;
  }
  // Phase I objective: sum of artificials, expressed in reduced form.
  auto& obj = T.t[static_cast<size_t>(m)];
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= ncol; ++j)
      if (j < n + n_slack || j == ncol) obj[static_cast<size_t>(j)] -= T.t[static_cast<size_t>(i)][static_cast<size_t>(j)];
  TableauResult res;
  T.solve(ncol);
  if (-T.rhs(m) > 1e-7) return res;
  // Drive remaining artificials out of the basis where possible.
  for (int i = 0; i < m; ++i) {
    if (T.basis[static_cast<size_t>(i)] < n + n_slack) continue;
    for (int j = 0; j < n + n_slack; ++j) {
      if (std::abs(T.t[static_cast<size_t>(i)][static_cast<size_t>(j)]) > 1e-9) {
        T.pivot(i, j);
        break;
      }
    }
  }
  // Phase II objective on the shifted variables.
  std::fill(obj.begin(), obj.end(), 0.0);
  for (int j = 0; j < n; ++j) obj[static_cast<size_t>(j)] = lp.c[j];
  for (int i = 0; i < m; ++i) {
    const int bj = T.basis[static_cast<size_t>(i)];
    const double f = obj[static_cast<size_t>(bj)];
    if (f == 0.0) continue;
    for (int j = 0; j <= ncol; ++j) obj[static_cast<size_t>(j)] -= f * T.t[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }
  if (!T.solve(n + n_slack)) return res;
  res.feasible = true;
  res.x = lp.lower;
  for (int i = 0; i < m; ++i) {
    const int bj = T.basis[static_cast<size_t>(i)];
    if (bj < n) res.x[bj] += T.rhs(i);
  }
  res.objective = lp.c.dot(res.x);
  return res;
}

}  // namespace mnld::check
