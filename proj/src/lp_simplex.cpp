#include "mnldesign/lp_simplex.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mnld {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Solver {
  // Full constraint system A x = b over structural, slack and artificial columns.
  RowMat A;
  Vec b;
  Vec lo, up, cost;
  Vec x;
  std::vector<int> basis;
  std::vector<int> pos;  // pos[j] = row of basic j, or -1
  RowMat T;              // B^{-1} A
  Vec d;                 // reduced costs
  LpOptions opts;
  double feas_tol = 0.0;
  double opt_tol = 0.0;
  int pivots = 0;
  int since_reinvert = 0;
  int degenerate_run = 0;
  bool bland = false;
  std::string diag;

  int rows() const { return static_cast<int>(A.rows()); }
  int cols() const { return static_cast<int>(A.cols()); }

  bool reinvert() {
    const int m = rows();
    since_reinvert = 0;
    if (m == 0) {
      T.resize(0, cols());
      d = cost;
      return true;
    }
    Mat Bm(m, m);
    for (int i = 0; i < m; ++i) Bm.col(i) = A.col(basis[static_cast<size_t>(i)]);
    Eigen::PartialPivLU<Mat> lu(Bm);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) {
      diag = "basis matrix is singular or ill-conditioned (rcond=" + std::to_string(rc) + ")";
      return false;
    }
    T = lu.solve(Mat(A));
    Vec rhs = b;
    for (int j = 0; j < cols(); ++j) {
      if (pos[static_cast<size_t>(j)] < 0 && x[j] != 0.0) rhs -= A.col(j) * x[j];
    }
    const Vec xb = lu.solve(rhs);
    for (int i = 0; i < m; ++i) x[basis[static_cast<size_t>(i)]] = xb[i];
    price();
    return true;
  }

  // Largest bound violation among basic variables; a clean basis keeps this
  // at rounding level, so a large value means a pivot went wrong.
  double basic_violation() const {
    double v = 0.0;
    for (int i = 0; i < rows(); ++i) {
      const int j = basis[static_cast<size_t>(i)];
      v = std::max({v, lo[j] - x[j], x[j] - up[j]});
    }
    return v;
  }

  void price() {
    Vec cb(rows());
    for (int i = 0; i < rows(); ++i) cb[i] = cost[basis[static_cast<size_t>(i)]];
    d = cost - T.transpose() * cb;
  }

  // Returns entering column and direction (+1 increase, -1 decrease), or -1.
  int choose_entering(int& dir) const {
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j < cols(); ++j) {
      if (pos[static_cast<size_t>(j)] >= 0 || up[j] - lo[j] <= 0.0) continue;
      const bool at_upper = x[j] >= up[j];
      double score = 0.0;
      int dj = 0;
      if (!at_upper && d[j] < -opt_tol) {
        score = -d[j];
        dj = 1;
      } else if (at_upper && d[j] > opt_tol) {
        score = d[j];
        dj = -1;
      }
      if (dj == 0) continue;
      if (bland) {
        dir = dj;
        return j;
      }
      if (score > best_score) {
        best_score = score;
        best = j;
        dir = dj;
      }
    }
    return best;
  }

  // One simplex step. Returns false when the entering move is unbounded.
  bool step(int q, int dir) {
    const int m = rows();
    double t_best = up[q] - lo[q];  // bound flip
    int r = -1;
    double r_alpha = 0.0;
    for (int i = 0; i < m; ++i) {
      const double alpha = dir * T(i, q);
      const int bi = basis[static_cast<size_t>(i)];
      double t;
      if (alpha > opts.pivot_tol) {
        t = std::max(0.0, x[bi] - lo[bi]) / alpha;
      } else if (alpha < -opts.pivot_tol && up[bi] < kInf) {
        t = std::max(0.0, up[bi] - x[bi]) / -alpha;
      } else {
        continue;
      }
      const double tie = t_best < kInf ? 1e-12 * std::max(1.0, t_best) : 0.0;
      bool take = false;
      if (t < t_best - tie) {
        take = true;
      } else if (t <= t_best + tie && r >= 0) {
        take = bland ? bi < basis[static_cast<size_t>(r)] : std::abs(alpha) > std::abs(r_alpha);
      }
      if (take) {
        t_best = std::min(t, t_best);
        r = i;
        r_alpha = alpha;
      }
    }
    if (!(t_best < kInf)) return false;

    if (t_best <= feas_tol) {
      ++degenerate_run;
      if (!bland && degenerate_run > 5 * cols()) bland = true;
    } else {
      degenerate_run = 0;
    }

    x[q] += dir * t_best;
    for (int i = 0; i < m; ++i) x[basis[static_cast<size_t>(i)]] -= dir * t_best * T(i, q);

    if (r < 0) {
      x[q] = dir > 0 ? up[q] : lo[q];
      return true;
    }
    const int leaving = basis[static_cast<size_t>(r)];
    // Snap the leaving variable onto the bound it reached.
    x[leaving] = r_alpha > 0 ? lo[leaving] : up[leaving];

    const double piv = T(r, q);
    const Vec colq = T.col(q);
    const Eigen::RowVectorXd rowr = T.row(r) / piv;
    T.noalias() -= colq * rowr;
    T.row(r) = rowr;
    const double dq = d[q];
    d -= dq * rowr.transpose();
    d[q] = 0.0;
    pos[static_cast<size_t>(leaving)] = -1;
    pos[static_cast<size_t>(q)] = r;
    basis[static_cast<size_t>(r)] = q;
    ++pivots;
    if (++since_reinvert >= opts.reinvert_every) {
      if (!reinvert()) return true;
    }
    return true;
  }

  enum class Outcome { Optimal, Unbounded, Numerical, PivotCap };

  Outcome run(int max_pivots) {
    for (;;) {
      int dir = 0;
      const int q = choose_entering(dir);
      if (q < 0) {
        // Confirm optimality on a fresh factorization.
        if (since_reinvert == 0) return Outcome::Optimal;
        if (!reinvert()) return Outcome::Numerical;
        int dir2 = 0;
        if (choose_entering(dir2) < 0) return Outcome::Optimal;
        continue;
      }
      if (pivots >= max_pivots) return Outcome::PivotCap;
      if (!step(q, dir)) return Outcome::Unbounded;
      if (!diag.empty()) return Outcome::Numerical;
    }
  }
};

LpResult attempt(const LpProblem& lp, const LpOptions& opts, bool& suspect) {
  const int n = static_cast<int>(lp.c.size());
  const int m_eq = static_cast<int>(lp.b_eq.size());
  const int m_le = static_cast<int>(lp.b_le.size());
  if (lp.lower.size() != n || lp.upper.size() != n) throw Error(ErrorKind::DomainError, "bound vectors have wrong length");
  if ((m_eq && lp.A_eq.cols() != n) || lp.A_eq.rows() != m_eq) throw Error(ErrorKind::DomainError, "A_eq has wrong shape");
  if ((m_le && lp.A_le.cols() != n) || lp.A_le.rows() != m_le) throw Error(ErrorKind::DomainError, "A_le has wrong shape");
  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(lp.lower[j]) || !std::isfinite(lp.upper[j])) {
      throw Error(ErrorKind::DomainError, "every variable needs finite bounds");
    }
  }
  LpResult res;
  for (int j = 0; j < n; ++j) {
    if (lp.lower[j] > lp.upper[j]) {
      res.status = LpStatus::Infeasible;
      res.diagnostic = "crossed bounds on variable " + std::to_string(j);
      return res;
    }
  }

  const int m = m_eq + m_le;
  Vec x0 = lp.lower;
  Vec b(m);
  if (m_eq) b.head(m_eq) = lp.b_eq;
  if (m_le) b.tail(m_le) = lp.b_le;
  Vec resid(m);
  if (m_eq) resid.head(m_eq) = lp.b_eq - lp.A_eq * x0;
  if (m_le) resid.tail(m_le) = lp.b_le - lp.A_le * x0;

  // Artificial columns for equality rows and violated <= rows.
  std::vector<int> art_rows;
  std::vector<double> art_sign;
  for (int i = 0; i < m; ++i) {
    if (i < m_eq) {
      art_rows.push_back(i);
      art_sign.push_back(resid[i] >= 0.0 ? 1.0 : -1.0);
    } else if (resid[i] < 0.0) {
      art_rows.push_back(i);
      art_sign.push_back(-1.0);
    }
  }
  const int n_art = static_cast<int>(art_rows.size());
  const int ntot = n + m_le + n_art;

  Solver s;
  s.opts = opts;
  s.A = RowMat::Zero(m, ntot);
  if (m_eq) s.A.block(0, 0, m_eq, n) = lp.A_eq;
  if (m_le) s.A.block(m_eq, 0, m_le, n) = lp.A_le;
  for (int k = 0; k < m_le; ++k) s.A(m_eq + k, n + k) = 1.0;
  for (int k = 0; k < n_art; ++k) s.A(art_rows[static_cast<size_t>(k)], n + m_le + k) = art_sign[static_cast<size_t>(k)];
  s.b = b;
  s.lo = Vec::Zero(ntot);
  s.up = Vec::Constant(ntot, kInf);
  s.lo.head(n) = lp.lower;
  s.up.head(n) = lp.upper;
  s.x = Vec::Zero(ntot);
  s.x.head(n) = x0;
  s.basis.assign(static_cast<size_t>(m), -1);
  s.pos.assign(static_cast<size_t>(ntot), -1);
  for (int k = 0; k < m_le; ++k) {
    if (resid[m_eq + k] >= 0.0) {
      s.basis[static_cast<size_t>(m_eq + k)] = n + k;
      s.x[n + k] = resid[m_eq + k];
    }
  }
  for (int k = 0; k < n_art; ++k) {
    const int row = art_rows[static_cast<size_t>(k)];
    s.basis[static_cast<size_t>(row)] = n + m_le + k;
    s.x[n + m_le + k] = std::abs(resid[row]);
  }
  for (int i = 0; i < m; ++i) s.pos[static_cast<size_t>(s.basis[static_cast<size_t>(i)])] = i;

  const double bscale = 1.0 + (m ? b.cwiseAbs().maxCoeff() : 0.0);
  s.feas_tol = opts.feas_tol * bscale;
  const int max_pivots = opts.max_pivots > 0 ? opts.max_pivots : 50 * (m + ntot);

  auto fail = [&](const std::string& why) {
    res.status = LpStatus::Infeasible;
    res.diagnostic = why;
    res.pivots = s.pivots;
    res.used_bland = s.bland;
    return res;
  };

  // Phase I.
  if (n_art > 0) {
    s.cost = Vec::Zero(ntot);
    s.cost.tail(n_art).setOnes();
    s.opt_tol = opts.opt_tol;
    if (!s.reinvert()) {
    suspect = true;
    return fail(s.diag);
  }
    const auto out = s.run(max_pivots);
    if (out == Solver::Outcome::Numerical) {
      suspect = true;
      return fail(s.diag);
    }
    if (out == Solver::Outcome::PivotCap) return fail("pivot cap reached in phase I");
    if (out == Solver::Outcome::Unbounded) return fail("phase I unbounded (internal error)");
    const double infeas = s.x.tail(n_art).sum();
    if (infeas > s.feas_tol * std::max(1, n_art)) {
      suspect = s.basic_violation() > 1e-6 * bscale;
      return fail("infeasible: phase I residual " + std::to_string(infeas));
    }
    for (int k = 0; k < n_art; ++k) {
      s.up[n + m_le + k] = 0.0;
      if (s.pos[static_cast<size_t>(n + m_le + k)] < 0) s.x[n + m_le + k] = 0.0;
    }
    s.degenerate_run = 0;
    s.bland = false;
  }

  // Phase II.
  s.cost = Vec::Zero(ntot);
  s.cost.head(n) = lp.c;
  s.opt_tol = opts.opt_tol * (1.0 + (n ? lp.c.cwiseAbs().maxCoeff() : 0.0));
  if (!s.reinvert()) {
    suspect = true;
    return fail(s.diag);
  }
  const auto out = s.run(max_pivots);
  if (out == Solver::Outcome::Numerical) {
    suspect = true;
    return fail(s.diag);
  }
  if (out == Solver::Outcome::PivotCap) return fail("pivot cap reached in phase II");
  if (out == Solver::Outcome::Unbounded) return fail("unbounded direction despite finite bounds");
  if (s.basic_violation() > 1e-6 * bscale) {
    suspect = true;
    return fail("basis lost primal feasibility");
  }

  res.status = LpStatus::Optimal;
  res.x = s.x.head(n);
  for (int j = 0; j < n; ++j) res.x[j] = std::clamp(res.x[j], lp.lower[j], lp.upper[j]);
  res.objective = lp.c.dot(res.x);
  res.pivots = s.pivots;
  res.used_bland = s.bland;
  return res;
}

}  // namespace

LpResult lp_simplex(const LpProblem& lp, const LpOptions& opts) {
  bool suspect = false;
  LpResult r = attempt(lp, opts, suspect);
  // An infeasible verdict is also re-derived: a noisy pivot can leave a
  // consistent-looking basis with a wrong Phase I optimum.
  if (!suspect && r.status != LpStatus::Infeasible) return r;
  if (opts.reinvert_every == 1 && opts.pivot_tol >= 1e-9) return r;
  // Redo the solve with a fresh factorization after every pivot and a
  // stricter pivot threshold.
  LpOptions safe = opts;
  safe.reinvert_every = 1;
  safe.pivot_tol = std::max(opts.pivot_tol * 100.0, 1e-9);
  const int first_pivots = r.pivots;
  r = attempt(lp, safe, suspect);
  r.pivots += first_pivots;
  if (r.status != LpStatus::Optimal) r.diagnostic += " (after a safe-mode retry)";
  return r;
}

}  // namespace mnld
