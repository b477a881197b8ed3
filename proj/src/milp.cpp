#include "mnldesign/milp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <queue>

namespace mnld {

QfipData build_qfip(const Instance& inst, const Vec& theta0, const Mat& M) {
  const TraceTerms t = trace_terms(inst, theta0, M);
  QfipData q;
  q.n_arms = inst.num_arms();
  q.virtual_outside = inst.outside_option();
  q.n_items = q.n_arms + (q.virtual_outside ? 1 : 0);
  q.K = inst.capacity();
  q.min_card = 2;
  q.max_card = q.virtual_outside ? q.K + 1 : q.K;
  const int n = q.n_items;
  q.w = Vec::Zero(n);
  q.s = Vec::Zero(n);
  q.w.head(q.n_arms) = t.w;
  q.s.head(q.n_arms) = t.s;
  Mat G = Mat::Zero(n, n);
  G.topLeftCorner(q.n_arms, q.n_arms) = t.G;
  if (q.virtual_outside) q.w[q.n_arms] = t.c;
  q.r = q.w.cwiseProduct(q.s);
  const Mat Gw = q.w.asDiagonal() * G * q.w.asDiagonal();
  q.A = -0.5 * (q.w * q.r.transpose() + q.r * q.w.transpose()) + Gw;
  q.A = (0.5 * (q.A + q.A.transpose())).eval();
  q.B = q.w * q.w.transpose();
  return q;
}

double qfip_ratio(const QfipData& q, const Vec& x) {
  return x.dot(q.A * x) / x.dot(q.B * x);
}

Vec qfip_indicator(const QfipData& q, const Assortment& S) {
  Vec x = Vec::Zero(q.n_items);
  for (int i : S.items()) x[i] = 1.0;
  if (q.virtual_outside) x[q.n_arms] = 1.0;
  return x;
}

Assortment qfip_assortment(const QfipData& q, const Vec& x) {
  std::vector<int> items;
  for (int i = 0; i < q.n_arms; ++i)
    if (x[i] > 0.5) items.push_back(i);
  return Assortment(items);
}

namespace {

// Sum of the k largest entries of v (all entries when k >= size).
double top_k_sum(std::vector<double> v, int k) {
  k = std::min<int>(k, static_cast<int>(v.size()));
  std::partial_sort(v.begin(), v.begin() + k, v.end(), std::greater<>());
  double s = 0.0;
  for (int j = 0; j < k; ++j) s += v[static_cast<size_t>(j)];
  return s;
}

}  // namespace

BigMConstants big_m(const QfipData& q, BigMMode mode) {
  const int n = q.n_items;
  BigMConstants b;
  b.mode = mode;
  b.m_A.resize(n);
  b.m_B.resize(n);
  if (mode == BigMMode::Coarse) {
    const double MA = q.A.cwiseAbs().rowwise().sum().maxCoeff();
    const double MB = q.B.rowwise().sum().maxCoeff();
    b.m_A.setConstant(MA);
    b.m_B.setConstant(MB);
    const double wmin = q.w.minCoeff();
    b.alpha_bar = 1.0 / (4.0 * wmin * wmin);
  } else {
    std::vector<double> row(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) row[static_cast<size_t>(j)] = std::abs(q.A(i, j));
      b.m_A[i] = top_k_sum(row, q.max_card);
    }
    std::vector<double> w(q.w.data(), q.w.data() + n);
    const double wmax_k = top_k_sum(w, q.max_card);
    b.m_B = q.w * wmax_k;
    std::sort(w.begin(), w.end());
    const double wmin2 = w[0] + (n > 1 ? w[1] : w[0]);
    b.alpha_bar = 1.0 / (wmin2 * wmin2);
  }
  return b;
}

MilpModel build_milp(const QfipData& q, const BigMConstants& bm) {
  const int n = q.n_items;
  MilpModel m;
  m.n_items = n;
  m.q = q;
  m.bigm = bm;
  const int nv = 6 * n + 1;
  m.var_names.resize(static_cast<size_t>(nv));
  m.lower = Vec::Zero(nv);
  m.upper = Vec::Zero(nv);
  m.integer.assign(static_cast<size_t>(nv), false);
  m.c = Vec::Zero(nv);
  char buf[16];
  const double ab = bm.alpha_bar;
  for (int i = 0; i < n; ++i) {
    const auto name = [&](const char* p, int k) {
      std::snprintf(buf, sizeof buf, "%s%04d", p, i + 1);
      m.var_names[static_cast<size_t>(k)] = buf;
    };
    name("X", m.ix(i));
    name("V", m.iv(i));
    name("SA", m.is0(i));
    name("SB", m.is1(i));
    name("UA", m.iu0(i));
    name("UB", m.iu1(i));
    m.integer[static_cast<size_t>(m.ix(i))] = true;
    m.upper[m.ix(i)] = 1.0;
    m.upper[m.iv(i)] = ab;
    m.upper[m.is0(i)] = 2.0 * bm.m_A[i] * ab;
    m.upper[m.is1(i)] = 2.0 * bm.m_A[i] * ab;
    m.upper[m.iu0(i)] = bm.m_B[i] * ab;
    m.upper[m.iu1(i)] = bm.m_B[i] * ab;
    m.c[m.is1(i)] = 1.0;
    m.c[m.iv(i)] = -bm.m_A[i];
  }
  if (q.virtual_outside) m.lower[m.ix(q.n_arms)] = 1.0;
  m.var_names[static_cast<size_t>(m.ialpha())] = "ALPHA";
  m.upper[m.ialpha()] = ab;

  const int n_eq = 2 * n + 1;
  const int n_le = 7 * n + 2;
  m.A_eq = Mat::Zero(n_eq, nv);
  m.b_eq = Vec::Zero(n_eq);
  m.A_le = Mat::Zero(n_le, nv);
  m.b_le = Vec::Zero(n_le);
  int e = 0, l = 0;
  auto eq_name = [&](const char* p, int i) {
    std::snprintf(buf, sizeof buf, "%s%04d", p, i + 1);
    m.eq_names.push_back(buf);
  };
  auto le_name = [&](const char* p, int i) {
    std::snprintf(buf, sizeof buf, "%s%04d", p, i + 1);
    m.le_names.push_back(buf);
  };
  // A v + m_A alpha = S0 + S1
  for (int i = 0; i < n; ++i, ++e) {
    for (int j = 0; j < n; ++j) m.A_eq(e, m.iv(j)) = q.A(i, j);
    m.A_eq(e, m.ialpha()) = bm.m_A[i];
    m.A_eq(e, m.is0(i)) = -1.0;
    m.A_eq(e, m.is1(i)) = -1.0;
    eq_name("RA", i);
  }
  // B v = U0 + U1
  for (int i = 0; i < n; ++i, ++e) {
    for (int j = 0; j < n; ++j) m.A_eq(e, m.iv(j)) = q.B(i, j);
    m.A_eq(e, m.iu0(i)) = -1.0;
    m.A_eq(e, m.iu1(i)) = -1.0;
    eq_name("RB", i);
  }
  // 1^T U1 = 1
  for (int i = 0; i < n; ++i) m.A_eq(e, m.iu1(i)) = 1.0;
  m.b_eq[e] = 1.0;
  m.eq_names.push_back("NORM");
  ++e;

  for (int i = 0; i < n; ++i) {
    const double ma = bm.m_A[i], mb = bm.m_B[i];
    // S0 <= 2 m_A (alpha - v)
    m.A_le(l, m.is0(i)) = 1.0;
    m.A_le(l, m.ialpha()) = -2.0 * ma;
    m.A_le(l, m.iv(i)) = 2.0 * ma;
    le_name("CA", i);
    ++l;
    // S1 <= 2 m_A v
    m.A_le(l, m.is1(i)) = 1.0;
    m.A_le(l, m.iv(i)) = -2.0 * ma;
    le_name("CB", i);
    ++l;
    // U0 <= m_B (alpha - v)
    m.A_le(l, m.iu0(i)) = 1.0;
    m.A_le(l, m.ialpha()) = -mb;
    m.A_le(l, m.iv(i)) = mb;
    le_name("CC", i);
    ++l;
    // U1 <= m_B v
    m.A_le(l, m.iu1(i)) = 1.0;
    m.A_le(l, m.iv(i)) = -mb;
    le_name("CD", i);
    ++l;
    // v <= alpha
    m.A_le(l, m.iv(i)) = 1.0;
    m.A_le(l, m.ialpha()) = -1.0;
    le_name("VA", i);
    ++l;
    // v <= alpha_bar x
    m.A_le(l, m.iv(i)) = 1.0;
    m.A_le(l, m.ix(i)) = -ab;
    le_name("VB", i);
    ++l;
    // v >= alpha - alpha_bar (1 - x)
    m.A_le(l, m.ialpha()) = 1.0;
    m.A_le(l, m.iv(i)) = -1.0;
    m.A_le(l, m.ix(i)) = ab;
    m.b_le[l] = ab;
    le_name("VC", i);
    ++l;
  }
  for (int i = 0; i < n; ++i) m.A_le(l, m.ix(i)) = -1.0;
  m.b_le[l] = -q.min_card;
  m.le_names.push_back("CARDLO");
  ++l;
  for (int i = 0; i < n; ++i) m.A_le(l, m.ix(i)) = 1.0;
  m.b_le[l] = q.max_card;
  m.le_names.push_back("CARDHI");
  ++l;
  MNLD_ASSERT(e == n_eq && l == n_le, "MILP row count");
  return m;
}

Vec milp_point_from_x(const MilpModel& m, const Vec& x) {
  const QfipData& q = m.q;
  const int n = m.n_items;
  Vec z = Vec::Zero(m.num_vars());
  const double alpha = 1.0 / x.dot(q.B * x);
  const Vec Ax = q.A * x;
  const Vec Bx = q.B * x;
  for (int i = 0; i < n; ++i) {
    z[m.ix(i)] = x[i];
    z[m.iv(i)] = alpha * x[i];
    const double sa = alpha * (Ax[i] + m.bigm.m_A[i]);
    const double ub = alpha * Bx[i];
    z[m.is1(i)] = x[i] * sa;
    z[m.is0(i)] = (1.0 - x[i]) * sa;
    z[m.iu1(i)] = x[i] * ub;
    z[m.iu0(i)] = (1.0 - x[i]) * ub;
  }
  z[m.ialpha()] = alpha;
  return z;
}

LpProblem lp_relaxation(const MilpModel& m) {
  LpProblem lp;
  lp.c = m.c;
  lp.A_eq = m.A_eq;
  lp.b_eq = m.b_eq;
  lp.A_le = m.A_le;
  lp.b_le = m.b_le;
  lp.lower = m.lower;
  lp.upper = m.upper;
  return lp;
}

const char* to_string(BnbStatus s) {
  switch (s) {
    case BnbStatus::Optimal: return "optimal";
    case BnbStatus::GapReached: return "gap_reached";
    case BnbStatus::NodeCap: return "node_cap";
    case BnbStatus::Infeasible: return "infeasible";
    case BnbStatus::Deadline: return "deadline";
  }
  return "unknown";
}

namespace {

constexpr double kIntTol = 1e-6;

struct Node {
  double bound;
  uint64_t id;
  Vec xlo, xhi;  // bounds on the binary block
  Vec lp_x;      // relaxation solution (binary block)
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

}  // namespace

BnbResult solve_bnb(const MilpModel& m, const BnbOptions& opts) {
  if (!(opts.eps >= 0.0)) throw Error(ErrorKind::DomainError, "gap tolerance must be >= 0");
  const int n = m.n_items;
  const QfipData& q = m.q;
  LpProblem lp = lp_relaxation(m);
  BnbResult res;
  uint64_t next_id = 0;

  auto solve_node = [&](const Vec& xlo, const Vec& xhi, double& bound, Vec& xs) -> bool {
    lp.lower.head(n) = xlo;
    lp.upper.head(n) = xhi;
    ++res.lp_solves;
    const LpResult r = lp_simplex(lp, opts.lp);
    if (r.status != LpStatus::Optimal) return false;
    bound = r.objective;
    xs = r.x.head(n);
    return true;
  };

  auto offer = [&](const Vec& x) {
    int card = 0;
    for (int i = 0; i < n; ++i) card += x[i] > 0.5 ? 1 : 0;
    if (card < q.min_card || card > q.max_card) return;
    const double val = qfip_ratio(q, x);
    if (val < res.UB) {
      res.UB = val;
      res.x_incumbent = x;
    }
  };

  // Threshold rounding with cardinality repair, respecting branching fixes.
  auto round_heuristic = [&](const Vec& xs, const Vec& xlo, const Vec& xhi) {
    Vec x(n);
    int card = 0;
    for (int i = 0; i < n; ++i) {
      x[i] = (xlo[i] > 0.5 || (xhi[i] > 0.5 && xs[i] >= 0.5)) ? 1.0 : 0.0;
      card += x[i] > 0.5;
    }
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    if (card < q.min_card) {
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return xs[a] > xs[b]; });
      for (int i : idx) {
        if (card >= q.min_card) break;
        if (x[i] < 0.5 && xhi[i] > 0.5) {
          x[i] = 1.0;
          ++card;
        }
      }
    } else if (card > q.max_card) {
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return xs[a] < xs[b]; });
      for (int i : idx) {
        if (card <= q.max_card) break;
        if (x[i] > 0.5 && xlo[i] < 0.5) {
          x[i] = 0.0;
          --card;
        }
      }
    }
    offer(x);
  };

  auto report = [&](double lb) {
    if (opts.verbose) {
      std::fprintf(stderr, "node=%llu LB=%.12g UB=%.12g gap=%.6g\n", static_cast<unsigned long long>(res.nodes), lb,
                   res.UB, res.UB - lb);
    }
  };

  Node root{0.0, next_id++, m.lower.head(n), m.upper.head(n), Vec()};
  if (!solve_node(root.xlo, root.xhi, root.bound, root.lp_x)) {
    res.status = BnbStatus::Infeasible;
    return res;
  }
  round_heuristic(root.lp_x, root.xlo, root.xhi);

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  open.push(std::move(root));
  double pruned_min = std::numeric_limits<double>::infinity();
  double last_lb = -std::numeric_limits<double>::infinity();

  auto finish = [&](BnbStatus st_if_open, double open_min) {
    res.LB = std::min({open_min, pruned_min, res.UB});
    res.gap = res.UB - res.LB;
    if (st_if_open == BnbStatus::Optimal || st_if_open == BnbStatus::GapReached) {
      res.status = res.gap <= 1e-9 ? BnbStatus::Optimal : BnbStatus::GapReached;
    } else {
      res.status = st_if_open;
    }
    report(res.LB);
    return res;
  };

  while (!open.empty()) {
    const double top = open.top().bound;
    const double lb_now = std::min(top, pruned_min);
    MNLD_ASSERT(lb_now >= last_lb - 1e-9 * (1.0 + std::abs(last_lb)), "global lower bound decreased");
    last_lb = std::max(last_lb, lb_now);
    if (top >= res.UB - opts.eps) return finish(BnbStatus::Optimal, top);
    if (res.nodes >= opts.node_cap) return finish(BnbStatus::NodeCap, top);
    if (opts.deadline && Clock::now() > *opts.deadline) return finish(BnbStatus::Deadline, top);

    Node node = open.top();
    open.pop();
    ++res.nodes;
    if (opts.verbose && (res.nodes % 100 == 1)) report(lb_now);

    int branch = -1;
    double best_frac = kIntTol;
    for (int i = 0; i < n; ++i) {
      const double f = std::min(node.lp_x[i] - std::floor(node.lp_x[i]), std::ceil(node.lp_x[i]) - node.lp_x[i]);
      if (f > best_frac + 1e-15) {
        best_frac = f;
        branch = i;
      }
    }
    if (branch < 0) {
      Vec x = node.lp_x.array().round().matrix();
      offer(x);
      // An integral relaxation solves its subtree; nothing left to bound.
      continue;
    }
    round_heuristic(node.lp_x, node.xlo, node.xhi);
    for (int side = 0; side < 2; ++side) {
      Node child{0.0, next_id++, node.xlo, node.xhi, Vec()};
      if (side == 0) child.xhi[branch] = 0.0;
      else child.xlo[branch] = 1.0;
      if (!solve_node(child.xlo, child.xhi, child.bound, child.lp_x)) continue;
      child.bound = std::max(child.bound, node.bound);
      if (child.bound >= res.UB - opts.eps) {
        pruned_min = std::min(pruned_min, child.bound);
        continue;
      }
      open.push(std::move(child));
    }
  }
  return finish(BnbStatus::Optimal, std::numeric_limits<double>::infinity());
}

LmoResult lmo_milp(const Instance& inst, const Vec& theta0, const Mat& M, const MilpLmoOptions& opts) {
  const auto t0 = Clock::now();
  if (!(opts.eps_lmo >= 0.0)) throw Error(ErrorKind::DomainError, "eps_lmo must be >= 0");
  QfipData q = build_qfip(inst, theta0, M);
  const double scale = std::max(q.A.cwiseAbs().maxCoeff(), 1e-300);
  q.A /= scale;
  BigMConstants bm = big_m(q, opts.mode);
  bm.m_A *= opts.corrupt_m_a;
  const MilpModel model = build_milp(q, bm);
  BnbOptions bo;
  bo.eps = opts.eps_lmo / scale;
  bo.node_cap = opts.node_cap;
  bo.verbose = opts.verbose;
  bo.deadline = opts.deadline;
  const BnbResult r = solve_bnb(model, bo);
  if (r.status == BnbStatus::Infeasible || r.x_incumbent.size() == 0) {
    throw Error(ErrorKind::Internal, "MILP relaxation infeasible for a valid instance");
  }
  LmoResult res;
  res.assortment = qfip_assortment(q, r.x_incumbent);
  res.value = -r.UB * scale;
  res.certified_gap = std::max(0.0, r.gap * scale);
  res.backend = Backend::Milp;
  res.stats.evaluated = r.nodes;
  res.stats.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  res.stats.status = to_string(r.status);
  return res;
}

}  // namespace mnld
