#include "mnldesign/check/oracles.hpp"

#include "mnldesign/check/tableau_lp.hpp"
#include "mnldesign/estimator.hpp"
#include "mnldesign/sim_env.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace mnld::check {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

uint32_t fnv1a(const std::string& s) {
  uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

int uniform_int(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo + 1))); }

Vec random_normal(Rng& rng, int n, double sd = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = sd * rng.normal();
  return v;
}

Mat random_spd(Rng& rng, int d, double lo, double hi) {
  Mat G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(G);
  const Mat Q = qr.householderQ();
  Vec ev(d);
  for (int i = 0; i < d; ++i) ev[i] = lo + (hi - lo) * rng.uniform();
  Mat S = Q * ev.asDiagonal() * Q.transpose();
  return 0.5 * (S + S.transpose());
}

std::vector<int> random_subset(Rng& rng, int n, int k) {
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(i + static_cast<int>(rng.below(static_cast<uint64_t>(n - i))))]);
  idx.resize(static_cast<size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

ChoiceDataset random_dataset(Rng& rng, const Instance& inst, int rounds, const Vec& theta) {
  ChoiceDataset D(inst);
  for (int t = 0; t < rounds; ++t) {
    const Assortment S = random_assortment(rng, inst);
    D.add(S, sample_choice_with(inst, S, theta, rng));
  }
  return D;
}

double lifted_trace_direct(const Instance& inst, const Vec& theta0, const Mat& Mt, const Assortment& S) {
  return Mt.llt().solve(lifted_info(inst, S, theta0)).trace();
}

// ---------------------------------------------------------------- mnl_core

void choice_probs_hand(Ctx& c) {
  Mat F(2, 1);
  F << 0.0, std::log(2.0);
  const Instance inst(F, Vec::Constant(2, 0.5), 2, 1.0, std::nullopt, false);
  const ChoiceProbs p = choice_probs(inst, Assortment{0, 1}, Vec::Ones(1));
  c.expect(std::abs(p.probs[0] - 1.0 / 3) < 1e-15 && std::abs(p.probs[1] - 2.0 / 3) < 1e-15,
           [&] { return "probabilities " + join_doubles(p.probs) + " differ from (1/3, 2/3)"; });
}

void fisher_closed_forms(Ctx& c) {
  for (int rep = 0; rep < 50; ++rep) {
    const int d = uniform_int(c.rng(), 1, 4);
    const int N = d + 3;
    const Instance plain = random_instance(c.rng(), N, d, 2, 1.0, false);
    const auto ij = random_subset(c.rng(), N, 2);
    const Vec diff = plain.feature(ij[0]) - plain.feature(ij[1]);
    const Mat want = 0.25 * diff * diff.transpose();
    const Mat got = fisher_info(plain, Assortment(ij), Vec::Zero(d));
    c.expect(max_abs(got - want) < 1e-12, [&] { return fmt("pair form off by %.3e", max_abs(got - want)); });

    const Instance out = random_instance(c.rng(), N, d, 1, 1.0, true);
    const int i = uniform_int(c.rng(), 0, N - 1);
    const Vec a = out.feature(i);
    const Mat want1 = 0.25 * a * a.transpose();
    const Mat got1 = fisher_info(out, Assortment{i}, Vec::Zero(d));
    c.expect(max_abs(got1 - want1) < 1e-12, [&] { return fmt("singleton form off by %.3e", max_abs(got1 - want1)); });
  }
}

void schur_identity(Ctx& c) {
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = uniform_int(c.rng(), 1, 5);
    const int N = uniform_int(c.rng(), d + 1, d + 6);
    const bool outside = rep % 2 == 0;
    const int K = uniform_int(c.rng(), outside ? 1 : 2, std::min(N, 5));
    const Instance inst = random_instance(c.rng(), N, d, K, 2.0, outside);
    const Assortment S = random_assortment(c.rng(), inst);
    const Vec theta = sample_ball(c.rng(), d, 2.0);
    const Mat L = lifted_info(inst, S, theta);
    const Mat schur = L.topLeftCorner(d, d) - L.topRightCorner(d, 1) * L.bottomLeftCorner(1, d) / L(d, d);
    const double err = max_abs(schur - fisher_info(inst, S, theta));
    worst = std::max(worst, err);
    c.expect(err <= 1e-10 && L(d, d) == 1.0, [&] { return fmt("Schur complement off by %.3e (corner %.17g)", err, L(d, d)); });
  }
  c.note(fmt("max deviation %.3e over 1000 draws", worst));
}

void hess_fisher_identity(Ctx& c) {
  for (int rep = 0; rep < 100; ++rep) {
    const int d = uniform_int(c.rng(), 1, 4);
    const bool outside = rep % 2 == 0;
    const Instance inst = random_instance(c.rng(), d + 4, d, 3, 1.0, outside);
    const ChoiceDataset D = random_dataset(c.rng(), inst, 40, *inst.theta_star());
    const Vec theta = sample_ball(c.rng(), d, 1.5);
    const double lambda = 0.5 + c.rng().uniform();
    Mat want = lambda * Mat::Identity(d, d);
    for (const ChoiceGroup& g : D.groups()) want += g.total * fisher_info(inst, g.assortment, theta);
    const LossEval ev = nll_loss_grad_hess(inst, D, theta, lambda);
    c.expect(max_abs(ev.hess - want) <= 1e-10, [&] { return fmt("Hessian off by %.3e", max_abs(ev.hess - want)); });
  }
}

void grad_hess_fd(Ctx& c) {
  double worst_g = 0.0, worst_h = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int d = uniform_int(c.rng(), 1, 4);
    const bool outside = rep % 2 == 1;
    const Instance inst = random_instance(c.rng(), d + 4, d, 3, 1.0, outside);
    const ChoiceDataset D = random_dataset(c.rng(), inst, 30, *inst.theta_star());
    const Vec theta = sample_ball(c.rng(), d, 1.0);
    const double lambda = 1.0;
    const LossEval ev = nll_loss_grad_hess(inst, D, theta, lambda);
    const double h = 1e-6;
    Vec g_fd(d);
    Mat h_fd(d, d);
    for (int k = 0; k < d; ++k) {
      Vec e = Vec::Zero(d);
      e[k] = h;
      g_fd[k] = (nll_loss(inst, D, theta + e, lambda) - nll_loss(inst, D, theta - e, lambda)) / (2 * h);
      h_fd.col(k) = (nll_loss_grad_hess(inst, D, theta + e, lambda).grad - nll_loss_grad_hess(inst, D, theta - e, lambda).grad) / (2 * h);
    }
    const double eg = (g_fd - ev.grad).norm() / std::max(ev.grad.norm(), 1e-3);
    const double eh = (h_fd - ev.hess).norm() / ev.hess.norm();
    worst_g = std::max(worst_g, eg);
    worst_h = std::max(worst_h, eh);
    c.expect(eg <= 1e-5, [&] { return fmt("gradient relative error %.3e", eg); });
    c.expect(eh <= 1e-4, [&] { return fmt("Hessian relative error %.3e", eh); });
  }
  c.note(fmt("worst relative error: gradient %.2e, Hessian %.2e", worst_g, worst_h));
}

void kappa_enum(Ctx& c) {
  double worst_ratio = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const int d = uniform_int(c.rng(), 1, 4);
    const int N = uniform_int(c.rng(), d, 8);
    const int K = uniform_int(c.rng(), 1, std::min(N, 4));
    const double B = 2.0 * c.rng().uniform();
    const Instance inst = random_instance(c.rng(), N, d, K, B, true);
    const Vec theta = *inst.theta_star();
    const double k_fast = kappa(inst, theta);
    const double k_brute = brute_kappa(inst, theta);
    c.expect(std::abs(k_fast - k_brute) <= 1e-12, [&] { return fmt("kappa %.17g vs enumeration %.17g", k_fast, k_brute); });
    const double k0 = kappa(inst, Vec::Zero(d));
    c.expect(std::abs(k0 - 1.0 / ((K + 1.0) * (K + 1.0))) <= 1e-15, [&] { return fmt("kappa at zero %.17g", k0); });
    const double ratio = (1.0 / k_brute) / (K * K * std::exp(3 * B));
    worst_ratio = std::max(worst_ratio, ratio);
    // 1/kappa <= e^B (1 + K e^B)^2 <= 4 K^2 e^{3B}.
    c.expect(ratio <= 4.0, [&] { return fmt("1/kappa exceeds 4 K^2 e^{3B} (ratio %.3f)", ratio); });
  }
  c.note(fmt("largest (1/kappa)/(K^2 e^{3B}) seen: %.4f (bound 4)", worst_ratio));
}

// --------------------------------------------------------------- estimator

void mle_consistency(Ctx& c) {
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    const Instance inst = gen_instance(10, 3, 3, 1.0, 500 + seed);
    Rng rng(seed, Stream::Test, 77);
    const ChoiceDataset D = random_dataset(rng, inst, 50'000, *inst.theta_star());
    const MleResult fit = fit_mle(inst, D, 1.0, Vec::Zero(3));
    const double err = (fit.theta_hat - *inst.theta_star()).norm();
    c.expect(fit.converged && fit.grad_norm <= 1e-8, [&] { return fmt("MLE not converged, grad %.3e", fit.grad_norm); });
    c.expect(err <= 0.1, [&] { return fmt("||theta_hat - theta*|| = %.4f after 50000 samples", err); });
  }
}

void beta_value(Ctx& c) {
  const double want = 0.1 * (36.0 * std::sqrt(std::log(30 / 0.05)) + 64.0);
  const double got = beta(0.05, 1.0, 1.0, 30, 0.1);
  c.expect(std::abs(got - want) <= 1e-12, [&] { return fmt("beta %.17g vs %.17g", got, want); });
}

void width_inverse(Ctx& c) {
  for (int rep = 0; rep < 200; ++rep) {
    const int d = uniform_int(c.rng(), 1, 8);
    const double lambda = 0.1 + c.rng().uniform();
    DesignMatrices dm(d, lambda);
    const Mat inc = random_spd(c.rng(), d, 0.0, 5.0);
    dm.add(inc, Mat());
    const Mat H = lambda * Mat::Identity(d, d) + inc;
    const Mat Hinv = H.inverse();
    const Vec a = random_normal(c.rng(), d);
    const double want = a.dot(Hinv * a);
    const double got = dm.width(a);
    c.expect(std::abs(got * got - want) <= 1e-10 * std::max(1.0, want),
             [&] { return fmt("width^2 %.17g vs explicit %.17g", got * got, want); });
  }
}

void batch_h(Ctx& c) {
  for (int rep = 0; rep < 20; ++rep) {
    const int d = uniform_int(c.rng(), 1, 5);
    const Instance inst = random_instance(c.rng(), d + 5, d, 3, 1.0, rep % 2 == 0);
    const Vec theta = sample_ball(c.rng(), d, 1.0);
    const double lambda = 1.0;
    DesignMatrices dm(d, lambda);
    Mat H = lambda * Mat::Identity(d, d), V = H;
    for (int t = 0; t < 200; ++t) {
      const Assortment S = random_assortment(c.rng(), inst);
      dm.rank_update(inst, S, theta);
      H += fisher_info(inst, S, theta);
      for (int i : S.items()) V += inst.feature(i) * inst.feature(i).transpose();
    }
    c.expect(max_abs(dm.H() - H) <= 1e-9 && max_abs(dm.V() - V) <= 1e-9,
             [&] { return fmt("incremental H off by %.3e, V off by %.3e", max_abs(dm.H() - H), max_abs(dm.V() - V)); });
  }
}

void width_monotone(Ctx& c) {
  for (int rep = 0; rep < 100; ++rep) {
    const int d = uniform_int(c.rng(), 1, 6);
    const Mat F = Mat::Random(10, d);
    DesignMatrices dm(d, 1.0);
    Vec prev = dm.widths(F);
    for (int t = 0; t < 10; ++t) {
      Mat inc = random_spd(c.rng(), d, 0.0, 2.0);
      if (t % 3 == 0) {  // rank-deficient increments too
        const Vec a = random_normal(c.rng(), d);
        inc = a * a.transpose();
      }
      dm.add(inc, Mat());
      const Vec now = dm.widths(F);
      c.expect((now.array() <= prev.array() + 1e-12).all(), [&] { return std::string("a width increased after a PSD update"); });
      prev = now;
    }
  }
}

// --------------------------------------------------------------------- lmo

void brute_vs_direct(Ctx& c) {
  for (int rep = 0; rep < 20; ++rep) {
    const int d = uniform_int(c.rng(), 2, 4);
    const int N = uniform_int(c.rng(), d + 1, 9);
    const bool outside = rep % 2 == 0;
    const Instance inst = random_instance(c.rng(), N, d, uniform_int(c.rng(), 2, 3), 1.0, outside);
    const Vec theta0 = sample_ball(c.rng(), d, 1.0);
    const Design D = init_design(inst, theta0, static_cast<uint64_t>(rep));
    const TraceTerms tt = trace_terms(inst, theta0, D.M);
    for (int k = 0; k < 100; ++k) {
      const Assortment S = random_assortment(c.rng(), inst);
      const double a = trace_value(tt, S.items()), b = trace_direct(inst, theta0, D.M, S);
      c.expect(rel_err(a, b) <= 1e-10, [&] { return fmt("quadratic form %.17g vs direct %.17g", a, b); });
    }
    const LmoResult r = lmo_brute(inst, theta0, D.M);
    const double want = brute_trace_max(inst, theta0, D.M);
    c.expect(rel_err(r.value, want) <= 1e-10, [&] { return fmt("brute LMO %.17g vs direct maximum %.17g", r.value, want); });
  }
}

void lifted_enum(Ctx& c) {
  for (int rep = 0; rep < 40; ++rep) {
    const int d = uniform_int(c.rng(), 2, 4);
    const int N = uniform_int(c.rng(), d + 1, 12);
    const bool outside = rep % 2 == 0;
    const Instance inst = random_instance(c.rng(), N, d, uniform_int(c.rng(), 2, 3), 1.0, outside);
    const Vec theta0 = sample_ball(c.rng(), d, 1.0);
    const Design D = init_design(inst, theta0, static_cast<uint64_t>(rep));
    const RatioProblem p = lifted_ratio_problem(inst, theta0, D.Mt);
    double best = kNegInf;
    for (const Assortment& S : all_assortments(inst)) {
      const double direct = lifted_trace_direct(inst, theta0, D.Mt, S);
      const double ratio = ratio_value(p, S.items());
      c.expect(rel_err(direct, ratio) <= 1e-10, [&] { return fmt("lifted ratio %.17g vs direct trace %.17g", ratio, direct); });
      best = std::max(best, direct);
    }
    const LmoResult r = lmo_lifted(inst, theta0, D.Mt);
    c.expect(rel_err(r.value, best) <= 1e-12 * 1e2, [&] { return fmt("lifted LMO %.17g vs enumeration %.17g", r.value, best); });
    c.expect(rel_err(lifted_trace_direct(inst, theta0, D.Mt, r.assortment), best) <= 1e-10,
             [&] { return std::string("lifted LMO returned a non-maximizing set"); });
  }
}

void lifted_vs_brute_factor(Ctx& c) {
  double tightest = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 40; ++rep) {
    const int d = uniform_int(c.rng(), 2, 4);
    const int N = uniform_int(c.rng(), d + 1, 10);
    const bool outside = rep % 2 == 0;
    const Instance inst = random_instance(c.rng(), N, d, uniform_int(c.rng(), 2, 3), 1.0, outside);
    const Vec theta0 = sample_ball(c.rng(), d, 1.0);
    const Design D = init_design(inst, theta0, static_cast<uint64_t>(rep));
    const double eps = lift_error(D, inst, theta0);
    const double g = lmo_brute(inst, theta0, D.M).value;
    const double gt = lmo_lifted(inst, theta0, D.Mt).value;
    // tr(Mt^{-1} It(S)) >= 1 + tr(M^{-1} I(S)) / (1 + eps_lift) for every S.
    const double bound = (1.0 + eps) * (gt - 1.0);
    tightest = std::min(tightest, bound / g);
    c.expect(g <= bound * (1 + 1e-9) + 1e-9, [&] { return fmt("brute max %.6g exceeds (1+eps_lift)(lifted - 1) = %.6g", g, bound); });
  }
  c.note(fmt("smallest slack factor %.4f", tightest));
}

void dinkelbach_enum(Ctx& c) {
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = uniform_int(c.rng(), 1, 14);
    RatioProblem p;
    p.w = random_normal(c.rng(), n, 1.5).array().exp().matrix();
    p.s = random_normal(c.rng(), n);
    p.denom_const = rep % 3 == 0 ? 0.0 : std::exp(c.rng().normal());
    p.num_const = p.denom_const > 0 && rep % 2 == 0 ? c.rng().normal() : 0.0;
    p.K = uniform_int(c.rng(), 1, n);
    p.min_size = uniform_int(c.rng(), 1, p.K);
    std::vector<int> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[static_cast<size_t>(i)], perm[c.rng().below(static_cast<uint64_t>(i + 1))]);
    const int n_in = rep % 4 == 1 ? uniform_int(c.rng(), 0, std::min(p.K, n) / 2) : 0;
    const int n_out = rep % 5 == 2 ? uniform_int(c.rng(), 0, n - std::max(p.min_size, n_in)) : 0;
    p.forced_in.assign(perm.begin(), perm.begin() + n_in);
    p.forced_out.assign(perm.begin() + n_in, perm.begin() + n_in + n_out);
    Assortment arg;
    const double want = brute_ratio(p, &arg);
    if (!std::isfinite(want)) continue;
    const RatioSolution sol = dinkelbach(p);
    const double got = ratio_value(p, sol.S.items());
    c.expect(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)),
             [&] { return fmt("Dinkelbach %.17g vs enumeration %.17g", got, want); });
  }
}

// -------------------------------------------------------------------- milp

void qfip_identity(Ctx& c) {
  for (int rep = 0; rep < 60; ++rep) {
    const bool small = rep < 10;
    const int d = small ? 2 : uniform_int(c.rng(), 2, 4);
    const int N = small ? 3 : uniform_int(c.rng(), d + 1, 9);
    const int K = small ? 2 : uniform_int(c.rng(), 2, 3);
    const bool outside = rep % 2 == 0;
    const Instance inst = random_instance(c.rng(), N, d, K, 1.0, outside);
    const Vec theta0 = sample_ball(c.rng(), d, 1.0);
    const Design D = init_design(inst, theta0, static_cast<uint64_t>(rep));
    const QfipData q = build_qfip(inst, theta0, D.M);
    c.expect(max_abs(q.A - q.A.transpose()) == 0.0, [&] { return std::string("A is not exactly symmetric"); });
    for (const Assortment& S : all_assortments(inst)) {
      const double a = qfip_ratio(q, qfip_indicator(q, S));
      const double b = -trace_direct(inst, theta0, D.M, S);
      c.expect(rel_err(a, b) <= 1e-9, [&] { return fmt("x'Ax/x'Bx %.17g vs -trace %.17g", a, b); });
    }
  }
}

void bigm_alpha_example(Ctx& c) {
  QfipData q;
  q.A = Mat::Zero(3, 3);
  q.B = Mat::Ones(3, 3);
  q.w = Vec::Ones(3);
  q.r = q.s = Vec::Zero(3);
  q.n_arms = q.n_items = 3;
  q.K = 3;
  q.min_card = 2;
  q.max_card = 3;
  const double a = big_m(q, BigMMode::Tight).alpha_bar;
  c.expect(std::abs(a - 0.25) < 1e-15, [&] { return fmt("alpha_bar %.17g, want 1/4", a); });
}

std::vector<Vec> feasible_indicators(const QfipData& q) {
  std::vector<Vec> xs;
  const int real = q.n_arms;
  const int pinned = q.virtual_outside ? 1 : 0;
  for (const Assortment& S : all_subsets(real, std::max(0, q.min_card - pinned), q.max_card - pinned)) xs.push_back(qfip_indicator(q, S));
  return xs;
}

void bigm_validity(Ctx& c) {
  for (int rep = 0; rep < 40; ++rep) {
    const int d = uniform_int(c.rng(), 2, 4);
    const int N = uniform_int(c.rng(), d + 1, 12);
    const bool outside = rep % 2 == 0;
    const Instance inst = random_instance(c.rng(), N, d, uniform_int(c.rng(), 2, 3), 1.0, outside);
    const Vec theta0 = sample_ball(c.rng(), d, 1.0);
    const Design D = init_design(inst, theta0, static_cast<uint64_t>(rep));
    const QfipData q = build_qfip(inst, theta0, D.M);
    const BigMConstants tight = big_m(q, BigMMode::Tight), coarse = big_m(q, BigMMode::Coarse);
    c.expect((tight.m_A.array() <= coarse.m_A.array() * (1 + 1e-15)).all() &&
                 (tight.m_B.array() <= coarse.m_B.array() * (1 + 1e-15)).all() && tight.alpha_bar <= coarse.alpha_bar * (1 + 1e-15),
             [&] { return std::string("tight constants exceed coarse ones"); });
    for (const BigMConstants* bm : {&tight, &coarse}) {
      for (const Vec& x : feasible_indicators(q)) {
        const Vec Ax = q.A * x, Bx = q.B * x;
        const double xBx = x.dot(Bx);
        const bool ok = (Ax.cwiseAbs().array() <= bm->m_A.array() * (1 + 1e-12) + 1e-300).all() &&
                        (Bx.array() >= 0).all() && (Bx.array() <= bm->m_B.array() * (1 + 1e-12)).all() &&
                        1.0 / xBx <= bm->alpha_bar * (1 + 1e-12);
        c.expect(ok, [&] { return std::string("a feasible x violates a ") + (bm == &tight ? "tight" : "coarse") + " big-M bound"; });
      }
    }
  }
}

double max_violation(const LpProblem& lp, const Vec& z) {
  double v = 0.0;
  if (lp.A_eq.rows()) v = std::max(v, (lp.A_eq * z - lp.b_eq).cwiseAbs().maxCoeff());
  if (lp.A_le.rows()) v = std::max(v, (lp.A_le * z - lp.b_le).maxCoeff());
  v = std::max(v, (lp.lower - z).maxCoeff());
  v = std::max(v, (z - lp.upper).maxCoeff());
  return v;
}

void integral_objective(Ctx& c) {
  for (int rep = 0; rep < 40; ++rep) {
    const int d = uniform_int(c.rng(), 2, 4);
    const int N = uniform_int(c.rng(), d + 1, 8);
    const bool outside = rep % 2 == 0;
    const Instance inst = random_instance(c.rng(), N, d, uniform_int(c.rng(), 2, 3), 1.0, outside);
    const Vec theta0 = sample_ball(c.rng(), d, 1.0);
    const Design D = init_design(inst, theta0, static_cast<uint64_t>(rep));
    QfipData q = build_qfip(inst, theta0, D.M);
    q.A /= max_abs(q.A);
    const MilpModel m = build_milp(q, big_m(q, rep % 4 < 2 ? BigMMode::Tight : BigMMode::Coarse));
    const LpProblem lp = lp_relaxation(m);
    for (const Vec& x : feasible_indicators(q)) {
      const Vec z = milp_point_from_x(m, x);
      const double viol = max_violation(lp, z);
      const double obj = m.c.dot(z), want = qfip_ratio(q, x);
      c.expect(viol <= 1e-9, [&] { return fmt("integral point violates the model by %.3e", viol); });
      c.expect(rel_err(obj, want) <= 1e-9, [&] { return fmt("MILP objective %.17g vs QFIP ratio %.17g", obj, want); });
    }
  }
}

void lp_relaxation_feasible(Ctx& c) {
  for (int rep = 0; rep < 40; ++rep) {
    const int d = uniform_int(c.rng(), 2, 4);
    const int N = uniform_int(c.rng(), d + 1, 12);
    const bool outside = rep % 2 == 0;
    const Instance inst = random_instance(c.rng(), N, d, uniform_int(c.rng(), 2, 3), 1.0, outside);
    const Vec theta0 = sample_ball(c.rng(), d, 1.0);
    const Design D = init_design(inst, theta0, static_cast<uint64_t>(rep));
    QfipData q = build_qfip(inst, theta0, D.M);
    q.A /= max_abs(q.A);
    const MilpModel m = build_milp(q, big_m(q, BigMMode::Tight));
    // The relaxation is convex, so the midpoint of two integral points is
    // feasible with a fractional x.
    const std::vector<Vec> xs = feasible_indicators(q);
    const size_t i1 = c.rng().below(xs.size());
    size_t i2 = c.rng().below(xs.size());
    while (i2 == i1) i2 = c.rng().below(xs.size());
    const Vec z = 0.5 * (milp_point_from_x(m, xs[i1]) + milp_point_from_x(m, xs[i2]));
    const bool fractional = ((z.head(q.n_items).array() > 0.25) && (z.head(q.n_items).array() < 0.75)).any();
    c.expect(fractional, [&] { return std::string("midpoint has no fractional coordinate"); });
    const LpProblem lp = lp_relaxation(m);
    const double viol = max_violation(lp, z);
    const LpResult r = lp_simplex(lp);
    c.expect(r.status == LpStatus::Optimal, [&] { return "relaxation not solved: " + r.diagnostic; });
    c.expect(viol <= 1e-9, [&] { return fmt("constructed fractional point violates the relaxation by %.3e", viol); });
  }
}

LpProblem random_lp(Rng& rng) {
  const int n = uniform_int(rng, 1, 6);
  const int me = uniform_int(rng, 0, std::min(2, n));
  const int ml = uniform_int(rng, 0, 4);
  LpProblem lp;
  lp.c = random_normal(rng, n);
  lp.lower.resize(n);
  lp.upper.resize(n);
  Vec x0(n);
  for (int j = 0; j < n; ++j) {
    lp.lower[j] = -2.0 * rng.uniform();
    lp.upper[j] = lp.lower[j] + (rng.below(6) == 0 ? 0.0 : 0.5 + 3.0 * rng.uniform());
    x0[j] = lp.lower[j] + (lp.upper[j] - lp.lower[j]) * rng.uniform();
  }
  lp.A_eq = Mat(me, n);
  for (int i = 0; i < me; ++i)
    for (int j = 0; j < n; ++j) lp.A_eq(i, j) = rng.below(3) == 0 ? 0.0 : rng.normal();
  lp.b_eq = lp.A_eq * x0;
  lp.A_le = Mat(ml, n);
  for (int i = 0; i < ml; ++i)
    for (int j = 0; j < n; ++j) lp.A_le(i, j) = rng.below(3) == 0 ? 0.0 : rng.normal();
  lp.b_le = lp.A_le * x0;
  for (int i = 0; i < ml; ++i) {
    const int kind = static_cast<int>(rng.below(5));
    if (kind == 0) continue;  // tight at x0 (degenerate)
    lp.b_le[i] += kind == 4 ? -5.0 * rng.uniform() : rng.uniform();  // kind 4 may be infeasible
  }
  return lp;
}

void lp_vs_tableau(Ctx& c) {
  int infeasible = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const LpProblem lp = random_lp(c.rng());
    const LpResult a = lp_simplex(lp);
    const TableauResult b = tableau_lp(lp);
    const bool a_ok = a.status == LpStatus::Optimal;
    infeasible += b.feasible ? 0 : 1;
    c.expect(a_ok == b.feasible, [&] { return "status mismatch: simplex " + std::string(a_ok ? "optimal" : "infeasible (" + a.diagnostic + ")") + ", tableau " + (b.feasible ? "optimal" : "infeasible"); });
    if (a_ok && b.feasible) {
      c.expect(std::abs(a.objective - b.objective) <= 1e-8, [&] { return fmt("objective %.17g vs tableau %.17g", a.objective, b.objective); });
    }
  }
  // Relaxations of small MILP models as well.
  for (int rep = 0; rep < 10; ++rep) {
    const Instance inst = random_instance(c.rng(), 4, 2, 2, 1.0, rep % 2 == 0);
    const Vec theta0 = sample_ball(c.rng(), 2, 1.0);
    const Design D = init_design(inst, theta0, static_cast<uint64_t>(rep));
    QfipData q = build_qfip(inst, theta0, D.M);
    q.A /= max_abs(q.A);
    const LpProblem lp = lp_relaxation(build_milp(q, big_m(q, BigMMode::Tight)));
    const LpResult a = lp_simplex(lp);
    const TableauResult b = tableau_lp(lp);
    c.expect(a.status == LpStatus::Optimal && b.feasible && std::abs(a.objective - b.objective) <= 1e-8,
             [&] { return fmt("MILP relaxation objective %.17g vs tableau %.17g", a.objective, b.objective); });
  }
  c.note(std::to_string(infeasible) + " of 1000 random LPs infeasible; all statuses and objectives agree");
}

struct MilpCase {
  Instance inst;
  Vec theta0;
  Mat M;
};

MilpCase milp_case(Rng& rng, int k) {
  const int N = uniform_int(rng, 6, 12);
  const int K = uniform_int(rng, 2, 3);
  const int d = uniform_int(rng, 2, 4);
  Instance inst = k % 2 == 0 ? gen_instance(N, K, d, 1.0, 9000 + static_cast<uint64_t>(k))
                             : random_instance(rng, N, d, K, 1.0, false);
  Vec theta0 = sample_ball(rng, d, inst.radius());
  Mat M = init_design(inst, theta0, static_cast<uint64_t>(k)).M;
  return {std::move(inst), std::move(theta0), std::move(M)};
}

void milp_exact(Ctx& c) {
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const MilpCase mc = milp_case(c.rng(), k);
    const LmoResult b = lmo_brute(mc.inst, mc.theta0, mc.M);
    MilpLmoOptions o;
    o.eps_lmo = 0.0;
    if (c.opts().corrupt_bigm) o.corrupt_m_a = 0.05;
    const LmoResult m = lmo_milp(mc.inst, mc.theta0, mc.M, o);
    const double got = trace_direct(mc.inst, mc.theta0, mc.M, m.assortment);
    worst = std::max(worst, std::abs(got - b.value));
    c.expect(std::abs(got - b.value) <= 1e-7, [&] { return fmt("MILP set value %.17g vs brute maximum %.17g", got, b.value); });
  }
  c.note(fmt("200 instances, max |MILP - brute| = %.3e", worst));
}

void milp_gap_soundness(Ctx& c) {
  double worst = 0.0;
  for (int k = 0; k < 60; ++k) {
    const MilpCase mc = milp_case(c.rng(), 1000 + k);
    const LmoResult b = lmo_brute(mc.inst, mc.theta0, mc.M);
    MilpLmoOptions o;
    o.eps_lmo = 0.1;
    if (c.opts().corrupt_bigm) o.corrupt_m_a = 0.05;
    const LmoResult m = lmo_milp(mc.inst, mc.theta0, mc.M, o);
    const double inc = trace_direct(mc.inst, mc.theta0, mc.M, m.assortment);
    worst = std::max(worst, b.value - inc);
    c.expect(b.value - inc <= 0.1 + 1e-7, [&] { return fmt("brute %.17g minus incumbent %.17g exceeds 0.1", b.value, inc); });
    c.expect(b.value <= m.upper_bound() + 1e-7, [&] { return fmt("true max %.17g above certified bound %.17g", b.value, m.upper_bound()); });
    c.expect(m.certified_gap <= 0.1 + 1e-12, [&] { return fmt("certified gap %.3e above target", m.certified_gap); });
  }
  c.note(fmt("largest brute - incumbent: %.3e", worst));
}

void mps_roundtrip(Ctx& c) {
  Mat F(2, 2);
  F << 0.6, 0.0, 0.0, 0.8;
  const Instance inst(F, Vec::Constant(2, 0.5), 2, 1.0, std::nullopt, true);
  const Vec theta0 = Vec::Zero(2);
  const Mat M = fisher_info(inst, Assortment{0, 1}, theta0) + 0.1 * Mat::Identity(2, 2);
  const QfipData q = build_qfip(inst, theta0, M);
  const MilpModel m = build_milp(q, big_m(q, BigMMode::Tight));
  const std::string a = mps_string(m), b = mps_string(build_milp(build_qfip(inst, theta0, M), big_m(q, BigMMode::Tight)));
  c.expect(a == b, [&] { return std::string("MPS text differs between two builds"); });
  const MilpModel r = parse_mps(a);
  const bool same = r.c == m.c && r.A_eq == m.A_eq && r.b_eq == m.b_eq && r.A_le == m.A_le && r.b_le == m.b_le &&
                    r.lower == m.lower && r.upper == m.upper && r.integer == m.integer && r.var_names == m.var_names;
  c.expect(same, [&] { return std::string("MPS round trip changed the model"); });
  c.expect(a.find("OBJSENSE") != std::string::npos && a.find("MIN") != std::string::npos,
           [&] { return std::string("objective sense not recorded as MIN"); });
}

// --------------------------------------------------------------- design_fw

void init_simplex(Ctx& c) {
  for (int d = 1; d <= 5; ++d) {
    // Regular simplex vertices centred at the origin, scaled into the unit ball.
    const int N = d + 1;
    Mat E = Mat::Identity(N, N) - Mat::Constant(N, N, 1.0 / N);
    Eigen::JacobiSVD<Mat> svd(E, Eigen::ComputeThinV);
    Mat F = E * svd.matrixV().leftCols(d);
    F /= F.rowwise().norm().maxCoeff();
    for (int K = 2; K <= N; ++K) {
      const Instance inst(F, Vec::Constant(N, 0.5), K, 1.0, std::nullopt, false);
      const Vec theta0 = sample_ball(c.rng(), d, 1.0);
      const Design D = init_design(inst, theta0, static_cast<uint64_t>(d * 10 + K));
      const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(D.M).eigenvalues().minCoeff();
      c.expect(lmin >= 1e-8 && D.support() <= 10 * d * (d + 1) / 2,
               [&] { return fmt("simplex d=%g: lambda_min %.3e with %g atoms", d, lmin, D.support()); });
    }
  }
}

void certificate_soundness(Ctx& c) {
  for (int rep = 0; rep < 20; ++rep) {
    const int d = uniform_int(c.rng(), 2, 3);
    const bool outside = rep % 2 == 0;
    const Instance inst = random_instance(c.rng(), uniform_int(c.rng(), d + 1, 8), d, 2, 1.0, outside);
    const Vec theta0 = sample_ball(c.rng(), d, 1.0);
    FwOptions fo;
    fo.eps = 0.5;
    fo.iter_cap = uniform_int(c.rng(), 1, 6);
    const Design D = frank_wolfe(inst, theta0, fo).design;
    const double gb = g_value(D, inst, theta0, Backend::Brute, 0.0).g_upper;
    const double gm = g_value(D, inst, theta0, Backend::Milp, 0.1).g_upper;
    for (const Assortment& S : all_assortments(inst)) {
      const double t = trace_direct(inst, theta0, D.M, S);
      c.expect(t <= gb + 1e-9 && t <= gm + 1e-9, [&] { return fmt("trace %.17g above certificate (brute %.17g, milp %.17g)", t, gb, gm); });
    }
  }
}

void line_search_grid(Ctx& c) {
  for (int rep = 0; rep < 5; ++rep) {
    const int d = 3;
    const Mat M = random_spd(c.rng(), d, 0.5, 2.0);
    Vec a = random_normal(c.rng(), d);
    a /= std::sqrt(a.dot(M.llt().solve(a)));
    const Mat I = (2.0 + 4.0 * c.rng().uniform()) * d * a * a.transpose();  // tr(M^{-1} I) > d
    const double gamma = line_search(M, I);
    const int grid = 1'000'000;
    double best = kNegInf, best_g = 0.0;
    for (int k = 0; k <= grid; ++k) {
      const double g = (1.0 - 1e-9) * k / grid;
      const double f = ((1.0 - g) * M + g * I).llt().matrixLLT().diagonal().array().log().sum();
      if (f > best) {
        best = f;
        best_g = g;
      }
    }
    c.expect(gamma > 0.0 && gamma < 1.0 && std::abs(gamma - best_g) <= 1e-6,
             [&] { return fmt("golden section %.9f vs grid %.9f", gamma, best_g); });
  }
}

Instance fw_small_instance() { return gen_instance(8, 2, 3, 1.0, 4242); }

void fw_brute_small(Ctx& c) {
  const Instance inst = fw_small_instance();
  const Vec theta0 = *inst.theta_star();
  FwOptions fo;
  fo.eps = 0.1;
  const FwReport rep = frank_wolfe(inst, theta0, fo);
  const double g = lmo_brute(inst, theta0, rep.design.M).value;
  c.expect(rep.certified && g <= 1.1 * 3 + 1e-9, [&] { return fmt("exact g %.6f after %g iterations", g, rep.iterations); });
  c.note(fmt("exact g %.6f <= %.2f after %g iterations", g, 3.3, rep.iterations));
}

void fw_milp_small(Ctx& c) {
  const Instance inst = fw_small_instance();
  const Vec theta0 = *inst.theta_star();
  FwOptions fo;
  fo.eps = 0.1;
  fo.backend = Backend::Milp;
  fo.eps_lmo = 0.05 * 3;  // eps_tilde = 0.05
  const FwReport rep = frank_wolfe(inst, theta0, fo);
  const double g = lmo_brute(inst, theta0, rep.design.M).value;
  c.expect(rep.certified && g <= 1.1 * 3 + 1e-9, [&] { return fmt("exact g %.6f after %g iterations", g, rep.iterations); });
  c.note(fmt("exact g %.6f <= %.2f after %g iterations", g, 3.3, rep.iterations));
}

void lift_error_bisection(Ctx& c) {
  for (int rep = 0; rep < 100; ++rep) {
    const int d = uniform_int(c.rng(), 1, 4);
    const bool outside = rep % 2 == 0;
    const Instance inst = random_instance(c.rng(), d + 4, d, 3, 1.0, outside);
    const Vec theta0 = sample_ball(c.rng(), d, 1.0);
    Assortment S1 = random_assortment(c.rng(), inst), S2 = random_assortment(c.rng(), inst);
    while (S2 == S1) S2 = random_assortment(c.rng(), inst);
    const double w = 0.1 + 0.8 * c.rng().uniform();
    const Design D = make_design(inst, theta0, {S1, S2}, {w, 1.0 - w});
    if (Eigen::SelfAdjointEigenSolver<Mat>(D.M).eigenvalues().minCoeff() < 1e-6) continue;
    const double eps = lift_error(D, inst, theta0);
    const Mat Delta = design_mismatch(D, inst, theta0);
    // Smallest e with e M - Delta PSD, by bisection on a Cholesky test.
    const double jitter = 1e-13 * D.M.trace();
    auto psd = [&](double e) { return (e * D.M - Delta + jitter * Mat::Identity(d, d)).llt().info() == Eigen::Success; };
    double lo = 0.0, hi = 1.0;
    while (!psd(hi)) hi *= 2.0;
    if (psd(0.0)) hi = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
      const double mid = 0.5 * (lo + hi);
      (psd(mid) ? hi : lo) = mid;
    }
    c.expect(std::abs(eps - hi) <= 1e-8, [&] { return fmt("eps_lift %.12g vs bisection %.12g", eps, hi); });
  }
}

// -------------------------------------------------------------- assortment

void revenue_composition(Ctx& c) {
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = uniform_int(c.rng(), 1, 4);
    const Instance inst = random_instance(c.rng(), d + 5, d, 4, 2.0, true);
    const Assortment S = random_assortment(c.rng(), inst);
    const Vec theta = sample_ball(c.rng(), d, 3.0);
    const ChoiceProbs p = choice_probs(inst, S, theta);
    double want = 0.0;
    for (int k = 0; k < S.size(); ++k) want += p.probs[k] * inst.revenues()[S[k]];
    const double got = revenue(inst, S, utilities(inst, theta));
    c.expect(std::abs(got - want) <= 1e-12 && got >= 0.0 && got <= 1.0, [&] { return fmt("revenue %.17g vs %.17g", got, want); });
  }
}

void uniform_revenue(Ctx& c) {
  for (int rep = 0; rep < 200; ++rep) {
    const int n = uniform_int(c.rng(), 1, 14);
    RevenueQuery q;
    q.utilities = random_normal(c.rng(), n, 1.5);
    q.revenues = Vec::Ones(n);
    q.K = uniform_int(c.rng(), 1, n);
    const RevenueSolution sol = best_assortment(q);
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return q.utilities[a] > q.utilities[b]; });
    order.resize(static_cast<size_t>(q.K));
    const Assortment want(order);
    Assortment brute;
    const double bv = brute_revenue(q.utilities, q.revenues, q.K, {}, {}, &brute);
    c.expect(sol.S == want && brute == want && std::abs(sol.value - bv) <= 1e-12,
             [&] { return "uniform revenues picked " + sol.S.label() + ", expected " + want.label(); });
  }
}

void best_enum(Ctx& c) {
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = uniform_int(c.rng(), 1, 14);
    RevenueQuery q;
    q.utilities = random_normal(c.rng(), n, 1.5);
    q.revenues = Vec(n);
    for (int i = 0; i < n; ++i) q.revenues[i] = c.rng().uniform();
    q.K = uniform_int(c.rng(), 1, n);
    if (rep % 3 == 1) {
      const auto sub = random_subset(c.rng(), n, uniform_int(c.rng(), 0, std::min(q.K, n)));
      const int n_in = sub.empty() ? 0 : uniform_int(c.rng(), 0, static_cast<int>(sub.size()));
      q.forced_in.assign(sub.begin(), sub.begin() + n_in);
      q.forced_out.assign(sub.begin() + n_in, sub.end());
      if (static_cast<int>(q.forced_out.size()) >= n) q.forced_out.clear();
    }
    Assortment arg;
    const double want = brute_revenue(q.utilities, q.revenues, q.K, q.forced_in, q.forced_out, &arg);
    if (!std::isfinite(want)) continue;
    const RevenueSolution sol = best_assortment(q);
    c.expect(std::abs(sol.value - want) <= 1e-12, [&] { return fmt("best revenue %.17g vs enumeration %.17g", sol.value, want); });
  }
}

void alternative_enum(Ctx& c) {
  int full = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const int d = uniform_int(c.rng(), 1, 3);
    const int N = uniform_int(c.rng(), std::max(d, 1), 8);
    const Instance inst = random_instance(c.rng(), N, d, uniform_int(c.rng(), 1, std::min(N, 4)), 1.0, true);
    const Vec u = utilities(inst, *inst.theta_star());
    Vec rad(N);
    for (int i = 0; i < N; ++i) rad[i] = 0.5 * c.rng().uniform();
    const Vec up = u + rad, um = u - rad;
    const BestAlternative ba = best_and_alternative(inst, up, um, inst.capacity());
    Assortment bb;
    const double best = brute_revenue(um, inst.revenues(), inst.capacity(), {}, {}, &bb);
    c.expect(std::abs(ba.best_value - best) <= 1e-12, [&] { return fmt("pessimistic best %.17g vs %.17g", ba.best_value, best); });
    Assortment alt;
    const double alt_v = brute_alternative(up, inst.revenues(), inst.capacity(), ba.best, &alt);
    c.expect(std::abs(ba.alt_value - alt_v) <= 1e-12 && !(ba.alternative == ba.best),
             [&] { return fmt("optimistic alternative %.17g vs enumeration %.17g", ba.alt_value, alt_v); });
    if (ba.best.size() == inst.capacity()) {
      ++full;
      double excl = 0.0;
      for (int i : ba.best.items()) {
        RevenueQuery q;
        q.utilities = up;
        q.revenues = inst.revenues();
        q.K = inst.capacity();
        q.forced_out = {i};
        if (N > 1) excl = std::max(excl, best_assortment(q).value);
      }
      c.expect(std::abs(excl - alt_v) <= 1e-12, [&] { return fmt("exclusion solves alone give %.17g, enumeration %.17g", excl, alt_v); });
    }
  }
  c.note(std::to_string(full) + " of 300 cases had |S_best| = K");
}

void alternative_coverage(Ctx& c) {
  for (int rep = 0; rep < 100; ++rep) {
    const int N = uniform_int(c.rng(), 1, 9);
    const int K = uniform_int(c.rng(), 1, N);
    const Instance inst = random_instance(c.rng(), N, 1, K, 1.0, true);
    const Vec u = utilities(inst, *inst.theta_star());
    const Assortment best = best_assortment({u, inst.revenues(), K, {}, {}}).S;
    for (const Assortment& S : all_subsets(N, 0, K)) {
      if (S == best) continue;
      bool covered = false;
      for (int i : best.items()) covered = covered || !S.contains(i);
      for (int j : S.items()) covered = covered || !best.contains(j);
      c.expect(covered, [&] { return "set " + S.label() + " escapes both constrained families"; });
    }
  }
}

void true_gap_enum(Ctx& c) {
  for (int rep = 0; rep < 100; ++rep) {
    const int d = uniform_int(c.rng(), 1, 4);
    const int N = uniform_int(c.rng(), d, 12);
    const Instance inst = random_instance(c.rng(), N, d, uniform_int(c.rng(), 1, std::min(N, 4)), 1.0, true);
    const Vec u = utilities(inst, *inst.theta_star());
    Assortment star;
    const double best = brute_revenue(u, inst.revenues(), inst.capacity(), {}, {}, &star);
    const double second = brute_alternative(u, inst.revenues(), inst.capacity(), star);
    const TrueGap g = true_gap(inst, -1.0);
    c.expect(std::abs(g.delta_min - (best - second)) <= 1e-12, [&] { return fmt("gap %.17g vs enumeration %.17g", g.delta_min, best - second); });
  }
}

// --------------------------------------------------------- bsi and sim_env

void warmup_threshold_value(Ctx& c) {
  const Instance inst = gen_instance(30, 3, 5, 1.0, 31);
  const double k = kappa(inst, *inst.theta_star());
  const double z = warmup_threshold(k, 5, 30, 0.05, 1.0, 1.0, 0.1);
  const double want = std::sqrt(k) / (256.0 * 0.1) * (1.0 / std::sqrt(5 * std::log(30 / 0.05)) + 1.0);
  c.expect(std::isfinite(z) && z > 0.0 && std::abs(z - want) <= 1e-15, [&] { return fmt("threshold %.17g", z); });
}

void ball_radial(Ctx& c) {
  for (int d : {1, 3, 5}) {
    const double B = 1.5;
    const int n = 100'000;
    double sum = 0.0;
    for (int s = 0; s < n; ++s) {
      Rng rng(static_cast<uint64_t>(s), Stream::InstanceGen, 0);  // the generator's first draw
      sum += std::pow(sample_ball(rng, d, B).norm() / B, d);
    }
    const double mean = sum / n;
    const double sigma = std::sqrt(1.0 / 12.0 / n);
    c.expect(std::abs(mean - 0.5) <= 3 * sigma, [&] { return fmt("d=%g: mean of (r/B)^d = %.5f, 3 sigma = %.5f", d, mean, 3 * sigma); });
  }
}

void choice_frequencies(Ctx& c) {
  const Instance inst = gen_instance(6, 3, 2, 1.0, 17);
  const Assortment S{0, 2, 5};
  Rng rng(c.opts().seed, Stream::Test, 4);
  const int n = 1'000'000;
  std::vector<double> count(4, 0.0);
  for (int t = 0; t < n; ++t) {
    const int ch = sample_choice_with(inst, S, *inst.theta_star(), rng);
    count[ch == kOutside ? 3 : static_cast<size_t>(std::find(S.vec().begin(), S.vec().end(), ch) - S.vec().begin())] += 1.0;
  }
  const ChoiceProbs p = choice_probs(inst, S, *inst.theta_star());
  for (int k = 0; k < 4; ++k) {
    const double pk = k < 3 ? p.probs[k] : p.outside;
    const double sd = std::sqrt(pk * (1 - pk) / n);
    c.expect(std::abs(count[static_cast<size_t>(k)] / n - pk) <= 4 * sd,
             [&] { return fmt("slot %g frequency %.5f vs %.5f", k, count[static_cast<size_t>(k)] / n, pk); });
  }
}

void stream_independence(Ctx& c) {
  const Instance inst = gen_instance(6, 3, 2, 1.0, 19);
  Environment env(inst, c.opts().seed);
  const Assortment S{1, 3};
  const int n = 200'000;
  double sa = 0, sb = 0, sab = 0;
  for (int t = 0; t < n; ++t) {
    const double a = env.sample_choice(S, Stream::FeedbackA) == 1 ? 1.0 : 0.0;
    const double b = env.sample_choice(S, Stream::FeedbackB) == 1 ? 1.0 : 0.0;
    sa += a;
    sb += b;
    sab += a * b;
  }
  const double ma = sa / n, mb = sb / n;
  const double corr = (sab / n - ma * mb) / std::sqrt(ma * (1 - ma) * mb * (1 - mb));
  c.expect(std::abs(corr) <= 4.0 / std::sqrt(n), [&] { return fmt("stream correlation %.5f", corr); });
  c.expect(env.draws(Stream::FeedbackA) == static_cast<uint64_t>(n) && env.draws(Stream::FeedbackB) == static_cast<uint64_t>(n),
           [&] { return std::string("stream draw counts do not match usage"); });
}

// Instance seed 2 of the N=10, K=2, d=3, B=1 family has Delta_min ~ 0.06,
// which keeps each run to a few seconds.
Instance bsi_instance() { return gen_instance(10, 2, 3, 1.0, 2); }

void bsi_small_correct(Ctx& c) {
  const Instance inst = bsi_instance();
  int correct = 0;
  for (uint64_t s = 0; s < 10; ++s) {
    Environment env(inst, 100 + s);
    BsiConfig cfg;
    cfg.seed = 100 + s;
    const BsiTrace tr = run_bsi(env, cfg);
    correct += tr.correct ? 1 : 0;
  }
  c.expect(correct >= 9, [&] { return std::to_string(correct) + "/10 seeds identified S*"; });
  c.note(std::to_string(correct) + "/10 seeds identified S*");
}

void bsi_backend_swap(Ctx& c) {
  const Instance inst = bsi_instance();
  for (uint64_t s = 0; s < 3; ++s) {
    BsiConfig cfg;
    cfg.seed = 200 + s;
    cfg.record_rounds = false;
    Environment e1(inst, cfg.seed), e2(inst, cfg.seed);
    const BsiTrace a = run_bsi(e1, cfg);
    cfg.backend = Backend::Milp;
    cfg.eps_lmo = 0.1;
    const BsiTrace b = run_bsi(e2, cfg);
    c.expect(a.warmup_len == b.warmup_len && a.theta0 == b.theta0, [&] { return std::string("warm-up differs between backends"); });
    const double ratio = static_cast<double>(a.tau) / static_cast<double>(b.tau);
    c.expect(ratio >= 1.0 / 3 && ratio <= 3.0, [&] { return fmt("stopping times %g vs %g", a.tau, b.tau); });
  }
}

}  // namespace

// ----------------------------------------------------------------- helpers

Ctx::Ctx(const CheckOptions& opts, OracleResult& res, uint32_t stream)
    : opts_(opts), res_(res), rng_(opts.seed, Stream::Test, stream) {}

std::vector<Assortment> all_subsets(int n, int lo, int hi) {
  std::vector<Assortment> out;
  hi = std::min(hi, n);
  for (int k = std::max(lo, 0); k <= hi; ++k) {
    std::vector<int> idx(static_cast<size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
      out.emplace_back(idx);
      int i = k - 1;
      while (i >= 0 && idx[static_cast<size_t>(i)] == n - k + i) --i;
      if (i < 0) break;
      ++idx[static_cast<size_t>(i)];
      for (int j = i + 1; j < k; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
    }
  }
  return out;
}

std::vector<Assortment> all_assortments(const Instance& inst) {
  return all_subsets(inst.num_arms(), inst.min_assortment_size(), inst.capacity());
}

Instance random_instance(Rng& rng, int N, int d, int K, double B, bool outside) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Mat F(N, d);
    for (int i = 0; i < N; ++i) F.row(i) = sample_ball(rng, d, 1.0).transpose();
    Vec r(N);
    for (int i = 0; i < N; ++i) r[i] = rng.uniform();
    Vec theta = sample_ball(rng, d, B);
    // Reject nearly degenerate geometries so every design can reach full rank.
    const Mat C = outside ? Mat(F.transpose() * F) : Mat((F.rowwise() - F.colwise().mean()).transpose() * (F.rowwise() - F.colwise().mean()));
    if (Eigen::SelfAdjointEigenSolver<Mat>(C).eigenvalues().minCoeff() < 1e-3) continue;
    try {
      return Instance(F, r, K, B, theta, outside);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InvalidInstance) throw;
    }
  }
  throw Error(ErrorKind::RejectionCap, "random_instance: no valid draw");
}

Assortment random_assortment(Rng& rng, const Instance& inst) {
  const int n = inst.num_arms();
  const int lo = inst.min_assortment_size();
  const int k = uniform_int(rng, lo, inst.capacity());
  return Assortment(random_subset(rng, n, k));
}

double brute_ratio(const RatioProblem& p, Assortment* argmax) {
  const int n = static_cast<int>(p.w.size());
  double best = kNegInf;
  for (const Assortment& S : all_subsets(n, p.min_size, p.K)) {
    bool ok = true;
    for (int i : p.forced_in) ok = ok && S.contains(i);
    for (int i : p.forced_out) ok = ok && !S.contains(i);
    if (!ok) continue;
    const double v = ratio_value(p, S.items());
    if (v > best) {
      best = v;
      if (argmax) *argmax = S;
    }
  }
  return best;
}

double brute_kappa(const Instance& inst, const Vec& theta) {
  double best = std::numeric_limits<double>::infinity();
  for (const Assortment& S : all_assortments(inst)) {
    const ChoiceProbs p = choice_probs(inst, S, theta);
    for (int k = 0; k < S.size(); ++k) best = std::min(best, p.probs[k] * p.outside);
  }
  return best;
}

double brute_revenue(const Vec& u, const Vec& r, int K, const std::vector<int>& forced_in,
                     const std::vector<int>& forced_out, Assortment* argmax) {
  const int n = static_cast<int>(u.size());
  double best = kNegInf;
  for (const Assortment& S : all_subsets(n, 1, K)) {
    bool ok = true;
    for (int i : forced_in) ok = ok && S.contains(i);
    for (int i : forced_out) ok = ok && !S.contains(i);
    if (!ok) continue;
    const double v = revenue_of(u, r, S.items());
    if (v > best) {
      best = v;
      if (argmax) *argmax = S;
    }
  }
  return best;
}

double brute_alternative(const Vec& u, const Vec& r, int K, const Assortment& excluded, Assortment* argmax) {
  double best = kNegInf;
  for (const Assortment& S : all_subsets(static_cast<int>(u.size()), 0, K)) {
    if (S == excluded) continue;
    const double v = revenue_of(u, r, S.items());
    if (v > best) {
      best = v;
      if (argmax) *argmax = S;
    }
  }
  return best;
}

Mat design_mismatch(const Design& design, const Instance& inst, const Vec& theta0) {
  const int d = inst.dim();
  Mat second = Mat::Zero(d, d);
  Vec bbar = Vec::Zero(d);
  for (size_t k = 0; k < design.atoms.size(); ++k) {
    const Assortment& S = design.atoms[k];
    const ChoiceProbs p = choice_probs(inst, S, theta0);
    Vec abar = Vec::Zero(d);
    for (int j = 0; j < S.size(); ++j) abar += p.probs[j] * inst.feature(S[j]);
    second += design.weights[k] * abar * abar.transpose();
    bbar += design.weights[k] * abar;
  }
  return second - bbar * bbar.transpose();
}

double brute_trace_max(const Instance& inst, const Vec& theta0, const Mat& M) {
  double best = kNegInf;
  for (const Assortment& S : all_assortments(inst)) best = std::max(best, trace_direct(inst, theta0, M, S));
  return best;
}

std::string join_doubles(const Vec& v) {
  std::string s = "(";
  for (int i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt("%.17g", v[i]);
  }
  return s + ")";
}

const std::vector<Oracle>& registry() {
  static const std::vector<Oracle> r = {
      {"core.choice_probs_hand", "probabilities for utilities (0, ln 2) are (1/3, 2/3)", choice_probs_hand},
      {"core.fisher_closed_forms", "Fisher matrix closed forms at theta = 0", fisher_closed_forms},
      {"core.schur_identity", "Schur complement of the lifted matrix equals the Fisher matrix (1000 draws)", schur_identity},
      {"core.hess_fisher_identity", "NLL Hessian equals summed Fisher matrices plus lambda I", hess_fisher_identity},
      {"core.grad_hess_fd", "NLL gradient and Hessian against central differences", grad_hess_fd},
      {"core.kappa_enum", "kappa against enumeration over all S and i (N <= 8, K <= 4)", kappa_enum},
      {"est.mle_consistency", "MLE within 0.1 of theta* after 50000 samples (d = 3, B = 1)", mle_consistency},
      {"est.beta_value", "confidence radius at N = 30, delta = 0.05, scale 0.1", beta_value},
      {"est.width_inverse", "widths against the explicit inverse", width_inverse},
      {"est.batch_h", "incremental H and V against batch sums", batch_h},
      {"est.width_monotone", "widths never grow under PSD updates", width_monotone},
      {"lmo.brute_vs_direct", "quadratic-form trace against direct Fisher trace", brute_vs_direct},
      {"lmo.lifted_enum", "lifted oracle against enumeration of the lifted trace (N <= 12)", lifted_enum},
      {"lmo.lifted_vs_brute_factor", "brute max <= (1 + eps_lift)(lifted max - 1)", lifted_vs_brute_factor},
      {"lmo.dinkelbach_enum", "Dinkelbach against subset enumeration (N <= 14)", dinkelbach_enum},
      {"milp.qfip_identity", "x'Ax / x'Bx equals minus the trace for every valid S", qfip_identity},
      {"milp.bigm_alpha_example", "alpha_bar = 1/4 for unit weights", bigm_alpha_example},
      {"milp.bigm_validity", "big-M bounds hold for every feasible x (N <= 12)", bigm_validity},
      {"milp.integral_objective", "MILP objective at integral points equals the QFIP ratio", integral_objective},
      {"milp.lp_relaxation_feasible", "LP relaxation feasible at a fractional point", lp_relaxation_feasible},
      {"milp.lp_vs_tableau", "simplex against a textbook tableau on random LPs", lp_vs_tableau},
      {"milp.exact_vs_brute", "branch and bound with zero gap equals brute force (200 instances)", milp_exact},
      {"milp.gap_soundness", "certified gaps are sound at eps_LMO = 0.1", milp_gap_soundness},
      {"milp.mps_roundtrip", "MPS export is deterministic and round-trips", mps_roundtrip},
      {"fw.init_simplex", "init_design reaches lambda_min >= 1e-8 on simplex geometries", init_simplex},
      {"fw.certificate_soundness", "g certificates bound every trace value", certificate_soundness},
      {"fw.line_search_grid", "golden-section step against a 10^6-point grid", line_search_grid},
      {"fw.brute_small", "brute FW at eps = 0.1 ends with exact g <= 1.1 d", fw_brute_small},
      {"fw.milp_small", "MILP FW with eps_tilde = 0.05 ends with exact g <= 1.1 d", fw_milp_small},
      {"fw.lift_error_bisection", "eps_lift against bisection on a Cholesky PSD test", lift_error_bisection},
      {"asst.revenue_composition", "revenue equals the probability-weighted revenue sum", revenue_composition},
      {"asst.uniform_revenue", "unit revenues select the K highest utilities", uniform_revenue},
      {"asst.best_enum", "best assortment against enumeration (N <= 14, with constraints)", best_enum},
      {"asst.alternative_enum", "best alternative against enumeration over S != S_best", alternative_enum},
      {"asst.alternative_coverage", "exclusion and inclusion families cover every S != S_best", alternative_coverage},
      {"asst.true_gap_enum", "revenue gap against the two best sets by enumeration", true_gap_enum},
      {"bsi.warmup_threshold_value", "warm-up threshold at the experimental configuration", warmup_threshold_value},
      {"sim.ball_radial", "E[(|theta|/B)^d] = 1/2 within 3 sigma (10^5 draws)", ball_radial},
      {"sim.choice_frequencies", "10^6 simulated choices within 4 sigma of the probabilities", choice_frequencies},
      {"sim.stream_independence", "feedback streams A and B uncorrelated within 4 sigma", stream_independence},
      {"bsi.small_correct", "BSI identifies S* on >= 9 of 10 seeds", bsi_small_correct},
      {"bsi.backend_swap", "brute and MILP backends share the warm-up; stopping times within 3x", bsi_backend_swap},
  };
  return r;
}

std::vector<OracleResult> run_oracles(const CheckOptions& opts, const std::function<void(const OracleResult&)>& on_result) {
  std::vector<OracleResult> out;
  for (const Oracle& o : registry()) {
    if (!opts.filter.empty() && o.name.find(opts.filter) == std::string::npos) continue;
    OracleResult res;
    res.name = o.name;
    const auto t0 = Clock::now();
    try {
      Ctx ctx(opts, res, fnv1a(o.name));
      o.body(ctx);
    } catch (const std::exception& e) {
      res.pass = false;
      ++res.failures;
      res.detail = std::string("exception: ") + e.what();
    }
    res.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (on_result) on_result(res);
    out.push_back(std::move(res));
  }
  return out;
}

std::string manifest_json(const std::vector<OracleResult>& results) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["pass"] = r.pass;
    j["cases"] = r.cases;
    j["failures"] = r.failures;
    j["detail"] = r.detail;
    j["seconds"] = r.seconds;
    arr.push_back(j);
  }
  return arr.dump(2);
}

}  // namespace mnld::check
