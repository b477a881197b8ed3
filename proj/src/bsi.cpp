#include "mnldesign/bsi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mnld {

KappaMode kappa_mode_from_string(const std::string& s) {
  if (s == "oracle") return KappaMode::Oracle;
  if (s == "bound") return KappaMode::Bound;
  throw Error(ErrorKind::DomainError, "unknown kappa mode '" + s + "'");
}

const char* to_string(KappaMode m) { return m == KappaMode::Oracle ? "oracle" : "bound"; }

double warmup_threshold(double kappa, int d, int N, double delta, double lambda, double B, double const_scale) {
  if (!(kappa > 0.0 && kappa <= 0.25)) throw Error(ErrorKind::DomainError, "kappa must be in (0, 1/4]");
  if (!(delta > 0.0 && delta <= 1.0) || !(lambda > 0.0) || !(const_scale > 0.0) || d < 1 || N < 1 || !(B >= 0.0)) {
    throw Error(ErrorKind::DomainError, "warm-up threshold arguments out of range");
  }
  const double t1 = 1.0 / std::sqrt(d * std::log(N / delta));
  const double t2 = 1.0 / (std::sqrt(lambda) * B);
  return std::sqrt(kappa) / (256.0 * const_scale) * (t1 + t2);
}

double kappa_bound(int K, double B) {
  const double den = 1.0 + K * std::exp(B);
  return std::exp(-B) / (den * den);
}

WarmupResult run_warmup(Environment& env, double zeta_w, double lambda, uint64_t round_cap, bool keep_sequence) {
  const Instance& inst = env.instance();
  const int n = inst.num_arms();
  const int d = inst.dim();
  const int K = inst.capacity();
  WarmupResult w(inst, lambda);
  std::vector<int> viol;
  viol.reserve(static_cast<size_t>(n));
  for (;;) {
    const Vec widths = w.V.widths_v(inst.features());
    viol.clear();
    for (int i = 0; i < n; ++i)
      if (widths[i] > zeta_w) viol.push_back(i);
    if (viol.empty()) break;
    if (w.rounds >= round_cap) {
      w.exhausted = true;
      break;
    }
    std::stable_sort(viol.begin(), viol.end(), [&](int a, int b) { return widths[a] > widths[b]; });
    if (static_cast<int>(viol.size()) > K) viol.resize(static_cast<size_t>(K));
    const Assortment S(viol);
    const int c1 = env.sample_choice(S, Stream::FeedbackA);
    const int c2 = env.sample_choice(S, Stream::FeedbackB);
    w.D_w.add(S, c1);
    w.D_w2.add(S, c2);
    Mat dV = Mat::Zero(d, d);
    for (int i : S.items()) dV.noalias() += inst.feature(i) * inst.feature(i).transpose();
    w.V.add(Mat(), dV);
    if (keep_sequence) {
      w.offers.push_back(S);
      w.choices_a.push_back(c1);
      w.choices_b.push_back(c2);
      w.max_widths.push_back(widths.maxCoeff());
    }
    ++w.rounds;
  }
  return w;
}

namespace {

struct Check {
  BestAlternative ba;
  double max_width = 0.0;
  bool stop = false;
  Vec widths;
};

Check stopping_check(const Instance& inst, const DesignMatrices& H, const Vec& theta_hat, double beta) {
  Check c;
  c.widths = H.widths(inst.features());
  c.max_width = c.widths.maxCoeff();
  const Vec u = utilities(inst, theta_hat);
  const Vec rad = std::sqrt(2.0) * beta * c.widths;
  c.ba = best_and_alternative(inst, u + rad, u - rad, inst.capacity());
  c.stop = c.ba.best_value > c.ba.alt_value;
  return c;
}

}  // namespace

BsiTrace run_bsi(Environment& env, const BsiConfig& cfg) {
  const auto t0 = Clock::now();
  const Instance& inst = env.instance();
  if (!inst.outside_option()) throw Error(ErrorKind::ModelMismatch, "BSI runs on the outside-option model");
  if (cfg.stop_check_every < 1) throw Error(ErrorKind::DomainError, "stop_check_every must be >= 1");
  const int d = inst.dim();
  const int n = inst.num_arms();
  BsiTrace tr;
  const Vec& theta_star = env.theta_star();
  tr.has_truth = true;
  const TrueGap truth = true_gap(inst, -1.0);

  tr.kappa = cfg.kappa_mode == KappaMode::Oracle ? kappa(inst, theta_star) : kappa_bound(inst.capacity(), inst.radius());
  tr.zeta_w = warmup_threshold(tr.kappa, d, n, cfg.delta, cfg.lambda, inst.radius(), cfg.const_scale);
  tr.beta = cfg.beta_override ? *cfg.beta_override : beta(cfg.delta, cfg.lambda, inst.radius(), n, cfg.const_scale);

  auto finish = [&]() -> BsiTrace& {
    tr.tau = tr.warmup_len + tr.main_rounds;
    tr.samples = 2 * tr.warmup_len + tr.main_rounds;
    tr.correct = tr.stopped && tr.S_hat == truth.S_star;
    tr.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return tr;
  };

  WarmupResult w = run_warmup(env, tr.zeta_w, cfg.lambda, cfg.round_cap, cfg.record_rounds);
  tr.warmup_len = w.rounds;
  if (cfg.record_rounds) {
    for (size_t k = 0; k < w.offers.size(); ++k) {
      BsiRound r;
      r.phase = 'w';
      r.round = k + 1;
      r.S = w.offers[k];
      r.choice = w.choices_a[k];
      r.choice2 = w.choices_b[k];
      r.max_width = w.max_widths[k];
      tr.rounds.push_back(std::move(r));
    }
  }
  if (w.exhausted) {
    tr.failed = true;
    tr.failure = "round cap reached during warm-up";
    return finish();
  }

  const MleResult fit0 = fit_mle(inst, w.D_w2, cfg.lambda, Vec::Zero(d));
  MleResult fit = fit_mle(inst, w.D_w, cfg.lambda, Vec::Zero(d));
  if (!fit0.converged || !fit.converged) {
    tr.failed = true;
    tr.failure = "MLE did not converge after warm-up";
    return finish();
  }
  tr.theta0 = fit0.theta_hat;
  Vec theta_hat = cfg.freeze_theta_at_truth ? theta_star : fit.theta_hat;

  FwOptions fo;
  fo.eps = cfg.eps;
  fo.backend = cfg.backend;
  fo.eps_lmo = cfg.backend == Backend::Milp ? cfg.eps_lmo : 0.0;
  fo.iter_cap = cfg.fw_iter_cap;
  fo.seed = cfg.seed;
  fo.lmo = cfg.lmo;
  const FwReport rep = frank_wolfe(inst, tr.theta0, fo);
  tr.fw_iterations = rep.iterations;
  tr.fw_final_g = rep.final_g;
  tr.design_support = rep.design.support();
  const Design& design = rep.design;

  ChoiceDataset D = w.D_w;
  DesignMatrices H(d, cfg.lambda);
  {
    Mat dH = Mat::Zero(d, d);
    for (const ChoiceGroup& g : w.D_w.groups()) dH += g.total * fisher_info(inst, g.assortment, tr.theta0);
    H.add(dH, Mat());
  }
  std::vector<size_t> atom_group(design.atoms.size());
  std::vector<double> cdf(design.atoms.size());
  double acc = 0.0;
  for (size_t k = 0; k < design.atoms.size(); ++k) {
    atom_group[k] = D.group_of(design.atoms[k]);
    acc += design.weights[k];
    cdf[k] = acc;
  }
  Rng sampler(cfg.seed, Stream::DesignSampling);

  Check chk = stopping_check(inst, H, theta_hat, tr.beta);
  for (;;) {
    if (chk.stop) break;
    if (tr.warmup_len + tr.main_rounds >= cfg.round_cap) break;
    const double u = sampler.uniform() * acc;
    size_t k = static_cast<size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    k = std::min(k, cdf.size() - 1);
    const Assortment& S = design.atoms[k];
    const int choice = env.sample_choice(S, Stream::FeedbackA);
    const int slot = choice == kOutside ? S.size() : static_cast<int>(std::lower_bound(S.vec().begin(), S.vec().end(), choice) - S.vec().begin());
    D.add_to_group(atom_group[k], slot);
    H.add(design.atom_info[k], Mat());
    ++tr.main_rounds;
    const bool check_now = tr.main_rounds % static_cast<uint64_t>(cfg.stop_check_every) == 0;
    if (check_now) {
      if (!cfg.freeze_theta_at_truth) {
        fit = fit_mle(inst, D, cfg.lambda, theta_hat);
        if (!fit.converged) {
          tr.failed = true;
          tr.failure = "MLE did not converge in the main phase";
          tr.theta_hat = theta_hat;
          return finish();
        }
        theta_hat = fit.theta_hat;
      }
      chk = stopping_check(inst, H, theta_hat, tr.beta);
    }
    if (cfg.record_rounds) {
      BsiRound r;
      r.phase = 'm';
      r.round = tr.warmup_len + tr.main_rounds;
      r.S = S;
      r.choice = choice;
      if (check_now) {
        r.max_width = chk.max_width;
        r.R_pess = chk.ba.best_value;
        r.R_opt_alt = chk.ba.alt_value;
        r.stopped = chk.stop;
      } else {
        r.max_width = std::numeric_limits<double>::quiet_NaN();
      }
      tr.rounds.push_back(std::move(r));
    }
  }
  tr.theta_hat = theta_hat;
  tr.S_hat = chk.ba.best;
  tr.stopped = chk.stop;
  if (tr.stopped) {
    const Vec err = (inst.features() * (theta_hat - theta_star)).cwiseAbs();
    tr.honest_at_stop = (err.array() <= std::sqrt(2.0) * tr.beta * chk.widths.array()).all();
    if (tr.honest_at_stop && !(tr.S_hat == truth.S_star)) {
      MNLD_ASSERT(chk.ba.best_value - chk.ba.alt_value <= 1e-12,
                  "stopped with honest confidence bands but returned a suboptimal assortment");
    }
  }
  return finish();
}

}  // namespace mnld
