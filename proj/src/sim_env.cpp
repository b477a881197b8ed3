#include "mnldesign/sim_env.hpp"

#include "mnldesign/assortment.hpp"

#include <cmath>

namespace mnld {

namespace {

Vec cumulative(const Instance& inst, const Assortment& S, const Vec& theta) {
  const ChoiceProbs cp = choice_probs(inst, S, theta);
  const int m = S.size();
  Vec cdf(m + (cp.has_outside ? 1 : 0));
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    acc += cp.probs[k];
    cdf[k] = acc;
  }
  if (cp.has_outside) cdf[m] = acc + cp.outside;
  return cdf;
}

int draw(const Assortment& S, const Vec& cdf, double u) {
  const int m = S.size();
  for (int k = 0; k < cdf.size(); ++k) {
    if (u < cdf[k]) return k < m ? S[k] : kOutside;
  }
  return cdf.size() > m ? kOutside : S[m - 1];
}

}  // namespace

int sample_choice_with(const Instance& inst, const Assortment& S, const Vec& theta, Rng& rng) {
  return draw(S, cumulative(inst, S, theta), rng.uniform());
}

Environment::Environment(Instance inst, uint64_t seed)
    : inst_(std::move(inst)), a_(seed, Stream::FeedbackA), b_(seed, Stream::FeedbackB) {
  if (!inst_.theta_star()) throw Error(ErrorKind::DomainError, "environment needs theta_star");
}

const Vec& Environment::cdf_for(const Assortment& S) {
  auto it = cdf_cache_.find(S);
  if (it != cdf_cache_.end()) return it->second;
  return cdf_cache_.emplace(S, cumulative(inst_, S, *inst_.theta_star())).first->second;
}

int Environment::sample_choice(const Assortment& S, Stream stream) {
  const Vec& cdf = cdf_for(S);
  double u;
  if (stream == Stream::FeedbackA) {
    u = a_.uniform();
    ++draws_a_;
  } else if (stream == Stream::FeedbackB) {
    u = b_.uniform();
    ++draws_b_;
  } else {
    throw Error(ErrorKind::DomainError, "feedback must use stream A or B");
  }
  return draw(S, cdf, u);
}

uint64_t Environment::draws(Stream stream) const {
  return stream == Stream::FeedbackA ? draws_a_ : stream == Stream::FeedbackB ? draws_b_ : 0;
}

Instance gen_instance(int N, int K, int d, double B, uint64_t seed, double gap_margin) {
  if (N < d || K < 1 || K > N || d < 1) throw Error(ErrorKind::DomainError, "need N >= d >= 1 and 1 <= K <= N");
  if (!(B >= 0.0)) throw Error(ErrorKind::DomainError, "B must be >= 0");
  for (uint32_t attempt = 0; attempt < 1000; ++attempt) {
    Rng rng(seed, Stream::InstanceGen, attempt);
    const Vec theta = sample_ball(rng, d, B);
    Mat F(N, d);
    for (int i = 0; i < N; ++i) F.row(i) = sample_ball(rng, d, 1.0).transpose();
    Vec r(N);
    for (int i = 0; i < N; ++i) r[i] = rng.uniform();
    try {
      Instance inst(F, r, K, B, theta, true);
      true_gap(inst, gap_margin);
      return inst;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonUniqueMaximizer && e.kind() != ErrorKind::InvalidInstance) throw;
    }
  }
  throw Error(ErrorKind::RejectionCap, "no instance with a unique optimum after 1000 draws");
}

Instance shrink_gap(const Instance& inst, double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) throw Error(ErrorKind::DomainError, "shrink factor must be in (0,1]");
  const double d0 = true_gap(inst, 0.0).delta_min;
  if (factor == 1.0) return inst;
  const double target = factor * d0;
  const Vec& r = inst.revenues();
  const double mean = r.mean();
  auto at = [&](double t) { return inst.with_revenues(((1.0 - t) * r.array() + t * mean).matrix()); };
  auto gap_at = [&](double t) {
    try {
      return true_gap(at(t), -1.0).delta_min;
    } catch (const Error&) {
      return 0.0;
    }
  };
  // First grid crossing below the target, then bisection inside it.
  double lo = 0.0, hi = -1.0;
  const int grid = 400;
  for (int k = 1; k <= grid; ++k) {
    const double t = static_cast<double>(k) / grid;
    if (gap_at(t) <= target) {
      hi = t;
      break;
    }
    lo = t;
  }
  if (hi < 0.0) throw Error(ErrorKind::DomainError, "revenue interpolation cannot shrink the gap that far");
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gap_at(mid) > target ? lo : hi) = mid;
  }
  return at(lo);
}

}  // namespace mnld
