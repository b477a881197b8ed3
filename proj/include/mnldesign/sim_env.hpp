#pragma once

#include "mnldesign/mnl_core.hpp"
#include "mnldesign/rng.hpp"

#include <map>

namespace mnld {

/// Categorical draw from choice_probs(S, theta) by inverse CDF over
/// (S ascending, then the outside option). Returns an arm or kOutside.
int sample_choice_with(const Instance& inst, const Assortment& S, const Vec& theta, Rng& rng);

/// Simulated MNL environment at the instance's true parameter, with two
/// independent feedback streams.
class Environment {
 public:
  Environment(Instance inst, uint64_t seed);

  const Instance& instance() const { return inst_; }
  const Vec& theta_star() const { return *inst_.theta_star(); }

  /// stream must be FeedbackA or FeedbackB.
  int sample_choice(const Assortment& S, Stream stream);

  uint64_t draws(Stream stream) const;

 private:
  const Vec& cdf_for(const Assortment& S);

  Instance inst_;
  Rng a_, b_;
  uint64_t draws_a_ = 0, draws_b_ = 0;
  std::map<Assortment, Vec> cdf_cache_;
};

/// Random outside-option instance: theta* uniform in the radius-B ball,
/// features uniform in the unit ball, revenues Unif(0,1). Redraws (up to
/// 1000 times) until the optimal assortment beats every other set by more
/// than gap_margin.
Instance gen_instance(int N, int K, int d, double B, uint64_t seed, double gap_margin = 1e-6);

/// Interpolates revenues toward their mean, r(t) = (1-t) r + t mean(r),
/// choosing t so the revenue gap becomes `factor` times the original
/// (0 < factor <= 1).
Instance shrink_gap(const Instance& inst, double factor);

}  // namespace mnld
