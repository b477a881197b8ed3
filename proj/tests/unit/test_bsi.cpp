#include "mnldesign/check/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mnld;

TEST_CASE("warm-up threshold and kappa bound") {
  const double z = warmup_threshold(0.01, 3, 10, 0.05, 1.0, 1.0, 0.1);
  CHECK(z == doctest::Approx(0.1 / 25.6 * (1.0 / std::sqrt(3 * std::log(200.0)) + 1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(warmup_threshold(0.0, 3, 10, 0.05, 1.0, 1.0, 0.1), Error);
  CHECK_THROWS_AS(warmup_threshold(0.01, 3, 10, 1.5, 1.0, 1.0, 0.1), Error);
  CHECK(kappa_bound(2, 1.0) == doctest::Approx(std::exp(-1.0) / std::pow(1 + 2 * std::exp(1.0), 2)));
  for (uint64_t s = 1; s <= 10; ++s) {
    const Instance inst = gen_instance(10, 2, 3, 1.0, s);
    CHECK(kappa_bound(2, 1.0) <= kappa(inst, *inst.theta_star()));
  }
  CHECK(kappa_mode_from_string("bound") == KappaMode::Bound);
  CHECK_THROWS_AS(kappa_mode_from_string("guess"), Error);
}

TEST_CASE("warm-up drives every width below the threshold") {
  const Instance inst = gen_instance(10, 2, 3, 1.0, 2);
  Environment env(inst, 5);
  const double zeta = 0.2;
  const WarmupResult w = run_warmup(env, zeta, 1.0, 1'000'000, true);
  CHECK_FALSE(w.exhausted);
  CHECK(w.V.widths_v(inst.features()).maxCoeff() <= zeta);
  CHECK(w.offers.size() == w.rounds);
  CHECK(w.D_w.num_observations() == static_cast<double>(w.rounds));
  CHECK(w.D_w2.num_observations() == static_cast<double>(w.rounds));
  for (const Assortment& S : w.offers) CHECK(S.size() <= 2);
  // Widths never increase along the sequence.
  for (size_t t = 1; t < w.max_widths.size(); ++t) CHECK(w.max_widths[t] <= w.max_widths[t - 1] + 1e-15);

  Environment env2(inst, 5);
  const WarmupResult capped = run_warmup(env2, zeta, 1.0, 10, false);
  CHECK(capped.exhausted);
  CHECK(capped.rounds == 10u);
}

TEST_CASE("with zero confidence radius and theta frozen at the truth BSI stops at once") {
  const Instance inst = gen_instance(10, 2, 3, 1.0, 2);
  Environment env(inst, 3);
  BsiConfig cfg;
  cfg.seed = 3;
  cfg.beta_override = 0.0;
  cfg.freeze_theta_at_truth = true;
  const BsiTrace tr = run_bsi(env, cfg);
  CHECK(tr.stopped);
  CHECK(tr.correct);
  // The rule is checked once before the first main round.
  CHECK(tr.main_rounds == 0u);
  CHECK(tr.S_hat == true_gap(inst).S_star);
}

TEST_CASE("BSI bookkeeping and determinism") {
  const Instance inst = gen_instance(10, 2, 3, 1.0, 2);
  BsiConfig cfg;
  cfg.seed = 11;
  cfg.record_rounds = true;
  Environment e1(inst, 11), e2(inst, 11);
  const BsiTrace a = run_bsi(e1, cfg), b = run_bsi(e2, cfg);
  CHECK(a.stopped);
  CHECK(a.tau == a.warmup_len + a.main_rounds);
  CHECK(a.samples == 2 * a.warmup_len + a.main_rounds);
  CHECK(a.rounds.size() == a.tau);
  CHECK(a.tau == b.tau);
  CHECK(a.S_hat == b.S_hat);
  CHECK(a.theta_hat == b.theta_hat);
  CHECK(a.rounds.back().stopped);
  CHECK(a.honest_at_stop);
  CHECK(a.beta == doctest::Approx(beta(0.05, 1.0, 1.0, 10, 0.1)));
  CHECK(e1.draws(Stream::FeedbackB) == a.warmup_len);
  CHECK(e1.draws(Stream::FeedbackA) == a.warmup_len + a.main_rounds);
}

TEST_CASE("BSI without an outside option is rejected") {
  Rng rng(1, Stream::Test, 71);
  const Instance inst = check::random_instance(rng, 6, 2, 2, 1.0, false);
  Environment env(inst, 1);
  CHECK_THROWS_AS(run_bsi(env, BsiConfig{}), Error);
}

TEST_CASE("hitting the round cap reports a failed run") {
  const Instance inst = gen_instance(10, 2, 3, 1.0, 2);
  Environment env(inst, 1);
  BsiConfig cfg;
  cfg.round_cap = 100;
  const BsiTrace tr = run_bsi(env, cfg);
  CHECK(tr.failed);
  CHECK_FALSE(tr.stopped);
  CHECK(tr.tau <= 100u);
}
