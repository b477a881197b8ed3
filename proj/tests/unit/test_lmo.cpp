#include "mnldesign/check/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mnld;

TEST_CASE("binomial counts match the benchmark grid") {
  CHECK(binomial(30, 3) == 4060u);
  CHECK(binomial(30, 4) == 27405u);
  CHECK(binomial(50, 3) == 19600u);
  CHECK(binomial(50, 4) == 230300u);
  CHECK(binomial(200, 5) == 2535650040ull);
  CHECK(binomial(5, 7) == 0u);
  CHECK(binomial(1000, 500) == UINT64_MAX);
  CHECK(count_assortments(10, 1, 2) == 55u);
  CHECK(count_assortments(10, 2, 3) == 165u);
}

TEST_CASE("enumeration helpers agree with the counts") {
  CHECK(check::all_subsets(9, 2, 4).size() == count_assortments(9, 2, 4));
  CHECK(check::all_subsets(5, 0, 5).size() == 32u);
}

TEST_CASE("trace quadratic form matches direct evaluation") {
  Rng rng(1, Stream::Test, 21);
  for (int rep = 0; rep < 30; ++rep) {
    const int d = 2 + static_cast<int>(rng.below(3));
    const Instance inst = check::random_instance(rng, d + 4, d, 3, 1.0, rep % 2 == 1);
    const Vec theta0 = sample_ball(rng, d, 1.0);
    const Mat M = init_design(inst, theta0, static_cast<uint64_t>(rep)).M;
    const TraceTerms tt = trace_terms(inst, theta0, M);
    for (const Assortment& S : check::all_assortments(inst)) {
      const double a = trace_value(tt, S.items()), b = trace_direct(inst, theta0, M, S);
      CHECK(a == doctest::Approx(b).epsilon(1e-10));
    }
  }
}

TEST_CASE("brute LMO honours its budget and deadline") {
  const Instance inst = gen_instance(12, 3, 3, 1.0, 2);
  const Vec theta0 = *inst.theta_star();
  const Mat M = init_design(inst, theta0, 0).M;
  BruteOptions o;
  o.budget = 10;
  CHECK_THROWS_AS(lmo_brute(inst, theta0, M, o), Error);
  // The deadline is polled every 65536 evaluations, so use a larger catalogue.
  const Instance big = gen_instance(40, 4, 3, 1.0, 2);
  const Mat Mb = init_design(big, *big.theta_star(), 0).M;
  o.budget = UINT64_MAX;
  o.deadline = Clock::now() - std::chrono::seconds(1);
  CHECK_THROWS_AS(lmo_brute(big, *big.theta_star(), Mb, o), Error);
  const LmoResult r = lmo_brute(inst, theta0, M);
  CHECK(r.stats.evaluated == count_assortments(12, 1, 3));
  CHECK(r.certified_gap == 0.0);
}

TEST_CASE("Dinkelbach on a hand example") {
  // max (sum w s) / (1 + sum w): values 3, 1, 2 with unit weights.
  RatioProblem p;
  p.w = Vec::Ones(3);
  p.s = (Vec(3) << 3.0, 1.0, 2.0).finished();
  p.denom_const = 1.0;
  p.K = 3;
  const RatioSolution sol = dinkelbach(p);
  // {0}: 3/2; {0,2}: 5/3; {0,1,2}: 6/4. Best is {0,2}.
  CHECK(sol.S == Assortment{0, 2});
  CHECK(sol.ratio == doctest::Approx(5.0 / 3).epsilon(1e-15));

  p.forced_out = {2};
  CHECK(dinkelbach(p).S == Assortment{0});
  p.forced_out.clear();
  p.forced_in = {1};
  CHECK(dinkelbach(p).S == Assortment{0, 1, 2});
}

TEST_CASE("lifted LMO matches the lifted trace by enumeration") {
  Rng rng(5, Stream::Test, 22);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 2 + static_cast<int>(rng.below(2));
    const Instance inst = check::random_instance(rng, 8, d, 3, 1.0, rep % 2 == 0);
    const Vec theta0 = sample_ball(rng, d, 1.0);
    const Design D = init_design(inst, theta0, static_cast<uint64_t>(rep));
    double best = -1.0;
    for (const Assortment& S : check::all_assortments(inst))
      best = std::max(best, D.Mt.llt().solve(lifted_info(inst, S, theta0)).trace());
    CHECK(lmo_lifted(inst, theta0, D.Mt).value == doctest::Approx(best).epsilon(1e-11));
  }
}
