#include "mnldesign/check/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mnld;

TEST_CASE("revenue of small sets by hand") {
  const Vec u = (Vec(3) << 0.0, std::log(2.0), std::log(3.0)).finished();
  const Vec r = (Vec(3) << 1.0, 0.5, 0.2).finished();
  CHECK(revenue_of(u, r, std::vector<int>{}) == 0.0);
  CHECK(revenue_of(u, r, std::vector<int>{0}) == doctest::Approx(0.5));
  // {0, 1}: (1 * 1 + 2 * 0.5) / (1 + 1 + 2) = 0.5
  CHECK(revenue_of(u, r, std::vector<int>{0, 1}) == doctest::Approx(0.5));
  // {0, 1, 2}: (1 + 1 + 0.6) / 7
  CHECK(revenue_of(u, r, std::vector<int>{0, 1, 2}) == doctest::Approx(2.6 / 7));
  // Large utilities stay finite.
  CHECK(std::isfinite(revenue_of(Vec::Constant(3, 800.0), r, std::vector<int>{0, 1, 2})));
}

TEST_CASE("best assortment never returns the empty set") {
  RevenueQuery q;
  q.utilities = Vec::Constant(3, -50.0);
  q.revenues = Vec::Zero(3);
  q.K = 2;
  const RevenueSolution s = best_assortment(q);
  CHECK(s.S.size() >= 1);
  CHECK(s.value == 0.0);
  q.forced_out = {0, 1, 2};
  CHECK_THROWS_AS(best_assortment(q), Error);
}

TEST_CASE("best and alternative on a hand example") {
  // High-revenue arm 0 alone beats adding the cheap arm 1.
  Mat F(2, 1);
  F << 1.0, 1.0;
  const Instance inst(F, (Vec(2) << 0.9, 0.1).finished(), 2, 1.0, Vec::Zero(1), true);
  const Vec u = Vec::Zero(2);
  const BestAlternative ba = best_and_alternative(inst, u, u, 2);
  CHECK(ba.best == Assortment{0});
  CHECK(ba.best_value == doctest::Approx(0.45));
  CHECK(ba.alternative == Assortment{0, 1});
  CHECK(ba.alt_value == doctest::Approx(1.0 / 3));
  const TrueGap g = true_gap(inst);
  CHECK(g.S_star == Assortment{0});
  CHECK(g.delta_min == doctest::Approx(0.45 - 1.0 / 3));
}

TEST_CASE("ties raise NonUniqueMaximizer") {
  Mat F(2, 1);
  F << 0.5, 0.5;
  const Instance inst(F, Vec::Constant(2, 0.5), 1, 1.0, Vec::Zero(1), true);
  try {
    true_gap(inst);
    FAIL("expected a tie");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonUniqueMaximizer);
  }
}

TEST_CASE("shrink_gap scales the gap by the requested factor") {
  const Instance inst = gen_instance(10, 2, 3, 1.0, 2);
  const double d0 = true_gap(inst).delta_min;
  for (double f : {0.5, 0.25}) {
    const Instance s = shrink_gap(inst, f);
    CHECK(true_gap(s, 0.0).delta_min == doctest::Approx(f * d0).epsilon(1e-6));
    CHECK(s.features() == inst.features());
  }
  CHECK_THROWS_AS(shrink_gap(inst, 0.0), Error);
}
