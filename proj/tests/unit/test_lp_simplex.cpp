#include "mnldesign/check/oracles.hpp"
#include "mnldesign/check/tableau_lp.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>

using namespace mnld;

namespace {

LpProblem box(int n, double lo, double hi) {
  LpProblem lp;
  lp.c = Vec::Zero(n);
  lp.lower = Vec::Constant(n, lo);
  lp.upper = Vec::Constant(n, hi);
  lp.A_eq = Mat(0, n);
  lp.b_eq = Vec(0);
  lp.A_le = Mat(0, n);
  lp.b_le = Vec(0);
  return lp;
}

}  // namespace

TEST_CASE("small LP with a known optimum") {
  // max x + y s.t. x + 2y <= 4, 3x + y <= 6, 0 <= x, y <= 10 -> (8/5, 6/5).
  LpProblem lp = box(2, 0.0, 10.0);
  lp.c << -1.0, -1.0;
  lp.A_le = (Mat(2, 2) << 1, 2, 3, 1).finished();
  lp.b_le = (Vec(2) << 4, 6).finished();
  const LpResult r = lp_simplex(lp);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(r.x[1] == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(r.objective == doctest::Approx(-2.8).epsilon(1e-12));
}

TEST_CASE("equality rows and negative right-hand sides") {
  // min x - y s.t. x + y = 1, -x <= -0.25, x, y in [-1, 1] -> (0.25, 0.75).
  LpProblem lp = box(2, -1.0, 1.0);
  lp.c << 1.0, -1.0;
  lp.A_eq = (Mat(1, 2) << 1, 1).finished();
  lp.b_eq = (Vec(1) << 1).finished();
  lp.A_le = (Mat(1, 2) << -1, 0).finished();
  lp.b_le = (Vec(1) << -0.25).finished();
  const LpResult r = lp_simplex(lp);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("infeasible LPs are reported") {
  LpProblem lp = box(1, 0.0, 1.0);
  lp.A_le = (Mat(1, 1) << -1).finished();
  lp.b_le = (Vec(1) << -2).finished();  // x >= 2
  CHECK(lp_simplex(lp).status == LpStatus::Infeasible);
  LpProblem crossed = box(1, 1.0, 0.0);
  CHECK(lp_simplex(crossed).status == LpStatus::Infeasible);
  LpProblem unbounded = box(1, 0.0, std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(lp_simplex(unbounded), Error);
}

TEST_CASE("an entering slack with an infinite upper bound is blocked by a row") {
  // min -x s.t. x >= 1 (as -x <= -1), x <= 3, x in [0, 5]. Phase II enters
  // the slack of the first row, whose only limit is the second row.
  LpProblem lp = box(1, 0.0, 5.0);
  lp.c << -1.0;
  lp.A_le = (Mat(2, 1) << -1, 1).finished();
  lp.b_le = (Vec(2) << -1, 3).finished();
  const LpResult r = lp_simplex(lp);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-3.0).epsilon(1e-14));
}

TEST_CASE("a noisy pivot that corrupts the basis triggers a clean re-solve") {
  std::ifstream f(std::string(MNLD_GOLDEN_DIR) + "/milp_noisy_pivot.json");
  REQUIRE(f);
  const auto j = nlohmann::json::parse(f);
  const Instance inst = instance_from_json(j["instance"].dump());
  Vec theta0(inst.dim());
  for (int i = 0; i < inst.dim(); ++i) theta0[i] = j["theta0"][static_cast<size_t>(i)].get<double>();
  const Mat M = init_design(inst, theta0, j["design_seed"].get<uint64_t>()).M;
  QfipData q = build_qfip(inst, theta0, M);
  q.A /= q.A.cwiseAbs().maxCoeff();
  LpProblem lp = lp_relaxation(build_milp(q, big_m(q, BigMMode::Tight)));
  for (int i : {3, 6, 7}) lp.lower[i] = lp.upper[i] = 1.0;
  const check::TableauResult ref = check::tableau_lp(lp);
  REQUIRE(ref.feasible);
  LpOptions loose;
  loose.pivot_tol = 1e-11;  // the setting under which this LP first failed
  for (const LpOptions& o : {LpOptions{}, loose}) {
    const LpResult r = lp_simplex(lp, o);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(ref.objective).epsilon(1e-9));
  }
  // And the full MILP finds the brute-force optimum.
  MilpLmoOptions mo;
  const LmoResult m = lmo_milp(inst, theta0, M, mo);
  CHECK(trace_direct(inst, theta0, M, m.assortment) == doctest::Approx(lmo_brute(inst, theta0, M).value).epsilon(1e-9));
}

TEST_CASE("simplex and the reference tableau agree on random LPs") {
  Rng rng(3, Stream::Test, 31);
  for (int rep = 0; rep < 300; ++rep) {
    const int n = 2 + static_cast<int>(rng.below(4));
    LpProblem lp = box(n, -1.0, 2.0);
    for (int j = 0; j < n; ++j) lp.c[j] = rng.normal();
    const int m = 1 + static_cast<int>(rng.below(4));
    lp.A_le = Mat(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) lp.A_le(i, j) = rng.normal();
    lp.b_le = Vec(m);
    for (int i = 0; i < m; ++i) lp.b_le[i] = rng.normal();
    const LpResult a = lp_simplex(lp);
    const check::TableauResult b = check::tableau_lp(lp);
    REQUIRE((a.status == LpStatus::Optimal) == b.feasible);
    if (b.feasible) CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));
  }
}
