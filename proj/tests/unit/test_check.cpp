#include "mnldesign/check/oracles.hpp"
#include "mnldesign/check/tableau_lp.hpp"

#include <doctest.h>
#include <json.hpp>

#include <set>

using namespace mnld;

TEST_CASE("oracle names are unique and grouped") {
  std::set<std::string> names;
  for (const auto& o : check::registry()) {
    CHECK(names.insert(o.name).second);
    CHECK(o.name.find('.') != std::string::npos);
    CHECK_FALSE(o.what.empty());
  }
  CHECK(names.size() >= 40u);
}

TEST_CASE("filtered oracle runs produce a manifest") {
  check::CheckOptions co;
  co.filter = "core.";
  std::vector<std::string> seen;
  const auto res = check::run_oracles(co, [&](const check::OracleResult& r) { seen.push_back(r.name); });
  CHECK(res.size() == seen.size());
  CHECK(res.size() >= 5u);
  for (const auto& r : res) CHECK(r.pass);
  const auto j = nlohmann::json::parse(check::manifest_json(res));
  CHECK(j.size() == res.size());
  CHECK(j[0]["name"] == res[0].name);
}

TEST_CASE("an oracle that throws counts as a failure") {
  check::CheckOptions co;
  co.filter = "milp.exact_vs_brute";
  co.corrupt_bigm = true;
  const auto res = check::run_oracles(co);
  REQUIRE(res.size() == 1u);
  CHECK_FALSE(res[0].pass);
}

TEST_CASE("reference tableau solves a textbook LP") {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
  LpProblem lp;
  lp.c = (Vec(2) << -3, -5).finished();
  lp.A_eq = Mat(0, 2);
  lp.b_eq = Vec(0);
  lp.A_le = (Mat(3, 2) << 1, 0, 0, 2, 3, 2).finished();
  lp.b_le = (Vec(3) << 4, 12, 18).finished();
  lp.lower = Vec::Zero(2);
  lp.upper = Vec::Constant(2, 100.0);
  const check::TableauResult r = check::tableau_lp(lp);
  REQUIRE(r.feasible);
  CHECK(r.objective == doctest::Approx(-36.0));
  CHECK(r.x[0] == doctest::Approx(2.0));
  CHECK(r.x[1] == doctest::Approx(6.0));
}

TEST_CASE("enumeration helpers match hand counts") {
  RatioProblem p;
  p.w = Vec::Ones(3);
  p.s = (Vec(3) << 3.0, 1.0, 2.0).finished();
  p.denom_const = 1.0;
  p.K = 2;
  Assortment arg;
  CHECK(check::brute_ratio(p, &arg) == doctest::Approx(5.0 / 3));
  CHECK(arg == Assortment{0, 2});
  const Vec u = Vec::Zero(2), r = (Vec(2) << 0.9, 0.1).finished();
  CHECK(check::brute_revenue(u, r, 2, {}, {}, &arg) == doctest::Approx(0.45));
  CHECK(check::brute_alternative(u, r, 2, arg) == doctest::Approx(1.0 / 3));
}
