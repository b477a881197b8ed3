#include "mnldesign/check/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mnld;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no exception");
  return ErrorKind::Internal;
}

Mat two_by_two() {
  Mat F(3, 2);
  F << 1.0, 0.0, 0.0, 1.0, 0.6, 0.8;
  return F;
}

}  // namespace

TEST_CASE("instance construction enforces the model assumptions") {
  const Mat F = two_by_two();
  const Vec r = Vec::Constant(3, 0.5);
  CHECK_NOTHROW(Instance(F, r, 2, 1.0, Vec::Zero(2), false));

  Mat big = F;
  big(0, 0) = 1.01;
  CHECK(kind_of([&] { Instance(big, r, 2, 1.0, std::nullopt, true); }) == ErrorKind::InvalidInstance);
  CHECK(kind_of([&] { Instance(F, Vec::Constant(3, 1.5), 2, 1.0, std::nullopt, true); }) == ErrorKind::InvalidInstance);
  CHECK(kind_of([&] { Instance(F, r, 4, 1.0, std::nullopt, true); }) == ErrorKind::InvalidInstance);
  CHECK(kind_of([&] { Instance(F, r, 1, 1.0, std::nullopt, false); }) == ErrorKind::InvalidInstance);
  CHECK(kind_of([&] { Instance(F, r, 2, 0.5, Vec::Ones(2), true); }) == ErrorKind::InvalidInstance);

  // Collinear differences are not identifiable without the outside option.
  Mat line(3, 2);
  line << 0.1, 0.2, 0.3, 0.6, 0.2, 0.4;
  CHECK(kind_of([&] { Instance(line, r, 2, 1.0, std::nullopt, false); }) == ErrorKind::InvalidInstance);
  CHECK_NOTHROW(Instance(line, r, 2, 1.0, std::nullopt, true));
}

TEST_CASE("assortments are sorted sets with 1-based labels") {
  const Assortment S{7, 0, 3};
  CHECK(S.vec() == std::vector<int>{0, 3, 7});
  CHECK(S.label() == "1;4;8");
  CHECK(Assortment{}.label().empty());
  CHECK(S.contains(3));
  CHECK_FALSE(S.contains(4));
  CHECK_THROWS_AS(Assortment({1, 1}), Error);

  const Instance inst(two_by_two(), Vec::Constant(3, 0.5), 2, 1.0, std::nullopt, false);
  CHECK_THROWS_AS(validate_assortment(inst, Assortment{0}), Error);
  CHECK_THROWS_AS(validate_assortment(inst, Assortment{0, 1, 2}), Error);
  CHECK_THROWS_AS(validate_assortment(inst, Assortment{0, 5}), Error);
  CHECK_NOTHROW(validate_assortment(inst, Assortment{0, 2}));
}

TEST_CASE("choice probabilities for a hand-computed case") {
  Mat F(2, 1);
  F << 0.0, std::log(2.0);
  const Instance plain(F, Vec::Constant(2, 0.5), 2, 1.0, std::nullopt, false);
  const ChoiceProbs p = choice_probs(plain, Assortment{0, 1}, Vec::Ones(1));
  CHECK(p.probs[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(p.probs[1] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(p.outside == 0.0);

  // With the outside option the denominators gain a 1: (1, 2) / 4.
  const Instance out(F, Vec::Constant(2, 0.5), 2, 1.0, std::nullopt, true);
  const ChoiceProbs q = choice_probs(out, Assortment{0, 1}, Vec::Ones(1));
  CHECK(q.probs[0] == doctest::Approx(0.25));
  CHECK(q.probs[1] == doctest::Approx(0.5));
  CHECK(q.outside == doctest::Approx(0.25));
}

TEST_CASE("extreme utilities give finite probabilities that sum to one") {
  Mat F(3, 1);
  F << 1.0, -1.0, 0.5;
  const Instance inst(F, Vec::Constant(3, 0.5), 3, 1000.0, std::nullopt, true);
  for (double t : {-900.0, 900.0}) {
    const ChoiceProbs p = choice_probs(inst, Assortment{0, 1, 2}, Vec::Constant(1, t));
    CHECK(p.probs.allFinite());
    CHECK(p.probs.sum() + p.outside == doctest::Approx(1.0));
  }
}

TEST_CASE("Fisher matrix is PSD and the lifted corner is exactly one") {
  Rng rng(1, Stream::Test, 11);
  for (int rep = 0; rep < 200; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(4));
    const Instance inst = check::random_instance(rng, d + 4, d, 3, 1.5, rep % 2 == 0);
    const Assortment S = check::random_assortment(rng, inst);
    const Vec theta = sample_ball(rng, d, 1.5);
    const Mat I = fisher_info(inst, S, theta);
    CHECK((I - I.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(I).eigenvalues().minCoeff() >= -1e-14);
    CHECK(lifted_info(inst, S, theta)(d, d) == 1.0);
  }
}

TEST_CASE("kappa at theta = 0 and on a two-arm example") {
  Mat F(2, 1);
  F << 1.0, -1.0;
  const Instance inst(F, Vec::Constant(2, 0.5), 2, 1.0, std::nullopt, true);
  CHECK(kappa(inst, Vec::Zero(1)) == doctest::Approx(1.0 / 9).epsilon(1e-15));
  // theta = 1: the binding pair is the low-utility arm in {0, 1}.
  const double e = std::exp(1.0), ei = std::exp(-1.0);
  const double want = std::min({ei / (1 + ei + e) * 1 / (1 + ei + e), ei / (1 + ei) / (1 + ei), e / (1 + e) / (1 + e)});
  CHECK(kappa(inst, Vec::Ones(1)) == doctest::Approx(want).epsilon(1e-14));
  const Instance plain(F, Vec::Constant(2, 0.5), 2, 1.0, std::nullopt, false);
  CHECK_THROWS_AS(kappa(plain, Vec::Zero(1)), Error);
}

TEST_CASE("datasets aggregate repeated offers") {
  const Instance inst(two_by_two(), Vec::Constant(3, 0.5), 2, 1.0, std::nullopt, true);
  ChoiceDataset D(inst);
  D.add(Assortment{0, 2}, 2);
  D.add(Assortment{2, 0}, kOutside);
  D.add(Assortment{1}, 1, 3.0);
  REQUIRE(D.groups().size() == 2);
  CHECK(D.num_observations() == 5.0);
  const size_t g = D.group_of(Assortment{0, 2});
  CHECK(D.groups()[g].counts == std::vector<double>{0.0, 1.0, 1.0});
  CHECK_THROWS_AS(D.add(Assortment{0, 2}, 1), Error);
}

TEST_CASE("instance JSON round-trips exactly") {
  Rng rng(4, Stream::Test, 3);
  const Instance inst = check::random_instance(rng, 6, 3, 2, 1.0, true);
  const Instance back = instance_from_json(instance_to_json(inst));
  CHECK(back.features() == inst.features());
  CHECK(back.revenues() == inst.revenues());
  CHECK(*back.theta_star() == *inst.theta_star());
  CHECK(back.capacity() == 2);
  CHECK(back.outside_option());
  CHECK_THROWS_AS(instance_from_json("{\"features\": [[2.0]], \"revenues\": [0.5], \"K\": 1, \"B\": 1, "
                                     "\"theta_star\": null, \"outside_option\": true}"),
                  Error);
}
