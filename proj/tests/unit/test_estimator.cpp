#include "mnldesign/check/oracles.hpp"
#include "mnldesign/estimator.hpp"

#include <doctest.h>

#include <cmath>

using namespace mnld;

TEST_CASE("beta formula") {
  CHECK(beta(0.05, 1.0, 1.0, 10, 0.1) == doctest::Approx(0.1 * (36 * std::sqrt(std::log(200.0)) + 64)).epsilon(1e-15));
  CHECK(beta(0.05, 4.0, 0.5, 10, 1.0) == doctest::Approx(36 * std::sqrt(std::log(200.0)) + 64).epsilon(1e-15));
  CHECK_THROWS_AS(beta(0.0, 1.0, 1.0, 10), Error);
  CHECK_THROWS_AS(beta(0.05, 0.0, 1.0, 10), Error);
}

TEST_CASE("MLE recovers theta from expected counts on a large dataset") {
  // Counts equal to n times the choice probabilities make theta* the
  // unregularized optimum; with n = 10^6 the ridge term moves it by O(1/n).
  const Instance inst = gen_instance(10, 3, 3, 1.0, 21);
  const Vec& theta = *inst.theta_star();
  ChoiceDataset D(inst);
  Rng rng(2, Stream::Test, 0);
  for (int g = 0; g < 8; ++g) {
    const Assortment S = check::random_assortment(rng, inst);
    const ChoiceProbs p = choice_probs(inst, S, theta);
    for (int k = 0; k < S.size(); ++k) D.add(S, S[k], 1e6 * p.probs[k]);
    D.add(S, kOutside, 1e6 * p.outside);
  }
  const MleResult fit = fit_mle(inst, D, 1.0, Vec::Zero(3));
  CHECK(fit.converged);
  CHECK(fit.grad_norm <= 1e-8);
  CHECK((fit.theta_hat - theta).norm() <= 1e-4);
}

TEST_CASE("MLE on an empty dataset is the zero vector") {
  const Instance inst = gen_instance(6, 2, 2, 1.0, 3);
  const ChoiceDataset D(inst);
  const MleResult fit = fit_mle(inst, D, 1.0, Vec::Ones(2));
  CHECK(fit.converged);
  CHECK(fit.theta_hat.norm() <= 1e-12);
}

TEST_CASE("non-convergence is reported, not thrown") {
  const Instance inst = gen_instance(6, 2, 2, 1.0, 3);
  ChoiceDataset D(inst);
  D.add(Assortment{0, 1}, 0, 1000.0);
  MleOptions o;
  o.max_iter = 1;
  const MleResult fit = fit_mle(inst, D, 1e-6, Vec::Zero(2), o);
  CHECK_FALSE(fit.converged);
}

TEST_CASE("design matrices: rank updates, add, and widths") {
  const Instance inst = gen_instance(8, 3, 3, 1.0, 5);
  const Vec theta = *inst.theta_star();
  DesignMatrices dm(3, 2.0);
  CHECK(dm.H() == 2.0 * Mat::Identity(3, 3));
  CHECK(dm.width(inst.feature(0)) == doctest::Approx(inst.feature(0).norm() / std::sqrt(2.0)));

  dm.rank_update(inst, Assortment{0, 4, 5}, theta);
  Mat H = 2.0 * Mat::Identity(3, 3) + fisher_info(inst, Assortment{0, 4, 5}, theta);
  CHECK((dm.H() - H).cwiseAbs().maxCoeff() <= 1e-14);

  // add() with an empty H increment touches only V.
  const Mat dV = inst.feature(2) * inst.feature(2).transpose();
  dm.add(Mat(), dV);
  CHECK((dm.H() - H).cwiseAbs().maxCoeff() == 0.0);
  const Vec wv = dm.widths_v(inst.features());
  for (int i = 0; i < 8; ++i) CHECK(wv[i] == doctest::Approx(dm.width_v(inst.feature(i))).epsilon(1e-12));
  const Vec w = dm.widths(inst.features());
  for (int i = 0; i < 8; ++i) CHECK(w[i] == doctest::Approx(uncertainty_width(dm, inst.feature(i))).epsilon(1e-12));
}
