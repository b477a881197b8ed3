#include "mnldesign/check/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mnld;

TEST_CASE("make_design normalizes weights and caches per-atom matrices") {
  const Instance inst = gen_instance(6, 2, 2, 1.0, 4);
  const Vec theta0 = *inst.theta_star();
  const Design D = make_design(inst, theta0, {Assortment{0, 1}, Assortment{2}, Assortment{3, 5}}, {2.0, 1.0, 1.0});
  CHECK(D.weights[0] == doctest::Approx(0.5));
  const Mat M = 0.5 * fisher_info(inst, Assortment{0, 1}, theta0) + 0.25 * fisher_info(inst, Assortment{2}, theta0) +
                0.25 * fisher_info(inst, Assortment{3, 5}, theta0);
  CHECK((D.M - M).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(D.Mt(2, 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(make_design(inst, theta0, {Assortment{0}}, {-1.0}), Error);
}

TEST_CASE("init_design is deterministic and positive definite") {
  const Instance inst = gen_instance(9, 3, 4, 1.0, 6);
  const Vec theta0 = *inst.theta_star();
  const Design a = init_design(inst, theta0, 17), b = init_design(inst, theta0, 17);
  CHECK(a.atoms == b.atoms);
  CHECK(a.M == b.M);
  CHECK(Eigen::SelfAdjointEigenSolver<Mat>(a.M).eigenvalues().minCoeff() >= 1e-8);
  CHECK(a.support() <= 10 * 4 * 5 / 2);
}

TEST_CASE("the worst-case trace of any design is at least d") {
  // sum_S pi(S) tr(M^{-1} I(S)) = tr(I_d) = d, so the max is >= d.
  Rng rng(1, Stream::Test, 51);
  for (int rep = 0; rep < 30; ++rep) {
    const int d = 2 + static_cast<int>(rng.below(3));
    const Instance inst = check::random_instance(rng, d + 4, d, 3, 1.0, rep % 2 == 0);
    const Vec theta0 = sample_ball(rng, d, 1.0);
    const Design D = init_design(inst, theta0, static_cast<uint64_t>(rep));
    double avg = 0.0;
    for (size_t k = 0; k < D.atoms.size(); ++k) avg += D.weights[k] * trace_direct(inst, theta0, D.M, D.atoms[k]);
    CHECK(avg == doctest::Approx(d).epsilon(1e-10));
    CHECK(lmo_brute(inst, theta0, D.M).value >= d - 1e-9);
  }
}

TEST_CASE("line search returns zero when no step helps") {
  const Mat M = Mat::Identity(2, 2);
  CHECK(line_search(M, 0.5 * Mat::Identity(2, 2)) == 0.0);
  const double g = line_search(M, 3.0 * Mat::Identity(2, 2));
  CHECK(g > 0.99);
  // log det = log(1 + 3g) + log(1 - g), stationary at g = 1/3.
  Mat I = Mat::Zero(2, 2);
  I(0, 0) = 4.0;
  CHECK(line_search(M, I) == doctest::Approx(1.0 / 3).epsilon(1e-8));
}

TEST_CASE("lift error is zero for a single atom and matches bisection elsewhere") {
  const Instance inst = gen_instance(7, 3, 3, 1.0, 9);
  const Vec theta0 = *inst.theta_star();
  // A singleton atom gives a rank-one M; lift_error needs M > 0.
  const Design one = make_design(inst, theta0, {Assortment{0}}, {1.0});
  CHECK_THROWS_AS(lift_error(one, inst, theta0), Error);
  const Design D = init_design(inst, theta0, 2);
  const double e = lift_error(D, inst, theta0);
  CHECK(e >= 0.0);
  CHECK(e <= inst.capacity() * std::exp(inst.radius()));
}

TEST_CASE("Frank-Wolfe backends stop with valid certificates") {
  const Instance inst = gen_instance(8, 2, 3, 1.0, 12);
  const Vec theta0 = *inst.theta_star();
  FwOptions fo;
  fo.eps = 0.1;
  const FwReport brute = frank_wolfe(inst, theta0, fo);
  CHECK(brute.certified);
  CHECK(brute.final_g <= 1.1 * 3 + 1e-12);
  CHECK(lmo_brute(inst, theta0, brute.design.M).value == doctest::Approx(brute.final_g).epsilon(1e-9));
  for (size_t i = 1; i < brute.log.size(); ++i) CHECK(brute.log[i].logdet >= brute.log[i - 1].logdet - 1e-12);

  fo.backend = Backend::Lifted;
  const FwReport lifted = frank_wolfe(inst, theta0, fo);
  CHECK(lifted.certified);
  CHECK(lifted.final_g <= 1.1 * 4 + 1e-12);
  CHECK(lifted.eps_lift <= inst.capacity() * std::exp(inst.radius()));
  CHECK(lmo_brute(inst, theta0, lifted.design.M).value <= lifted.g_true_bound + 1e-9);

  fo.backend = Backend::Milp;
  fo.eps_lmo = 0.5;  // eps - eps_lmo / d < 0
  CHECK_THROWS_AS(frank_wolfe(inst, theta0, fo), Error);
}

TEST_CASE("FW report JSON carries the certificate") {
  const Instance inst = gen_instance(6, 2, 2, 1.0, 13);
  FwOptions fo;
  const FwReport rep = frank_wolfe(inst, *inst.theta_star(), fo);
  const std::string js = fw_report_json(rep, inst);
  CHECK(js.find("\"certified\"") != std::string::npos);
  CHECK(js.find("\"atoms\"") != std::string::npos);
}
