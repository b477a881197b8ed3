#pragma once

#include "mnldesign/mnl_core.hpp"

#include <Eigen/Cholesky>

namespace mnld {

struct MleResult {
  Vec theta_hat;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct MleOptions {
  double grad_tol = 1e-8;
  int max_iter = 200;
  double armijo_c = 1e-4;
};

/// Ridge-regularized MLE by damped Newton with Armijo backtracking.
/// Non-convergence is reported through `converged`, never thrown.
MleResult fit_mle(const Instance& inst, const ChoiceDataset& data, double lambda, const Vec& theta_init,
                  const MleOptions& opts = {});

/// scale * (36 sqrt(log(N/delta)) + 64 sqrt(lambda) B).
double beta(double delta, double lambda, double B, int N, double scale = 1.0);

/// H = lambda I + sum of Fisher increments at a fixed reference parameter;
/// V = lambda I + sum over offered arms of a a^T. Both refactored on update.
class DesignMatrices {
 public:
  DesignMatrices(int d, double lambda);

  /// Adds fisher_info(S, theta_ref) to H and the raw Gram of S to V.
  void rank_update(const Instance& inst, const Assortment& S, const Vec& theta_ref);
  /// Adds precomputed increments (dH may be zero-sized to skip H).
  void add(const Mat& dH, const Mat& dV);

  /// sqrt(a^T H^{-1} a).
  double width(const Vec& a) const;
  /// sqrt(a^T V^{-1} a).
  double width_v(const Vec& a) const;
  /// Widths of every arm under H (or V) in one multi-RHS solve.
  Vec widths(const Mat& features) const;
  Vec widths_v(const Mat& features) const;

  const Mat& H() const { return H_; }
  const Mat& V() const { return V_; }
  double lambda() const { return lambda_; }

 private:
  void refactor();

  double lambda_;
  Mat H_, V_;
  Eigen::LLT<Mat> chol_H_, chol_V_;
};

/// Free-function form: sqrt(a^T H^{-1} a) against the cached factor.
double uncertainty_width(const DesignMatrices& mats, const Vec& a);

}  // namespace mnld
