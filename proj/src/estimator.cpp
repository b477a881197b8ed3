#include "mnldesign/estimator.hpp"

#include <cmath>

namespace mnld {

MleResult fit_mle(const Instance& inst, const ChoiceDataset& data, double lambda, const Vec& theta_init,
                  const MleOptions& opts) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::DomainError, "lambda must be > 0");
  if (theta_init.size() != inst.dim()) throw Error(ErrorKind::DomainError, "theta_init has wrong dimension");
  MleResult res;
  res.theta_hat = theta_init;
  LossEval ev = nll_loss_grad_hess(inst, data, res.theta_hat, lambda);
  res.grad_norm = ev.grad.norm();
  while (res.grad_norm > opts.grad_tol && res.iterations < opts.max_iter) {
    Eigen::LLT<Mat> llt(ev.hess);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "MLE Hessian not positive definite");
    const Vec step = -llt.solve(ev.grad);
    const double slope = ev.grad.dot(step);
    ++res.iterations;
    const double noise = 1e-12 * (1.0 + std::abs(ev.loss));
    if (-slope <= noise) {
      // Near the optimum of a large dataset the predicted decrease is below
      // the rounding level of the loss, so Armijo cannot tell steps apart.
      // Take the full Newton step if it reduces the gradient norm.
      LossEval full = nll_loss_grad_hess(inst, data, res.theta_hat + step, lambda);
      if (!(full.grad.norm() < res.grad_norm)) break;
      res.theta_hat += step;
      ev = std::move(full);
      res.grad_norm = ev.grad.norm();
      continue;
    }
    double t = 1.0;
    Vec trial;
    double trial_loss = 0.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      trial = res.theta_hat + t * step;
      trial_loss = nll_loss(inst, data, trial, lambda);
      if (trial_loss <= ev.loss + opts.armijo_c * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    MNLD_ASSERT(trial_loss <= ev.loss, "MLE objective increased");
    res.theta_hat = trial;
    ev = nll_loss_grad_hess(inst, data, res.theta_hat, lambda);
    res.grad_norm = ev.grad.norm();
  }
  res.converged = res.grad_norm <= opts.grad_tol;
  return res;
}

double beta(double delta, double lambda, double B, int N, double scale) {
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorKind::DomainError, "delta must be in (0,1]");
  if (!(lambda > 0.0)) throw Error(ErrorKind::DomainError, "lambda must be > 0");
  if (!(scale > 0.0)) throw Error(ErrorKind::DomainError, "scale must be > 0");
  if (!(B >= 0.0) || N < 1) throw Error(ErrorKind::DomainError, "need B >= 0 and N >= 1");
  return scale * (36.0 * std::sqrt(std::log(N / delta)) + 64.0 * std::sqrt(lambda) * B);
}

DesignMatrices::DesignMatrices(int d, double lambda)
    : lambda_(lambda), H_(lambda * Mat::Identity(d, d)), V_(lambda * Mat::Identity(d, d)) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::DomainError, "lambda must be > 0");
  refactor();
}

void DesignMatrices::refactor() {
  chol_H_.compute(H_);
  chol_V_.compute(V_);
  if (chol_H_.info() != Eigen::Success || chol_V_.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "design matrix factorization failed");
  }
}

void DesignMatrices::rank_update(const Instance& inst, const Assortment& S, const Vec& theta_ref) {
  const Mat dH = fisher_info(inst, S, theta_ref);
  const int d = inst.dim();
  Mat dV = Mat::Zero(d, d);
  for (int i : S.items()) dV.selfadjointView<Eigen::Upper>().rankUpdate(inst.feature(i));
  dV.triangularView<Eigen::StrictlyLower>() = dV.transpose();
  add(dH, dV);
}

void DesignMatrices::add(const Mat& dH, const Mat& dV) {
  if (dH.size()) H_ += dH;
  if (dV.size()) V_ += dV;
  refactor();
}

double DesignMatrices::width(const Vec& a) const { return chol_H_.matrixL().solve(a).norm(); }
double DesignMatrices::width_v(const Vec& a) const { return chol_V_.matrixL().solve(a).norm(); }

Vec DesignMatrices::widths(const Mat& features) const {
  const Mat Z = chol_H_.matrixL().solve(features.transpose());
  return Z.colwise().norm().transpose();
}

Vec DesignMatrices::widths_v(const Mat& features) const {
  const Mat Z = chol_V_.matrixL().solve(features.transpose());
  return Z.colwise().norm().transpose();
}

double uncertainty_width(const DesignMatrices& mats, const Vec& a) { return mats.width(a); }

}  // namespace mnld
