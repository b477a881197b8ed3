#pragma once

#include "mnldesign/lmo.hpp"
#include "mnldesign/milp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mnld {

/// Finitely supported distribution over assortments, with its Fisher and
/// lifted design matrices at a fixed nominal parameter. Per-atom matrices
/// are cached so M and Mt are always rebuilt exactly as sums.
struct Design {
  std::vector<Assortment> atoms;
  std::vector<double> weights;
  Mat M;
  Mat Mt;
  std::vector<Mat> atom_info;
  std::vector<Mat> atom_lifted;

  int support() const { return static_cast<int>(atoms.size()); }
};

/// Builds a design with the given atoms and weights (weights renormalized).
Design make_design(const Instance& inst, const Vec& theta0, const std::vector<Assortment>& atoms,
                   const std::vector<double>& weights);

/// Recomputes M and Mt from the cached per-atom matrices.
void refresh_matrices(Design& design);

/// Uniform mixture over distinct random assortments, grown until
/// lambda_min(M) >= 1e-8 (at most 10 d(d+1)/2 atoms).
Design init_design(const Instance& inst, const Vec& theta0, uint64_t seed);

struct LmoConfig {
  BruteOptions brute;
  MilpLmoOptions milp;
};

struct GValue {
  double g_upper = 0.0;
  Assortment argmax;
  LmoResult lmo;
};

/// Brute: exact max_S tr(M^{-1} I(S)). Milp: incumbent + certified gap.
/// Lifted: the lifted objective max_S tr(Mt^{-1} It(S)) instead.
GValue g_value(const Design& design, const Instance& inst, const Vec& theta0, Backend backend, double eps_lmo,
               const LmoConfig& cfg = {});

/// argmax over gamma in [0, 1 - 1e-9] of log det((1-gamma) M + gamma I)
/// by golden-section search to width 1e-10. Returns 0 when no step
/// improves the objective.
double line_search(const Mat& M, const Mat& I);
double line_search(const Design& design, const Instance& inst, const Assortment& atom, const Vec& theta0,
                   bool lifted);

struct FwIteration {
  int iter = 0;
  double g_hat = 0.0;    // LMO value at the chosen atom
  double g_upper = 0.0;  // certified upper bound used by the stopping test
  double gap = 0.0;      // LMO certified gap
  double gamma = 0.0;
  Assortment atom;
  double logdet = 0.0;
};

struct FwOptions {
  double eps = 0.1;
  Backend backend = Backend::Brute;
  double eps_lmo = 0.0;
  int iter_cap = 0;  // 0 = the theoretical cap only
  uint64_t seed = 0;
  LmoConfig lmo;
};

struct FwReport {
  Design design;
  int iterations = 0;
  int iteration_cap = 0;
  bool certified = false;
  double final_g = 0.0;  // certified bound in the variant's own criterion
  double eps_used = 0.0;
  double eps_lmo_used = 0.0;
  double eps_tilde = 0.0;
  Backend backend = Backend::Brute;
  double eps_lift = 0.0;     // lifted runs only
  double g_true_bound = 0.0; // lifted runs: implied bound on the true g
  double seconds = 0.0;
  std::vector<FwIteration> log;
};

/// Frank-Wolfe on log det M over the assortment simplex. Brute and milp
/// stop once the certified g is within (1+eps)d; lifted stops once the
/// lifted g is within (1+eps)(d+1).
FwReport frank_wolfe(const Instance& inst, const Vec& theta0, const FwOptions& opts);

/// Smallest e >= 0 with (Schur(Mt) - M) <= e M.
double lift_error(const Design& design, const Instance& inst, const Vec& theta0);

/// log det of a positive definite matrix (throws NotPositiveDefinite).
double logdet_pd(const Mat& M);

std::string fw_report_json(const FwReport& rep, const Instance& inst);

}  // namespace mnld
