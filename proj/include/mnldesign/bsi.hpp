#pragma once

#include "mnldesign/assortment.hpp"
#include "mnldesign/design_fw.hpp"
#include "mnldesign/estimator.hpp"
#include "mnldesign/sim_env.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mnld {

enum class KappaMode { Oracle, Bound };
KappaMode kappa_mode_from_string(const std::string& s);
const char* to_string(KappaMode m);

struct BsiConfig {
  double delta = 0.05;
  double lambda = 1.0;
  double eps = 0.1;
  double eps_lmo = 0.1;
  Backend backend = Backend::Brute;
  KappaMode kappa_mode = KappaMode::Oracle;
  double const_scale = 0.1;
  int stop_check_every = 1;
  uint64_t round_cap = 50'000'000;
  uint64_t seed = 0;
  bool record_rounds = false;
  LmoConfig lmo;
  int fw_iter_cap = 0;

  // Test hooks.
  std::optional<double> beta_override;
  bool freeze_theta_at_truth = false;
};

/// (sqrt(kappa) / (256 c)) (1/sqrt(d log(N/delta)) + 1/(sqrt(lambda) B)),
/// with c = const_scale.
double warmup_threshold(double kappa, int d, int N, double delta, double lambda, double B, double const_scale);

/// exp(-B) / (1 + K exp(B))^2, a lower bound on kappa for any ||theta|| <= B.
double kappa_bound(int K, double B);

struct WarmupResult {
  WarmupResult(const Instance& inst, double lambda) : D_w(inst), D_w2(inst), V(inst.dim(), lambda) {}

  ChoiceDataset D_w;
  ChoiceDataset D_w2;
  DesignMatrices V;
  uint64_t rounds = 0;
  std::vector<Assortment> offers;
  std::vector<int> choices_a, choices_b;
  std::vector<double> max_widths;
  bool exhausted = false;  // round cap hit before the threshold was met
};

WarmupResult run_warmup(Environment& env, double zeta_w, double lambda, uint64_t round_cap,
                        bool keep_sequence = false);

struct BsiRound {
  char phase = 'm';  // 'w' warm-up, 'm' main
  uint64_t round = 0;
  Assortment S;
  int choice = 0;
  int choice2 = 0;  // second warm-up feedback
  double max_width = 0.0;
  double R_pess = std::numeric_limits<double>::quiet_NaN();
  double R_opt_alt = std::numeric_limits<double>::quiet_NaN();
  bool stopped = false;
};

struct BsiTrace {
  std::vector<BsiRound> rounds;
  uint64_t tau = 0;          // warm-up rounds + main rounds
  uint64_t warmup_len = 0;
  uint64_t main_rounds = 0;
  uint64_t samples = 0;      // feedback observations (warm-up counts twice)
  Assortment S_hat;
  bool stopped = false;
  bool has_truth = false;
  bool correct = false;
  bool failed = false;
  std::string failure;
  bool honest_at_stop = false;
  double kappa = 0.0;
  double zeta_w = 0.0;
  double beta = 0.0;
  int fw_iterations = 0;
  double fw_final_g = 0.0;
  int design_support = 0;
  double seconds = 0.0;
  Vec theta0;
  Vec theta_hat;
};

BsiTrace run_bsi(Environment& env, const BsiConfig& cfg);

}  // namespace mnld
