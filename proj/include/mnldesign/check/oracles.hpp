#pragma once

#include "mnldesign/assortment.hpp"
#include "mnldesign/bsi.hpp"
#include "mnldesign/design_fw.hpp"
#include "mnldesign/milp.hpp"
#include "mnldesign/rng.hpp"

#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace mnld::check {

struct CheckOptions {
  uint64_t seed = 7;
  bool corrupt_bigm = false;  // negative control: shrinks m_A in the MILP oracles
  std::string filter;         // substring match on oracle names; empty = all
};

struct OracleResult {
  std::string name;
  bool pass = true;
  uint64_t cases = 0;
  uint64_t failures = 0;
  std::string detail;  // first failure, or a short note on success
  double seconds = 0.0;
};

/// Per-oracle context: a private random stream and failure bookkeeping.
class Ctx {
 public:
  Ctx(const CheckOptions& opts, OracleResult& res, uint32_t stream);

  Rng& rng() { return rng_; }
  const CheckOptions& opts() const { return opts_; }

  template <class Msg>
  bool expect(bool ok, Msg&& msg) {
    ++res_.cases;
    if (!ok) {
      ++res_.failures;
      res_.pass = false;
      if (!first_failure_recorded_) {
        res_.detail = msg();
        first_failure_recorded_ = true;
      }
    }
    return ok;
  }
  void note(const std::string& s) {
    if (!first_failure_recorded_) res_.detail = s;
  }

 private:
  const CheckOptions& opts_;
  OracleResult& res_;
  Rng rng_;
  bool first_failure_recorded_ = false;
};

struct Oracle {
  std::string name;
  std::string what;
  std::function<void(Ctx&)> body;
};

const std::vector<Oracle>& registry();

/// Runs every oracle whose name contains opts.filter. An exception inside an
/// oracle counts as a failure of that oracle.
std::vector<OracleResult> run_oracles(const CheckOptions& opts,
                                      const std::function<void(const OracleResult&)>& on_result = {});

/// JSON manifest: [{"name", "pass", "cases", "failures", "detail", "seconds"}].
std::string manifest_json(const std::vector<OracleResult>& results);

// Shared helpers, also used by the unit tests.

/// All subsets of {0..n-1} with lo <= size <= hi, lexicographic per size.
std::vector<Assortment> all_subsets(int n, int lo, int hi);
std::vector<Assortment> all_assortments(const Instance& inst);

/// Random valid instance: features and theta* uniform in balls, revenues
/// Unif(0,1). Redraws until the instance validates and the feature second
/// moment (centered without the outside option) has lambda_min >= 1e-3.
Instance random_instance(Rng& rng, int N, int d, int K, double B, bool outside);
Assortment random_assortment(Rng& rng, const Instance& inst);

/// Exhaustive max of (sum w s + num_const)/(denom_const + sum w) under the
/// problem's constraints. Returns -inf when infeasible.
double brute_ratio(const RatioProblem& p, Assortment* argmax = nullptr);

/// Exhaustive min over admissible S and i in S of p(i) p(0).
double brute_kappa(const Instance& inst, const Vec& theta);

/// Exhaustive revenue maximum over 1 <= |S| <= K with forced sets.
double brute_revenue(const Vec& u, const Vec& r, int K, const std::vector<int>& forced_in,
                     const std::vector<int>& forced_out, Assortment* argmax = nullptr);

/// Exhaustive max over S != excluded (|S| <= K, empty set included with
/// revenue 0) of the revenue at utilities u.
double brute_alternative(const Vec& u, const Vec& r, int K, const Assortment& excluded, Assortment* argmax = nullptr);

/// Design mismatch from first principles: sum pi_k abar_k abar_k^T - bbar bbar^T.
Mat design_mismatch(const Design& design, const Instance& inst, const Vec& theta0);

/// Max over all admissible S of tr(M^{-1} I(S)) by direct evaluation.
double brute_trace_max(const Instance& inst, const Vec& theta0, const Mat& M);

std::string join_doubles(const Vec& v);

}  // namespace mnld::check
