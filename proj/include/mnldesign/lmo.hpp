#pragma once

#include "mnldesign/mnl_core.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

namespace mnld {

enum class Backend { Brute, Milp, Lifted };

const char* to_string(Backend b);
Backend backend_from_string(const std::string& s);

using Clock = std::chrono::steady_clock;

struct LmoStats {
  uint64_t evaluated = 0;  // subsets (brute), nodes (milp), iterations (lifted)
  double seconds = 0.0;
  std::string status;      // backend-specific, e.g. "optimal", "gap_reached"
};

struct LmoResult {
  Assortment assortment;
  double value = 0.0;          // objective at the returned set
  double certified_gap = 0.0;  // true max <= value + certified_gap
  Backend backend = Backend::Brute;
  LmoStats stats;

  double upper_bound() const { return value + certified_gap; }
};

/// Per-arm quantities of the trace objective at a fixed design matrix. With
/// utilities shifted by `shift`, w_i = exp(a_i^T theta0 - shift) and the
/// outside option has weight c = exp(-shift) (c = 0 without it). For any
/// admissible S,
///   tr(M^{-1} I(S)) = sum w_i s_i / (c + W) - sum w_i w_j G_ij / (c + W)^2,
/// with W = sum_{i in S} w_i.
struct TraceTerms {
  Vec w;
  Vec s;
  Mat G;
  double c = 0.0;
  int K = 0;
  int min_size = 1;
};

TraceTerms trace_terms(const Instance& inst, const Vec& theta0, const Mat& M);
double trace_value(const TraceTerms& t, std::span<const int> items);

/// tr(M^{-1} I(S)) by forming I(S) explicitly; reference evaluation.
double trace_direct(const Instance& inst, const Vec& theta0, const Mat& M, const Assortment& S);

struct BruteOptions {
  uint64_t budget = 100'000'000;
  std::optional<Clock::time_point> deadline;
};

/// Number of admissible assortments, saturating at UINT64_MAX.
uint64_t count_assortments(int n, int lo, int hi);
/// C(n, k), saturating at UINT64_MAX.
uint64_t binomial(int n, int k);

/// Exact argmax of tr(M^{-1} I(S)) by lexicographic enumeration.
LmoResult lmo_brute(const Instance& inst, const Vec& theta0, const Mat& M, const BruteOptions& opts = {});

/// max_S (sum_i w_i s_i + num_const) / (denom_const + sum_i w_i) over
/// forced_in <= S, S disjoint from forced_out, min_size <= |S| <= K.
struct RatioProblem {
  Vec w;
  Vec s;
  double denom_const = 0.0;
  double num_const = 0.0;
  int K = 1;
  int min_size = 1;
  std::vector<int> forced_in;
  std::vector<int> forced_out;
};

struct RatioSolution {
  Assortment S;
  double ratio = 0.0;
  int iterations = 0;
};

RatioSolution dinkelbach(const RatioProblem& p);

/// Ratio of a given set (no feasibility check).
double ratio_value(const RatioProblem& p, std::span<const int> items);

/// Lifted objective tr(Mt^{-1} It(S)) for every admissible S, written as a
/// ratio problem. Mt is the (d+1)x(d+1) lifted design matrix.
RatioProblem lifted_ratio_problem(const Instance& inst, const Vec& theta0, const Mat& Mt);

/// Exact maximizer of the lifted objective.
LmoResult lmo_lifted(const Instance& inst, const Vec& theta0, const Mat& Mt);

}  // namespace mnld
