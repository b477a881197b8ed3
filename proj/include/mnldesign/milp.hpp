#pragma once

#include "mnldesign/lmo.hpp"
#include "mnldesign/lp_simplex.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mnld {

/// 0-1 quadratic fractional form of the trace objective:
///   x^T A x / x^T B x = -tr(M^{-1} I(S)) for the indicator x of S.
/// With the outside option a virtual item (index n_arms, zero feature,
/// weight c) is appended and pinned to 1, so cardinalities run over
/// [min_card, max_card] = [2, K+1].
struct QfipData {
  Mat A;
  Mat B;
  Vec w, r, s;
  int n_arms = 0;
  int n_items = 0;  // n_arms, plus one with the virtual outside item
  bool virtual_outside = false;
  int K = 0;
  int min_card = 2;
  int max_card = 0;
};

QfipData build_qfip(const Instance& inst, const Vec& theta0, const Mat& M);

/// x^T A x / x^T B x for a 0/1 vector over n_items.
double qfip_ratio(const QfipData& q, const Vec& x);
/// Indicator over n_items of an assortment (virtual item set when present).
Vec qfip_indicator(const QfipData& q, const Assortment& S);
/// Assortment of real arms selected by a 0/1 vector.
Assortment qfip_assortment(const QfipData& q, const Vec& x);

enum class BigMMode { Coarse, Tight };

struct BigMConstants {
  Vec m_A;
  Vec m_B;
  double alpha_bar = 0.0;
  BigMMode mode = BigMMode::Tight;
};

BigMConstants big_m(const QfipData& q, BigMMode mode);

/// Dense MILP  min c^T z  s.t. A_eq z = b_eq, A_le z <= b_le, bounds, with
/// z = (x, v, S0, S1, U0, U1, alpha) and x binary.
struct MilpModel {
  std::vector<std::string> var_names;
  Vec lower, upper;
  std::vector<bool> integer;
  Vec c;
  Mat A_eq;
  Vec b_eq;
  Mat A_le;
  Vec b_le;
  std::vector<std::string> eq_names, le_names;

  int n_items = 0;
  QfipData q;
  BigMConstants bigm;

  int num_vars() const { return static_cast<int>(c.size()); }
  int ix(int i) const { return i; }
  int iv(int i) const { return n_items + i; }
  int is0(int i) const { return 2 * n_items + i; }
  int is1(int i) const { return 3 * n_items + i; }
  int iu0(int i) const { return 4 * n_items + i; }
  int iu1(int i) const { return 5 * n_items + i; }
  int ialpha() const { return 6 * n_items; }
};

MilpModel build_milp(const QfipData& q, const BigMConstants& bigm);

/// Continuous assignment induced by an integral x (alpha = 1/x^T B x and the
/// scaled auxiliaries); its objective equals x^T A x / x^T B x.
Vec milp_point_from_x(const MilpModel& m, const Vec& x);

LpProblem lp_relaxation(const MilpModel& m);

enum class BnbStatus { Optimal, GapReached, NodeCap, Infeasible, Deadline };
const char* to_string(BnbStatus s);

struct BnbOptions {
  double eps = 0.0;  // absolute gap
  uint64_t node_cap = 1'000'000;
  bool verbose = false;
  std::optional<Clock::time_point> deadline;
  LpOptions lp;
};

struct BnbResult {
  Vec x_incumbent;
  double UB = std::numeric_limits<double>::infinity();
  double LB = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  uint64_t nodes = 0;
  uint64_t lp_solves = 0;
  BnbStatus status = BnbStatus::Infeasible;
};

/// Best-bound branch and bound over the LP relaxation. The true minimum of
/// the 0-1 problem lies in [LB, UB] on every return path.
BnbResult solve_bnb(const MilpModel& m, const BnbOptions& opts);

struct MilpLmoOptions {
  double eps_lmo = 0.0;
  BigMMode mode = BigMMode::Tight;
  uint64_t node_cap = 1'000'000;
  bool verbose = false;
  std::optional<Clock::time_point> deadline;
  double corrupt_m_a = 1.0;  // test hook: multiplies m_A (1 = off)
};

/// LMO through the MILP. The QFIP is normalized so max |A_ij| = 1 before
/// building the model; value and gap are reported in trace units.
LmoResult lmo_milp(const Instance& inst, const Vec& theta0, const Mat& M, const MilpLmoOptions& opts);

/// Fixed-format MPS with 17-significant-digit coefficients.
void export_mps(const MilpModel& m, const std::string& path);
std::string mps_string(const MilpModel& m);
/// Reads what export_mps writes (names, bounds, integrality, rows).
MilpModel read_mps(const std::string& path);
MilpModel parse_mps(const std::string& text);

}  // namespace mnld
