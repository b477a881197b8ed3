#pragma once

#include "mnldesign/common.hpp"

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mnld {

/// Choice index of the no-purchase alternative. Arms are 0-based internally;
/// files and CSV output use 1-based arm labels with 0 for the outside option.
inline constexpr int kOutside = -1;

/// The arm set of an MNL model. Construction validates the model
/// assumptions: unit-norm features, revenues in [0,1], 1 <= K <= N,
/// ||theta*|| <= B, and (without outside option) that pairwise feature
/// differences span R^d.
class Instance {
 public:
  Instance(Mat features, Vec revenues, int capacity, double radius,
           std::optional<Vec> theta_star, bool outside_option);

  int num_arms() const { return static_cast<int>(features_.rows()); }
  int dim() const { return static_cast<int>(features_.cols()); }
  int capacity() const { return capacity_; }
  double radius() const { return radius_; }
  bool outside_option() const { return outside_option_; }

  const Mat& features() const { return features_; }
  auto feature(int i) const { return features_.row(i).transpose(); }
  const Vec& revenues() const { return revenues_; }
  const std::optional<Vec>& theta_star() const { return theta_star_; }

  /// Smallest admissible assortment: 2 without the outside option (a
  /// singleton is chosen with probability one), 1 with it.
  int min_assortment_size() const { return outside_option_ ? 1 : 2; }

  /// Copy with replaced revenues (validated).
  Instance with_revenues(Vec revenues) const;
  /// Copy with replaced true parameter (validated).
  Instance with_theta_star(std::optional<Vec> theta_star) const;

 private:
  Mat features_;
  Vec revenues_;
  int capacity_;
  double radius_;
  std::optional<Vec> theta_star_;
  bool outside_option_;
};

/// Sorted, duplicate-free set of 0-based arm indices.
class Assortment {
 public:
  Assortment() = default;
  explicit Assortment(std::vector<int> items);
  Assortment(std::initializer_list<int> items) : Assortment(std::vector<int>(items)) {}

  std::span<const int> items() const { return items_; }
  const std::vector<int>& vec() const { return items_; }
  int size() const { return static_cast<int>(items_.size()); }
  bool empty() const { return items_.empty(); }
  bool contains(int arm) const;
  int operator[](int k) const { return items_[static_cast<size_t>(k)]; }

  /// 1-based labels joined by ';' (e.g. "1;4;7"); empty set renders as "".
  std::string label() const;

  friend bool operator==(const Assortment&, const Assortment&) = default;
  friend auto operator<=>(const Assortment& a, const Assortment& b) { return a.items_ <=> b.items_; }

 private:
  std::vector<int> items_;
};

/// Throws InvalidAssortment unless S is admissible for the instance.
void validate_assortment(const Instance& inst, const Assortment& S);

struct ChoiceProbs {
  Vec probs;             // aligned with S.items()
  double outside = 0.0;  // p(0|S); zero when the model has no outside option
  bool has_outside = false;
};

ChoiceProbs choice_probs(const Instance& inst, const Assortment& S, const Vec& theta);

/// Centered second moment of features under the choice probabilities, with
/// the outside option contributing a zero feature vector.
Mat fisher_info(const Instance& inst, const Assortment& S, const Vec& theta);

/// Uncentered second moment of the lifted features (a_i, 1); the outside
/// option contributes (0, 1). Bottom-right entry is exactly 1.
Mat lifted_info(const Instance& inst, const Assortment& S, const Vec& theta);

/// Expected revenue-free utilities a_i^T theta for every arm.
Vec utilities(const Instance& inst, const Vec& theta);

/// Observed choices, aggregated per offered assortment. `counts[k]` is the
/// number of times S[k] was chosen; the trailing slot counts the outside
/// option when the model has one.
struct ChoiceGroup {
  Assortment assortment;
  std::vector<double> counts;
  double total = 0.0;
};

class ChoiceDataset {
 public:
  explicit ChoiceDataset(const Instance& inst) : outside_(inst.outside_option()) {}

  /// Adds `count` observations of `choice` (an arm in S or kOutside).
  void add(const Assortment& S, int choice, double count = 1.0);
  /// Index of the group for S, creating it if absent.
  size_t group_of(const Assortment& S);
  /// Fast path: `slot` is the position in S, or S.size() for the outside option.
  void add_to_group(size_t group, int slot, double count = 1.0);

  const std::vector<ChoiceGroup>& groups() const { return groups_; }
  double num_observations() const { return total_; }
  bool outside_option() const { return outside_; }

 private:
  bool outside_;
  std::vector<ChoiceGroup> groups_;
  std::vector<std::pair<Assortment, size_t>> index_;  // sorted by assortment
  double total_ = 0.0;
};

struct LossEval {
  double loss = 0.0;
  Vec grad;
  Mat hess;
};

/// Ridge-regularized MNL negative log-likelihood with exact gradient and
/// Hessian: sum_t -log p(i_t|S_t, theta) + (lambda/2)||theta||^2.
LossEval nll_loss_grad_hess(const Instance& inst, const ChoiceDataset& data, const Vec& theta,
                            double lambda);
/// Loss only (used by line searches).
double nll_loss(const Instance& inst, const ChoiceDataset& data, const Vec& theta, double lambda);

/// min over admissible S and i in S of p(i|S,theta) p(0|S,theta). Requires the
/// outside option. Runs in O(N log N).
double kappa(const Instance& inst, const Vec& theta);

// Instance JSON: {"features": [[...]], "revenues": [...], "K": int, "B": float,
//                 "theta_star": [...] | null, "outside_option": bool}
Instance instance_from_json(const std::string& text);
std::string instance_to_json(const Instance& inst);
Instance load_instance(const std::string& path);
void save_instance(const Instance& inst, const std::string& path);

namespace detail {

// Unchecked kernels over an arbitrary item list (no size validation). Used by
// the checked operations above and by tests that need to step outside the
// admissible family.
void probs_into(const Instance& inst, std::span<const int> items, const Vec& theta, Vec& probs,
                double& outside);
Mat fisher_info(const Instance& inst, std::span<const int> items, const Vec& theta);
Mat lifted_info(const Instance& inst, std::span<const int> items, const Vec& theta);

}  // namespace detail
}  // namespace mnld
