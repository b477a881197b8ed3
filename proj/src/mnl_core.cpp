#include "mnldesign/mnl_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mnld {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInstance: return "invalid-instance";
    case ErrorKind::InvalidAssortment: return "invalid-assortment";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::ModelMismatch: return "model-flag-mismatch";
    case ErrorKind::DomainError: return "domain-error";
    case ErrorKind::NotPositiveDefinite: return "not-positive-definite";
    case ErrorKind::BudgetExceeded: return "budget-exceeded";
    case ErrorKind::InfeasibleConstraints: return "infeasible-constraints";
    case ErrorKind::IterationCap: return "iteration-cap";
    case ErrorKind::NonUniqueMaximizer: return "non-unique-maximizer";
    case ErrorKind::RejectionCap: return "rejection-cap";
    case ErrorKind::CannotAchievePd: return "cannot-achieve-pd";
    case ErrorKind::RoundCap: return "round-cap";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::Io: return "io";
    case ErrorKind::Internal: return "internal";
  }
  return "unknown";
}

namespace {

constexpr double kNormSlack = 1e-12;
constexpr double kSpanTol = 1e-10;
constexpr double kUtilityClamp = 50.0;

void check_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorKind::NonFinite, std::string(what) + " has non-finite entries");
}

}  // namespace

Instance::Instance(Mat features, Vec revenues, int capacity, double radius,
                   std::optional<Vec> theta_star, bool outside_option)
    : features_(std::move(features)),
      revenues_(std::move(revenues)),
      capacity_(capacity),
      radius_(radius),
      theta_star_(std::move(theta_star)),
      outside_option_(outside_option) {
  const int n = num_arms();
  const int d = dim();
  if (n < 1 || d < 1) throw Error(ErrorKind::InvalidInstance, "need at least one arm and one feature");
  if (!features_.allFinite()) throw Error(ErrorKind::InvalidInstance, "features must be finite");
  for (int i = 0; i < n; ++i) {
    if (features_.row(i).norm() > 1.0 + kNormSlack) {
      throw Error(ErrorKind::InvalidInstance, "feature row " + std::to_string(i + 1) + " has norm > 1");
    }
  }
  if (revenues_.size() != n) throw Error(ErrorKind::InvalidInstance, "revenues length must equal N");
  for (int i = 0; i < n; ++i) {
    if (!(revenues_[i] >= 0.0 && revenues_[i] <= 1.0)) {
      throw Error(ErrorKind::InvalidInstance, "revenues must lie in [0,1]");
    }
  }
  if (capacity_ < 1 || capacity_ > n) throw Error(ErrorKind::InvalidInstance, "need 1 <= K <= N");
  if (!outside_option_ && capacity_ < 2) {
    throw Error(ErrorKind::InvalidInstance, "without an outside option assortments need 2 <= |S| <= K, so K >= 2");
  }
  if (!(std::isfinite(radius_) && radius_ >= 0.0)) throw Error(ErrorKind::InvalidInstance, "B must be finite and >= 0");
  if (theta_star_) {
    if (theta_star_->size() != d) throw Error(ErrorKind::InvalidInstance, "theta_star has wrong dimension");
    if (!theta_star_->allFinite()) throw Error(ErrorKind::InvalidInstance, "theta_star must be finite");
    if (theta_star_->norm() > radius_ * (1.0 + kNormSlack) + kNormSlack) {
      throw Error(ErrorKind::InvalidInstance, "||theta_star|| exceeds B");
    }
  }
  if (!outside_option_) {
    if (n < 2) throw Error(ErrorKind::InvalidInstance, "spanning condition needs at least two arms");
    Mat diffs(n - 1, d);
    for (int i = 1; i < n; ++i) diffs.row(i - 1) = features_.row(i) - features_.row(0);
    Eigen::JacobiSVD<Mat> svd(diffs);
    const Vec& sv = svd.singularValues();
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k) rank += sv[k] > kSpanTol ? 1 : 0;
    if (rank < d) {
      std::ostringstream os;
      os << "pairwise feature differences span a " << rank << "-dimensional subspace of R^" << d
         << " (singular values:";
      for (int k = 0; k < sv.size(); ++k) os << ' ' << sv[k];
      os << "); reparameterize onto the identifiable subspace";
      throw Error(ErrorKind::InvalidInstance, os.str());
    }
  }
}

Instance Instance::with_revenues(Vec revenues) const {
  return Instance(features_, std::move(revenues), capacity_, radius_, theta_star_, outside_option_);
}

Instance Instance::with_theta_star(std::optional<Vec> theta_star) const {
  return Instance(features_, revenues_, capacity_, radius_, std::move(theta_star), outside_option_);
}

Assortment::Assortment(std::vector<int> items) : items_(std::move(items)) {
  std::sort(items_.begin(), items_.end());
  if (std::adjacent_find(items_.begin(), items_.end()) != items_.end()) {
    throw Error(ErrorKind::InvalidAssortment, "duplicate arm in assortment");
  }
  if (!items_.empty() && items_.front() < 0) throw Error(ErrorKind::InvalidAssortment, "negative arm index");
}

bool Assortment::contains(int arm) const { return std::binary_search(items_.begin(), items_.end(), arm); }

std::string Assortment::label() const {
  std::string out;
  for (size_t k = 0; k < items_.size(); ++k) {
    if (k) out += ';';
    out += std::to_string(items_[k] + 1);
  }
  return out;
}

void validate_assortment(const Instance& inst, const Assortment& S) {
  const int lo = inst.min_assortment_size();
  if (S.size() < lo || S.size() > inst.capacity()) {
    throw Error(ErrorKind::InvalidAssortment, "size " + std::to_string(S.size()) + " outside [" +
                                                  std::to_string(lo) + ", " + std::to_string(inst.capacity()) + "]");
  }
  if (!S.empty() && S.items().back() >= inst.num_arms()) {
    throw Error(ErrorKind::InvalidAssortment, "arm index out of range");
  }
}

namespace detail {

void probs_into(const Instance& inst, std::span<const int> items, const Vec& theta, Vec& probs,
                double& outside) {
  const int m = static_cast<int>(items.size());
  probs.resize(m);
  double shift = inst.outside_option() ? 0.0 : -std::numeric_limits<double>::infinity();
  for (int k = 0; k < m; ++k) {
    probs[k] = inst.features().row(items[k]).dot(theta);
    shift = std::max(shift, probs[k]);
  }
  double denom = 0.0;
  for (int k = 0; k < m; ++k) {
    probs[k] = std::exp(std::clamp(probs[k] - shift, -kUtilityClamp, kUtilityClamp));
    denom += probs[k];
  }
  double e0 = 0.0;
  if (inst.outside_option()) {
    e0 = std::exp(std::clamp(-shift, -kUtilityClamp, kUtilityClamp));
    denom += e0;
  }
  probs /= denom;
  outside = e0 / denom;
}

Mat fisher_info(const Instance& inst, std::span<const int> items, const Vec& theta) {
  const int d = inst.dim();
  Vec p;
  double p0 = 0.0;
  probs_into(inst, items, theta, p, p0);
  Vec mean = Vec::Zero(d);
  for (size_t k = 0; k < items.size(); ++k) mean += p[static_cast<Eigen::Index>(k)] * inst.feature(items[k]);
  Mat info = Mat::Zero(d, d);
  Vec centered(d);
  auto accumulate = [&](double w) {
    for (int c = 0; c < d; ++c) {
      const double wc = w * centered[c];
      for (int r = 0; r <= c; ++r) info(r, c) += wc * centered[r];
    }
  };
  for (size_t k = 0; k < items.size(); ++k) {
    centered = inst.feature(items[k]) - mean;
    accumulate(p[static_cast<Eigen::Index>(k)]);
  }
  if (inst.outside_option()) {
    centered = -mean;
    accumulate(p0);
  }
  for (int c = 0; c < d; ++c)
    for (int r = c + 1; r < d; ++r) info(r, c) = info(c, r);
  return info;
}

Mat lifted_info(const Instance& inst, std::span<const int> items, const Vec& theta) {
  const int d = inst.dim();
  Vec p;
  double p0 = 0.0;
  probs_into(inst, items, theta, p, p0);
  Mat info = Mat::Zero(d + 1, d + 1);
  for (size_t k = 0; k < items.size(); ++k) {
    const double w = p[static_cast<Eigen::Index>(k)];
    const auto a = inst.feature(items[k]);
    for (int c = 0; c < d; ++c) {
      const double wc = w * a[c];
      for (int r = 0; r <= c; ++r) info(r, c) += wc * a[r];
      info(c, d) += wc;
    }
  }
  for (int c = 0; c < d; ++c) {
    for (int r = c + 1; r < d; ++r) info(r, c) = info(c, r);
    info(d, c) = info(c, d);
  }
  info(d, d) = 1.0;
  return info;
}

}  // namespace detail

ChoiceProbs choice_probs(const Instance& inst, const Assortment& S, const Vec& theta) {
  validate_assortment(inst, S);
  if (theta.size() != inst.dim()) throw Error(ErrorKind::DomainError, "theta has wrong dimension");
  check_finite(theta, "theta");
  ChoiceProbs out;
  out.has_outside = inst.outside_option();
  detail::probs_into(inst, S.items(), theta, out.probs, out.outside);
  return out;
}

Mat fisher_info(const Instance& inst, const Assortment& S, const Vec& theta) {
  validate_assortment(inst, S);
  check_finite(theta, "theta");
  return detail::fisher_info(inst, S.items(), theta);
}

Mat lifted_info(const Instance& inst, const Assortment& S, const Vec& theta) {
  validate_assortment(inst, S);
  check_finite(theta, "theta");
  return detail::lifted_info(inst, S.items(), theta);
}

Vec utilities(const Instance& inst, const Vec& theta) { return inst.features() * theta; }

size_t ChoiceDataset::group_of(const Assortment& S) {
  auto it = std::lower_bound(index_.begin(), index_.end(), S,
                             [](const auto& entry, const Assortment& key) { return entry.first < key; });
  if (it != index_.end() && it->first == S) return it->second;
  const size_t id = groups_.size();
  ChoiceGroup g;
  g.assortment = S;
  g.counts.assign(static_cast<size_t>(S.size()) + (outside_ ? 1 : 0), 0.0);
  groups_.push_back(std::move(g));
  index_.insert(it, {S, id});
  return id;
}

void ChoiceDataset::add_to_group(size_t group, int slot, double count) {
  ChoiceGroup& g = groups_.at(group);
  g.counts.at(static_cast<size_t>(slot)) += count;
  g.total += count;
  total_ += count;
}

void ChoiceDataset::add(const Assortment& S, int choice, double count) {
  int slot = -1;
  if (choice == kOutside) {
    if (!outside_) throw Error(ErrorKind::InvalidAssortment, "outside choice without outside option");
    slot = S.size();
  } else {
    auto items = S.items();
    auto it = std::lower_bound(items.begin(), items.end(), choice);
    if (it == items.end() || *it != choice) {
      throw Error(ErrorKind::InvalidAssortment, "chosen index " + std::to_string(choice + 1) + " not in assortment");
    }
    slot = static_cast<int>(it - items.begin());
  }
  add_to_group(group_of(S), slot, count);
}

namespace {

// Per-group log-partition and probabilities; returns log(sum exp(u)) over S (and 0).
double group_lse(const Instance& inst, const Assortment& S, const Vec& theta, Vec& util) {
  const int m = S.size();
  util.resize(m);
  double shift = inst.outside_option() ? 0.0 : -std::numeric_limits<double>::infinity();
  for (int k = 0; k < m; ++k) {
    util[k] = inst.features().row(S[k]).dot(theta);
    shift = std::max(shift, util[k]);
  }
  double sum = inst.outside_option() ? std::exp(-shift) : 0.0;
  for (int k = 0; k < m; ++k) sum += std::exp(util[k] - shift);
  return shift + std::log(sum);
}

}  // namespace

double nll_loss(const Instance& inst, const ChoiceDataset& data, const Vec& theta, double lambda) {
  double loss = 0.5 * lambda * theta.squaredNorm();
  Vec util;
  for (const ChoiceGroup& g : data.groups()) {
    const double lse = group_lse(inst, g.assortment, theta, util);
    double lin = 0.0;
    for (int k = 0; k < g.assortment.size(); ++k) lin += g.counts[static_cast<size_t>(k)] * util[k];
    loss += g.total * lse - lin;
  }
  return loss;
}

LossEval nll_loss_grad_hess(const Instance& inst, const ChoiceDataset& data, const Vec& theta, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::DomainError, "lambda must be > 0");
  check_finite(theta, "theta");
  const int d = inst.dim();
  LossEval out;
  out.loss = 0.5 * lambda * theta.squaredNorm();
  out.grad = lambda * theta;
  out.hess = lambda * Mat::Identity(d, d);
  Vec util, p, mean(d), centered(d);
  double p0 = 0.0;
  for (const ChoiceGroup& g : data.groups()) {
    if (g.total == 0.0) continue;
    const auto items = g.assortment.items();
    const int m = g.assortment.size();
    const double lse = group_lse(inst, g.assortment, theta, util);
    detail::probs_into(inst, items, theta, p, p0);
    mean.setZero();
    double lin = 0.0;
    for (int k = 0; k < m; ++k) {
      const auto a = inst.feature(items[static_cast<size_t>(k)]);
      mean += p[k] * a;
      lin += g.counts[static_cast<size_t>(k)] * util[k];
      out.grad -= g.counts[static_cast<size_t>(k)] * a;
    }
    out.loss += g.total * lse - lin;
    out.grad += g.total * mean;
    for (int k = 0; k <= m; ++k) {
      double w;
      if (k < m) {
        centered = inst.feature(items[static_cast<size_t>(k)]) - mean;
        w = p[k];
      } else {
        if (!inst.outside_option()) break;
        centered = -mean;
        w = p0;
      }
      w *= g.total;
      for (int c = 0; c < d; ++c) {
        const double wc = w * centered[c];
        for (int r = 0; r <= c; ++r) out.hess(r, c) += wc * centered[r];
      }
    }
  }
  for (int c = 0; c < d; ++c)
    for (int r = c + 1; r < d; ++r) out.hess(r, c) = out.hess(c, r);
  return out;
}

double kappa(const Instance& inst, const Vec& theta) {
  if (!inst.outside_option()) throw Error(ErrorKind::ModelMismatch, "kappa requires the outside-option model");
  check_finite(theta, "theta");
  const int n = inst.num_arms();
  const int K = inst.capacity();
  const Vec u = utilities(inst, theta);
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return u[a] > u[b]; });
  double best = std::numeric_limits<double>::infinity();
  Vec p;
  double p0 = 0.0;
  std::vector<int> items;
  for (int i = 0; i < n; ++i) {
    items.assign(1, i);
    for (int j : order) {
      if (static_cast<int>(items.size()) >= K) break;
      if (j != i) items.push_back(j);
    }
    std::sort(items.begin(), items.end());
    detail::probs_into(inst, items, theta, p, p0);
    const auto pos = std::lower_bound(items.begin(), items.end(), i) - items.begin();
    best = std::min(best, p[pos] * p0);
  }
  return best;
}

}  // namespace mnld
