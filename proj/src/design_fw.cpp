#include "mnldesign/design_fw.hpp"

#include "mnldesign/rng.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace mnld {

namespace {

constexpr double kPruneWeight = 1e-12;
constexpr double kGammaMax = 1.0 - 1e-9;
constexpr double kPdThreshold = 1e-8;

double min_eig(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace

double logdet_pd(const Mat& M) {
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void refresh_matrices(Design& design) {
  MNLD_ASSERT(!design.atoms.empty(), "design has no atoms");
  design.M = Mat::Zero(design.atom_info[0].rows(), design.atom_info[0].cols());
  design.Mt = Mat::Zero(design.atom_lifted[0].rows(), design.atom_lifted[0].cols());
  for (size_t k = 0; k < design.atoms.size(); ++k) {
    design.M += design.weights[k] * design.atom_info[k];
    design.Mt += design.weights[k] * design.atom_lifted[k];
  }
}

Design make_design(const Instance& inst, const Vec& theta0, const std::vector<Assortment>& atoms,
                   const std::vector<double>& weights) {
  if (atoms.empty() || atoms.size() != weights.size()) throw Error(ErrorKind::DomainError, "atoms and weights must match");
  Design d;
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorKind::DomainError, "design weights must be positive");
    total += w;
  }
  for (size_t k = 0; k < atoms.size(); ++k) {
    d.atoms.push_back(atoms[k]);
    d.weights.push_back(weights[k] / total);
    d.atom_info.push_back(fisher_info(inst, atoms[k], theta0));
    d.atom_lifted.push_back(lifted_info(inst, atoms[k], theta0));
  }
  refresh_matrices(d);
  return d;
}

Design init_design(const Instance& inst, const Vec& theta0, uint64_t seed) {
  const int n = inst.num_arms();
  const int dim = inst.dim();
  const int lo = inst.min_assortment_size();
  const int K = inst.capacity();
  const int cap = 10 * dim * (dim + 1) / 2;
  const uint64_t distinct = count_assortments(n, lo, K);
  Rng rng(seed, Stream::InitDesign);
  std::set<Assortment> seen;
  std::vector<Assortment> atoms;
  std::vector<int> perm(static_cast<size_t>(n));
  Mat sum = Mat::Zero(dim, dim);
  int attempts = 0;
  while (static_cast<int>(atoms.size()) < cap && seen.size() < distinct && attempts < 100 * cap) {
    ++attempts;
    const int size = lo + static_cast<int>(rng.below(static_cast<uint64_t>(K - lo + 1)));
    std::iota(perm.begin(), perm.end(), 0);
    for (int k = 0; k < size; ++k) {
      const int j = k + static_cast<int>(rng.below(static_cast<uint64_t>(n - k)));
      std::swap(perm[static_cast<size_t>(k)], perm[static_cast<size_t>(j)]);
    }
    Assortment S(std::vector<int>(perm.begin(), perm.begin() + size));
    if (!seen.insert(S).second) continue;
    atoms.push_back(S);
    sum += fisher_info(inst, S, theta0);
    if (min_eig(sum / static_cast<double>(atoms.size())) >= kPdThreshold) {
      return make_design(inst, theta0, atoms, std::vector<double>(atoms.size(), 1.0));
    }
  }
  const double lam = atoms.empty() ? 0.0 : min_eig(sum / static_cast<double>(atoms.size()));
  Eigen::SelfAdjointEigenSolver<Mat> es(sum);
  int rank = 0;
  for (int k = 0; k < dim; ++k) rank += es.eigenvalues()[k] > 1e-10 * std::max(1.0, es.eigenvalues()[dim - 1]);
  throw Error(ErrorKind::CannotAchievePd, "initial design stalled at lambda_min=" + std::to_string(lam) + " with " +
                                              std::to_string(atoms.size()) + " atoms (numerical rank " +
                                              std::to_string(rank) + " of " + std::to_string(dim) + ")");
}

GValue g_value(const Design& design, const Instance& inst, const Vec& theta0, Backend backend, double eps_lmo,
               const LmoConfig& cfg) {
  GValue g;
  switch (backend) {
    case Backend::Brute:
      g.lmo = lmo_brute(inst, theta0, design.M, cfg.brute);
      break;
    case Backend::Milp: {
      MilpLmoOptions mo = cfg.milp;
      mo.eps_lmo = eps_lmo;
      g.lmo = lmo_milp(inst, theta0, design.M, mo);
      break;
    }
    case Backend::Lifted:
      g.lmo = lmo_lifted(inst, theta0, design.Mt);
      break;
  }
  g.g_upper = g.lmo.upper_bound();
  g.argmax = g.lmo.assortment;
  return g;
}

double line_search(const Mat& M, const Mat& I) {
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "design matrix is not positive definite");
  Mat C = llt.matrixL().solve(I);
  C = llt.matrixL().solve(C.transpose()).eval();
  C = (0.5 * (C + C.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(C, Eigen::EigenvaluesOnly);
  const Vec lam = es.eigenvalues();
  // log det((1-g)M + gI) - log det M = sum_k log(1 - g + g lam_k).
  auto h = [&](double g) {
    double s = 0.0;
    for (int k = 0; k < lam.size(); ++k) s += std::log(std::max(1.0 - g + g * lam[k], 1e-300));
    return s;
  };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = kGammaMax;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = h(x1), f2 = h(x2);
  while (b - a > 1e-10) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = h(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = h(x1);
    }
  }
  double g = 0.5 * (a + b);
  double fg = h(g);
  const double fend = h(kGammaMax);
  if (fend > fg) {
    g = kGammaMax;
    fg = fend;
  }
  const double scale = 1.0 + std::abs(logdet_pd(M));
  return fg > 1e-14 * scale ? g : 0.0;
}

double line_search(const Design& design, const Instance& inst, const Assortment& atom, const Vec& theta0, bool lifted) {
  if (lifted) return line_search(design.Mt, lifted_info(inst, atom, theta0));
  return line_search(design.M, fisher_info(inst, atom, theta0));
}

double lift_error(const Design& design, const Instance& inst, const Vec& theta0) {
  (void)inst;
  (void)theta0;
  const int d = static_cast<int>(design.M.rows());
  Eigen::LLT<Mat> llt(design.M);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "design matrix is not positive definite");
  const Mat Bbar = design.Mt.topLeftCorner(d, d);
  const Vec bbar = design.Mt.topRightCorner(d, 1);
  const double corner = design.Mt(d, d);
  const Mat schur = Bbar - bbar * bbar.transpose() / corner;
  Mat delta = schur - design.M;
  delta = (0.5 * (delta + delta.transpose())).eval();
  Mat C = llt.matrixL().solve(delta);
  C = llt.matrixL().solve(C.transpose()).eval();
  C = (0.5 * (C + C.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(C, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues()[d - 1]);
}

namespace {

void add_atom(Design& design, const Instance& inst, const Vec& theta0, const Assortment& S, double gamma) {
  for (double& w : design.weights) w *= 1.0 - gamma;
  auto it = std::find(design.atoms.begin(), design.atoms.end(), S);
  if (it != design.atoms.end()) {
    design.weights[static_cast<size_t>(it - design.atoms.begin())] += gamma;
  } else {
    design.atoms.push_back(S);
    design.weights.push_back(gamma);
    design.atom_info.push_back(fisher_info(inst, S, theta0));
    design.atom_lifted.push_back(lifted_info(inst, S, theta0));
  }
  // Prune negligible atoms and renormalize.
  size_t out = 0;
  double total = 0.0;
  for (size_t k = 0; k < design.atoms.size(); ++k) {
    if (design.weights[k] < kPruneWeight) continue;
    if (out != k) {
      design.atoms[out] = std::move(design.atoms[k]);
      design.weights[out] = design.weights[k];
      design.atom_info[out] = std::move(design.atom_info[k]);
      design.atom_lifted[out] = std::move(design.atom_lifted[k]);
    }
    total += design.weights[out];
    ++out;
  }
  design.atoms.resize(out);
  design.weights.resize(out);
  design.atom_info.resize(out);
  design.atom_lifted.resize(out);
  for (double& w : design.weights) w /= total;
  refresh_matrices(design);
}

}  // namespace

FwReport frank_wolfe(const Instance& inst, const Vec& theta0, const FwOptions& opts) {
  const auto t0 = Clock::now();
  const int d = inst.dim();
  if (!(opts.eps > 0.0)) throw Error(ErrorKind::DomainError, "eps must be > 0");
  FwReport rep;
  rep.backend = opts.backend;
  rep.eps_used = opts.eps;
  rep.eps_lmo_used = opts.backend == Backend::Milp ? opts.eps_lmo : 0.0;
  const bool lifted = opts.backend == Backend::Lifted;
  double eps_t = opts.eps;
  if (opts.backend == Backend::Milp) {
    eps_t = opts.eps - opts.eps_lmo / d;
    if (!(eps_t > 0.0 && eps_t <= 1.0)) {
      throw Error(ErrorKind::DomainError, "need 0 < eps - eps_lmo/d <= 1 for the milp backend (got " +
                                              std::to_string(eps_t) + ")");
    }
  }
  rep.eps_tilde = eps_t;

  rep.design = init_design(inst, theta0, opts.seed);
  Design& design = rep.design;

  // Iteration cap 1 + ceil(4 p log(L / lambda0) / eps~) with p the criterion dimension.
  const int p = lifted ? d + 1 : d;
  const double L = lifted ? 1.0 + inst.features().rowwise().squaredNorm().maxCoeff()
                          : inst.features().rowwise().squaredNorm().maxCoeff();
  const double lam0 = min_eig(lifted ? design.Mt : design.M);
  const double logratio = std::max(std::log(std::max(L, 1e-300) / lam0), 1.0);
  const double theory_cap = 1.0 + std::ceil(4.0 * p * logratio / eps_t);
  rep.iteration_cap = static_cast<int>(std::min(theory_cap, 1e9));
  if (opts.iter_cap > 0) rep.iteration_cap = std::min(rep.iteration_cap, opts.iter_cap);

  const double target = lifted ? (1.0 + opts.eps) * (d + 1) : (1.0 + opts.eps) * d;
  double logdet = logdet_pd(lifted ? design.Mt : design.M);
  for (int it = 0;; ++it) {
    const GValue g = g_value(design, inst, theta0, opts.backend, opts.eps_lmo, opts.lmo);
    FwIteration rec;
    rec.iter = it;
    rec.g_hat = g.lmo.value;
    rec.gap = g.lmo.certified_gap;
    rec.g_upper = g.g_upper;
    rec.atom = g.argmax;
    rep.final_g = g.g_upper;
    bool stop = false;
    if (opts.backend == Backend::Milp) {
      stop = g.lmo.value <= (1.0 + eps_t) * d && g.g_upper <= target;
    } else {
      stop = g.g_upper <= target;
    }
    if (stop) {
      rec.logdet = logdet;
      rep.log.push_back(rec);
      rep.certified = true;
      rep.iterations = it;
      break;
    }
    if (it >= rep.iteration_cap) {
      rec.logdet = logdet;
      rep.log.push_back(rec);
      rep.certified = false;
      rep.iterations = it;
      break;
    }
    const double gamma = line_search(design, inst, g.argmax, theta0, lifted);
    rec.gamma = gamma;
    if (gamma > 0.0) add_atom(design, inst, theta0, g.argmax, gamma);
    const double next = logdet_pd(lifted ? design.Mt : design.M);
    MNLD_ASSERT(next >= logdet - 1e-9 * (1.0 + std::abs(logdet)), "log det decreased across a Frank-Wolfe step");
    logdet = next;
    rec.logdet = logdet;
    rep.log.push_back(rec);
    if (gamma == 0.0) {
      // No improving step along the oracle direction: the design is
      // stationary up to line-search resolution.
      rep.iterations = it + 1;
      rep.certified = false;
      break;
    }
  }
  if (lifted) {
    rep.eps_lift = lift_error(design, inst, theta0);
    rep.g_true_bound = 2.0 * (1.0 + rep.eps_lift) * (1.0 + opts.eps) * d;
    if (inst.outside_option() && theta0.norm() <= inst.radius() * (1.0 + 1e-12)) {
      MNLD_ASSERT(rep.eps_lift <= inst.capacity() * std::exp(inst.radius()) * (1.0 + 1e-9) + 1e-12,
                  "lifting error exceeds K e^B");
    }
  }
  rep.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return rep;
}

std::string fw_report_json(const FwReport& rep, const Instance& inst) {
  using nlohmann::json;
  json j;
  j["backend"] = to_string(rep.backend);
  j["dim"] = inst.dim();
  j["iterations"] = rep.iterations;
  j["iteration_cap"] = rep.iteration_cap;
  j["certified"] = rep.certified;
  j["final_g"] = rep.final_g;
  j["epsilon"] = rep.eps_used;
  j["eps_lmo"] = rep.eps_lmo_used;
  j["eps_tilde"] = rep.eps_tilde;
  if (rep.backend == Backend::Lifted) {
    j["eps_lift"] = rep.eps_lift;
    j["g_true_bound"] = rep.g_true_bound;
  }
  j["seconds"] = rep.seconds;
  json atoms = json::array();
  for (size_t k = 0; k < rep.design.atoms.size(); ++k) {
    std::vector<int> labels;
    for (int i : rep.design.atoms[k].items()) labels.push_back(i + 1);
    atoms.push_back({{"items", labels}, {"weight", rep.design.weights[k]}});
  }
  j["atoms"] = std::move(atoms);
  json log = json::array();
  for (const FwIteration& r : rep.log) {
    std::vector<int> labels;
    for (int i : r.atom.items()) labels.push_back(i + 1);
    log.push_back({{"iter", r.iter},
                   {"g_hat", r.g_hat},
                   {"g_upper", r.g_upper},
                   {"gap", r.gap},
                   {"gamma", r.gamma},
                   {"atom", labels},
                   {"logdet", r.logdet}});
  }
  j["log"] = std::move(log);
  return j.dump(2) + "\n";
}

}  // namespace mnld
