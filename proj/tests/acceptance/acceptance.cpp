// Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion; details
// go to stderr. `--only N` runs a single criterion.

#include "mnldesign/check/oracles.hpp"
#include "mnldesign/harness.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

using namespace mnld;

namespace {

struct Verdict {
  bool pass = true;
  std::string summary;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

int uniform_int(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo + 1))); }

// The shared family of criteria 1 and 2: N in 6..12, K in {2,3}, d in 2..4,
// B = 1, theta0 uniform in the B-ball, M from init_design.
struct FamilyCase {
  Instance inst;
  Vec theta0;
  Mat M;
};

FamilyCase family_case(Rng& rng, int k) {
  const int N = uniform_int(rng, 6, 12), K = uniform_int(rng, 2, 3), d = uniform_int(rng, 2, 4);
  Instance inst = gen_instance(N, K, d, 1.0, 10'000 + static_cast<uint64_t>(k));
  Vec theta0 = sample_ball(rng, d, 1.0);
  Mat M = init_design(inst, theta0, static_cast<uint64_t>(k)).M;
  return {std::move(inst), std::move(theta0), std::move(M)};
}

Verdict c1_milp_exactness() {
  Rng rng(1, Stream::Test, 1001);
  const auto t0 = Clock::now();
  int ok = 0;
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const FamilyCase fc = family_case(rng, k);
    const double truth = lmo_brute(fc.inst, fc.theta0, fc.M).value;
    MilpLmoOptions o;
    o.eps_lmo = 0.0;
    const LmoResult r = lmo_milp(fc.inst, fc.theta0, fc.M, o);
    const double err = std::abs(trace_direct(fc.inst, fc.theta0, fc.M, r.assortment) - truth);
    worst = std::max(worst, err);
    ok += err <= 1e-7 ? 1 : 0;
    if (err > 1e-7) std::fprintf(stderr, "  case %d: |milp - brute| = %.3e\n", k, err);
  }
  const double secs = seconds_since(t0);
  return {ok == 200 && secs <= 300.0,
          fmt("MILP exactness: %g/200 within 1e-7 (max error %.2e), %.1f s (limit 300 s)", ok, worst, secs)};
}

Verdict c2_certified_stopping() {
  Rng rng(2, Stream::Test, 1002);
  int ok = 0;
  double worst = -1.0;
  for (int k = 0; k < 200; ++k) {
    const FamilyCase fc = family_case(rng, k);
    const double truth = lmo_brute(fc.inst, fc.theta0, fc.M).value;
    MilpLmoOptions o;
    o.eps_lmo = 0.1;
    const LmoResult r = lmo_milp(fc.inst, fc.theta0, fc.M, o);
    const double loss = truth - trace_direct(fc.inst, fc.theta0, fc.M, r.assortment);
    worst = std::max(worst, loss);
    ok += loss <= 0.1 + 1e-7 ? 1 : 0;
  }
  // Full FW runs with eps = 0.2 and eps_LMO = 0.1 * d * 0.05.
  int fw_ok = 0;
  const int fw_runs = 5;
  double worst_ratio = 0.0;
  for (int k = 0; k < fw_runs; ++k) {
    const int N = 6 + k, d = 2 + k % 3;
    const Instance inst = gen_instance(N, 2 + k % 2, d, 1.0, 20'000 + static_cast<uint64_t>(k));
    const Vec theta0 = sample_ball(rng, d, 1.0);
    FwOptions fo;
    fo.eps = 0.2;
    fo.backend = Backend::Milp;
    fo.eps_lmo = 0.1 * d * 0.05;
    const FwReport rep = frank_wolfe(inst, theta0, fo);
    const double g = lmo_brute(inst, theta0, rep.design.M).value;
    worst_ratio = std::max(worst_ratio, g / d);
    fw_ok += rep.certified && g <= 1.2 * d + 1e-9 ? 1 : 0;
    std::fprintf(stderr, "  FW milp run %d: N=%d d=%d iters=%d exact g/d=%.4f\n", k, N, d, rep.iterations, g / d);
  }
  return {ok == 200 && fw_ok == fw_runs,
          fmt("certified early stopping: %g/200 LMO calls within 0.1 (worst loss %.3e); %g/5 FW runs with exact g <= 1.2 d "
              "(worst g/d %.4f)",
              ok, worst, fw_ok, worst_ratio)};
}

Verdict c3_kw_certificate() {
  int ok = 0;
  double lo = 1e300, hi = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int N = 6 + k % 5, d = 2 + k % 3, K = 2 + k % 2;
    const Instance inst = gen_instance(N, K, d, 1.0, 30'000 + static_cast<uint64_t>(k));
    const Vec theta0 = *inst.theta_star();
    FwOptions fo;
    fo.eps = 0.05;
    const FwReport rep = frank_wolfe(inst, theta0, fo);
    const double g = lmo_brute(inst, theta0, rep.design.M).value;
    lo = std::min(lo, g / d);
    hi = std::max(hi, g / d);
    ok += rep.certified && g >= d - 1e-6 && g <= 1.05 * d + 1e-12 ? 1 : 0;
  }
  return {ok == 20, fmt("KW certificate: %g/20 runs with exact g in [d, 1.05 d] (g/d range %.6f .. %.6f)", ok, lo, hi)};
}

Verdict c4_lifted_guarantee() {
  int ok = 0;
  double worst_lift = 0.0, worst_ratio = 0.0;
  const int runs = 20;
  for (int k = 0; k < runs; ++k) {
    const int N = 6 + k % 7, d = 2 + k % 3, K = 2 + k % 2;
    const Instance inst = gen_instance(N, K, d, 1.0, 40'000 + static_cast<uint64_t>(k));
    const Vec theta0 = *inst.theta_star();
    FwOptions fo;
    fo.eps = 0.1;
    fo.backend = Backend::Lifted;
    const FwReport rep = frank_wolfe(inst, theta0, fo);
    const double g = lmo_brute(inst, theta0, rep.design.M).value;
    const double bound = 2.0 * (1.0 + rep.eps_lift) * 1.1 * d;
    const double lift_cap = K * std::exp(inst.radius());
    worst_lift = std::max(worst_lift, rep.eps_lift / lift_cap);
    worst_ratio = std::max(worst_ratio, g / bound);
    ok += rep.certified && rep.eps_lift <= lift_cap && g <= bound ? 1 : 0;
  }
  return {ok == runs, fmt("lifted guarantee: %g/20 runs with eps_lift <= K e^B (max ratio %.4f) and true g <= "
                          "2(1+eps_lift)(1.1)d (max ratio %.4f)",
                          ok, worst_lift, worst_ratio)};
}

std::vector<BsiTrace> run_seeds(const Instance& inst, int n, uint64_t seed0) {
  std::vector<BsiTrace> out(static_cast<size_t>(n));
  parallel_for(out.size(), workers_from_env(), [&](size_t i) {
    BsiConfig cfg;
    cfg.seed = seed0 + i;
    Environment env(inst, cfg.seed);
    out[i] = run_bsi(env, cfg);
  });
  return out;
}

Verdict c5_identification() {
  const auto t0 = Clock::now();
  // The first three generator seeds of this family with Delta_min >= 0.03.
  bool pass = true;
  std::string detail;
  for (uint64_t s : {2u, 3u, 6u}) {
    const Instance inst = gen_instance(10, 2, 3, 1.0, s);
    const auto tr = run_seeds(inst, 20, 1000);
    int correct = 0;
    for (const auto& t : tr) correct += t.correct ? 1 : 0;
    const BsiAggregate a = aggregate_bsi(inst, Backend::Brute, tr);
    pass = pass && correct >= 18;
    detail += fmt(" instance %g: %g/20 (mean tau %.0f);", static_cast<double>(s), correct, a.mean_tau);
  }
  const double secs = seconds_since(t0);
  pass = pass && secs <= 1200.0;
  return {pass, "identification:" + detail + fmt(" %.0f s (limit 1200 s)", secs)};
}

Verdict c6_gap_scaling() {
  const Instance base = gen_instance(10, 2, 3, 1.0, 2);
  const double factors[] = {1.0, 0.5, 0.25};
  std::vector<double> x, y;
  std::filesystem::create_directories("acceptance_out");
  std::ofstream csv("acceptance_out/gap_ladder.csv");
  csv << "# mnldesign.gap_ladder v1\nfactor,delta_min,mean_tau,std_tau,correct_frac\n";
  for (double f : factors) {
    const Instance inst = shrink_gap(base, f);
    const double delta = true_gap(inst, 0.0).delta_min;
    const auto tr = run_seeds(inst, 10, 2000);
    const BsiAggregate a = aggregate_bsi(inst, Backend::Brute, tr);
    csv << fmt_num(f) << ',' << fmt_num(delta) << ',' << fmt_num(a.mean_tau) << ',' << fmt_num(a.std_tau) << ','
        << fmt_num(a.correct_frac) << "\n";
    std::fprintf(stderr, "  factor %.2f: delta %.5f mean tau %.0f (sd %.0f)\n", f, delta, a.mean_tau, a.std_tau);
    x.push_back(std::log(1.0 / delta));
    y.push_back(std::log(a.mean_tau));
  }
  // Least-squares slope of log(mean tau) on log(1/delta).
  const double mx = (x[0] + x[1] + x[2]) / 3, my = (y[0] + y[1] + y[2]) / 3;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  const bool increasing = y[1] > y[0] && y[2] > y[1];
  return {increasing && slope >= 1.0 && slope <= 3.0,
          std::string("gap scaling: mean tau ") + (increasing ? "increasing" : "not increasing") +
              fmt(" in 1/delta, log-log slope %.3f (required 1..3)", slope)};
}

Verdict c7_table_orderings() {
  BenchOptions o;
  o.Ns = {30, 50};
  o.Ks = {3, 4};
  o.seeds = 10;
  o.timeout_s = 2.0;  // desk-scale stand-in for the per-call limit; see README
  o.workers = 1;      // timings must not compete for cores
  const auto samples = run_bench(o);
  const auto cells = summarize_bench(samples);
  std::filesystem::create_directories("acceptance_out");
  {
    std::ofstream t("acceptance_out/bench_lmo.csv"), r("acceptance_out/bench_lmo_raw.csv");
    write_bench_table_csv(t, cells, o.backends);
    write_bench_raw_csv(r, samples);
  }
  auto cell = [&](int N, int K, Backend b) -> const BenchCell& {
    for (const auto& c : cells)
      if (c.N == N && c.K == K && c.backend == b) return c;
    throw std::logic_error("missing cell");
  };
  bool lifted_fastest = true;
  for (int N : o.Ns)
    for (int K : o.Ks) {
      const double lifted = cell(N, K, Backend::Lifted).mean_seconds;
      for (Backend b : {Backend::Milp, Backend::Brute}) {
        const BenchCell& c = cell(N, K, b);
        // A timed-out cell ran for at least the timeout.
        const double t = c.timed_out ? std::max(c.mean_seconds, o.timeout_s) : c.mean_seconds;
        lifted_fastest = lifted_fastest && lifted < t;
      }
      std::fprintf(stderr, "  N=%d K=%d binom=%llu lifted %.2e s, brute %.2e s, milp %s\n", N, K,
                   static_cast<unsigned long long>(binomial(N, K)), lifted, cell(N, K, Backend::Brute).mean_seconds,
                   cell(N, K, Backend::Milp).timed_out ? "--" : fmt("%.2e s", cell(N, K, Backend::Milp).mean_seconds).c_str());
    }
  // Brute time ordered by C(N, K).
  std::vector<std::pair<uint64_t, double>> brute;
  for (const auto& c : cells)
    if (c.backend == Backend::Brute) brute.emplace_back(c.binom, c.mean_seconds);
  std::sort(brute.begin(), brute.end());
  bool monotone = true;
  for (size_t i = 1; i < brute.size(); ++i) monotone = monotone && brute[i].second > brute[i - 1].second;
  const bool binoms = binomial(30, 3) == 4060 && cell(30, 3, Backend::Brute).binom == 4060 &&
                      cell(50, 4, Backend::Brute).binom == 230300;
  return {lifted_fastest && monotone && binoms,
          std::string("LMO timing orderings: lifted fastest in every cell: ") + (lifted_fastest ? "yes" : "no") +
              "; brute increasing in C(N,K): " + (monotone ? "yes" : "no") + "; C(30,3) = " +
              std::to_string(cell(30, 3, Backend::Brute).binom)};
}

Verdict c8_numerical_substrate() {
  const auto t0 = Clock::now();
  check::CheckOptions co;
  int failed = 0;
  std::string names;
  const auto res = check::run_oracles(co, [&](const check::OracleResult& r) {
    std::fprintf(stderr, "  %-30s %s %7.2f s  %s\n", r.name.c_str(), r.pass ? "ok " : "BAD", r.seconds, r.detail.c_str());
    if (!r.pass) {
      ++failed;
      names += " " + r.name;
    }
  });
  const double secs = seconds_since(t0);
  return {failed == 0 && secs <= 1800.0,
          fmt("numerical substrate: %g/%g oracles passed in %.0f s (limit 1800 s)", static_cast<double>(res.size() - failed),
              static_cast<double>(res.size()), secs) +
              (failed ? " failing:" + names : "")};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  const std::function<Verdict()> criteria[] = {c1_milp_exactness,   c2_certified_stopping, c3_kw_certificate,
                                               c4_lifted_guarantee, c5_identification,     c6_gap_scaling,
                                               c7_table_orderings,  c8_numerical_substrate};
  int failures = 0;
  for (int c = 1; c <= 8; ++c) {
    if (only && c != only) continue;
    Verdict v;
    try {
      v = criteria[c - 1]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s C%d %s\n", v.pass ? "PASS" : "FAIL", c, v.summary.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
