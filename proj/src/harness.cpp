#include "mnldesign/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

namespace mnld {

int workers_from_env() {
  if (const char* s = std::getenv("MNLDESIGN_WORKERS")) {
    const int v = std::atoi(s);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
  const size_t nw = std::min<size_t>(n, static_cast<size_t>(std::max(1, workers)));
  if (nw <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::mutex mu;
  size_t err_index = n;
  std::exception_ptr err;
  auto body = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (size_t w = 0; w < nw; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string choice_label(int c) { return c == kOutside ? "0" : std::to_string(c + 1); }

}  // namespace

void write_bsi_trace_csv(std::ostream& os, uint64_t seed, const BsiTrace& tr, bool header) {
  if (header) os << "# " << kBsiTraceSchema << "\n" << kBsiTraceHeader << "\n";
  for (const BsiRound& r : tr.rounds) {
    os << seed << ',' << (r.phase == 'w' ? "warmup" : "main") << ',' << r.round << ',' << r.S.label() << ','
       << choice_label(r.choice);
    if (r.phase == 'w') os << '|' << choice_label(r.choice2);
    os << ',' << fmt_num(r.max_width) << ',' << fmt_num(r.R_pess) << ',' << fmt_num(r.R_opt_alt) << ','
       << (r.stopped ? 1 : 0) << "\n";
  }
}

std::string bsi_summary_json(uint64_t seed, const BsiTrace& tr) {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["tau"] = tr.tau;
  j["warmup_len"] = tr.warmup_len;
  j["main_rounds"] = tr.main_rounds;
  j["samples"] = tr.samples;
  j["S_hat"] = tr.S_hat.label();
  j["stopped"] = tr.stopped;
  j["correct"] = tr.correct;
  j["failed"] = tr.failed;
  j["failure"] = tr.failure;
  j["honest_at_stop"] = tr.honest_at_stop;
  j["kappa"] = tr.kappa;
  j["zeta_w"] = tr.zeta_w;
  j["beta"] = tr.beta;
  j["fw_iterations"] = tr.fw_iterations;
  j["fw_final_g"] = tr.fw_final_g;
  j["design_support"] = tr.design_support;
  j["seconds"] = tr.seconds;
  return j.dump(2);
}

BsiAggregate aggregate_bsi(const Instance& inst, Backend backend, const std::vector<BsiTrace>& traces) {
  BsiAggregate a;
  a.N = inst.num_arms();
  a.K = inst.capacity();
  a.backend = backend;
  a.runs = static_cast<int>(traces.size());
  if (traces.empty()) return a;
  double sum = 0.0, correct = 0.0;
  for (const auto& t : traces) {
    sum += static_cast<double>(t.tau);
    correct += t.correct ? 1.0 : 0.0;
  }
  a.mean_tau = sum / a.runs;
  a.correct_frac = correct / a.runs;
  if (a.runs > 1) {
    double ss = 0.0;
    for (const auto& t : traces) ss += (t.tau - a.mean_tau) * (t.tau - a.mean_tau);
    a.std_tau = std::sqrt(ss / (a.runs - 1));
  }
  return a;
}

void write_bsi_aggregate_csv(std::ostream& os, const std::vector<BsiAggregate>& rows) {
  os << "# " << kBsiAggregateSchema << "\n" << kBsiAggregateHeader << "\n";
  for (const auto& r : rows) {
    os << r.N << ',' << r.K << ',' << to_string(r.backend) << ',' << fmt_num(r.mean_tau) << ',' << fmt_num(r.std_tau)
       << ',' << fmt_num(r.correct_frac) << "\n";
  }
}

std::string design_summary_line(const FwReport& rep) {
  return std::string(to_string(rep.backend)) + ',' + std::to_string(rep.iterations) + ',' + fmt_num(rep.final_g) + ',' +
         (rep.backend == Backend::Lifted ? fmt_num(rep.eps_lift) : std::string("")) + ',' + fmt_num(rep.seconds);
}

std::vector<BenchSample> run_bench(const BenchOptions& opts) {
  struct Job {
    int N, K;
    Backend backend;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int N : opts.Ns)
    for (int K : opts.Ks)
      for (Backend b : opts.backends)
        for (int s = 0; s < opts.seeds; ++s) jobs.push_back({N, K, b, opts.seed0 + static_cast<uint64_t>(s)});
  std::vector<BenchSample> out(jobs.size());
  parallel_for(jobs.size(), opts.workers, [&](size_t j) {
    const Job& job = jobs[j];
    const Instance inst = gen_instance(job.N, job.K, opts.d, opts.B, job.seed);
    const Vec& theta0 = *inst.theta_star();
    const Design design = init_design(inst, theta0, job.seed);
    BenchSample smp{job.N, job.K, job.backend, job.seed, 0.0, 0.0, false};
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                             std::chrono::duration<double>(opts.timeout_s));
    const auto t0 = Clock::now();
    try {
      LmoResult r;
      if (job.backend == Backend::Brute) {
        BruteOptions bo;
        bo.budget = UINT64_MAX;
        bo.deadline = deadline;
        r = lmo_brute(inst, theta0, design.M, bo);
      } else if (job.backend == Backend::Milp) {
        MilpLmoOptions mo;
        mo.eps_lmo = opts.eps_lmo;
        mo.deadline = deadline;
        r = lmo_milp(inst, theta0, design.M, mo);
        if (r.stats.status == "deadline") smp.timed_out = true;
      } else {
        r = lmo_lifted(inst, theta0, design.Mt);
      }
      smp.value = trace_direct(inst, theta0, design.M, r.assortment);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BudgetExceeded) throw;
      smp.timed_out = true;
    }
    smp.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    out[j] = smp;
  });
  std::sort(out.begin(), out.end(), [](const BenchSample& a, const BenchSample& b) {
    return std::tuple(a.N, a.K, static_cast<int>(a.backend), a.seed) <
           std::tuple(b.N, b.K, static_cast<int>(b.backend), b.seed);
  });
  return out;
}

std::vector<BenchCell> summarize_bench(const std::vector<BenchSample>& samples) {
  std::map<std::tuple<int, int, int>, std::vector<const BenchSample*>> groups;
  for (const auto& s : samples) groups[{s.N, s.K, static_cast<int>(s.backend)}].push_back(&s);
  std::vector<BenchCell> cells;
  for (const auto& [key, v] : groups) {
    BenchCell c;
    c.N = std::get<0>(key);
    c.K = std::get<1>(key);
    c.backend = static_cast<Backend>(std::get<2>(key));
    c.binom = binomial(c.N, c.K);
    double sum = 0.0;
    for (const auto* s : v) {
      sum += s->seconds;
      c.timed_out = c.timed_out || s->timed_out;
    }
    c.mean_seconds = sum / v.size();
    if (v.size() > 1) {
      double ss = 0.0;
      for (const auto* s : v) ss += (s->seconds - c.mean_seconds) * (s->seconds - c.mean_seconds);
      c.std_seconds = std::sqrt(ss / (v.size() - 1));
    }
    cells.push_back(c);
  }
  return cells;
}

void write_bench_table_csv(std::ostream& os, const std::vector<BenchCell>& cells, const std::vector<Backend>& backends) {
  os << "# " << kBenchTableSchema << "\nN,K,binom";
  for (Backend b : backends) os << ',' << to_string(b) << "_mean," << to_string(b) << "_std";
  os << "\n";
  std::map<std::pair<int, int>, std::map<int, const BenchCell*>> rows;
  for (const auto& c : cells) rows[{c.N, c.K}][static_cast<int>(c.backend)] = &c;
  for (const auto& [nk, by_backend] : rows) {
    os << nk.first << ',' << nk.second << ',' << binomial(nk.first, nk.second);
    for (Backend b : backends) {
      auto it = by_backend.find(static_cast<int>(b));
      if (it == by_backend.end() || it->second->timed_out) {
        os << ",--,--";
      } else {
        os << ',' << fmt_num(it->second->mean_seconds) << ',' << fmt_num(it->second->std_seconds);
      }
    }
    os << "\n";
  }
}

void write_bench_raw_csv(std::ostream& os, const std::vector<BenchSample>& samples) {
  os << "# " << kBenchRawSchema << "\n" << kBenchRawHeader << "\n";
  for (const auto& s : samples) {
    os << s.N << ',' << s.K << ',' << to_string(s.backend) << ',' << s.seed << ',' << fmt_num(s.seconds) << ','
       << fmt_num(s.value) << ',' << (s.timed_out ? 1 : 0) << "\n";
  }
}

}  // namespace mnld
