#pragma once

#include "mnldesign/bsi.hpp"
#include "mnldesign/design_fw.hpp"

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace mnld {

// Every CSV starts with a "# <schema> v<version>" line. Columns never change
// order within a version.
inline constexpr const char* kBsiTraceSchema = "mnldesign.bsi_trace v1";
inline constexpr const char* kBsiTraceHeader = "seed,phase,round,assortment,choice,max_width,R_pess,R_opt_alt,stopped";
inline constexpr const char* kBsiAggregateSchema = "mnldesign.bsi_aggregate v1";
inline constexpr const char* kBsiAggregateHeader = "N,K,backend,mean_tau,std_tau,correct_frac";
inline constexpr const char* kBenchTableSchema = "mnldesign.bench_lmo v1";
inline constexpr const char* kBenchRawSchema = "mnldesign.bench_lmo_raw v1";
inline constexpr const char* kBenchRawHeader = "N,K,backend,seed,seconds,value,timed_out";
inline constexpr const char* kDesignSummaryHeader = "backend,iters,g_cert,eps_lift,seconds";

/// MNLDESIGN_WORKERS if set and positive, else the hardware concurrency.
int workers_from_env();

/// Runs fn(0..n-1) on up to `workers` threads. The first exception (by index)
/// is rethrown after all workers finish.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn);

/// Shortest round-trip decimal form of a double ("nan", "inf" spelled out).
std::string fmt_num(double v);

void write_bsi_trace_csv(std::ostream& os, uint64_t seed, const BsiTrace& tr, bool header);
std::string bsi_summary_json(uint64_t seed, const BsiTrace& tr);

struct BsiAggregate {
  int N = 0;
  int K = 0;
  Backend backend = Backend::Brute;
  double mean_tau = 0.0;
  double std_tau = 0.0;  // sample standard deviation (n-1)
  double correct_frac = 0.0;
  int runs = 0;
};

BsiAggregate aggregate_bsi(const Instance& inst, Backend backend, const std::vector<BsiTrace>& traces);
void write_bsi_aggregate_csv(std::ostream& os, const std::vector<BsiAggregate>& rows);

/// "backend,iters,g_cert,eps_lift,seconds" values for one FW report.
std::string design_summary_line(const FwReport& rep);

struct BenchOptions {
  std::vector<int> Ns{30, 50};
  std::vector<int> Ks{3, 4};
  std::vector<Backend> backends{Backend::Milp, Backend::Lifted, Backend::Brute};
  int seeds = 10;
  uint64_t seed0 = 1;
  int d = 5;
  double B = 1.0;
  double eps_lmo = 0.1;
  double timeout_s = 120.0;
  int workers = 1;
};

struct BenchSample {
  int N = 0;
  int K = 0;
  Backend backend = Backend::Brute;
  uint64_t seed = 0;
  double seconds = 0.0;
  double value = 0.0;
  bool timed_out = false;
};

struct BenchCell {
  int N = 0;
  int K = 0;
  uint64_t binom = 0;
  Backend backend = Backend::Brute;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
  bool timed_out = false;  // any seed hit the timeout
};

/// Times one LMO call per (cell, backend, seed) on a fresh design from
/// init_design at theta*. Samples come back sorted by (N, K, backend, seed).
std::vector<BenchSample> run_bench(const BenchOptions& opts);
std::vector<BenchCell> summarize_bench(const std::vector<BenchSample>& samples);

/// Table-shaped CSV: N,K,binom then mean and std seconds per backend, with
/// "--" for cells that timed out.
void write_bench_table_csv(std::ostream& os, const std::vector<BenchCell>& cells, const std::vector<Backend>& backends);
void write_bench_raw_csv(std::ostream& os, const std::vector<BenchSample>& samples);

}  // namespace mnld
