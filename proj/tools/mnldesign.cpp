// mnldesign: instance generation, optimal designs, BSI runs, LMO benchmarks
// and the oracle suite, from the command line.

#include "mnldesign/check/oracles.hpp"
#include "mnldesign/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace mnld;

namespace {

struct InstanceArgs {
  std::string path;
  int n = 10;
  int k = 2;
  int d = 3;
  double b = 1.0;
  uint64_t seed = 1;
  double gap_shrink = 1.0;

  void add(CLI::App* app) {
    app->add_option("--instance", path, "instance JSON (otherwise generated from --n --k --d --b --seed)");
    app->add_option("--n", n, "number of arms")->check(CLI::PositiveNumber);
    app->add_option("--k", k, "capacity")->check(CLI::PositiveNumber);
    app->add_option("--d", d, "feature dimension")->check(CLI::PositiveNumber);
    app->add_option("--b", b, "parameter radius")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "instance seed");
    app->add_option("--gap-shrink", gap_shrink, "shrink the revenue gap by this factor (0,1]")->check(CLI::Range(1e-9, 1.0));
  }

  Instance load() const {
    Instance inst = path.empty() ? gen_instance(n, k, d, b, seed) : load_instance(path);
    if (gap_shrink < 1.0) inst = shrink_gap(inst, gap_shrink);
    return inst;
  }
};

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + p.string());
  f << text;
}

Vec read_theta(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Io, "cannot read " + path);
  const auto j = nlohmann::json::parse(f);
  const auto& arr = j.is_object() ? j.at("theta") : j;
  Vec t(static_cast<int>(arr.size()));
  for (size_t i = 0; i < arr.size(); ++i) t[static_cast<int>(i)] = arr[i].get<double>();
  return t;
}

Vec pick_theta0(const Instance& inst, const std::string& mode) {
  if (mode == "star") {
    if (!inst.theta_star()) throw Error(ErrorKind::DomainError, "--theta0 star needs an instance with theta_star");
    return *inst.theta_star();
  }
  if (mode == "zero") return Vec::Zero(inst.dim());
  Vec t = read_theta(mode);
  if (t.size() != inst.dim()) throw Error(ErrorKind::DomainError, "theta0 file has the wrong dimension");
  return t;
}

std::vector<Backend> parse_backends(const std::vector<std::string>& names) {
  std::vector<Backend> out;
  for (const auto& n : names) out.push_back(backend_from_string(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal experimental design and best-assortment identification for MNL bandits"};
  app.require_subcommand(1);
  bool deterministic = false;
  app.add_flag("--deterministic", deterministic, "disable wall-clock deadlines and timing fields")->configurable();

  // gen
  auto* gen = app.add_subcommand("gen", "generate a random outside-option instance");
  InstanceArgs gen_args;
  gen_args.add(gen);
  std::string gen_out = "instance.json";
  gen->add_option("--out", gen_out, "output JSON path");

  // design
  auto* design = app.add_subcommand("design", "Frank-Wolfe optimal design at theta0");
  InstanceArgs des_args;
  des_args.add(design);
  std::string des_backend = "brute", theta0_mode = "star", des_out = "design_out";
  double des_eps = 0.1, des_eps_lmo = 0.0;
  int des_iter_cap = 0;
  design->add_option("--backend", des_backend, "brute, milp or lifted")->check(CLI::IsMember({"brute", "milp", "lifted"}));
  design->add_option("--theta0", theta0_mode, "star, zero, or a JSON file with the parameter");
  design->add_option("--epsilon", des_eps, "FW tolerance");
  design->add_option("--eps-lmo", des_eps_lmo, "MILP absolute gap per LMO call");
  design->add_option("--iter-cap", des_iter_cap, "iteration cap (0 = theoretical)");
  design->add_option("--out", des_out, "output directory");

  // bsi
  auto* bsi = app.add_subcommand("bsi", "best-assortment identification over a list of seeds");
  InstanceArgs bsi_args;
  bsi_args.add(bsi);
  BsiConfig cfg;
  std::string bsi_backend = "brute", kappa_mode = "oracle", bsi_out = "bsi_out";
  int n_seeds = 10;
  uint64_t seed0 = 1;
  bsi->add_option("--seeds", n_seeds, "number of run seeds")->check(CLI::PositiveNumber);
  bsi->add_option("--seed0", seed0, "first run seed");
  bsi->add_option("--delta", cfg.delta, "confidence level")->check(CLI::Range(1e-12, 0.999999));
  bsi->add_option("--epsilon", cfg.eps, "FW tolerance");
  bsi->add_option("--eps-lmo", cfg.eps_lmo, "MILP absolute gap per LMO call");
  bsi->add_option("--backend", bsi_backend, "brute, milp or lifted")->check(CLI::IsMember({"brute", "milp", "lifted"}));
  bsi->add_option("--kappa-mode", kappa_mode, "oracle or bound")->check(CLI::IsMember({"oracle", "bound"}));
  bsi->add_option("--const-scale", cfg.const_scale, "scale on the theoretical constants")->check(CLI::PositiveNumber);
  bsi->add_option("--round-cap", cfg.round_cap, "cap on total rounds");
  bsi->add_option("--stop-every", cfg.stop_check_every, "rounds between stopping checks")->check(CLI::PositiveNumber);
  bsi->add_option("--out", bsi_out, "output directory");

  // bench-lmo
  auto* bench = app.add_subcommand("bench-lmo", "time one LMO call per grid cell, backend and seed");
  BenchOptions bo;
  std::vector<std::string> bench_backends{"milp", "lifted", "brute"};
  std::string bench_out = "bench_out";
  bench->add_option("--n", bo.Ns, "values of N");
  bench->add_option("--k", bo.Ks, "values of K");
  bench->add_option("--d", bo.d, "feature dimension");
  bench->add_option("--b", bo.B, "parameter radius");
  bench->add_option("--backend", bench_backends, "backends to time");
  bench->add_option("--seeds", bo.seeds, "seeds per cell")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bo.seed0, "first seed");
  bench->add_option("--eps-lmo", bo.eps_lmo, "MILP absolute gap");
  bench->add_option("--timeout", bo.timeout_s, "seconds per LMO call")->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_out, "output directory");

  // check
  auto* check = app.add_subcommand("check", "run the oracle suite");
  check::CheckOptions co;
  std::string check_out = "check_manifest.json";
  check->add_option("--seed", co.seed, "oracle seed");
  check->add_option("--filter", co.filter, "run only oracles whose name contains this");
  check->add_flag("--corrupt-bigm", co.corrupt_bigm, "negative control: shrink the MILP big-M constants");
  check->add_option("--out", check_out, "manifest path");
  bool list_only = false;
  check->add_flag("--list", list_only, "list oracles and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Instance inst = gen_args.load();
      write_file(gen_out, instance_to_json(inst));
      const TrueGap g = true_gap(inst);
      std::printf("wrote %s  S*=%s  delta_min=%s  kappa=%s\n", gen_out.c_str(), g.S_star.label().c_str(),
                  fmt_num(g.delta_min).c_str(), fmt_num(kappa(inst, *inst.theta_star())).c_str());
      return 0;
    }

    if (*design) {
      const Instance inst = des_args.load();
      const Vec theta0 = pick_theta0(inst, theta0_mode);
      FwOptions fo;
      fo.eps = des_eps;
      fo.backend = backend_from_string(des_backend);
      fo.eps_lmo = des_eps_lmo;
      fo.iter_cap = des_iter_cap;
      fo.seed = des_args.seed;
      if (fo.backend == Backend::Milp && !(fo.eps_lmo > 0.0) && !deterministic)
        std::fprintf(stderr, "note: --eps-lmo 0 asks the MILP for exact optimality\n");
      FwReport rep = frank_wolfe(inst, theta0, fo);
      if (deterministic) rep.seconds = 0.0;
      const fs::path dir(des_out);
      write_file(dir / "fw_report.json", fw_report_json(rep, inst));
      const std::string line = design_summary_line(rep);
      write_file(dir / "design_summary.csv", std::string(kDesignSummaryHeader) + "\n" + line + "\n");
      std::printf("%s\n%s\n", kDesignSummaryHeader, line.c_str());
      return rep.certified ? 0 : 3;
    }

    if (*bsi) {
      const Instance inst = bsi_args.load();
      cfg.backend = backend_from_string(bsi_backend);
      cfg.kappa_mode = kappa_mode_from_string(kappa_mode);
      cfg.record_rounds = true;
      std::vector<BsiTrace> traces(static_cast<size_t>(n_seeds));
      parallel_for(traces.size(), workers_from_env(), [&](size_t i) {
        BsiConfig c = cfg;
        c.seed = seed0 + i;
        Environment env(inst, c.seed);
        traces[i] = run_bsi(env, c);
        if (deterministic) traces[i].seconds = 0.0;
      });
      const fs::path dir(bsi_out);
      fs::create_directories(dir);
      for (size_t i = 0; i < traces.size(); ++i) {
        const uint64_t s = seed0 + i;
        std::ostringstream csv;
        write_bsi_trace_csv(csv, s, traces[i], true);
        write_file(dir / ("trace_seed" + std::to_string(s) + ".csv"), csv.str());
        write_file(dir / ("summary_seed" + std::to_string(s) + ".json"), bsi_summary_json(s, traces[i]) + "\n");
        std::printf("seed %llu: tau=%llu S_hat=%s correct=%d\n", static_cast<unsigned long long>(s),
                    static_cast<unsigned long long>(traces[i].tau), traces[i].S_hat.label().c_str(),
                    traces[i].correct ? 1 : 0);
      }
      std::ostringstream agg;
      write_bsi_aggregate_csv(agg, {aggregate_bsi(inst, cfg.backend, traces)});
      write_file(dir / "aggregate.csv", agg.str());
      std::fputs(agg.str().c_str(), stdout);
      return 0;
    }

    if (*bench) {
      bo.backends = parse_backends(bench_backends);
      bo.workers = workers_from_env();
      if (deterministic) bo.workers = 1;
      const auto samples = run_bench(bo);
      const fs::path dir(bench_out);
      std::ostringstream table, raw;
      write_bench_table_csv(table, summarize_bench(samples), bo.backends);
      write_bench_raw_csv(raw, samples);
      write_file(dir / "bench_lmo.csv", table.str());
      write_file(dir / "bench_lmo_raw.csv", raw.str());
      std::fputs(table.str().c_str(), stdout);
      return 0;
    }

    if (*check) {
      if (list_only) {
        for (const auto& o : check::registry()) std::printf("%-30s %s\n", o.name.c_str(), o.what.c_str());
        return 0;
      }
      int failed = 0;
      const auto results = check::run_oracles(co, [&](const check::OracleResult& r) {
        failed += r.pass ? 0 : 1;
        std::printf("%s %-30s %8.2fs  %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.detail.c_str());
        std::fflush(stdout);
      });
      write_file(check_out, check::manifest_json(results) + "\n");
      std::printf("%d of %zu oracles failed\n", failed, results.size());
      return failed == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
