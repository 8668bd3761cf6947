// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// c5bench: drives the primary, the log and a backup replay protocol, and
// reports lag, throughput and consistency.
//
//   c5bench run --protocol c5-watermark --workload adversarial --inserts-per-txn 16
//   c5bench lag-curve --workload proof_txn --protocol txn-gran -L 100
//   c5bench dump-log --workload micro_orderentry --out orders.log
//   c5bench replay-log --in orders.log --protocol page-gran

#include <CLI11.hpp>

#include <cstring>
#include <iostream>

#include "c5/bench.h"

namespace {

using namespace c5;

struct Flags {
  std::string protocol = "c5-watermark";
  std::string workload = "insert_only";
  std::string mode = "real";
  std::size_t inserts_per_txn = 16;
  std::size_t hot_rows = 1;
  bool optimized = false;
  std::size_t workers = 4;
  std::size_t primary_threads = 4;
  double snapshot_interval_ms = 10;
  std::size_t segment_size = kDefaultSegmentCapacity;
  std::uint64_t rows_per_page = 64;
  double duration_s = 2;
  std::uint64_t seed = 1;
  std::size_t read_clients = 0;
  std::string csv_out;
  std::size_t txn_count = 1000;
  double arrival_interval_us = 0;
  double op_cost_us = 100;
  double backup_op_cost_us = 50;
  double read_think_us = 200;
  bool foreground_readers = false;
  bool chaos = false;
  double timeout_s = 60;
  TheoremParams theorem;
};

std::chrono::nanoseconds us(double v) { return std::chrono::nanoseconds(static_cast<std::int64_t>(v * 1e3)); }

void add_workload_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--workload", f.workload, "insert_only|adversarial|micro_orderentry|proof_txn|proof_page")
      ->capture_default_str();
  cmd->add_option("--inserts-per-txn", f.inserts_per_txn, "unique inserts per transaction")->capture_default_str();
  cmd->add_option("--hot-rows", f.hot_rows, "hot rows (adversarial) or districts (order entry)")
      ->capture_default_str();
  cmd->add_flag("--optimized", f.optimized, "order entry: defer contended writes to the end");
  cmd->add_option("--txn-count", f.txn_count, "transactions for open-loop and discrete runs")->capture_default_str();
  cmd->add_option("--arrival-interval-us", f.arrival_interval_us,
                  "open-loop arrival spacing (time units in discrete mode); 0 = closed loop")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed)->capture_default_str();
  cmd->add_option("-m", f.theorem.m, "proof workloads: primary cores")->capture_default_str();
  cmd->add_option("-e", f.theorem.e, "proof workloads: primary op cost")->capture_default_str();
  cmd->add_option("-d", f.theorem.d, "proof workloads: backup op cost")->capture_default_str();
  cmd->add_option("-n", f.theorem.n, "proof workloads: writes per transaction")->capture_default_str();
  cmd->add_option("-L", f.theorem.L, "proof workloads: lag to exceed")->capture_default_str();
  cmd->add_option("--hot-page-size", f.theorem.hot_page_size, "page proof workload: rows on the hot page")
      ->capture_default_str();
}

WorkloadConfig workload_config(const Flags& f) {
  WorkloadConfig w;
  w.kind = parse_workload(f.workload);
  w.inserts_per_txn = f.inserts_per_txn;
  w.hot_rows = f.hot_rows;
  w.optimized = f.optimized;
  w.txn_count = f.txn_count;
  w.seed = f.seed;
  w.theorem = f.theorem;
  const bool discrete = parse_mode(f.mode) == ExecMode::kDiscrete;
  w.arrival_interval = discrete ? static_cast<std::int64_t>(f.arrival_interval_us)
                                : static_cast<std::int64_t>(f.arrival_interval_us * 1e3);
  return w;
}

ExperimentParams experiment_params(const Flags& f) {
  ExperimentParams p;
  p.protocol = parse_protocol(f.protocol);
  p.mode = parse_mode(f.mode);
  p.workers = f.workers;
  p.primary_threads = f.primary_threads;
  p.duration = std::chrono::milliseconds(static_cast<std::int64_t>(f.duration_s * 1e3));
  p.snapshot_interval = std::chrono::microseconds(static_cast<std::int64_t>(f.snapshot_interval_ms * 1e3));
  p.segment_size = f.segment_size;
  p.rows_per_page = f.rows_per_page;
  p.read_clients = f.read_clients;
  p.read_think_time = std::chrono::duration_cast<std::chrono::microseconds>(us(f.read_think_us));
  p.background_readers = !f.foreground_readers;
  p.primary_op_cost = us(f.op_cost_us);
  p.backup_op_cost = us(f.backup_op_cost_us);
  p.sim_e = f.theorem.e;
  p.sim_d = f.theorem.d;
  p.converge_timeout = std::chrono::milliseconds(static_cast<std::int64_t>(f.timeout_s * 1e3));
  p.chaos = f.chaos;
  return p;
}

// Turns "key=value" lines of a config file into "--key=value" arguments
// placed ahead of the command line, so explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args;
  std::vector<std::string> config_args;
  for (int i = 0; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) {
      for (const auto& [k, v] : load_config_file(argv[++i])) {
        std::string flag = k;
        std::replace(flag.begin(), flag.end(), '_', '-');
        config_args.push_back((flag.size() == 1 ? "-" : "--") + flag + "=" + v);
      }
    } else if (a.rfind("--config=", 0) == 0) {
      for (const auto& [k, v] : load_config_file(a.substr(9))) {
        std::string flag = k;
        std::replace(flag.begin(), flag.end(), '_', '-');
        config_args.push_back((flag.size() == 1 ? "-" : "--") + flag + "=" + v);
      }
    } else {
      args.push_back(std::move(a));
    }
  }
  if (!config_args.empty() && args.size() >= 2) {
    args.insert(args.begin() + 2, config_args.begin(), config_args.end());
  }
  return args;
}

int cmd_run(const Flags& f) {
  const WorkloadConfig w = workload_config(f);
  ExperimentParams p = experiment_params(f);
  p.run_id = f.protocol + "-" + f.workload + "-" + std::to_string(f.seed);
  const RunReport report = run_experiment(w, p);
  emit_summary(report, std::cout);
  if (!f.csv_out.empty()) emit_csv(report, f.csv_out);
  return report.safe() ? 0 : 2;
}

int cmd_lag_curve(const Flags& f, const std::string& source, std::int64_t count) {
  const WorkloadKind kind = parse_workload(f.workload);
  if (kind != WorkloadKind::kProofTxn && kind != WorkloadKind::kProofPage) {
    throw ConfigError("workload", "lag-curve needs proof_txn or proof_page");
  }
  const Protocol protocol = parse_protocol(f.protocol);
  const TheoremParams& t = f.theorem;
  LagCurve curve;
  if (source == "closed-form") {
    if (kind == WorkloadKind::kProofTxn) {
      curve = txn_granularity_curve(t, count);
    } else {
      curve = page_granularity_curve(t, count);
    }
  } else {
    const std::vector<TxnSpec> txns =
        kind == WorkloadKind::kProofTxn ? proof_txn_workload(t, count) : proof_page_workload(t, count);
    curve = simulate_end_to_end(txns, t.sim(), protocol, f.workers, PageMap{f.rows_per_page});
  }
  std::cout << "i,f_p,f_b,lag\n";
  for (const LagPoint& p : curve) std::cout << p.i << ',' << p.f_p << ',' << p.f_b << ',' << p.lag << '\n';
  const ExactSlope s = fitted_slope(curve);
  std::cerr << "slope " << s.value() << "\n";
  return 0;
}

int cmd_dump_log(const Flags& f, const std::string& out) {
  const WorkloadConfig w = workload_config(f);
  const std::vector<TxnSpec> txns = gen_workload(w);
  const SimParams sim{f.primary_threads, f.theorem.e, f.theorem.d};
  PrimaryResult r;
  if (parse_mode(f.mode) == ExecMode::kDiscrete) {
    r = run_primary_discrete(txns, sim, f.segment_size);
  } else {
    OpCost cost(us(f.op_cost_us), OpCost::Mode::kSleep);
    r = run_primary_real(txns, f.primary_threads, cost, f.segment_size);
  }
  dump_log(out, r.log);
  std::size_t records = 0;
  for (const LogSegment& s : r.log) records += s.records.size();
  std::cout << "wrote " << r.log.size() << " segments, " << records << " records to " << out << "\n";
  return 0;
}

int cmd_replay_log(const Flags& f, const std::string& in) {
  const std::vector<LogSegment> log = load_log(in);
  BackupConfig config;
  config.protocol = parse_protocol(f.protocol);
  config.workers = f.workers;
  config.pages = PageMap{f.rows_per_page};
  Store store;
  const auto start = Clock::now();
  replay(config, log, store);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  const PrefixOracle oracle = PrefixOracle::from_segments(log);
  const std::vector<RowDiff> diff = check_final_convergence(store, oracle);
  std::cout << "protocol " << f.protocol << ": replayed " << oracle.size() << " records in " << secs << " s\n";
  std::cout << "final state: " << (diff.empty() ? "converged" : "DIVERGED") << " (" << diff.size()
            << " rows differ)\n";
  return diff.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"C5 replication benchmark"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Flags f;

  CLI::App* run = app.add_subcommand("run", "run an end-to-end experiment and print a summary");
  add_workload_flags(run, f);
  run->add_option("--protocol", f.protocol, "c5-watermark|c5-txnchain|single|txn-gran|page-gran")
      ->capture_default_str();
  run->add_option("--mode", f.mode, "real|discrete")->capture_default_str();
  run->add_option("--workers", f.workers, "backup workers")->capture_default_str();
  run->add_option("--primary-threads", f.primary_threads, "primary threads (cores in discrete mode)")
      ->capture_default_str();
  run->add_option("--snapshot-interval-ms", f.snapshot_interval_ms, "blocking snapshot interval")
      ->capture_default_str();
  run->add_option("--segment-size", f.segment_size, "records per log segment")->capture_default_str();
  run->add_option("--rows-per-page", f.rows_per_page)->capture_default_str();
  run->add_option("--duration", f.duration_s, "closed-loop run length, seconds")->capture_default_str();
  run->add_option("--read-clients", f.read_clients, "read-only sessions")->capture_default_str();
  run->add_option("--read-think-us", f.read_think_us, "pause between reads")->capture_default_str();
  run->add_flag("--foreground-readers", f.foreground_readers, "run readers at normal priority");
  run->add_option("--csv-out", f.csv_out, "per-transaction lag CSV");
  run->add_option("--op-cost-us", f.op_cost_us, "primary cost per write")->capture_default_str();
  run->add_option("--backup-op-cost-us", f.backup_op_cost_us, "backup cost per write")->capture_default_str();
  run->add_option("--timeout", f.timeout_s, "seconds to wait for the backup to drain")->capture_default_str();
  run->add_flag("--chaos", f.chaos, "expose snapshots before they are complete (checker test)");

  std::string source = "simulate";
  std::int64_t count = 0;
  CLI::App* lag = app.add_subcommand("lag-curve", "print the lag curve of a proof workload as CSV");
  add_workload_flags(lag, f);
  lag->add_option("--protocol", f.protocol)->capture_default_str();
  lag->add_option("--workers", f.workers)->capture_default_str();
  lag->add_option("--rows-per-page", f.rows_per_page)->capture_default_str();
  lag->add_option("--source", source, "closed-form|simulate")
      ->check(CLI::IsMember({"closed-form", "simulate"}))
      ->capture_default_str();
  lag->add_option("--count", count, "transactions (0 = enough to exceed L)")->capture_default_str();

  std::string log_path;
  CLI::App* dump = app.add_subcommand("dump-log", "run a workload on the primary and write its log");
  add_workload_flags(dump, f);
  dump->add_option("--mode", f.mode)->capture_default_str();
  dump->add_option("--primary-threads", f.primary_threads)->capture_default_str();
  dump->add_option("--segment-size", f.segment_size)->capture_default_str();
  dump->add_option("--op-cost-us", f.op_cost_us)->capture_default_str();
  dump->add_option("--out", log_path)->required();

  CLI::App* replay_cmd = app.add_subcommand("replay-log", "replay a log file and check the final state");
  replay_cmd->add_option("--in", log_path)->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--protocol", f.protocol)->capture_default_str();
  replay_cmd->add_option("--workers", f.workers)->capture_default_str();
  replay_cmd->add_option("--rows-per-page", f.rows_per_page)->capture_default_str();

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::vector<char*> ptrs;
    for (auto& a : args) ptrs.push_back(a.data());
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*run) return cmd_run(f);
    if (*lag) return cmd_lag_curve(f, source, count);
    if (*dump) return cmd_dump_log(f, log_path);
    if (*replay_cmd) return cmd_replay_log(f, log_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
