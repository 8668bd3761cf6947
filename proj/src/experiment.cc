// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include <algorithm>
#include <thread>
#include <unordered_map>

#include "c5/bench.h"
#include "c5/c5_backup.h"

namespace c5 {

void ExperimentParams::validate() const {
  if (workers < 1) throw ConfigError("workers", "need at least one backup worker");
  if (primary_threads < 1) throw ConfigError("primary_threads", "need at least one primary thread");
  if (workers > primary_threads) {
    throw ConfigError("workers", "backup workers (" + std::to_string(workers) + ") may not exceed primary threads (" +
                                     std::to_string(primary_threads) + ")");
  }
  if (segment_size < 1) throw ConfigError("segment_size", "must be at least 1");
  if (rows_per_page < 1) throw ConfigError("rows_per_page", "must be at least 1");
  if (duration.count() <= 0) throw ConfigError("duration", "must be positive");
  if (snapshot_interval.count() <= 0) throw ConfigError("snapshot_interval", "must be positive");
  if (trim < 0 || trim >= 0.5) throw ConfigError("trim", "must be in [0, 0.5)");
  if (sim_e <= 0 || sim_d <= 0 || sim_d > sim_e) throw ConfigError("sim_d", "discrete costs need 0 < d <= e");
}

namespace {

std::int64_t ns_since(Clock::time_point start, Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(t - start).count();
}

// Log order of transactions and each one's last sequence number.
struct LogIndex {
  std::vector<TxnId> order;
  std::vector<Seq> last_seq;
  std::size_t writes = 0;
};

LogIndex index_log(std::span<const LogSegment> segments) {
  LogIndex idx;
  for (const LogSegment& s : segments) {
    for (const LogRecord& r : s.records) {
      ++idx.writes;
      if (r.last_in_txn) {
        idx.order.push_back(r.txn_id);
        idx.last_seq.push_back(r.seq);
      }
    }
  }
  return idx;
}

void summarize(RunReport& report, double unit_per_second, double trim) {
  std::int64_t span = 0;
  for (const LagSample& s : report.samples) span = std::max(span, s.f_p);
  report.window_begin = static_cast<std::int64_t>(static_cast<double>(span) * trim);
  report.window_end = static_cast<std::int64_t>(static_cast<double>(span) * (1.0 - trim));
  auto inside = [&](std::int64_t t) { return t >= report.window_begin && t <= report.window_end; };

  std::vector<double> lags;
  for (const LagSample& s : report.samples) {
    if (inside(s.f_p)) {
      ++report.primary_window_commits;
      if (s.f_b >= 0) {
        lags.push_back(static_cast<double>(s.lag()));
        report.max_window_lag = std::max(report.max_window_lag, s.lag());
      } else {
        report.max_window_lag = std::numeric_limits<std::int64_t>::max();
      }
    }
    if (s.f_b >= 0 && inside(s.f_b)) ++report.backup_window_commits;
  }
  report.lag = quartiles(std::move(lags));
  const double window = static_cast<double>(report.window_end - report.window_begin) / unit_per_second;
  if (window > 0) {
    report.primary_throughput = static_cast<double>(report.primary_window_commits) / window;
    report.backup_throughput = static_cast<double>(report.backup_window_commits) / window;
  }
  if (report.primary_window_commits > 0) {
    report.relative_throughput =
        static_cast<double>(report.backup_window_commits) / static_cast<double>(report.primary_window_commits);
  }
}

RunReport run_discrete(const WorkloadConfig& workload, const ExperimentParams& params) {
  RunReport report;
  report.protocol = std::string(to_string(params.protocol));
  report.workload = std::string(to_string(workload.kind));
  report.mode = "discrete";
  report.time_unit = "units";

  std::vector<TxnSpec> txns = gen_workload(workload);
  const SimParams sim{params.primary_threads, params.sim_e, params.sim_d};
  PrimaryResult primary = run_primary_discrete(txns, sim, params.segment_size);
  const PageMap pages{params.rows_per_page};
  const LagCurve curve = simulate_backup(primary.log, primary.f_p, params.protocol, params.workers, params.sim_d, pages);
  const LogIndex idx = index_log(primary.log);
  report.writes = idx.writes;
  report.txns = idx.order.size();
  for (const LagPoint& p : curve) {
    report.samples.push_back({static_cast<std::size_t>(p.i), idx.order[static_cast<std::size_t>(p.i)], p.f_p, p.f_b});
  }
  summarize(report, 1.0, params.trim);

  // The simulation has no state; check safety with a real replay of the log.
  Store store;
  BackupConfig config;
  config.protocol = params.protocol;
  config.workers = params.workers;
  config.pages = pages;
  replay(config, primary.log, store);
  const PrefixOracle oracle = PrefixOracle::from_segments(primary.log);
  report.final_diff_rows = check_final_convergence(store, oracle).size();
  report.primary_matches_log = diff_states(oracle.state_at(oracle.size()), primary.store->latest_state()).empty();
  return report;
}

RunReport run_real(const WorkloadConfig& workload, const ExperimentParams& params) {
  RunReport report;
  report.protocol = std::string(to_string(params.protocol));
  report.workload = std::string(to_string(workload.kind));
  report.mode = "real";

  OpCost primary_cost(params.primary_op_cost, OpCost::Mode::kSleep);
  OpCost backup_cost(params.backup_op_cost, OpCost::Mode::kSleep);
  WorkloadGenerator gen(workload);

  std::unique_ptr<TxnFeed> feed;
  std::vector<std::mt19937_64> thread_rngs;
  std::atomic<TxnId> next_id{1};
  const bool proof = workload.kind == WorkloadKind::kProofTxn || workload.kind == WorkloadKind::kProofPage;
  if (proof || workload.arrival_interval > 0) {
    std::vector<TxnSpec> txns = gen_workload(workload);
    if (proof) {
      // Arrivals are in units of e; map e onto the primary op cost.
      for (TxnSpec& t : txns) t.arrival = t.arrival * params.primary_op_cost.count() / workload.theorem.e;
    }
    feed = std::make_unique<ListFeed>(std::move(txns), /*paced=*/true);
  } else {
    for (std::size_t i = 0; i < params.primary_threads; ++i) {
      thread_rngs.emplace_back(workload.seed * 0x9E3779B97F4A7C15ull + i);
    }
    feed = std::make_unique<ClosedLoopFeed>(
        [&](std::size_t thread, std::uint64_t) { return gen.make(next_id.fetch_add(1), thread_rngs[thread]); },
        params.primary_threads, Clock::now() + params.duration);
  }

  LogStream stream;
  Store store;
  SnapshotCursor cursor;
  EngineOptions options;
  options.threads = params.primary_threads;
  options.cost = &primary_cost;
  options.segment_capacity = params.segment_size;
  options.streaming = true;
  PrimaryEngine engine(options, *feed, stream);

  BackupConfig config;
  config.protocol = params.protocol;
  config.workers = params.workers;
  config.snapshot_interval = params.snapshot_interval;
  config.pages = PageMap{params.rows_per_page};
  config.cost = &backup_cost;
  config.chaos = params.chaos;
  auto backup = make_backup(config, stream, store, cursor);

  std::vector<SessionLog> sessions;
  for (std::size_t i = 0; i < params.read_clients; ++i) sessions.emplace_back(static_cast<std::uint32_t>(i));
  std::atomic<bool> stop_readers{false};
  std::vector<std::thread> readers;

  backup->start();
  engine.start();
  for (std::size_t i = 0; i < params.read_clients; ++i) {
    readers.emplace_back([&, i] {
      tune_thread_for_timed_waits();
      if (params.background_readers) demote_to_background();
      std::mt19937_64 rng(workload.seed ^ (0xA5A5A5A5ull + i));
      while (!stop_readers.load(std::memory_order_relaxed)) {
        const std::vector<RowKey> keys = gen.read_keys(rng);
        ReadResult r = read_only_txn(store, cursor, keys);
        Observation o;
        o.c = r.c;
        o.at = Clock::now();
        for (std::size_t k = 0; k < keys.size(); ++k) o.reads.push_back({keys[k], std::move(r.values[k])});
        sessions[i].record(std::move(o));
        if (params.read_think_time.count() > 0) std::this_thread::sleep_for(params.read_think_time);
      }
    });
  }

  std::exception_ptr primary_error;
  try {
    engine.join();
  } catch (...) {
    primary_error = std::current_exception();
  }
  if (params.fast_drain) backup_cost.set(std::chrono::nanoseconds(0));
  const bool applied = !primary_error && backup->wait_applied(params.converge_timeout);
  if (!applied) {
    report.converged = false;
    report.diagnostics = backup->diagnostics();
    backup->abort();
  }
  stop_readers.store(true);
  for (auto& t : readers) t.join();
  try {
    backup->join();
  } catch (const std::exception& e) {
    report.converged = false;
    if (applied || report.diagnostics.empty()) report.diagnostics += std::string(" error: ") + e.what();
  }
  if (primary_error) std::rethrow_exception(primary_error);
  report.backup_stats = backup->stats();

  const std::vector<LogSegment> log = stream.copy_segments();
  const LogIndex idx = index_log(log);
  report.writes = idx.writes;
  report.txns = idx.order.size();

  const Clock::time_point start = engine.started_at();
  std::unordered_map<TxnId, std::int64_t> f_p;
  for (const CommitInfo& c : engine.commits()) f_p[c.txn] = ns_since(start, c.at);
  const auto& advances = backup->advances();
  for (std::size_t i = 0; i < idx.order.size(); ++i) {
    LagSample s;
    s.index = i;
    s.txn = idx.order[i];
    s.f_p = f_p.at(s.txn);
    auto it = std::lower_bound(advances.begin(), advances.end(), idx.last_seq[i],
                               [](const AdvanceRecord& a, Seq seq) { return a.c < seq; });
    if (it != advances.end()) s.f_b = ns_since(start, it->at);
    report.samples.push_back(s);
  }
  summarize(report, 1e9, params.trim);

  report.ticks = backup->ticks();
  for (const TickRecord& t : report.ticks) {
    const std::int64_t at = ns_since(start, t.at);
    if (at < report.window_begin || at > report.window_end) continue;
    ++report.window_ticks;
    if (t.c_after > t.c_before) ++report.window_ticks_advanced;
  }

  const PrefixOracle oracle = PrefixOracle::from_segments(log);
  report.mpc = check_sessions(sessions, oracle, params.run_id);
  report.final_diff_rows = check_final_convergence(store, oracle).size();
  report.primary_matches_log = diff_states(oracle.state_at(oracle.size()), engine.store().latest_state()).empty();
  return report;
}

}  // namespace

RunReport run_experiment(const WorkloadConfig& workload, const ExperimentParams& params) {
  workload.validate();
  params.validate();
  return params.mode == ExecMode::kDiscrete ? run_discrete(workload, params) : run_real(workload, params);
}

}  // namespace c5
