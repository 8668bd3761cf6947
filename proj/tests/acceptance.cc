// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.
//
//   acceptance            # all criteria
//   acceptance --only 1 2 # a subset

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "c5/baselines.h"
#include "c5/bench.h"
#include "oracle.h"

using namespace c5;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Seconds = std::chrono::duration<double>;

double elapsed(Clock::time_point start) { return Seconds(Clock::now() - start).count(); }

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

// --- 1. closed forms vs. the discrete-event simulator ----------------------

Outcome theorem_reproduction() {
  const auto start = Clock::now();
  Outcome out;
  const TheoremParams p;  // n=3, e=2, d=1, m=4
  const std::int64_t count = 10'001;  // i in [0, 10^4]

  const LagCurve txn_closed = txn_granularity_curve(p, count);
  const LagCurve txn_sim = simulate_end_to_end(proof_txn_workload(p, count), p.sim(), Protocol::kTxnGranularity, 4);
  if (txn_sim != txn_closed) fail(out, "txn-granularity simulation differs from the closed form");
  const auto txn_ref = oracle::txn_curve(p.n, p.e, p.d, count);
  for (std::int64_t i = 0; i < count; ++i) {
    const LagPoint& pt = txn_closed[static_cast<std::size_t>(i)];
    if (pt.lag != i * (p.n * p.d - p.e) + p.n * p.d || pt.f_p != txn_ref[static_cast<std::size_t>(i)].first ||
        pt.f_b != txn_ref[static_cast<std::size_t>(i)].second) {
      fail(out, "txn-granularity lag(" + std::to_string(i) + ") != i(nd-e)+nd");
      break;
    }
  }

  const LagCurve page_closed = page_granularity_curve(p, count);
  const LagCurve page_sim =
      simulate_end_to_end(proof_page_workload(p, count), p.sim(), Protocol::kPageGranularity, 4, PageMap{64});
  if (page_sim != page_closed) fail(out, "page-granularity simulation differs from the closed form");
  const std::int64_t width = page_batch_width(p);
  const auto page_ref = oracle::page_curve(width, p.e, p.d, count);
  for (std::int64_t i = 0; i < count; ++i) {
    const LagPoint& pt = page_closed[static_cast<std::size_t>(i)];
    const Fraction lb = page_lag_lower_bound(p, i);
    if (pt.f_p != page_ref[static_cast<std::size_t>(i)].first || pt.f_b != page_ref[static_cast<std::size_t>(i)].second ||
        pt.lag * lb.den < lb.num) {
      fail(out, "page-granularity point " + std::to_string(i) + " off the reference or under i(nd-e)/n");
      break;
    }
  }

  std::mt19937_64 rng(2026);
  std::vector<std::int64_t> Ls{0, 1, 2, 99, 1000, 4321};
  for (int k = 0; k < 20; ++k) Ls.push_back(static_cast<std::int64_t>(rng() % 20000));
  for (std::int64_t L : Ls) {
    TheoremParams q = p;
    q.L = L;
    const LagCurve t = simulate_end_to_end(proof_txn_workload(q), q.sim(), Protocol::kTxnGranularity, 4);
    const LagCurve g =
        simulate_end_to_end(proof_page_workload(q), q.sim(), Protocol::kPageGranularity, 4, PageMap{64});
    if (t.back().lag <= L || txn_granularity_curve(q).back().lag <= L)
      fail(out, "txn-granularity final lag does not exceed L=" + std::to_string(L));
    if (g.back().lag <= L || page_granularity_curve(q).back().lag <= L)
      fail(out, "page-granularity final lag does not exceed L=" + std::to_string(L));
  }

  const double secs = elapsed(start);
  if (secs >= 5) fail(out, "took " + std::to_string(secs) + " s");
  if (out.pass) {
    std::ostringstream s;
    s << "txn and page curves exact for i in [0, 10^4]; lag(10^4)=" << txn_closed.back().lag
      << "; final lag > L for " << Ls.size() << " values of L; " << secs << " s";
    out.detail = s.str();
  }
  return out;
}

// --- 2. flat lag for row granularity ----------------------------------------

Outcome flat_lag() {
  const auto start = Clock::now();
  Outcome out;
  std::ostringstream s;
  for (const TheoremParams& p : {TheoremParams{}, TheoremParams{8, 3, 2, 4, 200, 64}, TheoremParams{6, 4, 1, 5, 200, 64}}) {
    const std::int64_t count = 3000;
    const auto txn_work = proof_txn_workload(p, count);
    const auto page_work = proof_page_workload(p, count);
    for (std::size_t workers : {static_cast<std::size_t>(p.m), static_cast<std::size_t>(2 * p.m)}) {
      for (Protocol c5 : {Protocol::kC5Watermark, Protocol::kC5TxnChain}) {
        const ExactSlope a = fitted_slope(simulate_end_to_end(txn_work, p.sim(), c5, workers));
        const ExactSlope b = fitted_slope(simulate_end_to_end(page_work, p.sim(), c5, workers, PageMap{64}));
        if (!a.is_zero() || !b.is_zero()) {
          fail(out, std::string(to_string(c5)) + " slope " + std::to_string(a.value()) + "/" +
                        std::to_string(b.value()) + " with W=" + std::to_string(workers));
        }
      }
      const ExactSlope t = fitted_slope(simulate_end_to_end(txn_work, p.sim(), Protocol::kTxnGranularity, workers));
      if (!t.equals(p.n * p.d - p.e, 1)) fail(out, "txn-granularity slope " + std::to_string(t.value()));
      const std::int64_t n = page_batch_width(p);
      const ExactSlope g = fitted_slope(
          simulate_end_to_end(page_work, p.sim(), Protocol::kPageGranularity, workers, PageMap{64}));
      if (!g.at_least(n * p.d - p.e, n)) fail(out, "page-granularity slope " + std::to_string(g.value()));
      if (workers == static_cast<std::size_t>(p.m)) {
        s << "(m=" << p.m << ",e=" << p.e << ",d=" << p.d << ",n=" << p.n << ") txn slope " << t.value()
          << ", page slope " << g.value() << " >= " << static_cast<double>(n * p.d - p.e) / static_cast<double>(n)
          << "; ";
      }
    }
  }
  const double secs = elapsed(start);
  if (secs >= 5) fail(out, "took " + std::to_string(secs) + " s");
  if (out.pass) out.detail = "C5 slopes exactly 0 for W in {m, 2m}; " + s.str() + std::to_string(secs) + " s";
  return out;
}

// --- 3. randomized safety suite ----------------------------------------------

Outcome safety_suite() {
  const auto start = Clock::now();
  Outcome out;
  std::mt19937_64 rng(31337);
  std::size_t replays = 0;
  for (int i = 0; i < 1000 && out.pass; ++i) {
    oracle::RandomLogSpec spec;
    spec.max_txns = 64;
    spec.max_writes = 8;
    // Contention from a single hot row to nearly disjoint writes.
    static constexpr std::size_t kPools[] = {1, 2, 4, 8, 32, 128, 1024};
    spec.rows = kPools[rng() % std::size(kPools)];
    spec.tables = 1 + rng() % 3;
    spec.segment_capacity = 1 + rng() % 32;
    const auto log = oracle::random_log(rng, spec);
    const auto want_map = oracle::replay(oracle::records_of(log));
    const StateMap want(want_map.begin(), want_map.end());
    const PrefixOracle prefix = PrefixOracle::from_segments(log);

    StateMap c5_states[2];
    for (Protocol p : kAllProtocols) {
      BackupConfig config;
      config.protocol = p;
      config.workers = 1 + rng() % 8;
      config.pages = PageMap{1 + rng() % 16};
      config.snapshot_interval = std::chrono::microseconds(500);
      Store store;
      try {
        replay(config, log, store);
      } catch (const std::exception& e) {
        fail(out, "log " + std::to_string(i) + " " + std::string(to_string(p)) + ": " + e.what());
        break;
      }
      ++replays;
      if (!check_final_convergence(store, prefix).empty() || store.latest_state() != want) {
        fail(out, "log " + std::to_string(i) + " " + std::string(to_string(p)) + " diverged from the serial oracle");
      }
      if (p == Protocol::kC5Watermark) c5_states[0] = store.latest_state();
      if (p == Protocol::kC5TxnChain) c5_states[1] = store.latest_state();
    }
    if (c5_states[0] != c5_states[1]) fail(out, "log " + std::to_string(i) + ": C5 variants disagree");
  }
  const double secs = elapsed(start);
  if (secs >= 120) fail(out, "took " + std::to_string(secs) + " s");
  if (out.pass) out.detail = std::to_string(replays) + " threaded replays converged; " + std::to_string(secs) + " s";
  return out;
}

// --- 4. MPC under concurrent reads -------------------------------------------

RunReport mpc_run(Protocol protocol, std::uint64_t seed, bool chaos) {
  WorkloadConfig w;
  w.kind = WorkloadKind::kAdversarial;
  w.inserts_per_txn = 16;
  w.hot_rows = 4;
  w.seed = seed;
  ExperimentParams p;
  p.protocol = protocol;
  p.workers = 8;
  p.primary_threads = 8;
  p.duration = std::chrono::milliseconds(1000);
  p.read_clients = 16;
  p.background_readers = false;
  p.read_think_time = std::chrono::microseconds(1000);
  p.snapshot_interval = std::chrono::milliseconds(2);
  p.chaos = chaos;
  p.run_id = std::string(chaos ? "chaos-" : "") + std::string(to_string(protocol)) + "-" + std::to_string(seed);
  return run_experiment(w, p);
}

Outcome mpc_suite() {
  const auto start = Clock::now();
  Outcome out;
  std::size_t min_writes = SIZE_MAX;
  std::size_t observations = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Protocol proto = seed % 2 == 1 ? Protocol::kC5Watermark : Protocol::kC5TxnChain;
    const RunReport r = mpc_run(proto, seed, false);
    min_writes = std::min(min_writes, r.writes);
    observations += r.mpc.observations;
    if (!r.mpc.pass()) {
      fail(out, "seed " + std::to_string(seed) + ": " + (r.mpc.lines.empty() ? "" : r.mpc.lines.front()));
    }
    if (!r.safe()) fail(out, "seed " + std::to_string(seed) + " unsafe: " + r.diagnostics);
  }
  if (min_writes < 100'000) fail(out, "a run logged only " + std::to_string(min_writes) + " writes");

  std::size_t caught = 0;
  const std::size_t chaos_runs = 10;
  for (std::uint64_t seed = 101; seed < 101 + chaos_runs; ++seed) {
    const Protocol proto = seed % 2 == 1 ? Protocol::kC5Watermark : Protocol::kC5TxnChain;
    const RunReport r = mpc_run(proto, seed, true);
    if (r.mpc.state_violations + r.mpc.monotonic_violations > 0) ++caught;
  }
  if (caught * 10 < chaos_runs * 9) {
    fail(out, "chaos caught in only " + std::to_string(caught) + "/" + std::to_string(chaos_runs) + " runs");
  }
  const double secs = elapsed(start);
  if (secs >= 300) fail(out, "took " + std::to_string(secs) + " s");
  if (out.pass) {
    std::ostringstream s;
    s << "20 seeds, 0 violations over " << observations << " reads (>= " << min_writes
      << " writes per run); chaos caught in " << caught << "/" << chaos_runs << "; " << secs << " s";
    out.detail = s.str();
  }
  return out;
}

// --- 5. adversarial throughput trend ------------------------------------------

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

Outcome adversarial_trend() {
  const auto start = Clock::now();
  Outcome out;
  const std::vector<std::size_t> ks{1, 4, 8, 16, 64};
  std::ostringstream s;
  std::vector<double> txn_medians;
  for (Protocol proto : {Protocol::kC5Watermark, Protocol::kTxnGranularity}) {
    s << to_string(proto) << " [";
    for (std::size_t k : ks) {
      std::vector<double> ratios;
      for (std::uint64_t run = 0; run < 5; ++run) {
        WorkloadConfig w;
        w.kind = WorkloadKind::kAdversarial;
        w.inserts_per_txn = k;
        w.seed = 1 + run;
        ExperimentParams p;
        p.protocol = proto;
        p.primary_threads = 64;
        p.workers = 64;
        p.duration = std::chrono::milliseconds(3000);
        p.primary_op_cost = std::chrono::microseconds(4000);
        p.backup_op_cost = std::chrono::microseconds(2000);
        const RunReport r = run_experiment(w, p);
        if (!r.safe()) fail(out, std::string(to_string(proto)) + " k=" + std::to_string(k) + " unsafe");
        ratios.push_back(r.relative_throughput);
      }
      const double m = median(ratios);
      s << (k == ks.front() ? "" : " ") << m;
      if (proto == Protocol::kC5Watermark && m < 0.95) {
        fail(out, "C5 relative throughput " + std::to_string(m) + " at k=" + std::to_string(k));
      }
      if (proto == Protocol::kTxnGranularity) txn_medians.push_back(m);
    }
    s << "] ";
  }
  for (std::size_t i = 1; i < txn_medians.size(); ++i) {
    if (txn_medians[i] > txn_medians[i - 1]) fail(out, "txn-granularity not monotone at k=" + std::to_string(ks[i]));
  }
  if (txn_medians.back() >= 0.6) fail(out, "txn-granularity at k=64 is " + std::to_string(txn_medians.back()));
  const double secs = elapsed(start);
  if (secs >= 600) fail(out, "took " + std::to_string(secs) + " s");
  std::cerr << "  relative throughput medians over k=1,4,8,16,64: " << s.str() << "\n";
  if (out.pass) out.detail = s.str() + std::to_string(secs) + " s";
  return out;
}

// --- 6. blocking snapshots stay bounded ---------------------------------------

Outcome blocking_bounded() {
  const auto start = Clock::now();
  Outcome out;
  const auto interval = std::chrono::milliseconds(10);
  const std::int64_t ceiling = 50 * std::chrono::nanoseconds(interval).count();
  std::ostringstream s;
  for (std::size_t readers : {0u, 4u, 16u}) {
    WorkloadConfig w;
    w.kind = WorkloadKind::kInsertOnly;
    w.inserts_per_txn = 16;
    ExperimentParams p;
    p.protocol = Protocol::kC5TxnChain;
    p.primary_threads = 8;
    p.workers = 8;
    p.duration = std::chrono::milliseconds(4000);
    p.snapshot_interval = interval;
    p.primary_op_cost = std::chrono::microseconds(500);
    p.backup_op_cost = std::chrono::microseconds(250);
    p.read_clients = readers;
    const RunReport r = run_experiment(w, p);
    const std::string tag = std::to_string(readers) + " readers: ";
    if (!r.safe()) fail(out, tag + "unsafe " + r.diagnostics);
    if (r.max_window_lag > ceiling) fail(out, tag + "max lag " + std::to_string(r.max_window_lag) + " ns");
    if (r.window_ticks == 0 || r.window_ticks_advanced != r.window_ticks) {
      fail(out, tag + std::to_string(r.window_ticks_advanced) + "/" + std::to_string(r.window_ticks) +
                    " ticks advanced");
    }
    s << readers << " readers: median " << r.lag.median / 1e6 << " ms, max " << r.max_window_lag / 1e6 << " ms, "
      << r.window_ticks_advanced << "/" << r.window_ticks << " ticks; ";
  }
  const double secs = elapsed(start);
  if (secs >= 300) fail(out, "took " + std::to_string(secs) + " s");
  if (out.pass) out.detail = s.str() + "ceiling " + std::to_string(ceiling / 1'000'000) + " ms; " + std::to_string(secs) + " s";
  return out;
}

// --- 7. constraint subsumption ------------------------------------------------

// Calls fn(log) for every log of `records` writes over `rows` rows of one
// table, for every split into consecutive transactions.
void for_each_small_log(std::size_t records, std::size_t rows, const std::function<void(const std::vector<LogRecord>&)>& fn) {
  std::size_t row_choices = 1;
  for (std::size_t i = 0; i < records; ++i) row_choices *= rows;
  for (std::size_t splits = 0; splits < (std::size_t{1} << (records - 1)); ++splits) {
    for (std::size_t choice = 0; choice < row_choices; ++choice) {
      std::vector<LogRecord> log(records);
      std::size_t c = choice;
      TxnId txn = 1;
      for (std::size_t i = 0; i < records; ++i) {
        log[i].seq = i + 1;
        log[i].txn_id = txn;
        log[i].row_id = c % rows;
        c /= rows;
        const bool ends = i + 1 == records || ((splits >> i) & 1);
        log[i].last_in_txn = ends;
        if (ends) ++txn;
      }
      fn(log);
    }
  }
}

struct SubsumptionCount {
  std::size_t logs = 0;
  std::size_t orders = 0;
  std::size_t violations = 0;
};

void check_subsumption(const std::vector<LogRecord>& log, SubsumptionCount& count) {
  const PageMap pages{2};
  const auto row = OrderingConstraints::build(Protocol::kC5Watermark, log, pages);
  const auto txn = OrderingConstraints::build(Protocol::kTxnGranularity, log, pages);
  const auto page = OrderingConstraints::build(Protocol::kPageGranularity, log, pages);
  std::vector<std::size_t> order(log.size());
  std::iota(order.begin(), order.end(), 0);
  ++count.logs;
  do {
    ++count.orders;
    const bool r = row.permits(order);
    if ((txn.permits(order) && !r) || (page.permits(order) && !r)) ++count.violations;
    if (r != oracle::row_permits(log, order)) ++count.violations;
  } while (std::next_permutation(order.begin(), order.end()));
}

Outcome constraint_subsumption() {
  const auto start = Clock::now();
  Outcome out;
  SubsumptionCount count;
  // Exhaustive: every log of up to 5 records over 3 rows.
  for (std::size_t records = 1; records <= 5; ++records) {
    for_each_small_log(records, 3, [&](const std::vector<LogRecord>& log) { check_subsumption(log, count); });
  }
  // Sampled: logs of 6 to 8 records.
  std::mt19937_64 rng(7);
  for (int i = 0; i < 150; ++i) {
    oracle::RandomLogSpec spec;
    spec.max_txns = 4;
    spec.max_writes = 3;
    spec.tables = 1;
    spec.rows = 2 + rng() % 5;
    spec.segment_capacity = 64;
    auto log = oracle::records_of(oracle::random_log(rng, spec));
    if (log.size() < 6 || log.size() > 8) {
      --i;
      continue;
    }
    check_subsumption(log, count);
  }
  if (count.violations > 0) fail(out, std::to_string(count.violations) + " orders break subsumption");

  // Traced primary executions.
  std::size_t traces = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    std::mt19937_64 r(seed);
    std::vector<TxnSpec> txns;
    std::size_t writes = 0;
    for (TxnId id = 1; writes < 8; ++id) {
      TxnSpec t;
      t.id = id;
      const std::size_t ops = std::min<std::size_t>(1 + r() % 3, 8 - writes);
      for (std::size_t k = 0; k < ops; ++k) {
        Op op;
        op.kind = AccessKind::kUpdate;
        op.row = r() % 3;
        op.value = "t" + std::to_string(id);
        t.ops.push_back(op);
      }
      std::sort(t.ops.begin(), t.ops.end(), [](const Op& a, const Op& b) { return a.key() < b.key(); });
      writes += ops;
      txns.push_back(std::move(t));
    }
    OpCost cost(std::chrono::microseconds(30 + r() % 100), OpCost::Mode::kSleep);
    const PrimaryResult res = run_primary_real(txns, 1 + r() % 4, cost, kDefaultSegmentCapacity, /*trace=*/true);
    const auto log = oracle::records_of(res.log);
    std::map<TxnId, std::size_t> first;
    for (std::size_t i = 0; i < log.size(); ++i) first.try_emplace(log[i].txn_id, i);
    auto events = res.trace;
    std::sort(events.begin(), events.end(), [](const ExecEvent& a, const ExecEvent& b) { return a.ticket < b.ticket; });
    std::vector<std::size_t> order;
    for (const ExecEvent& e : events) order.push_back(first.at(e.txn) + e.write_index);
    const auto row = OrderingConstraints::build(Protocol::kC5Watermark, log, PageMap{});
    if (order.size() != log.size() || !row.permits(order)) {
      fail(out, "traced primary order for seed " + std::to_string(seed) + " not permitted by row granularity");
    }
    ++traces;
  }

  const double secs = elapsed(start);
  if (secs >= 60) fail(out, "took " + std::to_string(secs) + " s");
  if (out.pass) {
    std::ostringstream s;
    s << count.logs << " logs, " << count.orders << " orders: row ⊇ txn and row ⊇ page; " << traces
      << " traced 2PL orders permitted; " << secs << " s";
    out.detail = s.str();
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "criteria to run (1-7)")->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"theorem reproduction", theorem_reproduction},
      {"C5 flat lag", flat_lag},
      {"safety suite", safety_suite},
      {"MPC suite", mpc_suite},
      {"adversarial trend", adversarial_trend},
      {"blocking-snapshot boundedness", blocking_bounded},
      {"constraint subsumption", constraint_subsumption},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    all = all && o.pass;
    std::printf("criterion %d (%s): %s - %s\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
