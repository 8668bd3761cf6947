// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include <doctest.h>

#include <random>

#include "c5/baselines.h"
#include "c5/lag_model.h"
#include "c5/mpc.h"
#include "oracle.h"

using namespace c5;

namespace {

std::vector<LogSegment> one_write_txns(const std::vector<RowId>& rows) {
  std::vector<LogSegment> out;
  LogSegment s;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    LogRecord r;
    r.seq = i + 1;
    r.txn_id = i + 1;
    r.row_id = rows[i];
    r.value = "v" + std::to_string(i);
    r.last_in_txn = true;
    s.records.push_back(r);
  }
  out.push_back(s);
  return out;
}

StateMap expected(const std::vector<LogSegment>& log) {
  const auto m = oracle::replay(oracle::records_of(log));
  return StateMap(m.begin(), m.end());
}

std::map<TxnId, std::int64_t> all_at_zero(const std::vector<LogSegment>& log) {
  std::map<TxnId, std::int64_t> f_p;
  for (const auto& r : oracle::records_of(log)) f_p[r.txn_id] = 0;
  return f_p;
}

}  // namespace

TEST_CASE("baselines reach the serial state") {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 40; ++round) {
    const auto log = oracle::random_log(rng, {});
    const auto want = expected(log);
    Store a, b, c, d;
    replay_single_threaded(log, a);
    replay_txn_granularity(log, b, 4, true);
    replay_txn_granularity(log, c, 4, false);
    replay_page_granularity(log, d, 4, PageMap{4});
    CHECK(a.latest_state() == want);
    CHECK(b.latest_state() == want);
    CHECK(c.latest_state() == want);
    CHECK(d.latest_state() == want);
  }
}

TEST_CASE("empty log is a no-op") {
  const std::vector<LogSegment> none;
  Store s;
  replay_single_threaded(none, s);
  replay_txn_granularity(none, s, 2);
  replay_page_granularity(none, s, 2);
  CHECK(s.latest_state().empty());
}

TEST_CASE("dependency pruning keeps the transitive closure") {
  std::mt19937_64 rng(8);
  for (int round = 0; round < 30; ++round) {
    const auto flat = oracle::records_of(oracle::random_log(rng, {}));
    const auto full = TxnDependencyGraph::build(flat, false);
    const auto pruned = TxnDependencyGraph::build(flat, true);
    REQUIRE(full.nodes.size() == pruned.nodes.size());
    const std::size_t n = full.nodes.size();
    auto closure = [&](const TxnDependencyGraph& g) {
      std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p : g.nodes[i].preds) {
          reach[i][p] = true;
          for (std::size_t k = 0; k < n; ++k)
            if (reach[p][k]) reach[i][k] = true;
        }
      }
      return reach;
    };
    CHECK(closure(full) == closure(pruned));
  }
}

TEST_CASE("simulated makespans") {
  const std::int64_t d = 1;
  SUBCASE("single-threaded takes N*d") {
    const auto log = one_write_txns({0, 1, 2, 3, 4, 5});
    const auto curve = simulate_backup(log, all_at_zero(log), Protocol::kSingle, 4, d);
    CHECK(curve.back().f_b == 6);
  }
  SUBCASE("txn granularity: disjoint writes run fully parallel") {
    const auto log = one_write_txns({0, 1, 2, 3});
    const auto curve = simulate_backup(log, all_at_zero(log), Protocol::kTxnGranularity, 4, d);
    CHECK(curve.back().f_b == 1);
  }
  SUBCASE("txn granularity: a shared hot row serializes everything") {
    // Three transactions: insert unique, update hot.
    std::vector<LogSegment> log(1);
    Seq seq = 1;
    for (TxnId t = 1; t <= 3; ++t) {
      LogRecord ins;
      ins.seq = seq++;
      ins.txn_id = t;
      ins.row_id = 100 + t;
      LogRecord hot;
      hot.seq = seq++;
      hot.txn_id = t;
      hot.table_id = 1;
      hot.last_in_txn = true;
      log[0].records.push_back(ins);
      log[0].records.push_back(hot);
    }
    const auto txn = simulate_backup(log, all_at_zero(log), Protocol::kTxnGranularity, 4, d);
    CHECK(txn.back().f_b == 6);
    const auto row = simulate_backup(log, all_at_zero(log), Protocol::kC5Watermark, 4, d);
    // Inserts and the first hot update share the first step.
    CHECK(row.back().f_b == 3);
  }
  SUBCASE("page granularity: one page serializes, two pages give two-way parallelism") {
    const auto one_page = one_write_txns({0, 1, 2, 3, 4, 5, 6, 7});
    const auto a = simulate_backup(one_page, all_at_zero(one_page), Protocol::kPageGranularity, 8, d, PageMap{64});
    CHECK(a.back().f_b == 8);
    const auto two_pages = one_write_txns({0, 64, 1, 65, 2, 66, 3, 67});
    const auto b = simulate_backup(two_pages, all_at_zero(two_pages), Protocol::kPageGranularity, 8, d, PageMap{64});
    CHECK(b.back().f_b == 4);
  }
  SUBCASE("one row per page behaves like row granularity") {
    std::mt19937_64 rng(4);
    for (int round = 0; round < 20; ++round) {
      const auto log = oracle::random_log(rng, {});
      const auto f_p = all_at_zero(log);
      const auto page = simulate_backup(log, f_p, Protocol::kPageGranularity, 3, d, PageMap{1});
      const auto row = simulate_backup(log, f_p, Protocol::kC5Watermark, 3, d, PageMap{1});
      CHECK(page == row);
    }
  }
}
