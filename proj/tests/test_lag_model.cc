// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include <doctest.h>

#include "c5/lag_model.h"
#include "oracle.h"

using namespace c5;

TEST_CASE("txn-granularity closed form") {
  TheoremParams p;  // n=3, e=2, d=1, m=4
  const auto curve = txn_granularity_curve(p, 20);
  CHECK(curve[5].lag == 8);
  CHECK(curve[0].lag == p.n * p.d);
  const auto ref = oracle::txn_curve(p.n, p.e, p.d, 20);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(curve[i].f_p == ref[i].first);
    CHECK(curve[i].f_b == ref[i].second);
    CHECK(curve[i].lag == static_cast<std::int64_t>(i) * (p.n * p.d - p.e) + p.n * p.d);
  }
}

TEST_CASE("preconditions") {
  TheoremParams p;
  p.n = 2;  // nd = e
  CHECK_THROWS_AS(txn_granularity_curve(p), PreconditionError);
  p = TheoremParams{};
  p.m = 2;  // m > ceil(e/d) fails
  CHECK_THROWS_AS(check_txn_preconditions(p), PreconditionError);
  p = TheoremParams{};
  p.d = 3;  // d > e
  CHECK_THROWS_AS(check_txn_preconditions(p), PreconditionError);
  p = TheoremParams{};
  p.n = 5;  // m < n
  CHECK_THROWS_AS(check_txn_preconditions(p), PreconditionError);
  p = TheoremParams{};
  p.hot_page_size = 2;
  CHECK_THROWS_AS(check_page_preconditions(p), PreconditionError);
  try {
    TheoremParams q;
    q.n = 2;
    check_txn_preconditions(q);
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("ceil(e/d)") != std::string::npos);
  }
}

TEST_CASE("final transaction exceeds L") {
  for (std::int64_t L : {0, 1, 7, 100, 12345}) {
    TheoremParams p;
    p.L = L;
    CHECK(txn_granularity_curve(p).back().lag > L);
    CHECK(page_granularity_curve(p).back().lag > L);
    const auto t = txn_granularity_curve(p);
    CHECK(static_cast<std::int64_t>(t.size()) == txn_workload_size(p));
  }
}

TEST_CASE("page-granularity closed form") {
  TheoremParams p;
  p.m = 4;  // batch width n = min(m, |S|) = 4
  const auto curve = page_granularity_curve(p, 40);
  CHECK(curve[0].f_p == 2);
  CHECK(curve[0].f_b == 3);
  CHECK(curve[0].lag == 1);
  CHECK(curve[3].f_p == p.e);
  const auto ref = oracle::page_curve(4, p.e, p.d, 40);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(curve[i].f_p == ref[i].first);
    CHECK(curve[i].f_b == ref[i].second);
    const Fraction lb = page_lag_lower_bound(p, static_cast<std::int64_t>(i));
    CHECK(curve[i].lag * lb.den >= lb.num);
  }
}

TEST_CASE("simulator agrees with the closed forms") {
  TheoremParams p;
  const auto txns = proof_txn_workload(p, 200);
  CHECK(simulate_end_to_end(txns, p.sim(), Protocol::kTxnGranularity, 4) == txn_granularity_curve(p, 200));
  const auto pages = proof_page_workload(p, 200);
  CHECK(simulate_end_to_end(pages, p.sim(), Protocol::kPageGranularity, 4, PageMap{64}) ==
        page_granularity_curve(p, 200));
}

TEST_CASE("row granularity keeps lag flat") {
  TheoremParams p;
  for (Protocol proto : {Protocol::kC5Watermark, Protocol::kC5TxnChain}) {
    const auto curve = simulate_end_to_end(proof_txn_workload(p, 300), p.sim(), proto, 4);
    CHECK(fitted_slope(curve).is_zero());
    for (const auto& pt : curve) CHECK(pt.lag == curve[0].lag);
  }
}

TEST_CASE("fitted slope is exact") {
  LagCurve c;
  for (std::int64_t i = 0; i < 10; ++i) c.push_back({i, 0, 0, 3 * i + 2});
  CHECK(fitted_slope(c).equals(3, 1));
  LagCurve h;
  for (std::int64_t i = 0; i < 10; ++i) h.push_back({i, 0, 0, i / 2});
  const auto s = fitted_slope(h);
  CHECK(s.value() == doctest::Approx(oracle::slope({0, 0, 1, 1, 2, 2, 3, 3, 4, 4})));
  CHECK(s.equals(16, 33));  // 40 / 82.5
  CHECK_FALSE(s.at_least(1, 2));
}

TEST_CASE("a single transaction lags by its own writes") {
  TheoremParams p;
  for (Protocol proto : kAllProtocols) {
    const auto curve = simulate_end_to_end(proof_txn_workload(p, 1), p.sim(), proto, 4);
    REQUIRE(curve.size() == 1);
    // Two inserts on one page plus the hot update. Only per-row scheduling
    // runs all three at once; a page serializes the inserts; the rest run
    // the transaction's writes in order.
    std::int64_t writes_in_sequence = p.n;
    if (proto == Protocol::kC5Watermark) writes_in_sequence = 1;
    if (proto == Protocol::kPageGranularity) writes_in_sequence = 2;
    CHECK(curve[0].lag == writes_in_sequence * p.d);
  }
}
