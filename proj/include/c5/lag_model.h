// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// Replication-lag model in integer time units: closed forms for the
// constructed workloads that defeat transaction- and page-granularity
// backups, the workloads themselves, and a discrete-event backup simulator
// that serves as an independent check of the closed forms.

#pragma once

#include <map>
#include <span>
#include <vector>

#include "c5/constraints.h"
#include "c5/log.h"
#include "c5/primary.h"

namespace c5 {

struct TheoremParams {
  std::int64_t m = 4;  // primary cores
  std::int64_t e = 2;  // primary per-op cost
  std::int64_t d = 1;  // backup per-op cost
  std::int64_t n = 3;  // writes per txn (txn theorem)
  std::int64_t L = 100;
  std::int64_t hot_page_size = 64;  // |S|, rows on the hottest page (page theorem)

  SimParams sim() const { return {static_cast<std::size_t>(m), e, d}; }
};

struct LagPoint {
  std::int64_t i = 0;
  std::int64_t f_p = 0;
  std::int64_t f_b = 0;
  std::int64_t lag = 0;

  friend bool operator==(const LagPoint&, const LagPoint&) = default;
};

using LagCurve = std::vector<LagPoint>;

std::int64_t ceil_div(std::int64_t a, std::int64_t b);

// Throw PreconditionError naming the assumption that fails.
void check_txn_preconditions(const TheoremParams& p);
void check_page_preconditions(const TheoremParams& p);

// Batch width of the page workload: min(m, |S|).
std::int64_t page_batch_width(const TheoremParams& p);

// Transactions needed so that the final one (index ceil(L/(nd-e)) or
// ceil(nL/(nd-e))) exceeds L.
std::int64_t txn_workload_size(const TheoremParams& p);
std::int64_t page_workload_size(const TheoremParams& p);

// Closed forms. `count` defaults to the workload size.
LagCurve txn_granularity_curve(const TheoremParams& p, std::int64_t count = 0);
LagCurve page_granularity_curve(const TheoremParams& p, std::int64_t count = 0);

// Lower bound i(nd-e)/n on page-granularity lag, as an exact fraction.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;
};
Fraction page_lag_lower_bound(const TheoremParams& p, std::int64_t i);

// The constructed workloads. Transaction i arrives at i*e (txn) or
// floor(i/n)*e (page). The page workload writes rows 0..n-1 of table 0, so
// any rows_per_page >= n puts them on one page.
std::vector<TxnSpec> proof_txn_workload(const TheoremParams& p, std::int64_t count = 0);
std::vector<TxnSpec> proof_page_workload(const TheoremParams& p, std::int64_t count = 0);

// Discrete-event backup. A transaction's records become available at its
// f_p; each write costs d; the protocol's ordering rule decides which writes
// may run. f_b(T_i) is when T_0..T_i have all finished. Points are indexed
// by log order.
LagCurve simulate_backup(std::span<const LogSegment> log, const std::map<TxnId, std::int64_t>& f_p,
                         Protocol protocol, std::size_t workers, std::int64_t d, const PageMap& pages = {});

// Runs the discrete primary on a workload, then simulate_backup.
LagCurve simulate_end_to_end(std::span<const TxnSpec> workload, const SimParams& params, Protocol protocol,
                             std::size_t workers, const PageMap& pages = {});

// Least-squares slope of lag against i, as an exact fraction num/den with
// den > 0.
struct ExactSlope {
  __int128 num = 0;
  __int128 den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool equals(std::int64_t n, std::int64_t d) const { return num * d == static_cast<__int128>(n) * den; }
  bool at_least(std::int64_t n, std::int64_t d) const { return num * d >= static_cast<__int128>(n) * den; }
  bool is_zero() const { return num == 0; }
};

ExactSlope fitted_slope(const LagCurve& curve);

}  // namespace c5
