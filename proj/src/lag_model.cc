// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include "c5/lag_model.h"

#include <algorithm>
#include <numeric>
#include <queue>
#include <unordered_map>

namespace c5 {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  if (b <= 0) throw PreconditionError("ceil_div needs a positive divisor");
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

namespace {

void check_common(const TheoremParams& p) {
  if (p.e <= 0) throw PreconditionError("e must be positive");
  if (p.d <= 0 || p.d > p.e) throw PreconditionError("backup op cost must satisfy 0 < d <= e");
  if (p.L < 0) throw PreconditionError("the lag bound L must be nonnegative");
  if (p.m <= ceil_div(p.e, p.d)) {
    throw PreconditionError("m > ceil(e/d) fails (m=" + std::to_string(p.m) + ", ceil(e/d)=" +
                            std::to_string(ceil_div(p.e, p.d)) +
                            "): the primary is bottlenecked, so a slow backup can keep up");
  }
}

}  // namespace

void check_txn_preconditions(const TheoremParams& p) {
  check_common(p);
  if (p.n <= ceil_div(p.e, p.d)) {
    throw PreconditionError("n > ceil(e/d) fails (n=" + std::to_string(p.n) + ", ceil(e/d)=" +
                            std::to_string(ceil_div(p.e, p.d)) + ")");
  }
  if (p.n * p.d <= p.e) throw PreconditionError("nd > e fails: the workload size ceil(L/(nd-e)) is undefined");
  if (p.m < p.n) {
    throw PreconditionError("m >= n fails: fewer cores than concurrently running transactions, so the primary "
                            "cannot start one transaction every e");
  }
}

std::int64_t page_batch_width(const TheoremParams& p) { return std::min(p.m, p.hot_page_size); }

void check_page_preconditions(const TheoremParams& p) {
  check_common(p);
  if (p.hot_page_size <= ceil_div(p.e, p.d)) {
    throw PreconditionError("|S| > ceil(e/d) fails (|S|=" + std::to_string(p.hot_page_size) + ", ceil(e/d)=" +
                            std::to_string(ceil_div(p.e, p.d)) + ")");
  }
  const std::int64_t n = page_batch_width(p);
  if (n * p.d <= p.e) throw PreconditionError("nd > e fails for n = min(m, |S|)");
}

std::int64_t txn_workload_size(const TheoremParams& p) {
  check_txn_preconditions(p);
  return ceil_div(p.L, p.n * p.d - p.e) + 1;
}

std::int64_t page_workload_size(const TheoremParams& p) {
  check_page_preconditions(p);
  const std::int64_t n = page_batch_width(p);
  return ceil_div(n * p.L, n * p.d - p.e) + 1;
}

LagCurve txn_granularity_curve(const TheoremParams& p, std::int64_t count) {
  if (count <= 0) count = txn_workload_size(p);
  check_txn_preconditions(p);
  LagCurve curve;
  curve.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    LagPoint pt;
    pt.i = i;
    pt.f_p = (p.n + i) * p.e;
    pt.f_b = p.n * p.e + (i + 1) * p.n * p.d;
    pt.lag = pt.f_b - pt.f_p;
    curve.push_back(pt);
  }
  return curve;
}

LagCurve page_granularity_curve(const TheoremParams& p, std::int64_t count) {
  if (count <= 0) count = page_workload_size(p);
  check_page_preconditions(p);
  const std::int64_t n = page_batch_width(p);
  LagCurve curve;
  curve.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    LagPoint pt;
    pt.i = i;
    pt.f_p = ((i + n) / n) * p.e;
    pt.f_b = p.e + (i + 1) * p.d;
    pt.lag = pt.f_b - pt.f_p;
    curve.push_back(pt);
  }
  return curve;
}

Fraction page_lag_lower_bound(const TheoremParams& p, std::int64_t i) {
  const std::int64_t n = page_batch_width(p);
  return {i * (n * p.d - p.e), n};
}

std::vector<TxnSpec> proof_txn_workload(const TheoremParams& p, std::int64_t count) {
  if (count <= 0) count = txn_workload_size(p);
  std::vector<TxnSpec> txns;
  txns.reserve(static_cast<std::size_t>(count));
  RowId next_unique = 0;
  for (std::int64_t i = 0; i < count; ++i) {
    TxnSpec t;
    t.id = static_cast<TxnId>(i + 1);
    t.arrival = i * p.e;
    for (std::int64_t w = 0; w + 1 < p.n; ++w) {
      Op op;
      op.kind = AccessKind::kInsert;
      op.table = 0;
      op.row = next_unique++;
      op.value = encode_i64(i);
      t.ops.push_back(std::move(op));
    }
    Op hot;
    hot.kind = AccessKind::kUpdate;
    hot.table = 1;
    hot.row = 0;
    hot.value = encode_i64(i);
    t.ops.push_back(std::move(hot));
    txns.push_back(std::move(t));
  }
  return txns;
}

std::vector<TxnSpec> proof_page_workload(const TheoremParams& p, std::int64_t count) {
  if (count <= 0) count = page_workload_size(p);
  const std::int64_t n = page_batch_width(p);
  std::vector<TxnSpec> txns;
  txns.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    TxnSpec t;
    t.id = static_cast<TxnId>(i + 1);
    t.arrival = (i / n) * p.e;
    Op op;
    op.kind = AccessKind::kUpdate;
    op.table = 0;
    op.row = static_cast<RowId>(i % n);
    op.value = encode_i64(i);
    t.ops.push_back(std::move(op));
    txns.push_back(std::move(t));
  }
  return txns;
}

namespace {

struct TxnLayout {
  std::vector<LogRecord> records;
  std::vector<std::size_t> txn_of;  // record -> txn ordinal
  std::vector<std::size_t> first;   // txn -> first record
  std::vector<std::size_t> count;
  std::vector<std::int64_t> avail;  // txn -> f_p
};

TxnLayout layout(std::span<const LogSegment> log, const std::map<TxnId, std::int64_t>& f_p) {
  TxnLayout l;
  l.records = flatten(log);
  for (std::size_t i = 0; i < l.records.size(); ++i) {
    if (i == 0 || l.records[i - 1].last_in_txn) {
      l.first.push_back(i);
      l.count.push_back(0);
      auto it = f_p.find(l.records[i].txn_id);
      if (it == f_p.end()) throw InputError("no f_p for transaction " + std::to_string(l.records[i].txn_id));
      l.avail.push_back(it->second);
    }
    l.txn_of.push_back(l.first.size() - 1);
    ++l.count.back();
  }
  if (!l.records.empty() && !l.records.back().last_in_txn) throw InputError("log ends inside a transaction");
  return l;
}

// Previous record with the same ordering key, or none.
std::vector<std::optional<std::size_t>> key_predecessors(const std::vector<LogRecord>& records, Granularity g,
                                                         const PageMap& pages) {
  std::vector<std::optional<std::size_t>> pred(records.size());
  std::unordered_map<RowKey, std::size_t, RowKeyHash> last;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (g == Granularity::kSerial) {
      if (i > 0) pred[i] = i - 1;
      continue;
    }
    const RowKey k = ordering_key(g, records[i], pages);
    if (auto it = last.find(k); it != last.end()) pred[i] = it->second;
    last[k] = i;
  }
  return pred;
}

// List scheduling of items with dependencies on `workers` identical
// workers; ready items start lowest index first. Returns completion times.
struct Item {
  std::int64_t avail = 0;
  std::int64_t duration = 0;
  std::vector<std::size_t> succ;
  std::size_t deps = 0;
};

std::vector<std::int64_t> list_schedule(std::vector<Item> items, std::size_t workers) {
  using Event = std::tuple<std::int64_t, int, std::size_t>;  // time, 0 done / 1 available, item
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  std::vector<bool> available(items.size(), false);
  std::vector<std::int64_t> done(items.size(), -1);
  for (std::size_t i = 0; i < items.size(); ++i) events.emplace(items[i].avail, 1, i);
  std::size_t free = workers;
  while (!events.empty()) {
    const std::int64_t now = std::get<0>(events.top());
    while (!events.empty() && std::get<0>(events.top()) == now) {
      auto [t, kind, id] = events.top();
      events.pop();
      if (kind == 0) {
        ++free;
        done[id] = t;
        for (std::size_t s : items[id].succ) {
          if (--items[s].deps == 0 && available[s]) ready.push(s);
        }
      } else {
        available[id] = true;
        if (items[id].deps == 0) ready.push(id);
      }
    }
    while (free > 0 && !ready.empty()) {
      const std::size_t id = ready.top();
      ready.pop();
      --free;
      events.emplace(now + items[id].duration, 0, id);
    }
  }
  return done;
}

std::vector<std::int64_t> simulate_txn_chain(const TxnLayout& l, std::size_t workers, std::int64_t d) {
  const auto pred = key_predecessors(l.records, Granularity::kRow, {});
  std::vector<std::int64_t> done(l.records.size(), -1);
  struct Worker {
    bool has_txn = false;
    std::size_t next = 0;  // next record
    std::size_t end = 0;
    bool running = false;
  };
  std::vector<Worker> ws(workers);
  std::size_t next_txn = 0;
  using Event = std::pair<std::int64_t, std::size_t>;  // completion time, worker
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::int64_t now = l.avail.empty() ? 0 : l.avail.front();

  for (;;) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t w = 0; w < workers; ++w) {
        Worker& wk = ws[w];
        if (wk.running) continue;
        if (wk.has_txn && wk.next == wk.end) {
          wk.has_txn = false;
          changed = true;
        }
        if (!wk.has_txn) {
          if (next_txn < l.first.size() && l.avail[next_txn] <= now) {
            wk.has_txn = true;
            wk.next = l.first[next_txn];
            wk.end = wk.next + l.count[next_txn];
            ++next_txn;
            changed = true;
          } else {
            continue;
          }
        }
        const auto& p = pred[wk.next];
        if (!p || (done[*p] >= 0 && done[*p] <= now)) {
          wk.running = true;
          events.emplace(now + d, w);
          changed = true;
        }
      }
    }
    std::int64_t next_time = -1;
    if (!events.empty()) next_time = events.top().first;
    if (next_txn < l.first.size() && l.avail[next_txn] > now) {
      next_time = next_time < 0 ? l.avail[next_txn] : std::min(next_time, l.avail[next_txn]);
    }
    if (next_time < 0) break;
    now = next_time;
    while (!events.empty() && events.top().first == now) {
      const std::size_t w = events.top().second;
      events.pop();
      done[ws[w].next] = now;
      ++ws[w].next;
      ws[w].running = false;
    }
  }
  return done;
}

}  // namespace

LagCurve simulate_backup(std::span<const LogSegment> log, const std::map<TxnId, std::int64_t>& f_p,
                         Protocol protocol, std::size_t workers, std::int64_t d, const PageMap& pages) {
  if (workers < 1) throw ConfigError("workers", "need at least one backup worker");
  if (d <= 0) throw ConfigError("d", "backup op cost must be positive");
  const TxnLayout l = layout(log, f_p);
  const std::size_t txns = l.first.size();
  std::vector<std::int64_t> txn_done(txns, 0);

  const Granularity g = granularity_of(protocol);
  if (protocol == Protocol::kC5TxnChain) {
    const auto done = simulate_txn_chain(l, workers, d);
    for (std::size_t r = 0; r < done.size(); ++r) txn_done[l.txn_of[r]] = std::max(txn_done[l.txn_of[r]], done[r]);
  } else if (g == Granularity::kTxn) {
    const TxnDependencyGraph graph = TxnDependencyGraph::build(l.records, /*prune=*/true);
    std::vector<Item> items(txns);
    for (std::size_t t = 0; t < txns; ++t) {
      items[t].avail = l.avail[t];
      items[t].duration = static_cast<std::int64_t>(l.count[t]) * d;
      items[t].deps = graph.nodes[t].preds.size();
      for (std::size_t p : graph.nodes[t].preds) items[p].succ.push_back(t);
    }
    txn_done = list_schedule(std::move(items), workers);
  } else {
    const auto pred = key_predecessors(l.records, g, pages);
    std::vector<Item> items(l.records.size());
    for (std::size_t r = 0; r < items.size(); ++r) {
      items[r].avail = l.avail[l.txn_of[r]];
      items[r].duration = d;
      if (pred[r]) {
        items[r].deps = 1;
        items[*pred[r]].succ.push_back(r);
      }
    }
    const auto done = list_schedule(std::move(items), g == Granularity::kSerial ? 1 : workers);
    for (std::size_t r = 0; r < done.size(); ++r) txn_done[l.txn_of[r]] = std::max(txn_done[l.txn_of[r]], done[r]);
  }

  LagCurve curve;
  curve.reserve(txns);
  std::int64_t prefix = 0;
  for (std::size_t t = 0; t < txns; ++t) {
    prefix = std::max(prefix, txn_done[t]);
    LagPoint pt;
    pt.i = static_cast<std::int64_t>(t);
    pt.f_p = l.avail[t];
    pt.f_b = prefix;
    pt.lag = pt.f_b - pt.f_p;
    curve.push_back(pt);
  }
  return curve;
}

LagCurve simulate_end_to_end(std::span<const TxnSpec> workload, const SimParams& params, Protocol protocol,
                             std::size_t workers, const PageMap& pages) {
  PrimaryResult primary = run_primary_discrete(workload, params);
  return simulate_backup(primary.log, primary.f_p, protocol, workers, params.d, pages);
}

ExactSlope fitted_slope(const LagCurve& curve) {
  ExactSlope s;
  const __int128 n = static_cast<__int128>(curve.size());
  if (n < 2) return s;
  __int128 sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const LagPoint& p : curve) {
    sx += p.i;
    sy += p.lag;
    sxx += static_cast<__int128>(p.i) * p.i;
    sxy += static_cast<__int128>(p.i) * p.lag;
  }
  s.num = n * sxy - sx * sy;
  s.den = n * sxx - sx * sx;
  if (s.den == 0) {
    s.num = 0;
    s.den = 1;
  } else if (s.den < 0) {
    s.num = -s.num;
    s.den = -s.den;
  }
  return s;
}

}  // namespace c5
