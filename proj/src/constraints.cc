// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include "c5/constraints.h"

#include <algorithm>

namespace c5 {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::kC5Watermark:
      return "c5-watermark";
    case Protocol::kC5TxnChain:
      return "c5-txnchain";
    case Protocol::kSingle:
      return "single";
    case Protocol::kTxnGranularity:
      return "txn-gran";
    case Protocol::kPageGranularity:
      return "page-gran";
  }
  return "?";
}

Protocol parse_protocol(std::string_view name) {
  for (Protocol p : kAllProtocols) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("protocol", "unknown protocol '" + std::string(name) + "'");
}

Granularity granularity_of(Protocol p) {
  switch (p) {
    case Protocol::kC5Watermark:
    case Protocol::kC5TxnChain:
      return Granularity::kRow;
    case Protocol::kPageGranularity:
      return Granularity::kPage;
    case Protocol::kTxnGranularity:
      return Granularity::kTxn;
    case Protocol::kSingle:
      return Granularity::kSerial;
  }
  return Granularity::kSerial;
}

RowKey ordering_key(Granularity g, const LogRecord& r, const PageMap& pages) {
  return g == Granularity::kPage ? pages.page_of(r) : r.key();
}

std::vector<std::size_t> DependencyTracker::add_txn(std::span<const LogRecord> records) {
  const std::size_t self = next_++;
  std::vector<std::size_t> preds;
  for (const LogRecord& r : records) {
    auto& writers = writers_[r.key()];
    for (std::size_t w : writers) {
      if (w != self) preds.push_back(w);
    }
    if (writers.empty() || writers.back() != self) {
      if (prune_) writers.clear();
      writers.push_back(self);
    }
  }
  std::sort(preds.begin(), preds.end());
  preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
  return preds;
}

TxnDependencyGraph TxnDependencyGraph::build(std::span<const LogRecord> log, bool prune) {
  TxnDependencyGraph g;
  DependencyTracker tracker(prune);
  std::size_t i = 0;
  while (i < log.size()) {
    std::size_t j = i;
    while (j < log.size() && !log[j].last_in_txn) ++j;
    if (j == log.size()) throw InputError("log ends inside transaction " + std::to_string(log[i].txn_id));
    TxnNode node;
    node.txn_id = log[i].txn_id;
    node.first = i;
    node.count = j - i + 1;
    node.preds = tracker.add_txn(log.subspan(i, node.count));
    g.nodes.push_back(std::move(node));
    i = j + 1;
  }
  return g;
}

OrderingConstraints OrderingConstraints::build(Protocol p, std::span<const LogRecord> log,
                                               const PageMap& pages) {
  OrderingConstraints oc;
  const std::size_t n = log.size();
  oc.before_.assign(n, std::vector<bool>(n, false));
  const Granularity g = granularity_of(p);

  switch (g) {
    case Granularity::kSerial:
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) oc.before_[a][b] = true;
      break;
    case Granularity::kRow:
    case Granularity::kPage:
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
          if (ordering_key(g, log[a], pages) == ordering_key(g, log[b], pages)) oc.before_[a][b] = true;
      if (p == Protocol::kC5TxnChain) {
        // One worker runs each transaction's writes in order.
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = a + 1; b < n && log[b].txn_id == log[a].txn_id; ++b) oc.before_[a][b] = true;
      }
      break;
    case Granularity::kTxn: {
      const TxnDependencyGraph graph = TxnDependencyGraph::build(log, /*prune=*/false);
      for (const TxnNode& node : graph.nodes) {
        for (std::size_t a = node.first; a < node.first + node.count; ++a)
          for (std::size_t b = a + 1; b < node.first + node.count; ++b) oc.before_[a][b] = true;
        for (std::size_t pred : node.preds) {
          const TxnNode& from = graph.nodes[pred];
          for (std::size_t a = from.first; a < from.first + from.count; ++a)
            for (std::size_t b = node.first; b < node.first + node.count; ++b) oc.before_[a][b] = true;
        }
      }
      break;
    }
  }
  return oc;
}

bool OrderingConstraints::permits(std::span<const std::size_t> order) const {
  const std::size_t n = before_.size();
  if (order.size() != n) return false;
  std::vector<std::size_t> pos(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (order[i] >= n || pos[order[i]] != n) return false;
    pos[order[i]] = i;
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (before_[a][b] && pos[a] > pos[b]) return false;
  return true;
}

}  // namespace c5
