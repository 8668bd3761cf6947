// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// Ordering constraints each backup protocol places on the execution of a log.
// The real replayers, the discrete-event simulator and the permitted-order
// enumeration all derive their rules from this one place.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "c5/log.h"

namespace c5 {

enum class Protocol { kC5Watermark, kC5TxnChain, kSingle, kTxnGranularity, kPageGranularity };

inline constexpr Protocol kAllProtocols[] = {Protocol::kC5Watermark, Protocol::kC5TxnChain,
                                             Protocol::kSingle, Protocol::kTxnGranularity,
                                             Protocol::kPageGranularity};

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view name);

enum class Granularity { kRow, kPage, kTxn, kSerial };
Granularity granularity_of(Protocol p);

struct PageMap {
  std::uint64_t rows_per_page = 64;

  RowKey page_of(const LogRecord& r) const { return {r.table_id, r.row_id / rows_per_page}; }
};

// Key whose writes must apply in log order: the row for row granularity,
// the page for page granularity.
RowKey ordering_key(Granularity g, const LogRecord& r, const PageMap& pages);

// Incremental write-set dependency builder. Each transaction depends on the
// previous writer of each row it writes. With pruning only the latest
// earlier writer per row is kept, which has the same transitive closure as
// the full edge set.
class DependencyTracker {
 public:
  explicit DependencyTracker(bool prune = true) : prune_(prune) {}

  // Returns predecessor transaction ordinals (0-based, in log order) of the
  // next transaction, given its records.
  std::vector<std::size_t> add_txn(std::span<const LogRecord> records);

 private:
  bool prune_;
  std::size_t next_ = 0;
  std::unordered_map<RowKey, std::vector<std::size_t>, RowKeyHash> writers_;
};

struct TxnNode {
  TxnId txn_id = 0;
  std::size_t first = 0;  // index of the first record in the log
  std::size_t count = 0;
  std::vector<std::size_t> preds;
};

struct TxnDependencyGraph {
  std::vector<TxnNode> nodes;

  static TxnDependencyGraph build(std::span<const LogRecord> log, bool prune = true);
};

// Pairwise "must execute before" relation over the records of a small log.
class OrderingConstraints {
 public:
  static OrderingConstraints build(Protocol p, std::span<const LogRecord> log, const PageMap& pages);

  // `order` lists record indices in execution order.
  bool permits(std::span<const std::size_t> order) const;
  bool must_precede(std::size_t a, std::size_t b) const { return before_[a][b]; }
  std::size_t size() const { return before_.size(); }

 private:
  std::vector<std::vector<bool>> before_;
};

}  // namespace c5
