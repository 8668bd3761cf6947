// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// Row-granularity cloned concurrency control.
//
// Two variants share the safe-write rule (a write may run once the previous
// write of its row is the row's newest version):
//
//  * watermark: segments go round-robin to workers, unsafe writes wait in a
//    per-worker deferred queue, and each worker publishes a watermark c'
//    below which all of its writes are installed. The snapshotter merges up
//    to the last transaction boundary under min(c').
//  * txn-chain: a scheduler queue hands whole transactions to workers in
//    commit order; each worker runs its transaction's writes in order,
//    waiting per write until it is safe. Snapshots are blocking: writes past
//    the chosen n stall until (c, n] completes.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "c5/backup.h"

namespace c5 {

using LastWriterMap = std::unordered_map<RowKey, Seq, RowKeyHash>;

// Fills prev_seq of every record from `last_writer` (0 for a new row), updates
// the map and marks the segment preprocessed.
void preprocess_segment(LogSegment& segment, LastWriterMap& last_writer);

// True when the row's newest version is the record's predecessor. Throws
// OrderingViolation if a later write of the row is already installed.
bool is_safe(const LogRecord& record, const Store& store);

// One non-blocking snapshotter step: n := largest boundary <= min(watermarks),
// then merge. Leaves the cursor alone if that does not move c forward.
void snapshotter_advance_watermark(SnapshotCursor& cursor, std::span<const Seq> watermarks,
                                   const BoundaryIndex& boundaries);

// Installs-per-interval estimate for blocking snapshots: an exponentially
// weighted moving average with a floor of one write.
class RateEstimate {
 public:
  explicit RateEstimate(double alpha = 0.5) : alpha_(alpha) {}
  void observe(std::uint64_t installs);
  std::int64_t value() const;

 private:
  double alpha_;
  double value_ = 1.0;
};

// End of the next blocking snapshot: the first boundary at or beyond
// c + headroom * estimate, or the newest known boundary if the log is not that
// long yet. Returns c when no boundary lies beyond it. Throws ConfigError for
// a non-positive estimate.
Seq choose_blocking_next(Seq c, std::int64_t estimate, const BoundaryIndex& boundaries, std::int64_t headroom = 2);

struct ReadResult {
  Seq c = 0;
  std::vector<std::optional<std::string>> values;
};

// Read-only transaction: samples c once and reads every row at it.
ReadResult read_only_txn(const Store& store, const SnapshotCursor& cursor, std::span<const RowKey> rows);

}  // namespace c5
