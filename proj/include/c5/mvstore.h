// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// In-memory multi-version row store.
//
// Every row is a singly linked chain of versions in strictly descending
// write_seq order. Snapshots are timestamp cursors over the one store: the
// current snapshot is "everything with write_seq <= c", so merging the next
// snapshot into the current one is just advancing c.

#pragma once

#include <atomic>
#include <condition_variable>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "c5/common.h"

namespace c5 {

struct RowVersion {
  Seq write_seq = 0;
  bool tombstone = false;
  std::string payload;
  const RowVersion* next = nullptr;
};

// Latest visible value of each row; deleted rows are absent.
using StateMap = std::map<RowKey, std::string>;

class Store {
 public:
  Store() = default;
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Makes (write_seq, payload) the new chain head. nullopt installs a
  // tombstone. Throws OrderingViolation unless write_seq exceeds the head's.
  void install(TableId table, RowId row, Seq write_seq, std::optional<std::string> payload);

  // Same as install() without the ordering check. Only the fault-injection
  // mode uses it.
  void install_unchecked(TableId table, RowId row, Seq write_seq, std::optional<std::string> payload);

  // Payload of the newest version with write_seq <= at_seq.
  std::optional<std::string> read_at(TableId table, RowId row, Seq at_seq) const;
  std::optional<std::string> read_latest(TableId table, RowId row) const;

  Seq head_seq(TableId table, RowId row) const;

  // Chain contents, newest first.
  std::vector<Seq> chain_seqs(TableId table, RowId row) const;

  // Latest values of every row. Callers must quiesce writers first.
  StateMap latest_state() const;

  std::size_t version_count() const { return versions_.load(std::memory_order_relaxed); }

 private:
  using Slot = std::atomic<const RowVersion*>;
  using Table = ChunkedArray<Slot>;

  Slot& slot(TableId table, RowId row);
  const Slot* find_slot(TableId table, RowId row) const;
  void publish(Slot& s, const RowVersion* head, Seq write_seq, std::optional<std::string> payload);

  std::array<std::atomic<Table*>, kMaxTables> tables_{};
  std::atomic<std::size_t> versions_{0};
};

// (c, n) pair delimiting the current, next and future snapshots.
// Writers of c/n are single threaded (the snapshotter); readers are anyone.
class SnapshotCursor {
 public:
  Seq c() const { return c_.load(std::memory_order_acquire); }
  Seq n() const { return n_.load(std::memory_order_acquire); }

  // Chooses the end of the next snapshot. n never moves backwards.
  void set_next(Seq n);
  // Current := current + next. Callers have checked (c, n] is complete.
  void merge();

  // Blocks while `seq` lies beyond n and the cursor is not released.
  void wait_until_admitted(Seq seq);
  // Lifts every admission limit (used at shutdown).
  void release_all();
  bool released() const { return released_.load(std::memory_order_acquire); }

 private:
  std::atomic<Seq> c_{0};
  std::atomic<Seq> n_{0};
  std::atomic<bool> released_{false};
  std::mutex mu_;
  std::condition_variable cv_;
};

// Per-sequence-number install counts, used to check completeness of
// snapshot ranges and exactly-once delivery.
class WriteTracker {
 public:
  void mark(Seq seq) { counts_.at(seq).fetch_add(1, std::memory_order_release); }
  std::uint32_t count(Seq seq) const {
    const auto* c = counts_.find(seq);
    return c == nullptr ? 0 : c->load(std::memory_order_acquire);
  }
  bool installed(Seq seq) const { return count(seq) > 0; }
  // Smallest seq in (from, to] not yet installed, or 0 when all are.
  Seq first_pending(Seq from, Seq to) const;

 private:
  ChunkedArray<std::atomic<std::uint32_t>> counts_;
};

// Advances c to n after verifying every write in (c, n] is installed.
// Throws MergeTooEarly naming the first pending seq otherwise.
void merge_snapshots(SnapshotCursor& cursor, const WriteTracker& tracker);

}  // namespace c5
