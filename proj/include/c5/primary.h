// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// The primary: runs read-write transactions under strict two-phase locking
// and emits the totally ordered log. Two execution modes share the same
// transaction model:
//
//  * real: m executor threads, a shared FIFO lock table and per-thread logs
//    merged by commit timestamp;
//  * discrete: a deterministic event loop simulating m cores where every
//    operation costs exactly e time units.

#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "c5/log.h"
#include "c5/mvstore.h"

namespace c5 {

enum class AccessKind : std::uint8_t { kRead, kInsert, kUpdate, kDelete };

// How a write computes its value: a fixed payload, or the row's current
// integer value plus a delta (absent rows count as 0).
enum class ValueRule : std::uint8_t { kSet, kAdd };

struct Op {
  AccessKind kind = AccessKind::kRead;
  TableId table = 0;
  RowId row = 0;
  ValueRule rule = ValueRule::kSet;
  std::string value;
  std::int64_t delta = 0;

  RowKey key() const { return {table, row}; }
  bool is_write() const { return kind != AccessKind::kRead; }
};

struct TxnSpec {
  TxnId id = 0;
  std::vector<Op> ops;
  std::int64_t arrival = 0;  // time units (discrete) or nanoseconds from start (real)
};

std::string encode_i64(std::int64_t v);
std::int64_t decode_i64(const std::optional<std::string>& payload);

struct SimParams {
  std::size_t m = 1;   // primary cores
  std::int64_t e = 1;  // primary per-op cost
  std::int64_t d = 1;  // backup per-op cost

  void validate() const;
};

// Exclusive per-row locks granted in request order. Waiting is deadlock
// checked: a wait that would close a cycle throws DeadlockError.
class LockTable {
 public:
  // Blocks until `txn` owns `key`. Returns the highest commit counter of any
  // earlier holder of the row. Re-acquiring an owned lock is a no-op.
  std::uint64_t acquire(TxnId txn, RowKey key);
  // Releases every lock in `keys` (held by `txn`), stamping them with the
  // releasing transaction's commit counter.
  void release_all(TxnId txn, std::span<const RowKey> keys, std::uint64_t commit_counter);

  std::optional<TxnId> owner(RowKey key) const;
  std::size_t waiters(RowKey key) const;

 private:
  struct Waiter {
    TxnId txn;
    bool granted = false;
    std::condition_variable cv;
  };
  struct Entry {
    std::optional<TxnId> owner;
    std::deque<Waiter*> queue;
    std::uint64_t last_counter = 0;
  };

  bool would_deadlock(TxnId waiter, RowKey key) const;

  mutable std::mutex mu_;
  std::unordered_map<RowKey, Entry, RowKeyHash> entries_;
  std::unordered_map<TxnId, RowKey> waiting_on_;
};

// One executed write as observed on the primary, in wall-clock order.
struct ExecEvent {
  TxnId txn = 0;
  std::size_t write_index = 0;  // ordinal among the transaction's writes
  std::uint64_t ticket = 0;
};

struct PrimaryResult {
  std::vector<LogSegment> log;
  std::unique_ptr<Store> store;
  std::map<TxnId, std::int64_t> f_p;  // time units or ns since start
  std::vector<ExecEvent> trace;
};

// Deterministic discrete-event primary. Ties at equal times are broken by
// transaction order in the workload.
PrimaryResult run_primary_discrete(std::span<const TxnSpec> workload, const SimParams& params,
                                   std::size_t segment_capacity = kDefaultSegmentCapacity);

// Source of transactions for executor threads. next() may block (open-loop
// pacing) and returns nullopt when the thread should stop.
class TxnFeed {
 public:
  virtual ~TxnFeed() = default;
  virtual std::optional<TxnSpec> next(std::size_t thread) = 0;
};

// Pre-generated transactions released at their arrival offsets (ns from
// start). With `paced` false they are released as fast as threads take them.
class ListFeed : public TxnFeed {
 public:
  ListFeed(std::vector<TxnSpec> txns, bool paced);
  std::optional<TxnSpec> next(std::size_t thread) override;
  void set_start(Clock::time_point start) { start_ = start; }

 private:
  std::mutex mu_;
  std::vector<TxnSpec> txns_;
  std::size_t next_ = 0;
  bool paced_;
  Clock::time_point start_ = Clock::now();
};

// Closed-loop clients: each thread generates its next transaction as soon
// as the previous one commits, until the deadline.
class ClosedLoopFeed : public TxnFeed {
 public:
  using Generator = std::function<TxnSpec(std::size_t thread, std::uint64_t index)>;
  ClosedLoopFeed(Generator gen, std::size_t threads, Clock::time_point deadline);
  std::optional<TxnSpec> next(std::size_t thread) override;

 private:
  Generator gen_;
  std::vector<std::uint64_t> counts_;
  Clock::time_point deadline_;
};

struct CommitInfo {
  TxnId txn = 0;
  Timestamp commit_ts = 0;
  Clock::time_point at{};
};

struct EngineOptions {
  std::size_t threads = 1;
  const OpCost* cost = nullptr;
  std::size_t segment_capacity = kDefaultSegmentCapacity;
  bool streaming = true;  // merge thread logs while running
  bool trace = false;
  std::chrono::microseconds coalesce_period{200};
};

// Real-mode primary. Executor threads append committed transactions to their
// own thread log; a coalescer merges them by commit timestamp into `out`,
// either continuously (streaming) or once all executors quiesce.
class PrimaryEngine {
 public:
  PrimaryEngine(EngineOptions options, TxnFeed& feed, LogStream& out);
  ~PrimaryEngine();
  PrimaryEngine(const PrimaryEngine&) = delete;
  PrimaryEngine& operator=(const PrimaryEngine&) = delete;

  void start();
  // Waits for the feed to drain, flushes the log and closes `out`. Rethrows
  // the first executor failure (e.g. a deadlock).
  void join();

  Store& store() { return *store_; }
  std::unique_ptr<Store> take_store() { return std::move(store_); }
  std::vector<CommitInfo> commits() const;
  std::vector<ExecEvent> trace() const;
  Clock::time_point started_at() const { return started_at_; }

 private:
  struct ThreadState;

  void run_executor(std::size_t thread);
  void execute(ThreadState& ts, const TxnSpec& txn);
  void run_coalescer();
  // Moves every committed entry with counter <= bound into the builder.
  void drain_ready(std::uint64_t bound, SegmentBuilder& builder);
  std::uint64_t safe_bound() const;
  void raise_clock(ThreadState& ts);

  EngineOptions options_;
  TxnFeed& feed_;
  LogStream& out_;
  std::unique_ptr<Store> store_ = std::make_unique<Store>();
  LockTable locks_;
  std::vector<std::unique_ptr<ThreadState>> threads_;
  std::atomic<std::uint64_t> global_counter_{0};
  std::atomic<std::uint64_t> ticket_{0};
  std::atomic<std::size_t> running_{0};
  std::thread coalescer_;
  std::vector<std::thread> executors_;
  std::mutex coalesce_mu_;
  std::condition_variable coalesce_cv_;
  std::atomic<bool> executors_done_{false};
  std::mutex error_mu_;
  std::exception_ptr error_;
  Clock::time_point started_at_{};
  bool joined_ = false;
};

// Runs a workload to completion in the chosen mode and returns the final
// store, the coalesced log and f_p per transaction. Real mode ignores
// arrival times unless `paced` is set.
PrimaryResult run_primary_real(std::span<const TxnSpec> workload, std::size_t threads,
                               const OpCost& cost, std::size_t segment_capacity = kDefaultSegmentCapacity,
                               bool trace = false, bool paced = false);

enum class ExecMode { kReal, kDiscrete };

ExecMode parse_mode(std::string_view name);

// Dispatches on `mode`. Real mode runs params.m threads and models each
// operation as a timed wait of params.e microseconds.
PrimaryResult run_primary(std::span<const TxnSpec> workload, const SimParams& params, ExecMode mode,
                          std::size_t segment_capacity = kDefaultSegmentCapacity);

}  // namespace c5
