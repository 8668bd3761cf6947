// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// Backup runtime shared by every replay protocol: a scheduler thread that
// consumes the log stream, a worker pool, and a snapshotter thread that
// exposes prefix snapshots through the (c, n) cursor.

#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <exception>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "c5/constraints.h"
#include "c5/log.h"
#include "c5/mvstore.h"

namespace c5 {

struct BackupConfig {
  Protocol protocol = Protocol::kC5Watermark;
  std::size_t workers = 4;
  // Blocking snapshot interval I (txn-chain only).
  std::chrono::microseconds snapshot_interval{10'000};
  // Polling period of the non-blocking snapshotters.
  std::chrono::microseconds snapshot_poll{200};
  PageMap pages;
  const OpCost* cost = nullptr;  // per-write work on the backup
  // Skips the safety check and lets c run ahead of installs. Fault injection
  // for checker tests only.
  bool chaos = false;
  bool prune_edges = true;

  void validate() const;
};

struct AdvanceRecord {
  Seq c = 0;
  Clock::time_point at{};
};

// One blocking-snapshotter tick.
struct TickRecord {
  Clock::time_point at{};
  Seq c_before = 0;
  Seq c_after = 0;
  bool had_work = false;  // writes were admitted but not yet merged at the tick
};

struct BackupStats {
  std::uint64_t installs = 0;
  std::uint64_t deferrals = 0;
  std::uint64_t rechecks = 0;
};

// Sorted transaction boundaries (last_in_txn seqs) seen so far.
class BoundaryIndex {
 public:
  BoundaryIndex() = default;
  explicit BoundaryIndex(std::vector<Seq> boundaries);

  void add(Seq boundary);
  // Reads boundaries from stream segments not yet scanned.
  void refresh(const LogStream& stream);

  // Largest boundary <= limit, or 0.
  Seq largest_at_most(Seq limit) const;
  std::optional<Seq> smallest_at_least(Seq target) const;
  Seq last() const { return bounds_.empty() ? 0 : bounds_.back(); }
  std::span<const Seq> all() const { return bounds_; }

 private:
  std::vector<Seq> bounds_;
  std::size_t scanned_segments_ = 0;
};

// Epoch-based wakeup channel. Waiters sample epoch() before checking their
// condition, then wait_for(sample, ...). notify() is cheap when nobody waits.
class WaitSlot {
 public:
  std::uint32_t epoch() const { return epoch_.load(); }
  void notify();
  void wait_for(std::uint32_t seen, std::chrono::microseconds timeout);

 private:
  std::atomic<std::uint32_t> epoch_{0};
  std::atomic<std::uint32_t> waiters_{0};
  std::mutex mu_;
  std::condition_variable cv_;
};

class Backup {
 public:
  Backup(const BackupConfig& config, LogStream& log, Store& store, SnapshotCursor& cursor);
  virtual ~Backup();
  Backup(const Backup&) = delete;
  Backup& operator=(const Backup&) = delete;

  void start();
  // Waits until the whole log is installed and c covers it, then stops the
  // snapshotter. Rethrows the first thread failure.
  void join();
  // Waits up to `timeout` for the log to be fully installed.
  bool wait_applied(std::chrono::milliseconds timeout);
  // Stops every thread as soon as possible; join() then returns promptly.
  void abort();

  const WriteTracker& tracker() const { return tracker_; }
  // Valid after join().
  const std::vector<AdvanceRecord>& advances() const { return advances_; }
  const std::vector<TickRecord>& ticks() const { return ticks_; }
  virtual BackupStats stats() const;
  virtual std::string diagnostics() const;

  const BackupConfig& config() const { return config_; }

 protected:
  // Starts scheduler and worker threads via spawn().
  virtual void launch() = 0;
  // One snapshotter step; `final` is set once every write is installed.
  virtual void snapshot_tick(bool final);
  virtual std::chrono::microseconds snapshot_period() const { return config_.snapshot_poll; }
  // Wakes threads blocked in protocol-specific waits so they see aborted().
  virtual void wake_all() {}

  void spawn(std::function<void()> body);
  void install(const LogRecord& r);
  void advance_to(Seq n);
  bool aborted() const { return aborted_.load(std::memory_order_acquire); }
  // Waits for segment `index`; nullptr once the stream closed without it or
  // the backup aborted.
  LogSegment* next_segment(std::size_t index);
  void fail(std::exception_ptr e);
  // Aborts and joins if still running. Subclasses call it from their
  // destructors, before their own members go away.
  void shutdown() noexcept;

  BackupConfig config_;
  LogStream& log_;
  Store& store_;
  SnapshotCursor& cursor_;
  WriteTracker tracker_;
  static constexpr std::size_t kRowSlots = 256;
  WaitSlot& row_slot(RowKey key) { return row_slots_[RowKeyHash{}(key) % kRowSlots]; }

  // Notified on every install.
  WaitSlot progress_;
  std::array<WaitSlot, kRowSlots> row_slots_;
  BoundaryIndex boundaries_;
  std::vector<AdvanceRecord> advances_;
  std::vector<TickRecord> ticks_;
  std::atomic<std::uint64_t> installs_{0};
  // Every seq <= scanned_ is installed (advanced by the snapshotter).
  Seq scanned_ = 0;
  // Moves scanned_ forward over installed seqs.
  Seq scan_installed();

 private:
  void run_snapshotter();

  std::vector<std::thread> threads_;
  std::thread snapshotter_;
  std::atomic<std::size_t> running_{0};
  std::atomic<bool> applied_{false};
  std::atomic<bool> aborted_{false};
  std::mutex mu_;
  std::condition_variable cv_;
  std::exception_ptr error_;
  bool joined_ = false;
};

std::unique_ptr<Backup> make_backup(const BackupConfig& config, LogStream& log, Store& store,
                                    SnapshotCursor& cursor);

// Replays a complete log with the configured protocol and returns once the
// final snapshot covers it.
void replay(const BackupConfig& config, LogStream& log, Store& store, SnapshotCursor& cursor);
void replay(const BackupConfig& config, std::span<const LogSegment> log, Store& store);

}  // namespace c5
