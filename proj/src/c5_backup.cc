// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include "c5/c5_backup.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "protocols.h"

namespace c5 {

void preprocess_segment(LogSegment& segment, LastWriterMap& last_writer) {
  for (LogRecord& r : segment.records) {
    Seq& last = last_writer[r.key()];
    r.prev_seq = last;
    last = r.seq;
  }
  segment.preprocessed = true;
}

bool is_safe(const LogRecord& record, const Store& store) {
  const Seq head = store.head_seq(record.table_id, record.row_id);
  if (head == record.prev_seq) return true;
  if (head > record.prev_seq) {
    throw OrderingViolation("write " + std::to_string(record.seq) + " on row (" + std::to_string(record.table_id) +
                            "," + std::to_string(record.row_id) + ") follows seq " +
                            std::to_string(record.prev_seq) + " but the row is already at seq " +
                            std::to_string(head));
  }
  return false;
}

void snapshotter_advance_watermark(SnapshotCursor& cursor, std::span<const Seq> watermarks,
                                   const BoundaryIndex& boundaries) {
  if (watermarks.empty()) return;
  const Seq candidate = *std::min_element(watermarks.begin(), watermarks.end());
  const Seq n = boundaries.largest_at_most(candidate);
  if (n <= cursor.c()) return;
  if (n > cursor.n()) cursor.set_next(n);
  cursor.merge();
}

void RateEstimate::observe(std::uint64_t installs) {
  value_ = alpha_ * static_cast<double>(installs) + (1.0 - alpha_) * value_;
}

std::int64_t RateEstimate::value() const {
  return std::max<std::int64_t>(1, std::llround(value_));
}

Seq choose_blocking_next(Seq c, std::int64_t estimate, const BoundaryIndex& boundaries, std::int64_t headroom) {
  if (estimate <= 0) throw ConfigError("estimate", "rate estimate must be positive");
  const Seq target = c + static_cast<Seq>(estimate * headroom);
  if (auto b = boundaries.smallest_at_least(target)) return *b;
  return std::max(c, boundaries.last());
}

ReadResult read_only_txn(const Store& store, const SnapshotCursor& cursor, std::span<const RowKey> rows) {
  ReadResult out;
  out.c = cursor.c();
  out.values.reserve(rows.size());
  for (const RowKey& k : rows) out.values.push_back(store.read_at(k.table, k.row, out.c));
  return out;
}

namespace {

constexpr Seq kDone = std::numeric_limits<Seq>::max();

// ---------------------------------------------------------------------------
// Watermark variant

class WatermarkBackup final : public Backup {
 public:
  WatermarkBackup(const BackupConfig& config, LogStream& log, Store& store, SnapshotCursor& cursor)
      : Backup(config, log, store, cursor) {
    for (std::size_t i = 0; i < config.workers; ++i) workers_.push_back(std::make_unique<Worker>());
  }
  ~WatermarkBackup() override { shutdown(); }

  BackupStats stats() const override {
    BackupStats s = Backup::stats();
    for (const auto& w : workers_) {
      s.deferrals += w->deferrals.load();
      s.rechecks += w->rechecks.load();
    }
    return s;
  }

  std::string diagnostics() const override {
    std::ostringstream out;
    out << Backup::diagnostics() << " preprocessed=" << preprocessed_.load() << " watermarks=";
    for (const auto& w : workers_) {
      const Seq v = w->watermark.load();
      out << (v == kDone ? std::string("done") : std::to_string(v)) << ',';
    }
    out << " deferred=";
    for (const auto& w : workers_) out << w->deferred_size.load() << ',';
    return out.str();
  }

 protected:
  void launch() override {
    spawn([this] { run_scheduler(); });
    for (std::size_t i = 0; i < workers_.size(); ++i) spawn([this, i] { run_worker(i); });
  }

  void wake_all() override {
    for (auto& w : workers_) w->segments.notify();
  }

  void snapshot_tick(bool) override {
    boundaries_.refresh(log_);
    if (config_.chaos) {
      // Exposes whatever has been shipped, installed or not.
      advance_to(boundaries_.last());
      return;
    }
    const std::size_t ready = preprocessed_.load(std::memory_order_acquire);
    std::vector<Seq> marks;
    marks.reserve(workers_.size());
    for (const auto& w : workers_) marks.push_back(std::max(w->watermark.load(std::memory_order_acquire), idle_bound(*w, ready)));
    const Seq n = boundaries_.largest_at_most(*std::min_element(marks.begin(), marks.end()));
    advance_to(n);
  }

 private:
  struct Worker {
    std::atomic<Seq> watermark{0};
    WaitSlot segments;
    std::atomic<std::uint64_t> deferrals{0};
    std::atomic<std::uint64_t> rechecks{0};
    std::atomic<std::size_t> deferred_size{0};
    // Next unprocessed assigned segment and oldest deferred seq (0 if none),
    // published together so the snapshotter can refresh an idle worker's
    // bound without waking it.
    mutable std::mutex mu;
    std::size_t next_segment = 0;
    Seq deferred_front = 0;
  };

  // A watermark for `w` computed from its published state: everything it
  // owns before its next segment is installed except the deferred writes.
  Seq idle_bound(const Worker& w, std::size_t ready) const {
    std::size_t next;
    Seq front;
    {
      std::lock_guard lock(w.mu);
      next = w.next_segment;
      front = w.deferred_front;
    }
    const std::size_t limit = std::min(next, ready);
    Seq bound = limit == 0 ? 0 : *segment_last_.find(limit - 1);
    if (front != 0) bound = std::min(bound, front - 1);
    return bound;
  }

  void run_scheduler() {
    LastWriterMap last_writer;
    Seq last = 0;
    for (std::size_t s = 0;; ++s) {
      LogSegment* seg = next_segment(s);
      if (seg == nullptr) break;
      preprocess_segment(*seg, last_writer);
      if (!seg->records.empty()) last = seg->records.back().seq;
      segment_last_.at(s) = last;
      preprocessed_.store(s + 1, std::memory_order_release);
      workers_[s % workers_.size()]->segments.notify();
    }
    scheduler_done_.store(true, std::memory_order_release);
    for (auto& w : workers_) w->segments.notify();
  }

  void run_worker(std::size_t id) {
    Worker& me = *workers_[id];
    const std::size_t stride = workers_.size();
    std::deque<const LogRecord*> deferred;

    auto publish = [&](Seq bound) {
      if (!deferred.empty()) bound = std::min(bound, deferred.front()->seq - 1);
      if (bound > me.watermark.load(std::memory_order_relaxed)) me.watermark.store(bound, std::memory_order_release);
    };
    auto defer = [&](const LogRecord& r) {
      deferred.push_back(&r);
      me.deferrals.fetch_add(1, std::memory_order_relaxed);
    };
    // One pass over the deferred queue in log order; returns whether
    // anything was installed.
    auto recheck = [&] {
      me.rechecks.fetch_add(1, std::memory_order_relaxed);
      std::deque<const LogRecord*> keep;
      for (const LogRecord* r : deferred) {
        if (is_safe(*r, store_)) {
          install(*r);
        } else {
          keep.push_back(r);
        }
      }
      const bool progress = keep.size() != deferred.size();
      deferred.swap(keep);
      me.deferred_size.store(deferred.size(), std::memory_order_relaxed);
      return progress;
    };

    std::size_t next = id;
    auto sync = [&] {
      std::lock_guard lock(me.mu);
      me.next_segment = next;
      me.deferred_front = deferred.empty() ? 0 : deferred.front()->seq;
    };
    sync();
    for (;;) {
      if (aborted()) return;
      const std::uint32_t seg_epoch = me.segments.epoch();
      const bool finished = scheduler_done_.load(std::memory_order_acquire);
      const std::size_t ready = preprocessed_.load(std::memory_order_acquire);

      if (next < ready) {
        const LogSegment& seg = *log_.get(next);
        for (const LogRecord& r : seg.records) {
          publish(r.seq - 1);
          if (config_.chaos || is_safe(r, store_)) {
            install(r);
          } else {
            defer(r);
          }
        }
        if (!deferred.empty()) recheck();
        me.deferred_size.store(deferred.size(), std::memory_order_relaxed);
        next += stride;
        sync();
        continue;
      }

      // Nothing assigned is available: everything this worker owns below
      // the newest preprocessed segment is installed or deferred.
      bool progress = false;
      if (!deferred.empty() && (progress = recheck())) sync();
      publish(ready == 0 ? 0 : segment_last_.at(ready - 1));
      if (finished && deferred.empty()) {
        me.watermark.store(kDone, std::memory_order_release);
        return;
      }
      if (progress) continue;
      if (!deferred.empty()) {
        WaitSlot& slot = row_slot(deferred.front()->key());
        const std::uint32_t row_epoch = slot.epoch();
        if (is_safe(*deferred.front(), store_)) continue;
        slot.wait_for(row_epoch, std::chrono::microseconds(200));
      } else {
        me.segments.wait_for(seg_epoch, std::chrono::milliseconds(5));
      }
    }
  }

  std::vector<std::unique_ptr<Worker>> workers_;
  ChunkedArray<Seq, 10, 16384> segment_last_;
  std::atomic<std::size_t> preprocessed_{0};
  std::atomic<bool> scheduler_done_{false};
};

// ---------------------------------------------------------------------------
// Transaction-chain variant

class TxnChainBackup final : public Backup {
 public:
  TxnChainBackup(const BackupConfig& config, LogStream& log, Store& store, SnapshotCursor& cursor)
      : Backup(config, log, store, cursor) {}
  ~TxnChainBackup() override { shutdown(); }

  std::string diagnostics() const override {
    std::ostringstream out;
    out << Backup::diagnostics() << " estimate=" << estimate_value_.load();
    {
      std::lock_guard lock(queue_mu_);
      out << " queued_txns=" << queue_.size();
    }
    return out.str();
  }

 protected:
  std::chrono::microseconds snapshot_period() const override { return config_.snapshot_interval; }

  void launch() override {
    spawn([this] { run_scheduler(); });
    for (std::size_t i = 0; i < config_.workers; ++i) spawn([this] { run_worker(); });
  }

  void wake_all() override {
    { std::lock_guard lock(queue_mu_); }
    queue_cv_.notify_all();
  }

  void snapshot_tick(bool final) override {
    boundaries_.refresh(log_);
    TickRecord tick;
    tick.at = Clock::now();
    tick.c_before = cursor_.c();
    const Seq n = cursor_.n();
    tick.had_work = n > tick.c_before;

    if (tick.had_work) {
      // Block until (c, n] is complete, then the next snapshot becomes current.
      while (!config_.chaos && scan_installed() < n) {
        const std::uint32_t epoch = progress_.epoch();
        if (scan_installed() >= n) break;
        if (aborted()) return;
        progress_.wait_for(epoch, std::chrono::milliseconds(1));
      }
      advance_to(n);
    }
    const std::uint64_t installs = installs_.load();
    estimate_.observe(installs - installs_at_last_tick_);
    installs_at_last_tick_ = installs;
    estimate_value_.store(estimate_.value(), std::memory_order_relaxed);

    const Seq c = cursor_.c();
    if (final) {
      advance_to(boundaries_.last());
    } else {
      const Seq next = choose_blocking_next(c, estimate_.value(), boundaries_);
      if (next > cursor_.n()) cursor_.set_next(next);
    }
    tick.c_after = cursor_.c();
    ticks_.push_back(tick);
  }

 private:
  struct Task {
    const LogSegment* segment;
    std::size_t first;
    std::size_t count;
  };

  void run_scheduler() {
    LastWriterMap last_writer;
    for (std::size_t s = 0;; ++s) {
      LogSegment* seg = next_segment(s);
      if (seg == nullptr) break;
      preprocess_segment(*seg, last_writer);
      std::vector<Task> tasks;
      std::size_t first = 0;
      for (std::size_t i = 0; i < seg->records.size(); ++i) {
        if (seg->records[i].last_in_txn || i + 1 == seg->records.size()) {
          tasks.push_back({seg, first, i - first + 1});
          first = i + 1;
        }
      }
      {
        std::lock_guard lock(queue_mu_);
        for (const Task& t : tasks) queue_.push_back(t);
      }
      queue_cv_.notify_all();
    }
    {
      std::lock_guard lock(queue_mu_);
      scheduler_done_ = true;
    }
    queue_cv_.notify_all();
  }

  void run_worker() {
    for (;;) {
      Task task;
      {
        std::unique_lock lock(queue_mu_);
        queue_cv_.wait(lock, [&] { return !queue_.empty() || scheduler_done_ || aborted(); });
        if (aborted() || queue_.empty()) return;
        task = queue_.front();
        queue_.pop_front();
      }
      for (std::size_t i = task.first; i < task.first + task.count; ++i) {
        const LogRecord& r = task.segment->records[i];
        if (!config_.chaos) {
          cursor_.wait_until_admitted(r.seq);
          WaitSlot& slot = row_slot(r.key());
          for (;;) {
            const std::uint32_t epoch = slot.epoch();
            if (is_safe(r, store_)) break;
            if (aborted()) return;
            slot.wait_for(epoch, std::chrono::milliseconds(2));
          }
        }
        if (aborted()) return;
        install(r);
      }
    }
  }

  mutable std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Task> queue_;
  bool scheduler_done_ = false;
  RateEstimate estimate_;
  std::atomic<std::int64_t> estimate_value_{1};
  std::uint64_t installs_at_last_tick_ = 0;
};

}  // namespace

std::unique_ptr<Backup> make_watermark_backup(const BackupConfig& config, LogStream& log, Store& store,
                                              SnapshotCursor& cursor) {
  return std::make_unique<WatermarkBackup>(config, log, store, cursor);
}

std::unique_ptr<Backup> make_txnchain_backup(const BackupConfig& config, LogStream& log, Store& store,
                                             SnapshotCursor& cursor) {
  return std::make_unique<TxnChainBackup>(config, log, store, cursor);
}

}  // namespace c5
