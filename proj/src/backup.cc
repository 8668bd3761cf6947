// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include "c5/backup.h"

#include <algorithm>
#include <sstream>

#include "protocols.h"

namespace c5 {

void BackupConfig::validate() const {
  if (workers < 1) throw ConfigError("workers", "need at least one backup worker");
  if (snapshot_interval.count() <= 0) throw ConfigError("snapshot_interval", "must be positive");
  if (snapshot_poll.count() <= 0) throw ConfigError("snapshot_poll", "must be positive");
  if (pages.rows_per_page < 1) throw ConfigError("rows_per_page", "must be at least 1");
}

// ---------------------------------------------------------------------------
// BoundaryIndex

BoundaryIndex::BoundaryIndex(std::vector<Seq> boundaries) : bounds_(std::move(boundaries)) {
  if (!std::is_sorted(bounds_.begin(), bounds_.end())) throw InputError("boundaries must be sorted");
}

void BoundaryIndex::add(Seq boundary) {
  if (!bounds_.empty() && boundary <= bounds_.back()) {
    throw InputError("boundary " + std::to_string(boundary) + " does not follow " + std::to_string(bounds_.back()));
  }
  bounds_.push_back(boundary);
}

void BoundaryIndex::refresh(const LogStream& stream) {
  const std::size_t available = stream.size();
  for (; scanned_segments_ < available; ++scanned_segments_) {
    for (const LogRecord& r : stream.get(scanned_segments_)->records) {
      if (r.last_in_txn) add(r.seq);
    }
  }
}

Seq BoundaryIndex::largest_at_most(Seq limit) const {
  auto it = std::upper_bound(bounds_.begin(), bounds_.end(), limit);
  return it == bounds_.begin() ? 0 : *std::prev(it);
}

std::optional<Seq> BoundaryIndex::smallest_at_least(Seq target) const {
  auto it = std::lower_bound(bounds_.begin(), bounds_.end(), target);
  if (it == bounds_.end()) return std::nullopt;
  return *it;
}

// ---------------------------------------------------------------------------
// WaitSlot

void WaitSlot::notify() {
  epoch_.fetch_add(1);
  if (waiters_.load() > 0) {
    { std::lock_guard lock(mu_); }
    cv_.notify_all();
  }
}

void WaitSlot::wait_for(std::uint32_t seen, std::chrono::microseconds timeout) {
  waiters_.fetch_add(1);
  {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return epoch_.load() != seen; });
  }
  waiters_.fetch_sub(1);
}

// ---------------------------------------------------------------------------
// Backup

Backup::Backup(const BackupConfig& config, LogStream& log, Store& store, SnapshotCursor& cursor)
    : config_(config), log_(log), store_(store), cursor_(cursor) {
  config_.validate();
}

Backup::~Backup() { shutdown(); }

void Backup::shutdown() noexcept {
  if (joined_) return;
  abort();
  try {
    join();
  } catch (...) {
  }
}

void Backup::start() {
  launch();
  snapshotter_ = std::thread([this] { run_snapshotter(); });
}

void Backup::spawn(std::function<void()> body) {
  running_.fetch_add(1);
  threads_.emplace_back([this, body = std::move(body)] {
    tune_thread_for_timed_waits();
    try {
      body();
    } catch (...) {
      fail(std::current_exception());
    }
    if (running_.fetch_sub(1) == 1) {
      {
        std::lock_guard lock(mu_);
        applied_.store(!aborted(), std::memory_order_release);
      }
      cv_.notify_all();
    }
  });
}

void Backup::fail(std::exception_ptr e) {
  {
    std::lock_guard lock(mu_);
    if (!error_) error_ = e;
  }
  abort();
}

void Backup::abort() {
  {
    std::lock_guard lock(mu_);
    aborted_.store(true, std::memory_order_release);
  }
  cv_.notify_all();
  cursor_.release_all();
  progress_.notify();
  for (WaitSlot& s : row_slots_) s.notify();
  wake_all();
}

bool Backup::wait_applied(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return applied_.load() || aborted(); });
  return applied_.load();
}

void Backup::join() {
  if (joined_) return;
  joined_ = true;
  for (auto& t : threads_) t.join();
  if (snapshotter_.joinable()) snapshotter_.join();
  if (error_) std::rethrow_exception(error_);
  if (aborted()) throw Error("backup aborted before applying the whole log");
}

void Backup::run_snapshotter() {
  tune_thread_for_timed_waits();
  try {
    for (;;) {
      if (aborted()) return;
      const bool final = applied_.load(std::memory_order_acquire);
      snapshot_tick(final);
      if (final) return;
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, snapshot_period(), [&] { return applied_.load() || aborted(); });
    }
  } catch (...) {
    fail(std::current_exception());
  }
}

LogSegment* Backup::next_segment(std::size_t index) {
  for (;;) {
    if (aborted()) return nullptr;
    if (LogSegment* s = log_.wait_for(index, std::chrono::milliseconds(2))) return s;
    if (log_.closed() && log_.size() <= index) return nullptr;
  }
}

void Backup::install(const LogRecord& r) {
  if (config_.cost != nullptr) config_.cost->burn();
  std::optional<std::string> payload;
  if (r.op_kind != OpKind::kDelete) payload = r.value;
  if (config_.chaos) {
    store_.install_unchecked(r.table_id, r.row_id, r.seq, std::move(payload));
  } else {
    store_.install(r.table_id, r.row_id, r.seq, std::move(payload));
  }
  tracker_.mark(r.seq);
  installs_.fetch_add(1, std::memory_order_relaxed);
  row_slot(r.key()).notify();
  progress_.notify();
}

Seq Backup::scan_installed() {
  while (tracker_.installed(scanned_ + 1)) ++scanned_;
  return scanned_;
}

void Backup::advance_to(Seq n) {
  if (n <= cursor_.c()) return;
  if (n > cursor_.n()) cursor_.set_next(n);
  if (config_.chaos) {
    cursor_.merge();
  } else {
    merge_snapshots(cursor_, tracker_);
  }
  advances_.push_back({cursor_.c(), Clock::now()});
}

void Backup::snapshot_tick(bool) {
  boundaries_.refresh(log_);
  advance_to(boundaries_.largest_at_most(scan_installed()));
}

BackupStats Backup::stats() const {
  BackupStats s;
  s.installs = installs_.load();
  return s;
}

std::string Backup::diagnostics() const {
  std::ostringstream out;
  out << "protocol=" << to_string(config_.protocol) << " segments=" << log_.size()
      << " closed=" << (log_.closed() ? 1 : 0) << " installed=" << installs_.load() << " c=" << cursor_.c()
      << " n=" << cursor_.n();
  return out.str();
}

std::unique_ptr<Backup> make_backup(const BackupConfig& config, LogStream& log, Store& store,
                                    SnapshotCursor& cursor) {
  switch (config.protocol) {
    case Protocol::kC5Watermark:
      return make_watermark_backup(config, log, store, cursor);
    case Protocol::kC5TxnChain:
      return make_txnchain_backup(config, log, store, cursor);
    case Protocol::kSingle:
      return make_single_backup(config, log, store, cursor);
    case Protocol::kTxnGranularity:
      return make_txn_backup(config, log, store, cursor);
    case Protocol::kPageGranularity:
      return make_page_backup(config, log, store, cursor);
  }
  throw ConfigError("protocol", "unsupported");
}

void replay(const BackupConfig& config, LogStream& log, Store& store, SnapshotCursor& cursor) {
  auto backup = make_backup(config, log, store, cursor);
  backup->start();
  backup->join();
}

void replay(const BackupConfig& config, std::span<const LogSegment> log, Store& store) {
  auto stream = LogStream::from_segments(std::vector<LogSegment>(log.begin(), log.end()));
  SnapshotCursor cursor;
  replay(config, *stream, store, cursor);
}

}  // namespace c5
