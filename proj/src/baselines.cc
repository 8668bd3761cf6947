// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include "c5/baselines.h"

#include <deque>
#include <sstream>
#include <unordered_map>

#include "protocols.h"

namespace c5 {

namespace {

class SingleBackup final : public Backup {
 public:
  using Backup::Backup;
  ~SingleBackup() override { shutdown(); }

 protected:
  void launch() override {
    spawn([this] {
      for (std::size_t s = 0;; ++s) {
        const LogSegment* seg = next_segment(s);
        if (seg == nullptr) return;
        for (const LogRecord& r : seg->records) {
          if (aborted()) return;
          install(r);
        }
      }
    });
  }
};

// ---------------------------------------------------------------------------

class TxnGranularityBackup final : public Backup {
 public:
  using Backup::Backup;
  ~TxnGranularityBackup() override { shutdown(); }

  std::string diagnostics() const override {
    std::ostringstream out;
    std::lock_guard lock(mu_);
    out << Backup::diagnostics() << " ready_txns=" << ready_.size() << " unfinished_txns=" << unfinished_;
    return out.str();
  }

 protected:
  void launch() override {
    spawn([this] { run_scheduler(); });
    for (std::size_t i = 0; i < config_.workers; ++i) spawn([this] { run_worker(); });
  }

  void wake_all() override {
    { std::lock_guard lock(mu_); }
    cv_.notify_all();
  }

 private:
  struct Node {
    const LogSegment* segment = nullptr;
    std::size_t first = 0;
    std::size_t count = 0;
    std::atomic<std::size_t> pending{1};  // unfinished predecessors + a guard
    std::mutex mu;
    bool done = false;
    std::vector<Node*> successors;
  };

  void make_ready(Node* node) {
    {
      std::lock_guard lock(mu_);
      ready_.push_back(node);
    }
    cv_.notify_one();
  }

  void release(Node* node) {
    if (node->pending.fetch_sub(1) == 1) make_ready(node);
  }

  void run_scheduler() {
    DependencyTracker tracker(config_.prune_edges);
    for (std::size_t s = 0;; ++s) {
      const LogSegment* seg = next_segment(s);
      if (seg == nullptr) break;
      std::size_t first = 0;
      for (std::size_t i = 0; i < seg->records.size(); ++i) {
        if (!seg->records[i].last_in_txn && i + 1 != seg->records.size()) continue;
        Node& node = nodes_.emplace_back();
        node.segment = seg;
        node.first = first;
        node.count = i - first + 1;
        first = i + 1;
        {
          std::lock_guard lock(mu_);
          ++unfinished_;
        }
        for (std::size_t p : tracker.add_txn(std::span(seg->records).subspan(node.first, node.count))) {
          Node& pred = nodes_[p];
          std::lock_guard lock(pred.mu);
          if (!pred.done) {
            pred.successors.push_back(&node);
            node.pending.fetch_add(1);
          }
        }
        release(&node);
      }
    }
    {
      std::lock_guard lock(mu_);
      scheduler_done_ = true;
    }
    cv_.notify_all();
  }

  void run_worker() {
    for (;;) {
      Node* node;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !ready_.empty() || (scheduler_done_ && unfinished_ == 0) || aborted(); });
        if (aborted() || ready_.empty()) return;
        node = ready_.front();
        ready_.pop_front();
      }
      for (std::size_t i = node->first; i < node->first + node->count; ++i) {
        if (aborted()) return;
        install(node->segment->records[i]);
      }
      std::vector<Node*> successors;
      {
        std::lock_guard lock(node->mu);
        node->done = true;
        successors.swap(node->successors);
      }
      for (Node* succ : successors) release(succ);
      bool last = false;
      {
        std::lock_guard lock(mu_);
        last = --unfinished_ == 0 && scheduler_done_;
      }
      if (last) cv_.notify_all();
    }
  }

  std::deque<Node> nodes_;  // scheduler-owned; workers hold pointers
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Node*> ready_;
  std::size_t unfinished_ = 0;
  bool scheduler_done_ = false;
};

// ---------------------------------------------------------------------------

class PageGranularityBackup final : public Backup {
 public:
  using Backup::Backup;
  ~PageGranularityBackup() override { shutdown(); }

  std::string diagnostics() const override {
    std::ostringstream out;
    std::lock_guard lock(mu_);
    out << Backup::diagnostics() << " ready_pages=" << ready_.size() << " queued_writes=" << remaining_;
    return out.str();
  }

 protected:
  void launch() override {
    spawn([this] { run_scheduler(); });
    for (std::size_t i = 0; i < config_.workers; ++i) spawn([this] { run_worker(); });
  }

  void wake_all() override {
    { std::lock_guard lock(mu_); }
    cv_.notify_all();
  }

 private:
  struct PageQueue {
    std::deque<const LogRecord*> pending;
    bool executing = false;
  };

  void run_scheduler() {
    for (std::size_t s = 0;; ++s) {
      const LogSegment* seg = next_segment(s);
      if (seg == nullptr) break;
      {
        std::lock_guard lock(mu_);
        for (const LogRecord& r : seg->records) {
          PageQueue& q = pages_[config_.pages.page_of(r)];
          q.pending.push_back(&r);
          ++remaining_;
          if (!q.executing && q.pending.size() == 1) ready_.push_back(&q);
        }
      }
      cv_.notify_all();
    }
    {
      std::lock_guard lock(mu_);
      scheduler_done_ = true;
    }
    cv_.notify_all();
  }

  void run_worker() {
    for (;;) {
      PageQueue* q;
      const LogRecord* r;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !ready_.empty() || (scheduler_done_ && remaining_ == 0) || aborted(); });
        if (aborted() || ready_.empty()) return;
        q = ready_.front();
        ready_.pop_front();
        q->executing = true;
        r = q->pending.front();
      }
      install(*r);
      bool notify_all = false;
      {
        std::lock_guard lock(mu_);
        q->pending.pop_front();
        q->executing = false;
        // Back of the line, as with per-row queues.
        if (!q->pending.empty()) ready_.push_back(q);
        notify_all = --remaining_ == 0 && scheduler_done_;
      }
      if (notify_all) {
        cv_.notify_all();
      } else {
        cv_.notify_one();
      }
    }
  }

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::unordered_map<RowKey, PageQueue, RowKeyHash> pages_;  // node-based: addresses stay valid
  std::deque<PageQueue*> ready_;
  std::size_t remaining_ = 0;
  bool scheduler_done_ = false;
};

BackupConfig baseline_config(Protocol p, std::size_t workers) {
  BackupConfig config;
  config.protocol = p;
  config.workers = workers;
  return config;
}

}  // namespace

std::unique_ptr<Backup> make_single_backup(const BackupConfig& config, LogStream& log, Store& store,
                                           SnapshotCursor& cursor) {
  return std::make_unique<SingleBackup>(config, log, store, cursor);
}

std::unique_ptr<Backup> make_txn_backup(const BackupConfig& config, LogStream& log, Store& store,
                                        SnapshotCursor& cursor) {
  return std::make_unique<TxnGranularityBackup>(config, log, store, cursor);
}

std::unique_ptr<Backup> make_page_backup(const BackupConfig& config, LogStream& log, Store& store,
                                         SnapshotCursor& cursor) {
  return std::make_unique<PageGranularityBackup>(config, log, store, cursor);
}

void replay_single_threaded(std::span<const LogSegment> log, Store& store) {
  replay(baseline_config(Protocol::kSingle, 1), log, store);
}

void replay_txn_granularity(std::span<const LogSegment> log, Store& store, std::size_t workers, bool prune_edges) {
  BackupConfig config = baseline_config(Protocol::kTxnGranularity, workers);
  config.prune_edges = prune_edges;
  replay(config, log, store);
}

void replay_page_granularity(std::span<const LogSegment> log, Store& store, std::size_t workers,
                             const PageMap& pages) {
  BackupConfig config = baseline_config(Protocol::kPageGranularity, workers);
  config.pages = pages;
  replay(config, log, store);
}

}  // namespace c5
