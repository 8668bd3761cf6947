// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include "c5/primary.h"

#include <algorithm>
#include <limits>

namespace c5 {

namespace {

constexpr unsigned kThreadBits = 8;
constexpr std::uint64_t kNoBound = std::numeric_limits<std::uint64_t>::max();

OpKind log_kind(AccessKind k) {
  switch (k) {
    case AccessKind::kInsert:
      return OpKind::kInsert;
    case AccessKind::kUpdate:
      return OpKind::kUpdate;
    case AccessKind::kDelete:
      return OpKind::kDelete;
    case AccessKind::kRead:
      break;
  }
  throw Error("reads are not logged");
}

void fetch_max(std::atomic<std::uint64_t>& a, std::uint64_t v) {
  std::uint64_t cur = a.load(std::memory_order_relaxed);
  while (cur < v && !a.compare_exchange_weak(cur, v, std::memory_order_acq_rel)) {
  }
}

}  // namespace

std::string encode_i64(std::int64_t v) {
  std::string s(8, '\0');
  for (int i = 0; i < 8; ++i) s[i] = static_cast<char>(static_cast<std::uint64_t>(v) >> (8 * i));
  return s;
}

std::int64_t decode_i64(const std::optional<std::string>& payload) {
  if (!payload || payload->size() != 8) return 0;
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>((*payload)[i])} << (8 * i);
  return static_cast<std::int64_t>(v);
}

void SimParams::validate() const {
  if (m < 1) throw ConfigError("m", "primary needs at least one core");
  if (e <= 0) throw ConfigError("e", "primary op cost must be positive");
  if (d <= 0 || d > e) throw ConfigError("d", "backup op cost must satisfy 0 < d <= e");
}

// ---------------------------------------------------------------------------
// LockTable

std::uint64_t LockTable::acquire(TxnId txn, RowKey key) {
  std::unique_lock lock(mu_);
  Entry& e = entries_[key];
  if (!e.owner) {
    e.owner = txn;
    return e.last_counter;
  }
  if (*e.owner == txn) return e.last_counter;
  if (would_deadlock(txn, key)) {
    throw DeadlockError("transaction " + std::to_string(txn) + " waiting on row (" +
                        std::to_string(key.table) + "," + std::to_string(key.row) +
                        ") closes a wait-for cycle");
  }
  Waiter w;
  w.txn = txn;
  e.queue.push_back(&w);
  waiting_on_[txn] = key;
  w.cv.wait(lock, [&] { return w.granted; });
  return e.last_counter;
}

bool LockTable::would_deadlock(TxnId waiter, RowKey key) const {
  RowKey at = key;
  for (std::size_t hops = 0; hops <= waiting_on_.size() + 1; ++hops) {
    auto it = entries_.find(at);
    if (it == entries_.end() || !it->second.owner) return false;
    const TxnId owner = *it->second.owner;
    if (owner == waiter) return true;
    auto w = waiting_on_.find(owner);
    if (w == waiting_on_.end()) return false;
    at = w->second;
  }
  return true;
}

void LockTable::release_all(TxnId txn, std::span<const RowKey> keys, std::uint64_t commit_counter) {
  std::lock_guard lock(mu_);
  for (const RowKey& key : keys) {
    auto it = entries_.find(key);
    if (it == entries_.end() || it->second.owner != txn) continue;
    Entry& e = it->second;
    e.last_counter = std::max(e.last_counter, commit_counter);
    e.owner.reset();
    if (!e.queue.empty()) {
      Waiter* next = e.queue.front();
      e.queue.pop_front();
      e.owner = next->txn;
      waiting_on_.erase(next->txn);
      next->granted = true;
      next->cv.notify_one();
    }
  }
}

std::optional<TxnId> LockTable::owner(RowKey key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.owner;
}

std::size_t LockTable::waiters(RowKey key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.queue.size();
}

// ---------------------------------------------------------------------------
// Feeds

ListFeed::ListFeed(std::vector<TxnSpec> txns, bool paced) : txns_(std::move(txns)), paced_(paced) {}

std::optional<TxnSpec> ListFeed::next(std::size_t) {
  TxnSpec txn;
  {
    std::lock_guard lock(mu_);
    if (next_ >= txns_.size()) return std::nullopt;
    txn = std::move(txns_[next_++]);
  }
  if (paced_) std::this_thread::sleep_until(start_ + std::chrono::nanoseconds(txn.arrival));
  return txn;
}

ClosedLoopFeed::ClosedLoopFeed(Generator gen, std::size_t threads, Clock::time_point deadline)
    : gen_(std::move(gen)), counts_(threads, 0), deadline_(deadline) {}

std::optional<TxnSpec> ClosedLoopFeed::next(std::size_t thread) {
  if (Clock::now() >= deadline_) return std::nullopt;
  return gen_(thread, counts_[thread]++);
}

// ---------------------------------------------------------------------------
// PrimaryEngine

struct PrimaryEngine::ThreadState {
  std::size_t id = 0;
  // Every future commit counter of this thread is strictly greater.
  std::atomic<std::uint64_t> clock{0};
  std::atomic<bool> finished{false};
  // Set while a commit counter is being chosen and published.
  std::atomic<bool> committing{false};
  std::mutex log_mu;
  std::deque<ThreadLogEntry> pending;
  std::vector<CommitInfo> commits;
  std::vector<ExecEvent> trace;
};

PrimaryEngine::PrimaryEngine(EngineOptions options, TxnFeed& feed, LogStream& out)
    : options_(options), feed_(feed), out_(out) {
  if (options_.threads < 1 || options_.threads > (1u << kThreadBits))
    throw ConfigError("primary_threads", "must be between 1 and 256");
  for (std::size_t i = 0; i < options_.threads; ++i) {
    threads_.push_back(std::make_unique<ThreadState>());
    threads_.back()->id = i;
  }
}

PrimaryEngine::~PrimaryEngine() {
  if (!joined_ && !executors_.empty()) {
    try {
      join();
    } catch (...) {
    }
  }
}

void PrimaryEngine::start() {
  started_at_ = Clock::now();
  if (auto* list = dynamic_cast<ListFeed*>(&feed_)) list->set_start(started_at_);
  running_.store(options_.threads);
  for (std::size_t i = 0; i < options_.threads; ++i) {
    executors_.emplace_back([this, i] { run_executor(i); });
  }
  if (options_.streaming) coalescer_ = std::thread([this] { run_coalescer(); });
}

void PrimaryEngine::raise_clock(ThreadState& ts) {
  const std::uint64_t g = global_counter_.load();
  if (g > ts.clock.load(std::memory_order_relaxed)) ts.clock.store(g, std::memory_order_release);
}

void PrimaryEngine::run_executor(std::size_t thread) {
  tune_thread_for_timed_waits();
  ThreadState& ts = *threads_[thread];
  try {
    while (auto txn = feed_.next(thread)) {
      execute(ts, *txn);
    }
  } catch (...) {
    std::lock_guard lock(error_mu_);
    if (!error_) error_ = std::current_exception();
  }
  ts.finished.store(true, std::memory_order_release);
  running_.fetch_sub(1);
  coalesce_cv_.notify_one();
}

void PrimaryEngine::execute(ThreadState& ts, const TxnSpec& txn) {
  std::vector<RowKey> held;
  std::vector<std::pair<RowKey, std::optional<std::string>>> view;
  std::vector<LogRecord> records;
  std::uint64_t max_seen = 0;
  std::size_t write_index = 0;

  auto current = [&](RowKey key) -> std::optional<std::string> {
    for (auto it = view.rbegin(); it != view.rend(); ++it)
      if (it->first == key) return it->second;
    return store_->read_latest(key.table, key.row);
  };

  try {
    for (const Op& op : txn.ops) {
      const RowKey key = op.key();
      max_seen = std::max(max_seen, locks_.acquire(txn.id, key));
      if (std::find(held.begin(), held.end(), key) == held.end()) held.push_back(key);
      if (op.is_write() && options_.trace) {
        ts.trace.push_back({txn.id, write_index, ticket_.fetch_add(1, std::memory_order_relaxed)});
      }
      if (options_.cost != nullptr) options_.cost->burn();
      if (op.is_write()) {
        std::optional<std::string> value;
        if (op.kind != AccessKind::kDelete) {
          value = op.rule == ValueRule::kAdd ? encode_i64(decode_i64(current(key)) + op.delta) : op.value;
        }
        LogRecord r;
        r.txn_id = txn.id;
        r.table_id = key.table;
        r.row_id = key.row;
        r.op_kind = log_kind(op.kind);
        r.value = value.value_or("");
        records.push_back(std::move(r));
        view.emplace_back(key, std::move(value));
        ++write_index;
      }
    }
  } catch (...) {
    locks_.release_all(txn.id, held, 0);
    throw;
  }

  if (records.empty()) {
    locks_.release_all(txn.id, held, 0);
    return;
  }

  ts.committing.store(true);
  raise_clock(ts);
  const std::uint64_t counter = std::max(ts.clock.load(std::memory_order_relaxed), max_seen) + 1;
  const Timestamp commit_ts = (counter << kThreadBits) | ts.id;

  // Only the transaction's final version of each row reaches the store.
  for (std::size_t i = 0; i < view.size(); ++i) {
    bool last = true;
    for (std::size_t j = i + 1; j < view.size(); ++j) last = last && !(view[j].first == view[i].first);
    if (last) store_->install(view[i].first.table, view[i].first.row, commit_ts, view[i].second);
  }
  {
    std::lock_guard lock(ts.log_mu);
    ts.pending.push_back(ThreadLogEntry{commit_ts, std::move(records)});
  }
  ts.commits.push_back({txn.id, commit_ts, Clock::now()});
  ts.clock.store(counter, std::memory_order_release);
  fetch_max(global_counter_, counter);
  ts.committing.store(false);
  locks_.release_all(txn.id, held, counter);
}

std::uint64_t PrimaryEngine::safe_bound() const {
  // A thread that starts committing after this load reads a global counter
  // at least this large, so its commit lands above it.
  std::uint64_t bound = global_counter_.load();
  for (const auto& ts : threads_) {
    if (!ts->committing.load()) continue;
    bound = std::min(bound, ts->clock.load(std::memory_order_acquire));
  }
  return bound;
}

void PrimaryEngine::drain_ready(std::uint64_t bound, SegmentBuilder& builder) {
  std::vector<ThreadLogEntry> ready;
  for (auto& ts : threads_) {
    std::lock_guard lock(ts->log_mu);
    while (!ts->pending.empty() && (ts->pending.front().commit_ts >> kThreadBits) <= bound) {
      ready.push_back(std::move(ts->pending.front()));
      ts->pending.pop_front();
    }
  }
  std::sort(ready.begin(), ready.end(),
            [](const ThreadLogEntry& a, const ThreadLogEntry& b) { return a.commit_ts < b.commit_ts; });
  for (auto& entry : ready) builder.add_txn(entry.commit_ts, std::move(entry.records));
}

void PrimaryEngine::run_coalescer() {
  SegmentBuilder builder(options_.segment_capacity);
  for (;;) {
    {
      std::unique_lock lock(coalesce_mu_);
      coalesce_cv_.wait_for(lock, options_.coalesce_period);
    }
    const bool done = executors_done_.load(std::memory_order_acquire);
    drain_ready(done ? kNoBound : safe_bound(), builder);
    for (auto& seg : builder.take_sealed(true)) out_.append(std::move(seg));
    if (done) break;
  }
}

void PrimaryEngine::join() {
  if (joined_) return;
  joined_ = true;
  for (auto& t : executors_) t.join();
  executors_done_.store(true, std::memory_order_release);
  if (options_.streaming) {
    coalesce_cv_.notify_one();
    coalescer_.join();
  } else {
    std::vector<ThreadLog> logs;
    for (auto& ts : threads_) {
      ThreadLog log;
      log.thread_id = static_cast<std::uint32_t>(ts->id);
      log.entries.assign(std::make_move_iterator(ts->pending.begin()),
                         std::make_move_iterator(ts->pending.end()));
      ts->pending.clear();
      logs.push_back(std::move(log));
    }
    for (auto& seg : coalesce(logs, options_.segment_capacity)) out_.append(std::move(seg));
  }
  out_.close();
  if (error_) std::rethrow_exception(error_);
}

std::vector<CommitInfo> PrimaryEngine::commits() const {
  std::vector<CommitInfo> all;
  for (const auto& ts : threads_) all.insert(all.end(), ts->commits.begin(), ts->commits.end());
  std::sort(all.begin(), all.end(), [](const CommitInfo& a, const CommitInfo& b) { return a.commit_ts < b.commit_ts; });
  return all;
}

std::vector<ExecEvent> PrimaryEngine::trace() const {
  std::vector<ExecEvent> all;
  for (const auto& ts : threads_) all.insert(all.end(), ts->trace.begin(), ts->trace.end());
  std::sort(all.begin(), all.end(), [](const ExecEvent& a, const ExecEvent& b) { return a.ticket < b.ticket; });
  return all;
}

PrimaryResult run_primary_real(std::span<const TxnSpec> workload, std::size_t threads, const OpCost& cost,
                               std::size_t segment_capacity, bool trace, bool paced) {
  ListFeed feed(std::vector<TxnSpec>(workload.begin(), workload.end()), paced);
  LogStream out;
  EngineOptions options;
  options.threads = threads;
  options.cost = &cost;
  options.segment_capacity = segment_capacity;
  options.streaming = false;
  options.trace = trace;

  auto engine = std::make_unique<PrimaryEngine>(options, feed, out);
  engine->start();
  engine->join();

  PrimaryResult result;
  result.log = out.copy_segments();
  for (const CommitInfo& c : engine->commits()) {
    result.f_p[c.txn] = std::chrono::duration_cast<std::chrono::nanoseconds>(c.at - engine->started_at()).count();
  }
  result.trace = engine->trace();
  result.store = engine->take_store();
  return result;
}

}  // namespace c5
