// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// Discrete-event primary: m simulated cores, strict 2PL with FIFO grants,
// every operation takes exactly e time units.

#include <algorithm>
#include <queue>

#include "c5/primary.h"

namespace c5 {

namespace {

struct SimTxn {
  const TxnSpec* spec = nullptr;
  std::size_t op = 0;
  std::vector<RowKey> held;
  std::vector<std::pair<RowKey, std::optional<std::string>>> view;
  std::vector<LogRecord> records;
  bool done = false;
};

struct Event {
  std::int64_t time;
  int kind;  // 0: operation finished, 1: arrival
  std::size_t txn;

  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    return txn > o.txn;
  }
};

struct SimLock {
  std::optional<std::size_t> owner;
  std::deque<std::size_t> waiters;
};

class PrimarySimulator {
 public:
  PrimarySimulator(std::span<const TxnSpec> workload, const SimParams& params, std::size_t capacity)
      : params_(params), builder_(capacity), cores_free_(params.m) {
    txns_.resize(workload.size());
    for (std::size_t i = 0; i < workload.size(); ++i) {
      if (workload[i].ops.empty()) throw ConfigError("ops", "transaction " + std::to_string(workload[i].id) + " has no operations");
      txns_[i].spec = &workload[i];
      events_.push({workload[i].arrival, 1, i});
    }
    result_.store = std::make_unique<Store>();
  }

  PrimaryResult run() {
    while (!events_.empty()) {
      Event ev = events_.top();
      events_.pop();
      if (ev.kind == 1) {
        arrive(ev.txn, ev.time);
      } else {
        finish_op(ev.txn, ev.time);
      }
    }
    for (const SimTxn& t : txns_) {
      if (!t.done) throw DeadlockError("simulated primary stalled with transaction " + std::to_string(t.spec->id) + " unfinished");
    }
    result_.log = builder_.take_sealed(true);
    return std::move(result_);
  }

 private:
  void arrive(std::size_t txn, std::int64_t now) {
    if (cores_free_ > 0) {
      --cores_free_;
      start_op(txn, now);
    } else {
      ready_.push_back(txn);
    }
  }

  void start_op(std::size_t txn, std::int64_t now) {
    SimTxn& t = txns_[txn];
    const RowKey key = t.spec->ops[t.op].key();
    SimLock& lock = locks_[key];
    if (!lock.owner || *lock.owner == txn) {
      if (!lock.owner) {
        lock.owner = txn;
        t.held.push_back(key);
      }
      events_.push({now + params_.e, 0, txn});
      return;
    }
    if (would_deadlock(txn, key)) {
      throw DeadlockError("simulated transaction " + std::to_string(t.spec->id) + " closes a wait-for cycle");
    }
    lock.waiters.push_back(txn);
    waiting_on_[txn] = key;
  }

  bool would_deadlock(std::size_t waiter, RowKey key) const {
    RowKey at = key;
    for (std::size_t hops = 0; hops <= waiting_on_.size() + 1; ++hops) {
      auto it = locks_.find(at);
      if (it == locks_.end() || !it->second.owner) return false;
      if (*it->second.owner == waiter) return true;
      auto w = waiting_on_.find(*it->second.owner);
      if (w == waiting_on_.end()) return false;
      at = w->second;
    }
    return true;
  }

  void finish_op(std::size_t txn, std::int64_t now) {
    SimTxn& t = txns_[txn];
    const Op& op = t.spec->ops[t.op];
    if (op.is_write()) {
      std::optional<std::string> value;
      if (op.kind != AccessKind::kDelete) {
        value = op.rule == ValueRule::kAdd ? encode_i64(decode_i64(current(t, op.key())) + op.delta) : op.value;
      }
      LogRecord r;
      r.txn_id = t.spec->id;
      r.table_id = op.table;
      r.row_id = op.row;
      r.op_kind = op.kind == AccessKind::kInsert   ? OpKind::kInsert
                  : op.kind == AccessKind::kUpdate ? OpKind::kUpdate
                                                   : OpKind::kDelete;
      r.value = value.value_or("");
      t.records.push_back(std::move(r));
      t.view.emplace_back(op.key(), std::move(value));
    }
    ++t.op;
    if (t.op < t.spec->ops.size()) {
      start_op(txn, now);
    } else {
      commit(txn, now);
    }
  }

  std::optional<std::string> current(const SimTxn& t, RowKey key) const {
    for (auto it = t.view.rbegin(); it != t.view.rend(); ++it)
      if (it->first == key) return it->second;
    return result_.store->read_latest(key.table, key.row);
  }

  void commit(std::size_t txn, std::int64_t now) {
    SimTxn& t = txns_[txn];
    t.done = true;
    result_.f_p[t.spec->id] = now;
    if (!t.records.empty()) {
      const Timestamp ts = ++commits_;
      for (std::size_t i = 0; i < t.view.size(); ++i) {
        bool last = true;
        for (std::size_t j = i + 1; j < t.view.size(); ++j) last = last && !(t.view[j].first == t.view[i].first);
        if (last) result_.store->install(t.view[i].first.table, t.view[i].first.row, ts, t.view[i].second);
      }
      builder_.add_txn(ts, std::move(t.records));
    }
    for (const RowKey& key : t.held) {
      SimLock& lock = locks_[key];
      lock.owner.reset();
      if (!lock.waiters.empty()) {
        const std::size_t next = lock.waiters.front();
        lock.waiters.pop_front();
        lock.owner = next;
        txns_[next].held.push_back(key);
        waiting_on_.erase(next);
        events_.push({now + params_.e, 0, next});
      }
    }
    if (!ready_.empty()) {
      const std::size_t next = ready_.front();
      ready_.pop_front();
      start_op(next, now);
    } else {
      ++cores_free_;
    }
  }

  SimParams params_;
  SegmentBuilder builder_;
  std::size_t cores_free_;
  std::vector<SimTxn> txns_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::deque<std::size_t> ready_;
  std::unordered_map<RowKey, SimLock, RowKeyHash> locks_;
  std::unordered_map<std::size_t, RowKey> waiting_on_;
  Timestamp commits_ = 0;
  PrimaryResult result_;
};

}  // namespace

PrimaryResult run_primary_discrete(std::span<const TxnSpec> workload, const SimParams& params,
                                   std::size_t segment_capacity) {
  if (params.m < 1) throw ConfigError("m", "primary needs at least one core");
  if (params.e <= 0) throw ConfigError("e", "primary op cost must be positive");
  return PrimarySimulator(workload, params, segment_capacity).run();
}

ExecMode parse_mode(std::string_view name) {
  if (name == "real") return ExecMode::kReal;
  if (name == "discrete") return ExecMode::kDiscrete;
  throw ConfigError("mode", "expected 'real' or 'discrete', got '" + std::string(name) + "'");
}

PrimaryResult run_primary(std::span<const TxnSpec> workload, const SimParams& params, ExecMode mode,
                          std::size_t segment_capacity) {
  if (mode == ExecMode::kDiscrete) return run_primary_discrete(workload, params, segment_capacity);
  OpCost cost(std::chrono::microseconds(params.e), OpCost::Mode::kSleep);
  return run_primary_real(workload, params.m, cost, segment_capacity);
}

}  // namespace c5
