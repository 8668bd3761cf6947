// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include "c5/mvstore.h"

namespace c5 {

Store::~Store() {
  for (auto& t : tables_) {
    Table* table = t.load(std::memory_order_relaxed);
    if (table == nullptr) continue;
    table->for_each_allocated([](std::size_t, Slot& s) {
      const RowVersion* v = s.load(std::memory_order_relaxed);
      while (v != nullptr) {
        const RowVersion* next = v->next;
        delete v;
        v = next;
      }
    });
    delete table;
  }
}

Store::Slot& Store::slot(TableId table, RowId row) {
  if (table >= kMaxTables) throw Error("table id " + std::to_string(table) + " out of range");
  Table* t = tables_[table].load(std::memory_order_acquire);
  if (t == nullptr) {
    auto* fresh = new Table();
    if (tables_[table].compare_exchange_strong(t, fresh, std::memory_order_acq_rel)) {
      t = fresh;
    } else {
      delete fresh;
    }
  }
  return t->at(row);
}

const Store::Slot* Store::find_slot(TableId table, RowId row) const {
  if (table >= kMaxTables) return nullptr;
  const Table* t = tables_[table].load(std::memory_order_acquire);
  return t == nullptr ? nullptr : t->find(row);
}

void Store::publish(Slot& s, const RowVersion* head, Seq write_seq, std::optional<std::string> payload) {
  auto* v = new RowVersion;
  v->write_seq = write_seq;
  v->tombstone = !payload.has_value();
  if (payload) v->payload = std::move(*payload);
  v->next = head;
  s.store(v, std::memory_order_release);
  versions_.fetch_add(1, std::memory_order_relaxed);
}

void Store::install(TableId table, RowId row, Seq write_seq, std::optional<std::string> payload) {
  Slot& s = slot(table, row);
  const RowVersion* head = s.load(std::memory_order_acquire);
  if (head != nullptr && head->write_seq >= write_seq) {
    throw OrderingViolation("install of seq " + std::to_string(write_seq) + " on row (" +
                            std::to_string(table) + "," + std::to_string(row) +
                            ") whose head is already at seq " + std::to_string(head->write_seq));
  }
  publish(s, head, write_seq, std::move(payload));
}

void Store::install_unchecked(TableId table, RowId row, Seq write_seq, std::optional<std::string> payload) {
  Slot& s = slot(table, row);
  publish(s, s.load(std::memory_order_acquire), write_seq, std::move(payload));
}

std::optional<std::string> Store::read_at(TableId table, RowId row, Seq at_seq) const {
  const Slot* s = find_slot(table, row);
  if (s == nullptr) return std::nullopt;
  for (const RowVersion* v = s->load(std::memory_order_acquire); v != nullptr; v = v->next) {
    if (v->write_seq <= at_seq) {
      if (v->tombstone) return std::nullopt;
      return v->payload;
    }
  }
  return std::nullopt;
}

std::optional<std::string> Store::read_latest(TableId table, RowId row) const {
  const Slot* s = find_slot(table, row);
  if (s == nullptr) return std::nullopt;
  const RowVersion* v = s->load(std::memory_order_acquire);
  if (v == nullptr || v->tombstone) return std::nullopt;
  return v->payload;
}

Seq Store::head_seq(TableId table, RowId row) const {
  const Slot* s = find_slot(table, row);
  if (s == nullptr) return 0;
  const RowVersion* v = s->load(std::memory_order_acquire);
  return v == nullptr ? 0 : v->write_seq;
}

std::vector<Seq> Store::chain_seqs(TableId table, RowId row) const {
  std::vector<Seq> out;
  const Slot* s = find_slot(table, row);
  if (s == nullptr) return out;
  for (const RowVersion* v = s->load(std::memory_order_acquire); v != nullptr; v = v->next) {
    out.push_back(v->write_seq);
  }
  return out;
}

StateMap Store::latest_state() const {
  StateMap state;
  for (TableId t = 0; t < kMaxTables; ++t) {
    const Table* table = tables_[t].load(std::memory_order_acquire);
    if (table == nullptr) continue;
    table->for_each_allocated([&](std::size_t row, const Slot& s) {
      const RowVersion* v = s.load(std::memory_order_acquire);
      if (v != nullptr && !v->tombstone) state.emplace(RowKey{t, row}, v->payload);
    });
  }
  return state;
}

void SnapshotCursor::set_next(Seq n) {
  {
    std::lock_guard lock(mu_);
    if (n < n_.load(std::memory_order_relaxed)) throw Error("snapshot end n moved backwards");
    n_.store(n, std::memory_order_release);
  }
  cv_.notify_all();
}

void SnapshotCursor::merge() {
  std::lock_guard lock(mu_);
  c_.store(n_.load(std::memory_order_relaxed), std::memory_order_release);
}

void SnapshotCursor::wait_until_admitted(Seq seq) {
  if (seq <= n_.load(std::memory_order_acquire) || released()) return;
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return seq <= n_.load(std::memory_order_relaxed) || released(); });
}

void SnapshotCursor::release_all() {
  {
    std::lock_guard lock(mu_);
    released_.store(true, std::memory_order_release);
  }
  cv_.notify_all();
}

Seq WriteTracker::first_pending(Seq from, Seq to) const {
  for (Seq s = from + 1; s <= to; ++s) {
    if (!installed(s)) return s;
  }
  return 0;
}

void merge_snapshots(SnapshotCursor& cursor, const WriteTracker& tracker) {
  const Seq c = cursor.c();
  const Seq n = cursor.n();
  if (Seq pending = tracker.first_pending(c, n); pending != 0) {
    throw MergeTooEarly("cannot merge snapshot (" + std::to_string(c) + ", " + std::to_string(n) +
                        "]: write " + std::to_string(pending) + " is still pending");
  }
  cursor.merge();
}

}  // namespace c5
