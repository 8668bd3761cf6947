// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include <doctest.h>

#include <random>
#include <thread>

#include "c5/mvstore.h"
#include "oracle.h"

using namespace c5;

TEST_CASE("install and read") {
  Store s;
  s.install(0, 1, 1, "a");
  s.install(0, 1, 2, "b");
  CHECK(s.head_seq(0, 1) == 2);
  CHECK(s.read_latest(0, 1) == "b");
  CHECK(s.chain_seqs(0, 1) == std::vector<Seq>{2, 1});

  SUBCASE("out of order install") {
    Store t;
    t.install(0, 1, 2, "x");
    CHECK_THROWS_AS(t.install(0, 1, 1, "y"), OrderingViolation);
    CHECK_THROWS_AS(t.install(0, 1, 2, "y"), OrderingViolation);
  }
  SUBCASE("tombstone") {
    s.install(0, 1, 3, std::nullopt);
    CHECK_FALSE(s.read_at(0, 1, 3).has_value());
    CHECK(s.read_at(0, 1, 2) == "b");
    CHECK(s.latest_state().empty());
  }
}

TEST_CASE("read_at picks the newest visible version") {
  Store s;
  s.install(2, 5, 2, "a");
  s.install(2, 5, 4, "b");
  CHECK(s.read_at(2, 5, 1) == std::nullopt);
  CHECK(s.read_at(2, 5, 3) == "a");
  CHECK(s.read_at(2, 5, 4) == "b");
  CHECK(s.read_at(2, 5, 100) == "b");
  CHECK(s.read_at(2, 6, 100) == std::nullopt);
  CHECK(s.read_at(9, 6, 100) == std::nullopt);
}

TEST_CASE("head_seq") {
  Store s;
  CHECK(s.head_seq(0, 0) == 0);
  s.install(0, 0, 7, "a");
  CHECK(s.head_seq(0, 0) == 7);
  s.install(0, 0, 9, "b");
  CHECK(s.head_seq(0, 0) == 9);
}

TEST_CASE("merge_snapshots") {
  Store s;
  SnapshotCursor cursor;
  WriteTracker tracker;
  cursor.set_next(5);
  for (Seq q = 1; q <= 5; ++q) {
    if (q == 4) continue;
    s.install(0, q, q, "v" + std::to_string(q));
    tracker.mark(q);
  }
  CHECK(tracker.first_pending(0, 5) == 4);
  CHECK_THROWS_AS(merge_snapshots(cursor, tracker), MergeTooEarly);
  CHECK(cursor.c() == 0);
  s.install(0, 4, 4, "v4");
  tracker.mark(4);
  merge_snapshots(cursor, tracker);
  CHECK(cursor.c() == 5);
  for (Seq q = 1; q <= 5; ++q) CHECK(s.read_at(0, q, cursor.c()) == "v" + std::to_string(q));
  CHECK_THROWS(cursor.set_next(3));
}

TEST_CASE("reads at c match serial replay of the prefix") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 30; ++round) {
    const auto log = oracle::records_of(oracle::random_log(rng, {}));
    Store s;
    for (const auto& r : log) {
      s.install(r.table_id, r.row_id, r.seq,
                r.op_kind == OpKind::kDelete ? std::nullopt : std::optional<std::string>(r.value));
    }
    for (int probe = 0; probe < 10; ++probe) {
      const Seq c = rng() % (log.size() + 1);
      const auto expect = oracle::replay(log, c);
      for (TableId t = 0; t < 2; ++t) {
        for (RowId row = 0; row < 16; ++row) {
          auto it = expect.find({t, row});
          const std::optional<std::string> want =
              it == expect.end() ? std::nullopt : std::optional<std::string>(it->second);
          CHECK(s.read_at(t, row, c) == want);
        }
      }
    }
    const auto full = oracle::replay(log);
    CHECK(s.latest_state() == StateMap(full.begin(), full.end()));
  }
}

TEST_CASE("concurrent readers see whole versions") {
  Store s;
  std::atomic<bool> stop{false};
  std::atomic<Seq> published{0};
  std::thread writer([&] {
    for (Seq q = 1; q <= 20000; ++q) {
      s.install(0, q % 8, q, std::to_string(q));
      published.store(q, std::memory_order_release);
    }
    stop = true;
  });
  std::size_t bad = 0;
  while (!stop) {
    const Seq at = published.load(std::memory_order_acquire);
    for (RowId r = 0; r < 8; ++r) {
      auto v = s.read_at(0, r, at);
      if (v && (std::stoull(*v) > at || std::stoull(*v) % 8 != r)) ++bad;
    }
  }
  writer.join();
  CHECK(bad == 0);
  CHECK(s.version_count() == 20000);
}

TEST_CASE("admission waits for n") {
  SnapshotCursor cursor;
  cursor.set_next(3);
  cursor.wait_until_admitted(3);
  std::atomic<bool> admitted{false};
  std::thread t([&] {
    cursor.wait_until_admitted(5);
    admitted = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(5));
  CHECK_FALSE(admitted.load());
  cursor.set_next(6);
  t.join();
  CHECK(admitted.load());
}
