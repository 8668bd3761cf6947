// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "c5/bench.h"

using namespace c5;

TEST_CASE("adversarial k=1 is an insert then the hot update") {
  WorkloadConfig w;
  w.kind = WorkloadKind::kAdversarial;
  w.inserts_per_txn = 1;
  w.txn_count = 20;
  std::set<RowId> inserted;
  for (const TxnSpec& t : gen_workload(w)) {
    REQUIRE(t.ops.size() == 2);
    CHECK(t.ops[0].kind == AccessKind::kInsert);
    CHECK(t.ops[0].table == tables::kInserts);
    CHECK(inserted.insert(t.ops[0].row).second);
    CHECK(t.ops[1].kind == AccessKind::kUpdate);
    CHECK(t.ops[1].table == tables::kHot);
    CHECK(t.ops[1].row == 0);
  }
}

TEST_CASE("insert-only k=16 writes 16 unique rows") {
  WorkloadConfig w;
  w.txn_count = 10;
  std::set<RowId> rows;
  for (const TxnSpec& t : gen_workload(w)) {
    CHECK(t.ops.size() == 16);
    for (const Op& op : t.ops) {
      CHECK(op.kind == AccessKind::kInsert);
      CHECK(rows.insert(op.row).second);
    }
  }
}

TEST_CASE("order entry puts contended writes last when optimized") {
  WorkloadConfig w;
  w.kind = WorkloadKind::kMicroOrderEntry;
  w.hot_rows = 4;
  w.inserts_per_txn = 3;
  w.txn_count = 100;
  w.optimized = true;
  for (const TxnSpec& t : gen_workload(w)) {
    const Op& last = t.ops.back();
    CHECK((last.table == tables::kWarehouse || last.table == tables::kDistrict));
    CHECK(t.ops.front().kind == AccessKind::kInsert);
  }
  w.optimized = false;
  for (const TxnSpec& t : gen_workload(w)) CHECK(t.ops.front().kind == AccessKind::kUpdate);
}

TEST_CASE("generation is deterministic under the seed") {
  for (WorkloadKind k : {WorkloadKind::kInsertOnly, WorkloadKind::kAdversarial, WorkloadKind::kMicroOrderEntry}) {
    WorkloadConfig w;
    w.kind = k;
    w.hot_rows = 3;
    w.seed = 77;
    const auto a = gen_workload(w);
    const auto b = gen_workload(w);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i].ops.size() == b[i].ops.size());
      for (std::size_t j = 0; j < a[i].ops.size(); ++j) {
        CHECK(a[i].ops[j].key() == b[i].ops[j].key());
        CHECK(a[i].ops[j].value == b[i].ops[j].value);
        CHECK(a[i].ops[j].delta == b[i].ops[j].delta);
      }
    }
  }
}

TEST_CASE("invalid configuration names the field") {
  WorkloadConfig w;
  w.hot_rows = 0;
  try {
    gen_workload(w);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "hot_rows");
  }
  ExperimentParams p;
  p.workers = 8;
  p.primary_threads = 4;
  try {
    p.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "workers");
  }
  CHECK_THROWS_AS(parse_workload("tpcc"), ConfigError);
}

TEST_CASE("quartiles interpolate linearly") {
  const Quartiles q = quartiles({4, 1, 3, 2});
  CHECK(q.count == 4);
  CHECK(q.min == 1);
  CHECK(q.q1 == doctest::Approx(1.75));
  CHECK(q.median == doctest::Approx(2.5));
  CHECK(q.q3 == doctest::Approx(3.25));
  CHECK(q.max == 4);
  CHECK(quartiles({}).count == 0);
  CHECK(quartiles({5}).median == 5);
}

TEST_CASE("csv and summary") {
  RunReport empty;
  empty.protocol = "txn-gran";
  std::ostringstream csv;
  emit_csv(empty, csv);
  CHECK(csv.str() == "txn_index,f_p_ns,f_b_ns,lag_ns\n");
  std::ostringstream summary;
  emit_summary(empty, summary);
  CHECK(summary.str().find("txn-gran") != std::string::npos);
  CHECK(summary.str().find("mpc:") != std::string::npos);

  RunReport one = empty;
  one.samples.push_back({0, 1, 10, 25});
  std::ostringstream row;
  emit_csv(one, row);
  CHECK(row.str() == "txn_index,f_p_ns,f_b_ns,lag_ns\n0,10,25,15\n");
}

TEST_CASE("config files") {
  const auto path = std::filesystem::temp_directory_path() / "c5_bench_config.txt";
  {
    std::ofstream out(path);
    out << "# adversarial sweep\n--protocol = txn-gran\ninserts-per-txn=16\n\nhot_rows=2  # trailing\n";
  }
  const auto kv = load_config_file(path);
  CHECK(kv.at("protocol") == "txn-gran");
  CHECK(kv.at("inserts_per_txn") == "16");
  CHECK(kv.at("hot_rows") == "2");
  {
    std::ofstream out(path);
    out << "no equals sign\n";
  }
  CHECK_THROWS_AS(load_config_file(path), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("discrete experiments are bit-identical across runs") {
  WorkloadConfig w;
  w.kind = WorkloadKind::kAdversarial;
  w.inserts_per_txn = 4;
  w.txn_count = 300;
  w.arrival_interval = 1;
  ExperimentParams p;
  p.mode = ExecMode::kDiscrete;
  p.protocol = Protocol::kTxnGranularity;
  const RunReport a = run_experiment(w, p);
  const RunReport b = run_experiment(w, p);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].f_p == b.samples[i].f_p);
    CHECK(a.samples[i].f_b == b.samples[i].f_b);
  }
  CHECK(a.relative_throughput == b.relative_throughput);
  CHECK(a.safe());
}

TEST_CASE("every protocol runs a safe real experiment") {
  for (Protocol proto : kAllProtocols) {
    for (WorkloadKind kind : {WorkloadKind::kAdversarial, WorkloadKind::kMicroOrderEntry}) {
      WorkloadConfig w;
      w.kind = kind;
      w.inserts_per_txn = 4;
      w.hot_rows = 2;
      ExperimentParams p;
      p.protocol = proto;
      p.workers = 4;
      p.primary_threads = 4;
      p.duration = std::chrono::milliseconds(300);
      p.primary_op_cost = std::chrono::microseconds(100);
      p.backup_op_cost = std::chrono::microseconds(50);
      p.read_clients = 2;
      p.snapshot_interval = std::chrono::milliseconds(5);
      const RunReport r = run_experiment(w, p);
      INFO(to_string(proto), " ", to_string(kind), " ", r.diagnostics);
      CHECK(r.safe());
      CHECK(r.txns > 0);
      CHECK(r.mpc.observations > 0);
      for (const LagSample& s : r.samples) {
        CHECK(s.f_b >= 0);
        CHECK(s.lag() >= 0);
      }
    }
  }
}

TEST_CASE("open-loop proof workload in real mode") {
  WorkloadConfig w;
  w.kind = WorkloadKind::kProofTxn;
  w.theorem.L = 20;
  ExperimentParams p;
  p.protocol = Protocol::kTxnGranularity;
  p.primary_threads = 4;
  p.workers = 4;
  p.primary_op_cost = std::chrono::milliseconds(2);
  p.backup_op_cost = std::chrono::milliseconds(1);
  p.fast_drain = false;
  const RunReport r = run_experiment(w, p);
  CHECK(r.safe());
  CHECK(r.txns == static_cast<std::size_t>(txn_workload_size(w.theorem)));
  // Lag grows by about nd - e = 1 ms per transaction.
  CHECK(r.samples.back().lag() > r.samples.front().lag() + std::chrono::nanoseconds(std::chrono::milliseconds(10)).count());
}
