// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include <algorithm>

#include "c5/bench.h"

namespace c5 {

std::string_view to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::kInsertOnly:
      return "insert_only";
    case WorkloadKind::kAdversarial:
      return "adversarial";
    case WorkloadKind::kMicroOrderEntry:
      return "micro_orderentry";
    case WorkloadKind::kProofTxn:
      return "proof_txn";
    case WorkloadKind::kProofPage:
      return "proof_page";
  }
  return "?";
}

WorkloadKind parse_workload(std::string_view name) {
  for (WorkloadKind k : {WorkloadKind::kInsertOnly, WorkloadKind::kAdversarial, WorkloadKind::kMicroOrderEntry,
                         WorkloadKind::kProofTxn, WorkloadKind::kProofPage}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("workload", "unknown workload '" + std::string(name) + "'");
}

void WorkloadConfig::validate() const {
  if (kind == WorkloadKind::kInsertOnly && inserts_per_txn < 1) {
    throw ConfigError("inserts_per_txn", "insert-only transactions need at least one insert");
  }
  if (hot_rows < 1) throw ConfigError("hot_rows", "need at least one hot row");
  if (txn_count < 1) throw ConfigError("txn_count", "need at least one transaction");
  if (arrival_interval < 0) throw ConfigError("arrival_interval", "must be nonnegative");
}

namespace {

Op insert(TableId table, RowId row, std::mt19937_64& rng) {
  Op op;
  op.kind = AccessKind::kInsert;
  op.table = table;
  op.row = row;
  op.value = encode_i64(static_cast<std::int64_t>(rng() >> 1));
  return op;
}

Op add(TableId table, RowId row, std::int64_t delta) {
  Op op;
  op.kind = AccessKind::kUpdate;
  op.table = table;
  op.row = row;
  op.rule = ValueRule::kAdd;
  op.delta = delta;
  return op;
}

}  // namespace

WorkloadGenerator::WorkloadGenerator(WorkloadConfig config) : config_(std::move(config)) {
  config_.validate();
  for (auto& r : next_row_) r.store(0, std::memory_order_relaxed);
}

TxnSpec WorkloadGenerator::make(TxnId id, std::mt19937_64& rng) {
  TxnSpec t;
  t.id = id;
  const std::size_t k = config_.inserts_per_txn;
  switch (config_.kind) {
    case WorkloadKind::kInsertOnly:
      for (std::size_t i = 0; i < k; ++i) t.ops.push_back(insert(tables::kInserts, unique(tables::kInserts), rng));
      break;
    case WorkloadKind::kAdversarial: {
      for (std::size_t i = 0; i < k; ++i) t.ops.push_back(insert(tables::kInserts, unique(tables::kInserts), rng));
      Op hot;
      hot.kind = AccessKind::kUpdate;
      hot.table = tables::kHot;
      hot.row = rng() % config_.hot_rows;
      hot.value = encode_i64(static_cast<std::int64_t>(rng() >> 1));
      t.ops.push_back(std::move(hot));
      break;
    }
    case WorkloadKind::kMicroOrderEntry: {
      const RowId district = rng() % config_.hot_rows;
      std::vector<Op> hot;
      std::vector<Op> cold;
      if (rng() % 2 == 0) {
        // NewOrder: take the district's next order number, insert the order.
        hot.push_back(add(tables::kDistrict, district, 1));
        cold.push_back(insert(tables::kOrder, unique(tables::kOrder), rng));
        for (std::size_t i = 0; i < k; ++i) cold.push_back(insert(tables::kOrderLine, unique(tables::kOrderLine), rng));
      } else {
        // Payment: warehouse and district year-to-date, plus a history row.
        const std::int64_t amount = 1 + static_cast<std::int64_t>(rng() % 5000);
        hot.push_back(add(tables::kWarehouse, 0, amount));
        hot.push_back(add(tables::kDistrict, district, amount));
        cold.push_back(insert(tables::kHistory, unique(tables::kHistory), rng));
      }
      if (config_.optimized) {
        // Contended writes as late as possible; warehouse last of all.
        std::reverse(hot.begin(), hot.end());
        t.ops = std::move(cold);
        t.ops.insert(t.ops.end(), hot.begin(), hot.end());
      } else {
        t.ops = std::move(hot);
        t.ops.insert(t.ops.end(), cold.begin(), cold.end());
      }
      break;
    }
    case WorkloadKind::kProofTxn:
    case WorkloadKind::kProofPage:
      throw ConfigError("workload", "proof workloads are generated whole, not per transaction");
  }
  return t;
}

std::vector<RowKey> WorkloadGenerator::read_keys(std::mt19937_64& rng) const {
  auto any_row = [&](TableId table) {
    const RowId written = next_row_[table].load(std::memory_order_relaxed);
    return RowKey{table, rng() % (written + 16)};
  };
  switch (config_.kind) {
    case WorkloadKind::kInsertOnly:
      return {any_row(tables::kInserts), any_row(tables::kInserts)};
    case WorkloadKind::kAdversarial:
      return {RowKey{tables::kHot, rng() % config_.hot_rows}, any_row(tables::kInserts)};
    case WorkloadKind::kMicroOrderEntry:
      return {RowKey{tables::kWarehouse, 0}, RowKey{tables::kDistrict, rng() % config_.hot_rows},
              any_row(tables::kOrder)};
    case WorkloadKind::kProofTxn:
      return {RowKey{1, 0}, RowKey{0, rng() % 64}};
    case WorkloadKind::kProofPage:
      return {RowKey{0, rng() % 64}};
  }
  return {};
}

std::vector<TxnSpec> gen_workload(const WorkloadConfig& config) {
  config.validate();
  if (config.kind == WorkloadKind::kProofTxn) return proof_txn_workload(config.theorem);
  if (config.kind == WorkloadKind::kProofPage) return proof_page_workload(config.theorem);
  WorkloadGenerator gen(config);
  std::mt19937_64 rng(config.seed);
  std::vector<TxnSpec> txns;
  txns.reserve(config.txn_count);
  for (std::size_t i = 0; i < config.txn_count; ++i) {
    TxnSpec t = gen.make(static_cast<TxnId>(i + 1), rng);
    t.arrival = static_cast<std::int64_t>(i) * config.arrival_interval;
    txns.push_back(std::move(t));
  }
  return txns;
}

}  // namespace c5
