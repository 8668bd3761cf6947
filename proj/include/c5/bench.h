// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// Workload generation and end-to-end experiments: primary -> log -> backup,
// with lag, throughput and consistency measured on the way.

#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "c5/backup.h"
#include "c5/lag_model.h"
#include "c5/mpc.h"
#include "c5/primary.h"

namespace c5 {

enum class WorkloadKind { kInsertOnly, kAdversarial, kMicroOrderEntry, kProofTxn, kProofPage };

std::string_view to_string(WorkloadKind k);
WorkloadKind parse_workload(std::string_view name);

// Tables used by the generated workloads.
namespace tables {
inline constexpr TableId kInserts = 0;  // insert-only and adversarial rows
inline constexpr TableId kHot = 1;      // adversarial hot rows
inline constexpr TableId kWarehouse = 2;
inline constexpr TableId kDistrict = 3;
inline constexpr TableId kOrder = 4;
inline constexpr TableId kOrderLine = 5;
inline constexpr TableId kHistory = 6;
}  // namespace tables

struct WorkloadConfig {
  WorkloadKind kind = WorkloadKind::kInsertOnly;
  std::size_t inserts_per_txn = 16;
  std::size_t hot_rows = 1;  // adversarial hot rows / order-entry districts
  bool optimized = false;    // order-entry: hot writes go last
  std::size_t txn_count = 1000;
  // Open-loop spacing between arrivals (ns in real mode, time units in
  // discrete mode). 0 means closed loop in real mode.
  std::int64_t arrival_interval = 0;
  std::uint64_t seed = 1;
  TheoremParams theorem;  // proof workloads

  void validate() const;
};

// Produces transactions for a workload. Unique row ids come from shared
// counters, so one generator may serve several threads.
class WorkloadGenerator {
 public:
  explicit WorkloadGenerator(WorkloadConfig config);

  TxnSpec make(TxnId id, std::mt19937_64& rng);
  // Keys for one read-only transaction; may name rows never written.
  std::vector<RowKey> read_keys(std::mt19937_64& rng) const;

  const WorkloadConfig& config() const { return config_; }

 private:
  RowId unique(TableId table) { return next_row_[table].fetch_add(1, std::memory_order_relaxed); }

  WorkloadConfig config_;
  std::array<std::atomic<RowId>, kMaxTables> next_row_{};
};

// Deterministic under config.seed.
std::vector<TxnSpec> gen_workload(const WorkloadConfig& config);

struct ExperimentParams {
  Protocol protocol = Protocol::kC5Watermark;
  ExecMode mode = ExecMode::kReal;
  std::size_t workers = 4;
  std::size_t primary_threads = 4;
  std::chrono::milliseconds duration{2000};  // closed-loop real runs
  std::chrono::microseconds snapshot_interval{10'000};
  std::size_t segment_size = kDefaultSegmentCapacity;
  std::uint64_t rows_per_page = 64;
  std::size_t read_clients = 0;
  std::chrono::microseconds read_think_time{200};
  bool background_readers = true;  // idle scheduling class for read clients
  std::chrono::nanoseconds primary_op_cost{0};
  std::chrono::nanoseconds backup_op_cost{0};
  std::int64_t sim_e = 2;  // discrete mode costs
  std::int64_t sim_d = 1;
  double trim = 0.1;
  std::chrono::milliseconds converge_timeout{60'000};
  bool fast_drain = true;  // drop backup op cost once the primary stops
  bool chaos = false;
  std::string run_id = "run";

  void validate() const;
};

struct LagSample {
  std::size_t index = 0;  // log order
  TxnId txn = 0;
  std::int64_t f_p = 0;
  std::int64_t f_b = -1;  // -1: never exposed
  std::int64_t lag() const { return f_b - f_p; }
};

struct Quartiles {
  std::size_t count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Linear interpolation between order statistics.
Quartiles quartiles(std::vector<double> values);

struct RunReport {
  std::string protocol;
  std::string workload;
  std::string mode;
  std::string time_unit = "ns";
  std::int64_t window_begin = 0;
  std::int64_t window_end = 0;
  std::size_t primary_window_commits = 0;
  std::size_t backup_window_commits = 0;
  double primary_throughput = 0;  // txns per second (or per time unit)
  double backup_throughput = 0;
  double relative_throughput = 0;
  std::vector<LagSample> samples;
  Quartiles lag;  // over samples committed inside the window
  std::size_t writes = 0;
  std::size_t txns = 0;
  MpcVerdict mpc;
  std::size_t final_diff_rows = 0;
  bool primary_matches_log = true;
  bool converged = true;
  std::string diagnostics;
  std::vector<TickRecord> ticks;
  std::size_t window_ticks = 0;
  std::size_t window_ticks_advanced = 0;
  std::int64_t max_window_lag = 0;
  BackupStats backup_stats;

  bool safe() const { return converged && final_diff_rows == 0 && primary_matches_log && mpc.pass(); }
};

RunReport run_experiment(const WorkloadConfig& workload, const ExperimentParams& params);

void emit_csv(const RunReport& report, const std::filesystem::path& path);
void emit_csv(const RunReport& report, std::ostream& out);
void emit_summary(const RunReport& report, std::ostream& out);

// key=value lines; '#' starts a comment. Keys use the CLI flag names with
// or without dashes ("inserts-per-txn" or "inserts_per_txn").
std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);

}  // namespace c5
