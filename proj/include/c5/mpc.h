// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// Monotonic prefix consistency checking. Read-only sessions record what they
// saw; after the run every observation is compared with the state of the log
// prefix it claims to have read, and each session's prefixes must not shrink.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "c5/log.h"
#include "c5/mvstore.h"

namespace c5 {

std::uint64_t digest_value(const std::optional<std::string>& value);
std::uint64_t digest_state(const StateMap& state);

// Serial replay of a log, answering "what did the prefix up to seq c hold".
class PrefixOracle {
 public:
  explicit PrefixOracle(std::span<const LogRecord> log);
  static PrefixOracle from_segments(std::span<const LogSegment> segments);

  Seq size() const { return size_; }
  bool is_boundary(Seq c) const;
  std::span<const Seq> boundaries() const { return boundaries_; }

  std::optional<std::string> value_at(RowKey key, Seq c) const;
  StateMap state_at(Seq c) const;
  // Memoized per boundary.
  std::uint64_t digest_at(Seq c) const;

 private:
  struct Version {
    Seq seq;
    std::optional<std::string> value;
  };

  Seq size_ = 0;
  std::vector<Seq> boundaries_;
  std::unordered_map<RowKey, std::vector<Version>, RowKeyHash> history_;
  mutable std::map<Seq, std::uint64_t> digests_;
};

struct ReadItem {
  RowKey key;
  std::optional<std::string> value;
};

struct Observation {
  std::uint32_t session = 0;
  Seq c = 0;
  std::vector<ReadItem> reads;
  Clock::time_point at{};
};

// One session's observations, appended only by the thread that owns it.
class SessionLog {
 public:
  explicit SessionLog(std::uint32_t id) : id_(id) {}
  std::uint32_t id() const { return id_; }
  void record(Observation o) {
    o.session = id_;
    observations_.push_back(std::move(o));
  }
  const std::vector<Observation>& observations() const { return observations_; }

 private:
  std::uint32_t id_;
  std::vector<Observation> observations_;
};

enum class ViolationKind { kState, kBoundary, kMonotonic };

struct Violation {
  ViolationKind kind = ViolationKind::kState;
  std::uint32_t session = 0;
  Seq c = 0;
  RowKey key{};
  std::uint64_t expected = 0;  // digests; for kMonotonic the previous c
  std::uint64_t got = 0;       // for kMonotonic the new c

  std::string line(const std::string& run_id) const;
};

std::vector<Violation> check_state(const Observation& observation, const PrefixOracle& oracle);
// `observations` is one session in the order it issued them.
std::vector<Violation> check_monotonic(std::span<const Observation> observations);

struct RowDiff {
  RowKey key;
  std::optional<std::string> expected;
  std::optional<std::string> got;
};

// Rows whose latest value in `store` differs from the full-log oracle state.
std::vector<RowDiff> check_final_convergence(const Store& store, const PrefixOracle& oracle);
std::vector<RowDiff> diff_states(const StateMap& expected, const StateMap& got);

struct MpcVerdict {
  std::size_t observations = 0;
  std::size_t state_violations = 0;
  std::size_t monotonic_violations = 0;
  std::vector<std::string> lines;  // capped

  bool pass() const { return state_violations == 0 && monotonic_violations == 0; }
};

MpcVerdict check_sessions(std::span<const SessionLog> sessions, const PrefixOracle& oracle,
                          const std::string& run_id, std::size_t max_lines = 32);

}  // namespace c5
