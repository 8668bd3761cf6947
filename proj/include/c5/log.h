// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// The totally ordered write log shipped from the primary to the backup.
//
// A log is a sequence of segments. Each segment holds whole transactions
// (a transaction never spans two segments), and every record carries its
// global position `seq` (1-based, gap free). `prev_seq` links a record to the
// previous write of the same row; the backup's scheduler fills it in before
// flipping the segment's `preprocessed` flag.

#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "c5/common.h"

namespace c5 {

inline constexpr std::size_t kDefaultSegmentCapacity = 4096;
inline constexpr std::size_t kMaxRowSize = 1 << 20;
inline constexpr std::size_t kRecordHeaderSize = 50;

struct LogRecord {
  Seq seq = 0;
  TxnId txn_id = 0;
  TableId table_id = 0;
  RowId row_id = 0;
  OpKind op_kind = OpKind::kInsert;
  std::string value;
  Timestamp write_ts = 0;
  Seq prev_seq = 0;
  bool last_in_txn = false;

  RowKey key() const { return {table_id, row_id}; }
  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct LogSegment {
  std::uint64_t segment_index = 0;
  std::size_t capacity = kDefaultSegmentCapacity;
  bool preprocessed = false;
  std::vector<LogRecord> records;

  friend bool operator==(const LogSegment&, const LogSegment&) = default;
};

// One committed transaction as logged by the primary thread that ran it.
struct ThreadLogEntry {
  Timestamp commit_ts = 0;
  std::vector<LogRecord> records;
};

struct ThreadLog {
  std::uint32_t thread_id = 0;
  std::vector<ThreadLogEntry> entries;
};

// Packs committed transactions into segments, assigning sequence numbers.
// A transaction that does not fit the open segment starts a new one; a
// transaction larger than the capacity gets a segment of its own.
class SegmentBuilder {
 public:
  explicit SegmentBuilder(std::size_t capacity = kDefaultSegmentCapacity);

  // Appends one transaction. Records keep their order; seq, write_ts and
  // last_in_txn are overwritten and prev_seq is reset to 0.
  void add_txn(Timestamp commit_ts, std::vector<LogRecord> records);

  // Closes the open segment (if non-empty) and returns every completed one.
  std::vector<LogSegment> take_sealed(bool seal_open);

  Seq last_seq() const { return next_seq_ - 1; }

 private:
  void seal();

  std::size_t capacity_;
  Seq next_seq_ = 1;
  std::uint64_t next_index_ = 0;
  LogSegment open_;
  std::vector<LogSegment> sealed_;
};

// Merges per-thread logs into one log ordered by commit timestamp.
// Throws InputError if two transactions share a commit timestamp or a thread
// log is not ordered.
std::vector<LogSegment> coalesce(std::span<const ThreadLog> thread_logs,
                                 std::size_t segment_capacity = kDefaultSegmentCapacity);

std::vector<std::uint8_t> encode_record(const LogRecord& r);
void encode_record_into(const LogRecord& r, std::vector<std::uint8_t>& out);

// Decodes one record from the front of `bytes`; `consumed` receives its size.
LogRecord decode_record(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

void dump_log(const std::filesystem::path& path, std::span<const LogSegment> segments);
std::vector<LogSegment> load_log(const std::filesystem::path& path);

std::vector<LogRecord> flatten(std::span<const LogSegment> segments);

// Single-producer stream of sealed segments shared by the primary's logger
// and the backup. Segment addresses are stable; a segment becomes visible to
// readers when append() returns.
class LogStream {
 public:
  LogStream() = default;
  LogStream(const LogStream&) = delete;
  LogStream& operator=(const LogStream&) = delete;

  static std::unique_ptr<LogStream> from_segments(std::vector<LogSegment> segments);

  void append(LogSegment segment);
  void close();

  std::size_t size() const { return count_.load(std::memory_order_acquire); }
  bool closed() const { return closed_.load(std::memory_order_acquire); }

  // Blocks until segment `index` exists or the stream closes without it.
  LogSegment* wait(std::size_t index);
  // Like wait() but gives up after `timeout`.
  LogSegment* wait_for(std::size_t index, std::chrono::microseconds timeout);
  LogSegment* get(std::size_t index) const;

  std::vector<LogSegment> copy_segments() const;

 private:
  ChunkedArray<LogSegment*, 10, 16384> slots_;
  std::atomic<std::size_t> count_{0};
  std::atomic<bool> closed_{false};
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<LogSegment>> owned_;
};

}  // namespace c5
