// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// Identifiers, error types and small concurrency utilities shared by every
// module of the replication engine.

#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

namespace c5 {

using Seq = std::uint64_t;
using TxnId = std::uint64_t;
using TableId = std::uint32_t;
using RowId = std::uint64_t;
using Timestamp = std::uint64_t;

using Clock = std::chrono::steady_clock;

inline constexpr std::size_t kMaxTables = 16;

struct RowKey {
  TableId table = 0;
  RowId row = 0;

  friend auto operator<=>(const RowKey&, const RowKey&) = default;
};

struct RowKeyHash {
  std::size_t operator()(const RowKey& k) const noexcept {
    std::uint64_t h = k.row * 0x9E3779B97F4A7C15ull;
    h ^= (static_cast<std::uint64_t>(k.table) + 0x7F4A7C15ull) + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

enum class OpKind : std::uint8_t { kInsert = 0, kUpdate = 1, kDelete = 2 };

const char* to_string(OpKind kind);

// Base of every error the engine raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A write was about to be installed out of per-row log order. Always a
// scheduler bug, never a user error.
class OrderingViolation : public Error {
 public:
  using Error::Error;
};

class MergeTooEarly : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& why)
      : Error("invalid configuration '" + field + "': " + why), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class DeadlockError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Append-mostly array with stable element addresses. Chunks are allocated on
// first touch with a CAS, so concurrent at() on distinct indices is safe and
// find() never blocks. Elements are value-initialized.
template <typename T, unsigned kChunkBits = 14, std::size_t kMaxChunks = 4096>
class ChunkedArray {
 public:
  static constexpr std::size_t kChunkSize = std::size_t{1} << kChunkBits;
  static constexpr std::size_t kCapacity = kChunkSize * kMaxChunks;

  ChunkedArray() : dir_(new std::atomic<T*>[kMaxChunks]) {
    for (std::size_t i = 0; i < kMaxChunks; ++i) dir_[i].store(nullptr, std::memory_order_relaxed);
  }
  ~ChunkedArray() {
    for (std::size_t i = 0; i < kMaxChunks; ++i) delete[] dir_[i].load(std::memory_order_relaxed);
  }
  ChunkedArray(const ChunkedArray&) = delete;
  ChunkedArray& operator=(const ChunkedArray&) = delete;

  T& at(std::size_t i) {
    std::size_t c = i >> kChunkBits;
    if (c >= kMaxChunks) throw Error("chunked array index out of range: " + std::to_string(i));
    T* chunk = dir_[c].load(std::memory_order_acquire);
    if (chunk == nullptr) {
      T* fresh = new T[kChunkSize]();
      if (dir_[c].compare_exchange_strong(chunk, fresh, std::memory_order_acq_rel)) {
        chunk = fresh;
      } else {
        delete[] fresh;
      }
    }
    return chunk[i & (kChunkSize - 1)];
  }

  T* find(std::size_t i) const {
    std::size_t c = i >> kChunkBits;
    if (c >= kMaxChunks) return nullptr;
    T* chunk = dir_[c].load(std::memory_order_acquire);
    return chunk == nullptr ? nullptr : &chunk[i & (kChunkSize - 1)];
  }

  template <typename Fn>
  void for_each_allocated(Fn&& fn) const {
    for (std::size_t c = 0; c < kMaxChunks; ++c) {
      T* chunk = dir_[c].load(std::memory_order_acquire);
      if (chunk == nullptr) continue;
      for (std::size_t j = 0; j < kChunkSize; ++j) fn((c << kChunkBits) | j, chunk[j]);
    }
  }

 private:
  std::unique_ptr<std::atomic<T*>[]> dir_;
};

// Lowers the kernel timer slack of the calling thread so short timed waits
// used to model per-operation work are accurate.
void tune_thread_for_timed_waits();

// Moves the calling thread to the idle scheduling class so it only runs when
// replication threads have nothing to do.
void demote_to_background();

// Simulated per-operation work. Timed waits keep threads off the CPU, which
// lets multi-threaded parallelism show up on hosts with few cores; spinning
// models CPU-bound work.
class OpCost {
 public:
  enum class Mode { kSleep, kSpin };

  OpCost() = default;
  OpCost(std::chrono::nanoseconds per_op, Mode mode) : ns_(per_op.count()), mode_(mode) {}

  void burn() const;
  void set(std::chrono::nanoseconds per_op) { ns_.store(per_op.count(), std::memory_order_relaxed); }
  std::chrono::nanoseconds per_op() const {
    return std::chrono::nanoseconds(ns_.load(std::memory_order_relaxed));
  }
  Mode mode() const { return mode_; }

 private:
  std::atomic<std::int64_t> ns_{0};
  Mode mode_ = Mode::kSleep;
};

std::int64_t to_ns(Clock::time_point t);

}  // namespace c5
