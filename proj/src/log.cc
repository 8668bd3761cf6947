// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include "c5/log.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <queue>

namespace c5 {

SegmentBuilder::SegmentBuilder(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("segment_size", "must be at least 1");
  open_.capacity = capacity_;
}

void SegmentBuilder::add_txn(Timestamp commit_ts, std::vector<LogRecord> records) {
  if (records.empty()) return;
  if (!open_.records.empty() && open_.records.size() + records.size() > capacity_) seal();
  for (std::size_t i = 0; i < records.size(); ++i) {
    LogRecord& r = records[i];
    r.seq = next_seq_++;
    r.write_ts = commit_ts;
    r.prev_seq = 0;
    r.last_in_txn = (i + 1 == records.size());
    open_.records.push_back(std::move(r));
  }
  if (open_.records.size() >= capacity_) seal();
}

void SegmentBuilder::seal() {
  if (open_.records.empty()) return;
  open_.segment_index = next_index_++;
  open_.capacity = capacity_;
  sealed_.push_back(std::move(open_));
  open_ = LogSegment{};
  open_.capacity = capacity_;
}

std::vector<LogSegment> SegmentBuilder::take_sealed(bool seal_open) {
  if (seal_open) seal();
  std::vector<LogSegment> out;
  out.swap(sealed_);
  return out;
}

std::vector<LogSegment> coalesce(std::span<const ThreadLog> thread_logs,
                                 std::size_t segment_capacity) {
  struct Cursor {
    Timestamp ts;
    std::size_t log;
    std::size_t entry;
    bool operator>(const Cursor& o) const { return ts > o.ts; }
  };
  std::priority_queue<Cursor, std::vector<Cursor>, std::greater<>> heap;
  for (std::size_t l = 0; l < thread_logs.size(); ++l) {
    const auto& entries = thread_logs[l].entries;
    for (std::size_t i = 1; i < entries.size(); ++i) {
      if (entries[i].commit_ts <= entries[i - 1].commit_ts)
        throw InputError("thread log " + std::to_string(thread_logs[l].thread_id) +
                         " is not ordered by commit timestamp");
    }
    if (!entries.empty()) heap.push({entries[0].commit_ts, l, 0});
  }

  SegmentBuilder builder(segment_capacity);
  bool have_prev = false;
  Timestamp prev_ts = 0;
  while (!heap.empty()) {
    Cursor top = heap.top();
    heap.pop();
    if (have_prev && top.ts == prev_ts)
      throw InputError("duplicate commit timestamp " + std::to_string(top.ts) + " across threads");
    have_prev = true;
    prev_ts = top.ts;
    const ThreadLogEntry& entry = thread_logs[top.log].entries[top.entry];
    builder.add_txn(entry.commit_ts, entry.records);
    if (top.entry + 1 < thread_logs[top.log].entries.size()) {
      heap.push({thread_logs[top.log].entries[top.entry + 1].commit_ts, top.log, top.entry + 1});
    }
  }
  return builder.take_sealed(true);
}

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* field) {
    if (pos_ + sizeof(T) > bytes_.size()) throw DecodeError(std::string("truncated ") + field, pos_);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string get_bytes(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw DecodeError("truncated value", pos_);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void encode_record_into(const LogRecord& r, std::vector<std::uint8_t>& out) {
  if (r.value.size() > kMaxRowSize)
    throw ConfigError("value", "row of " + std::to_string(r.value.size()) + " bytes exceeds max row size");
  put_le<std::uint64_t>(out, r.seq);
  put_le<std::uint64_t>(out, r.txn_id);
  put_le<std::uint32_t>(out, r.table_id);
  put_le<std::uint64_t>(out, r.row_id);
  put_le<std::uint64_t>(out, r.write_ts);
  put_le<std::uint64_t>(out, r.prev_seq);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(r.op_kind));
  put_le<std::uint8_t>(out, r.last_in_txn ? 1 : 0);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.value.size()));
  out.insert(out.end(), r.value.begin(), r.value.end());
}

std::vector<std::uint8_t> encode_record(const LogRecord& r) {
  std::vector<std::uint8_t> out;
  out.reserve(kRecordHeaderSize + r.value.size());
  encode_record_into(r, out);
  return out;
}

LogRecord decode_record(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  Reader in(bytes);
  LogRecord r;
  r.seq = in.get<std::uint64_t>("seq");
  r.txn_id = in.get<std::uint64_t>("txn_id");
  r.table_id = in.get<std::uint32_t>("table_id");
  r.row_id = in.get<std::uint64_t>("row_id");
  r.write_ts = in.get<std::uint64_t>("write_ts");
  r.prev_seq = in.get<std::uint64_t>("prev_seq");
  const std::size_t kind_at = in.pos();
  auto kind = in.get<std::uint8_t>("op_kind");
  if (kind > static_cast<std::uint8_t>(OpKind::kDelete)) throw DecodeError("bad op_kind", kind_at);
  r.op_kind = static_cast<OpKind>(kind);
  const std::size_t flag_at = in.pos();
  auto last = in.get<std::uint8_t>("last_in_txn");
  if (last > 1) throw DecodeError("bad last_in_txn flag", flag_at);
  r.last_in_txn = last == 1;
  const std::size_t len_at = in.pos();
  auto len = in.get<std::uint32_t>("value_len");
  if (len > kMaxRowSize) throw DecodeError("value_len exceeds max row size", len_at);
  r.value = in.get_bytes(len);
  if (consumed != nullptr) *consumed = in.pos();
  return r;
}

namespace {
constexpr char kLogMagic[8] = {'C', '5', 'L', 'O', 'G', 0, 0, 1};
}

void dump_log(const std::filesystem::path& path, std::span<const LogSegment> segments) {
  std::vector<std::uint8_t> out(kLogMagic, kLogMagic + sizeof(kLogMagic));
  for (const LogSegment& s : segments) {
    put_le<std::uint64_t>(out, s.segment_index);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.capacity));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.records.size()));
    put_le<std::uint8_t>(out, s.preprocessed ? 1 : 0);
    for (const LogRecord& r : s.records) encode_record_into(r, out);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("short write to " + path.string());
}

std::vector<LogSegment> load_log(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kLogMagic) || std::memcmp(bytes.data(), kLogMagic, sizeof(kLogMagic)) != 0)
    throw DecodeError("not a log file", 0);

  std::vector<LogSegment> segments;
  std::size_t pos = sizeof(kLogMagic);
  while (pos < bytes.size()) {
    std::span<const std::uint8_t> rest(bytes.data() + pos, bytes.size() - pos);
    Reader header(rest);
    LogSegment seg;
    try {
      seg.segment_index = header.get<std::uint64_t>("segment_index");
      seg.capacity = header.get<std::uint32_t>("capacity");
      auto count = header.get<std::uint32_t>("record_count");
      seg.preprocessed = header.get<std::uint8_t>("preprocessed") != 0;
      seg.records.reserve(count);
      pos += header.pos();
      for (std::uint32_t i = 0; i < count; ++i) {
        std::size_t used = 0;
        seg.records.push_back(decode_record({bytes.data() + pos, bytes.size() - pos}, &used));
        pos += used;
      }
    } catch (const DecodeError& e) {
      throw DecodeError(std::string("corrupt log file (") + e.what() + ")", pos);
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<LogRecord> flatten(std::span<const LogSegment> segments) {
  std::vector<LogRecord> out;
  for (const auto& s : segments) out.insert(out.end(), s.records.begin(), s.records.end());
  return out;
}

std::unique_ptr<LogStream> LogStream::from_segments(std::vector<LogSegment> segments) {
  auto stream = std::make_unique<LogStream>();
  for (auto& s : segments) stream->append(std::move(s));
  stream->close();
  return stream;
}

void LogStream::append(LogSegment segment) {
  std::unique_lock lock(mu_);
  if (closed_.load(std::memory_order_relaxed)) throw Error("append to closed log stream");
  const std::size_t index = count_.load(std::memory_order_relaxed);
  owned_.push_back(std::make_unique<LogSegment>(std::move(segment)));
  slots_.at(index) = owned_.back().get();
  count_.store(index + 1, std::memory_order_release);
  lock.unlock();
  cv_.notify_all();
}

void LogStream::close() {
  {
    std::lock_guard lock(mu_);
    closed_.store(true, std::memory_order_release);
  }
  cv_.notify_all();
}

LogSegment* LogStream::get(std::size_t index) const {
  if (index >= count_.load(std::memory_order_acquire)) return nullptr;
  return *slots_.find(index);
}

LogSegment* LogStream::wait(std::size_t index) {
  if (auto* s = get(index)) return s;
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return index < count_.load(std::memory_order_relaxed) || closed_.load(std::memory_order_relaxed); });
  lock.unlock();
  return get(index);
}

LogSegment* LogStream::wait_for(std::size_t index, std::chrono::microseconds timeout) {
  if (auto* s = get(index)) return s;
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] {
    return index < count_.load(std::memory_order_relaxed) || closed_.load(std::memory_order_relaxed);
  });
  lock.unlock();
  return get(index);
}

std::vector<LogSegment> LogStream::copy_segments() const {
  std::vector<LogSegment> out;
  const std::size_t n = size();
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(*get(i));
  return out;
}

}  // namespace c5
