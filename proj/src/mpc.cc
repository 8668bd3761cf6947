// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include "c5/mpc.h"

#include <algorithm>
#include <cstdio>

namespace c5 {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

void fnv(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void fnv_u64(std::uint64_t& h, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  fnv(h, b, 8);
}

}  // namespace

std::uint64_t digest_value(const std::optional<std::string>& value) {
  std::uint64_t h = kFnvOffset;
  if (!value) return h;
  fnv_u64(h, value->size() + 1);
  fnv(h, value->data(), value->size());
  return h;
}

std::uint64_t digest_state(const StateMap& state) {
  std::uint64_t h = kFnvOffset;
  for (const auto& [key, value] : state) {
    fnv_u64(h, key.table);
    fnv_u64(h, key.row);
    fnv_u64(h, value.size());
    fnv(h, value.data(), value.size());
  }
  return h;
}

PrefixOracle::PrefixOracle(std::span<const LogRecord> log) {
  for (const LogRecord& r : log) {
    if (r.seq != size_ + 1) {
      throw InputError("log is not gap free: expected seq " + std::to_string(size_ + 1) + ", got " +
                       std::to_string(r.seq));
    }
    size_ = r.seq;
    std::optional<std::string> value;
    if (r.op_kind != OpKind::kDelete) value = r.value;
    history_[r.key()].push_back({r.seq, std::move(value)});
    if (r.last_in_txn) boundaries_.push_back(r.seq);
  }
}

PrefixOracle PrefixOracle::from_segments(std::span<const LogSegment> segments) {
  return PrefixOracle(flatten(segments));
}

bool PrefixOracle::is_boundary(Seq c) const {
  return c == 0 || std::binary_search(boundaries_.begin(), boundaries_.end(), c);
}

std::optional<std::string> PrefixOracle::value_at(RowKey key, Seq c) const {
  auto it = history_.find(key);
  if (it == history_.end()) return std::nullopt;
  const auto& versions = it->second;
  auto v = std::upper_bound(versions.begin(), versions.end(), c,
                            [](Seq s, const Version& ver) { return s < ver.seq; });
  if (v == versions.begin()) return std::nullopt;
  return std::prev(v)->value;
}

StateMap PrefixOracle::state_at(Seq c) const {
  StateMap state;
  for (const auto& [key, versions] : history_) {
    if (auto v = value_at(key, c)) state.emplace(key, std::move(*v));
  }
  return state;
}

std::uint64_t PrefixOracle::digest_at(Seq c) const {
  auto it = digests_.find(c);
  if (it != digests_.end()) return it->second;
  const std::uint64_t d = digest_state(state_at(c));
  digests_.emplace(c, d);
  return d;
}

std::string Violation::line(const std::string& run_id) const {
  char buf[256];
  switch (kind) {
    case ViolationKind::kMonotonic:
      std::snprintf(buf, sizeof buf, "run=%s session=%u kind=monotonic previous_c=%llu c=%llu", run_id.c_str(),
                    session, static_cast<unsigned long long>(expected), static_cast<unsigned long long>(got));
      break;
    case ViolationKind::kBoundary:
      std::snprintf(buf, sizeof buf, "run=%s session=%u kind=boundary c=%llu", run_id.c_str(), session,
                    static_cast<unsigned long long>(c));
      break;
    case ViolationKind::kState:
      std::snprintf(buf, sizeof buf, "run=%s session=%u c=%llu table=%u row=%llu expected=%016llx got=%016llx",
                    run_id.c_str(), session, static_cast<unsigned long long>(c), key.table,
                    static_cast<unsigned long long>(key.row), static_cast<unsigned long long>(expected),
                    static_cast<unsigned long long>(got));
      break;
  }
  return buf;
}

std::vector<Violation> check_state(const Observation& observation, const PrefixOracle& oracle) {
  std::vector<Violation> out;
  if (!oracle.is_boundary(observation.c) || observation.c > oracle.size()) {
    Violation v;
    v.kind = ViolationKind::kBoundary;
    v.session = observation.session;
    v.c = observation.c;
    out.push_back(v);
    return out;
  }
  for (const ReadItem& item : observation.reads) {
    const std::uint64_t expected = digest_value(oracle.value_at(item.key, observation.c));
    const std::uint64_t got = digest_value(item.value);
    if (expected != got) {
      Violation v;
      v.kind = ViolationKind::kState;
      v.session = observation.session;
      v.c = observation.c;
      v.key = item.key;
      v.expected = expected;
      v.got = got;
      out.push_back(v);
    }
  }
  return out;
}

std::vector<Violation> check_monotonic(std::span<const Observation> observations) {
  std::vector<Violation> out;
  for (std::size_t i = 1; i < observations.size(); ++i) {
    if (observations[i].c < observations[i - 1].c) {
      Violation v;
      v.kind = ViolationKind::kMonotonic;
      v.session = observations[i].session;
      v.c = observations[i].c;
      v.expected = observations[i - 1].c;
      v.got = observations[i].c;
      out.push_back(v);
    }
  }
  return out;
}

std::vector<RowDiff> diff_states(const StateMap& expected, const StateMap& got) {
  std::vector<RowDiff> out;
  auto e = expected.begin();
  auto g = got.begin();
  while (e != expected.end() || g != got.end()) {
    if (g == got.end() || (e != expected.end() && e->first < g->first)) {
      out.push_back({e->first, e->second, std::nullopt});
      ++e;
    } else if (e == expected.end() || g->first < e->first) {
      out.push_back({g->first, std::nullopt, g->second});
      ++g;
    } else {
      if (e->second != g->second) out.push_back({e->first, e->second, g->second});
      ++e;
      ++g;
    }
  }
  return out;
}

std::vector<RowDiff> check_final_convergence(const Store& store, const PrefixOracle& oracle) {
  return diff_states(oracle.state_at(oracle.size()), store.latest_state());
}

MpcVerdict check_sessions(std::span<const SessionLog> sessions, const PrefixOracle& oracle,
                          const std::string& run_id, std::size_t max_lines) {
  MpcVerdict verdict;
  auto note = [&](const Violation& v) {
    if (verdict.lines.size() < max_lines) verdict.lines.push_back(v.line(run_id));
  };
  for (const SessionLog& s : sessions) {
    verdict.observations += s.observations().size();
    for (const Observation& o : s.observations()) {
      for (const Violation& v : check_state(o, oracle)) {
        ++verdict.state_violations;
        note(v);
      }
    }
    for (const Violation& v : check_monotonic(s.observations())) {
      ++verdict.monotonic_violations;
      note(v);
    }
  }
  return verdict;
}

}  // namespace c5
