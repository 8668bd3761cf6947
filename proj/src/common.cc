// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#include "c5/common.h"

#include <sched.h>
#include <sys/prctl.h>

#include <thread>

namespace c5 {

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kInsert:
      return "insert";
    case OpKind::kUpdate:
      return "update";
    case OpKind::kDelete:
      return "delete";
  }
  return "?";
}

void tune_thread_for_timed_waits() { ::prctl(PR_SET_TIMERSLACK, 1UL, 0UL, 0UL, 0UL); }

void demote_to_background() {
  sched_param param{};
  param.sched_priority = 0;
  // Failure leaves the thread in the normal class, which is still correct.
  (void)::sched_setscheduler(0, SCHED_IDLE, &param);
}

void OpCost::burn() const {
  const std::int64_t ns = ns_.load(std::memory_order_relaxed);
  if (ns <= 0) return;
  if (mode_ == Mode::kSleep) {
    std::this_thread::sleep_for(std::chrono::nanoseconds(ns));
    return;
  }
  const auto until = Clock::now() + std::chrono::nanoseconds(ns);
  while (Clock::now() < until) {
  }
}

std::int64_t to_ns(Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(t.time_since_epoch()).count();
}

}  // namespace c5
