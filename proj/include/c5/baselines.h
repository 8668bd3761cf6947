// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.
//
// Comparison replay protocols. All of them are safe and expose prefix
// snapshots through the generic prefix snapshotter; they differ only in how
// much parallelism their ordering rule allows.
//
//  * single: one thread installs records in log order.
//  * txn-gran: a transaction starts once every earlier transaction whose
//    write set overlaps its own has finished; one worker runs all of its
//    writes.
//  * page-gran: per-page FIFO queues feeding a FIFO of ready pages, so two
//    writes to rows on the same page never run concurrently or out of order.

#pragma once

#include <span>

#include "c5/backup.h"

namespace c5 {

void replay_single_threaded(std::span<const LogSegment> log, Store& store);
void replay_txn_granularity(std::span<const LogSegment> log, Store& store, std::size_t workers,
                            bool prune_edges = true);
void replay_page_granularity(std::span<const LogSegment> log, Store& store, std::size_t workers,
                             const PageMap& pages = {});

}  // namespace c5
