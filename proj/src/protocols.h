// Copyright 2026 The C5 Replication Authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <memory>

#include "c5/backup.h"

namespace c5 {

std::unique_ptr<Backup> make_watermark_backup(const BackupConfig&, LogStream&, Store&, SnapshotCursor&);
std::unique_ptr<Backup> make_txnchain_backup(const BackupConfig&, LogStream&, Store&, SnapshotCursor&);
std::unique_ptr<Backup> make_single_backup(const BackupConfig&, LogStream&, Store&, SnapshotCursor&);
std::unique_ptr<Backup> make_txn_backup(const BackupConfig&, LogStream&, Store&, SnapshotCursor&);
std::unique_ptr<Backup> make_page_backup(const BackupConfig&, LogStream&, Store&, SnapshotCursor&);

}  // namespace c5
