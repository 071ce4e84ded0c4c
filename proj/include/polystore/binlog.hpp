/*
 * Copyright 2026 The Polystore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polystore/value.hpp"

namespace polystore {

enum class LogOp : uint8_t {
    Insert = 1,
    Update = 2,
    Delete = 3,
    Commit = 4,
    Abort = 5,
};

const char* log_op_name(LogOp op);

struct LogRecord {
    uint64_t lsn = 0;  // >= 1, strictly increasing, gapless per shard master
    uint64_t txn_id = 0;
    std::string tenant_id;
    std::string entity;
    LogOp op = LogOp::Commit;
    std::optional<Row> before;  // Delete/Update
    std::optional<Row> after;   // Insert/Update

    bool is_data() const { return op == LogOp::Insert || op == LogOp::Update || op == LogOp::Delete; }
};

// On-disk record layout, little-endian:
//   u32 payload_length
//   payload:
//     u64 lsn, u64 txn_id, u8 op (1..5)
//     u32 + bytes  tenant (UTF-8)
//     u32 + bytes  entity (UTF-8)
//     u32 + bytes  before row (length 0 = absent)
//     u32 + bytes  after row  (length 0 = absent)
//   u32 crc32(payload)
// Row blob: u32 field_count, then per field sorted by name:
//   u32 + bytes name, u8 scalar tag (ScalarKind), value
//   (int64/timestamp: i64; decimal: i64 micros; text: u32 + bytes;
//    bool: u8; geo: f64 x, f64 y)
std::vector<uint8_t> encode_log_record(const LogRecord& record);

// Decodes one record starting at `offset`; advances offset past it.
// Returns nullopt on a torn or corrupt record (offset is left unchanged).
std::optional<LogRecord> decode_log_record(const std::vector<uint8_t>& buf, size_t& offset);

enum class Durability { Relaxed, Strict };

// Append-only binlog file. Appends buffer in memory per commit group and
// reach the file as one write(); Strict fsyncs before commit returns.
class BinlogFile {
  public:
    BinlogFile() = default;
    ~BinlogFile();
    BinlogFile(const BinlogFile&) = delete;
    BinlogFile& operator=(const BinlogFile&) = delete;

    Status open(const std::string& path, Durability durability);
    bool is_open() const { return fd_ >= 0; }
    void close();

    // One commit group: encodes all records, writes them with a single
    // write(), fsyncs under Strict.
    Status append_group(const std::vector<LogRecord>& records);

    const std::string& path() const { return path_; }

  private:
    int fd_ = -1;
    std::string path_;
    Durability durability_ = Durability::Relaxed;
};

struct RecoveryResult {
    std::vector<LogRecord> records;  // clean committed prefix
    uint64_t truncated_bytes = 0;    // bytes dropped from the tail
    uint32_t torn_records = 0;       // CRC-failing/incomplete records dropped (0 or 1)
    uint32_t discarded_uncommitted = 0;  // complete data records missing their Commit
};

// Scans a binlog file, keeps the longest prefix of whole committed
// transactions, truncates the file to it. A torn trailing record (short or
// CRC-mismatched) is dropped; complete trailing data records whose Commit
// never made it are dropped with it.
Result<RecoveryResult> recover_binlog(const std::string& path);

}  // namespace polystore
