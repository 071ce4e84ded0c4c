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

#include "polystore/binlog.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>

namespace polystore {

const char* log_op_name(LogOp op) {
    switch (op) {
        case LogOp::Insert: return "insert";
        case LogOp::Update: return "update";
        case LogOp::Delete: return "delete";
        case LogOp::Commit: return "commit";
        case LogOp::Abort: return "abort";
    }
    return "?";
}

namespace {

void put_u8(std::vector<uint8_t>& buf, uint8_t v) { buf.push_back(v); }

void put_u32(std::vector<uint8_t>& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<uint8_t>& buf, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(buf, bits);
}

void put_bytes(std::vector<uint8_t>& buf, const std::string& s) {
    put_u32(buf, static_cast<uint32_t>(s.size()));
    buf.insert(buf.end(), s.begin(), s.end());
}

struct Cursor {
    const std::vector<uint8_t>& buf;
    size_t pos;
    bool ok = true;

    bool need(size_t n) {
        if (!ok || pos + n > buf.size()) {
            ok = false;
            return false;
        }
        return true;
    }
    uint8_t u8() {
        if (!need(1)) return 0;
        return buf[pos++];
    }
    uint32_t u32() {
        if (!need(4)) return 0;
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        if (!need(8)) return 0;
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string bytes() {
        uint32_t n = u32();
        if (!need(n)) return {};
        std::string s(buf.begin() + static_cast<long>(pos), buf.begin() + static_cast<long>(pos + n));
        pos += n;
        return s;
    }
};

void encode_row(std::vector<uint8_t>& buf, const std::optional<Row>& row) {
    if (!row) {
        put_u32(buf, 0);
        return;
    }
    std::vector<uint8_t> blob;
    put_u32(blob, static_cast<uint32_t>(row->size()));
    for (const auto& [name, value] : *row) {  // std::map iterates sorted by name
        put_bytes(blob, name);
        put_u8(blob, static_cast<uint8_t>(kind_of(value)));
        switch (kind_of(value)) {
            case ScalarKind::Int64:
                put_u64(blob, static_cast<uint64_t>(std::get<int64_t>(value)));
                break;
            case ScalarKind::Decimal:
                put_u64(blob, static_cast<uint64_t>(std::get<Decimal>(value).micros));
                break;
            case ScalarKind::Text:
                put_bytes(blob, std::get<std::string>(value));
                break;
            case ScalarKind::Bool:
                put_u8(blob, std::get<bool>(value) ? 1 : 0);
                break;
            case ScalarKind::TimestampMillis:
                put_u64(blob, static_cast<uint64_t>(std::get<Timestamp>(value).millis));
                break;
            case ScalarKind::GeoPoint:
                put_f64(blob, std::get<GeoPoint>(value).x);
                put_f64(blob, std::get<GeoPoint>(value).y);
                break;
        }
    }
    put_u32(buf, static_cast<uint32_t>(blob.size()));
    buf.insert(buf.end(), blob.begin(), blob.end());
}

std::optional<Row> decode_row(Cursor& cur) {
    uint32_t blob_len = cur.u32();
    if (!cur.ok) return std::nullopt;
    if (blob_len == 0) return std::nullopt;  // absent row
    size_t end = cur.pos + blob_len;
    if (!cur.need(blob_len)) return std::nullopt;

    Row row;
    uint32_t count = cur.u32();
    for (uint32_t i = 0; i < count && cur.ok; ++i) {
        std::string name = cur.bytes();
        auto tag = static_cast<ScalarKind>(cur.u8());
        switch (tag) {
            case ScalarKind::Int64:
                row[name] = static_cast<int64_t>(cur.u64());
                break;
            case ScalarKind::Decimal:
                row[name] = Decimal{static_cast<int64_t>(cur.u64())};
                break;
            case ScalarKind::Text:
                row[name] = cur.bytes();
                break;
            case ScalarKind::Bool:
                row[name] = cur.u8() != 0;
                break;
            case ScalarKind::TimestampMillis:
                row[name] = Timestamp{static_cast<int64_t>(cur.u64())};
                break;
            case ScalarKind::GeoPoint: {
                double x = cur.f64(), y = cur.f64();
                row[name] = GeoPoint{x, y};
                break;
            }
            default:
                cur.ok = false;
                break;
        }
    }
    if (!cur.ok || cur.pos != end) {
        cur.ok = false;
        return std::nullopt;
    }
    return row;
}

uint32_t crc32_of(const uint8_t* data, size_t len) {
    return static_cast<uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

}  // namespace

std::vector<uint8_t> encode_log_record(const LogRecord& record) {
    std::vector<uint8_t> payload;
    put_u64(payload, record.lsn);
    put_u64(payload, record.txn_id);
    put_u8(payload, static_cast<uint8_t>(record.op));
    put_bytes(payload, record.tenant_id);
    put_bytes(payload, record.entity);
    encode_row(payload, record.before);
    encode_row(payload, record.after);

    std::vector<uint8_t> out;
    out.reserve(payload.size() + 8);
    put_u32(out, static_cast<uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    put_u32(out, crc32_of(payload.data(), payload.size()));
    return out;
}

std::optional<LogRecord> decode_log_record(const std::vector<uint8_t>& buf, size_t& offset) {
    if (offset + 4 > buf.size()) return std::nullopt;
    uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(buf[offset + i]) << (8 * i);
    if (offset + 4 + len + 4 > buf.size()) return std::nullopt;

    const uint8_t* payload = buf.data() + offset + 4;
    uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i)
        stored_crc |= static_cast<uint32_t>(buf[offset + 4 + len + i]) << (8 * i);
    if (crc32_of(payload, len) != stored_crc) return std::nullopt;

    std::vector<uint8_t> view(payload, payload + len);
    Cursor cur{view, 0};
    LogRecord rec;
    rec.lsn = cur.u64();
    rec.txn_id = cur.u64();
    uint8_t op = cur.u8();
    if (op < 1 || op > 5) return std::nullopt;
    rec.op = static_cast<LogOp>(op);
    rec.tenant_id = cur.bytes();
    rec.entity = cur.bytes();
    rec.before = decode_row(cur);
    rec.after = decode_row(cur);
    if (!cur.ok || cur.pos != view.size()) return std::nullopt;

    offset += 4 + len + 4;
    return rec;
}

BinlogFile::~BinlogFile() { close(); }

Status BinlogFile::open(const std::string& path, Durability durability) {
    close();
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) return Status::error(ErrorCode::IoError, path + ": " + std::strerror(errno));
    path_ = path;
    durability_ = durability;
    return Status::ok();
}

void BinlogFile::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Status BinlogFile::append_group(const std::vector<LogRecord>& records) {
    if (fd_ < 0) return Status::error(ErrorCode::EngineClosed, "binlog not open");
    std::vector<uint8_t> buf;
    for (const auto& rec : records) {
        auto bytes = encode_log_record(rec);
        buf.insert(buf.end(), bytes.begin(), bytes.end());
    }
    size_t written = 0;
    while (written < buf.size()) {
        ssize_t n = ::write(fd_, buf.data() + written, buf.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            return Status::error(ErrorCode::IoError, std::strerror(errno));
        }
        written += static_cast<size_t>(n);
    }
    if (durability_ == Durability::Strict && ::fsync(fd_) != 0)
        return Status::error(ErrorCode::IoError, std::strerror(errno));
    return Status::ok();
}

Result<RecoveryResult> recover_binlog(const std::string& path) {
    int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) {
        if (errno == ENOENT) return RecoveryResult{};  // nothing to recover
        return Result<RecoveryResult>(ErrorCode::IoError, path + ": " + std::strerror(errno));
    }
    std::vector<uint8_t> buf;
    uint8_t chunk[1 << 16];
    ssize_t n;
    while ((n = ::read(fd, chunk, sizeof chunk)) > 0)
        buf.insert(buf.end(), chunk, chunk + n);
    ::close(fd);

    RecoveryResult out;
    size_t offset = 0;
    size_t committed_end = 0;  // byte offset after the last whole committed txn
    size_t committed_count = 0;
    uint64_t expect_lsn = 1;
    while (offset < buf.size()) {
        size_t before = offset;
        auto rec = decode_log_record(buf, offset);
        if (!rec) {
            out.torn_records = 1;  // short or CRC-failing tail
            break;
        }
        if (rec->lsn != expect_lsn) break;  // sequence break: treat as tail damage
        ++expect_lsn;
        out.records.push_back(std::move(*rec));
        (void)before;
        if (out.records.back().op == LogOp::Commit || out.records.back().op == LogOp::Abort) {
            committed_end = offset;
            committed_count = out.records.size();
        }
    }
    out.discarded_uncommitted = static_cast<uint32_t>(out.records.size() - committed_count);
    out.records.resize(committed_count);
    out.truncated_bytes = buf.size() - committed_end;

    if (out.truncated_bytes > 0) {
        if (::truncate(path.c_str(), static_cast<off_t>(committed_end)) != 0)
            return Result<RecoveryResult>(ErrorCode::IoError,
                                          "truncate: " + std::string(std::strerror(errno)));
    }
    return out;
}

}  // namespace polystore
