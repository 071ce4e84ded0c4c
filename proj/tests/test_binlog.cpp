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

#include <doctest.h>

#include <unistd.h>
#include <zlib.h>

#include <cstdio>
#include <fstream>

#include "polystore/binlog.hpp"
#include "polystore/sim/rng.hpp"

using namespace polystore;

namespace {

std::string temp_path(const char* tag) {
    return "/tmp/polystore_binlog_" + std::string(tag) + "_" + std::to_string(::getpid()) +
           ".binlog";
}

LogRecord sample_insert(uint64_t lsn, uint64_t txn) {
    LogRecord rec;
    rec.lsn = lsn;
    rec.txn_id = txn;
    rec.tenant_id = "t1";
    rec.entity = "orders";
    rec.op = LogOp::Insert;
    Row after;
    after["order_id"] = int64_t{42};
    after["amount"] = Decimal{1250000};
    after["flag"] = true;
    after["when"] = Timestamp{1700000000000};
    after["where"] = GeoPoint{12.5, -33.25};
    after["note"] = std::string("héllo");
    rec.after = after;
    return rec;
}

LogRecord commit_record(uint64_t lsn, uint64_t txn) {
    LogRecord rec;
    rec.lsn = lsn;
    rec.txn_id = txn;
    rec.tenant_id = "t1";
    rec.op = LogOp::Commit;
    return rec;
}

}  // namespace

TEST_CASE("record encoding is bit-exact") {
    LogRecord rec;
    rec.lsn = 1;
    rec.txn_id = 7;
    rec.tenant_id = "t";
    rec.entity = "e";
    rec.op = LogOp::Insert;
    Row after;
    after["a"] = int64_t{5};
    rec.after = after;

    auto bytes = encode_log_record(rec);
    // little-endian layout:
    //   u32 len | u64 lsn | u64 txn | u8 op | u32+tenant | u32+entity
    //   | u32 before_len(0) | u32 after_len | after_blob | u32 crc
    std::vector<uint8_t> expect_payload = {
        1, 0, 0, 0, 0, 0, 0, 0,              // lsn
        7, 0, 0, 0, 0, 0, 0, 0,              // txn_id
        1,                                   // op = Insert
        1, 0, 0, 0, 't',                     // tenant
        1, 0, 0, 0, 'e',                     // entity
        0, 0, 0, 0,                          // before absent
        18, 0, 0, 0,                         // after blob length
        1, 0, 0, 0,                          // field count
        1, 0, 0, 0, 'a',                     // field name
        1,                                   // tag Int64
        5, 0, 0, 0, 0, 0, 0, 0,              // value
    };
    REQUIRE(bytes.size() == 4 + expect_payload.size() + 4);
    uint32_t len = bytes[0] | bytes[1] << 8 | bytes[2] << 16 | bytes[3] << 24;
    CHECK(len == expect_payload.size());
    for (size_t i = 0; i < expect_payload.size(); ++i) CHECK(bytes[4 + i] == expect_payload[i]);

    uint32_t crc = static_cast<uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(expect_payload.data()),
                static_cast<uInt>(expect_payload.size())));
    uint32_t stored = bytes[4 + len] | bytes[5 + len] << 8 | bytes[6 + len] << 16 |
                      static_cast<uint32_t>(bytes[7 + len]) << 24;
    CHECK(stored == crc);
}

TEST_CASE("encode/decode round-trips every scalar kind") {
    auto rec = sample_insert(3, 9);
    auto bytes = encode_log_record(rec);
    size_t offset = 0;
    auto back = decode_log_record(bytes, offset);
    REQUIRE(back.has_value());
    CHECK(offset == bytes.size());
    CHECK(back->lsn == 3);
    CHECK(back->txn_id == 9);
    CHECK(back->tenant_id == "t1");
    CHECK(back->entity == "orders");
    CHECK(back->op == LogOp::Insert);
    CHECK(!back->before.has_value());
    REQUIRE(back->after.has_value());
    CHECK(*back->after == *rec.after);
}

TEST_CASE("property: random records round-trip") {
    SplitMix64 rng(41);
    for (int round = 0; round < 200; ++round) {
        LogRecord rec;
        rec.lsn = rng.next();
        rec.txn_id = rng.next();
        rec.tenant_id = "t" + std::to_string(rng.below(100));
        rec.entity = "e" + std::to_string(rng.below(10));
        rec.op = static_cast<LogOp>(1 + rng.below(5));
        auto random_row = [&] {
            Row row;
            size_t n = rng.below(5);
            for (size_t i = 0; i < n; ++i) {
                std::string name = "f" + std::to_string(i);
                switch (rng.below(6)) {
                    case 0: row[name] = static_cast<int64_t>(rng.next()); break;
                    case 1: row[name] = Decimal{static_cast<int64_t>(rng.next() % 1000000000)}; break;
                    case 2: row[name] = std::string(1 + rng.below(20), 'x'); break;
                    case 3: row[name] = rng.below(2) == 0; break;
                    case 4: row[name] = Timestamp{static_cast<int64_t>(rng.next() % (1LL << 40))}; break;
                    default: row[name] = GeoPoint{rng.unit() * 360 - 180, rng.unit() * 180 - 90}; break;
                }
            }
            return row;
        };
        if (rng.below(2)) rec.before = random_row();
        if (rng.below(2)) rec.after = random_row();
        auto bytes = encode_log_record(rec);
        size_t offset = 0;
        auto back = decode_log_record(bytes, offset);
        REQUIRE(back.has_value());
        CHECK(back->lsn == rec.lsn);
        CHECK(back->before == rec.before);
        CHECK(back->after == rec.after);
    }
}

TEST_CASE("corrupt crc is rejected") {
    auto bytes = encode_log_record(sample_insert(1, 1));
    bytes[10] ^= 0xff;  // flip a payload byte
    size_t offset = 0;
    CHECK(!decode_log_record(bytes, offset));
    CHECK(offset == 0);  // offset untouched on failure
}

TEST_CASE("recovery keeps the committed prefix and truncates a torn tail") {
    std::string path = temp_path("torn");
    std::remove(path.c_str());
    {
        BinlogFile file;
        REQUIRE(file.open(path, Durability::Strict));
        REQUIRE(file.append_group({sample_insert(1, 1), commit_record(2, 1)}));
        REQUIRE(file.append_group({sample_insert(3, 2), commit_record(4, 2)}));
    }
    // Append a torn record: a full record minus its last 3 bytes.
    auto torn = encode_log_record(sample_insert(5, 3));
    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out.write(reinterpret_cast<const char*>(torn.data()),
                  static_cast<long>(torn.size() - 3));
    }

    auto recovered = recover_binlog(path);
    REQUIRE(recovered.is_ok());
    const RecoveryResult& r = recovered.value();
    CHECK(r.records.size() == 4);
    CHECK(r.records.back().lsn == 4);
    CHECK(r.torn_records == 1);
    CHECK(r.truncated_bytes == torn.size() - 3);

    // Second recovery after truncation is clean and stable.
    auto again = recover_binlog(path);
    REQUIRE(again.is_ok());
    CHECK(again.value().records.size() == 4);
    CHECK(again.value().torn_records == 0);
    CHECK(again.value().truncated_bytes == 0);
    std::remove(path.c_str());
}

TEST_CASE("recovery drops complete data records missing their commit") {
    std::string path = temp_path("uncommitted");
    std::remove(path.c_str());
    {
        BinlogFile file;
        REQUIRE(file.open(path, Durability::Relaxed));
        REQUIRE(file.append_group({sample_insert(1, 1), commit_record(2, 1)}));
        // data records of txn 2 whose commit never made it to disk
        REQUIRE(file.append_group({sample_insert(3, 2)}));
    }
    auto recovered = recover_binlog(path);
    REQUIRE(recovered.is_ok());
    CHECK(recovered.value().records.size() == 2);
    CHECK(recovered.value().discarded_uncommitted == 1);
    CHECK(recovered.value().torn_records == 0);
    std::remove(path.c_str());
}

TEST_CASE("recovery of a missing file is empty, not an error") {
    auto recovered = recover_binlog("/tmp/polystore_does_not_exist_12345.binlog");
    REQUIRE(recovered.is_ok());
    CHECK(recovered.value().records.empty());
}

TEST_CASE("random truncation points never corrupt the committed prefix") {
    std::string path = temp_path("randomcut");
    SplitMix64 rng(77);
    for (int round = 0; round < 40; ++round) {
        std::remove(path.c_str());
        uint64_t lsn = 1;
        size_t committed = 0;
        {
            BinlogFile file;
            REQUIRE(file.open(path, Durability::Relaxed));
            for (int txn = 1; txn <= 6; ++txn) {
                std::vector<LogRecord> group;
                group.push_back(sample_insert(lsn, static_cast<uint64_t>(txn)));
                ++lsn;
                group.push_back(commit_record(lsn, static_cast<uint64_t>(txn)));
                ++lsn;
                REQUIRE(file.append_group(group));
            }
            committed = 12;
        }
        // Cut the file at a random byte.
        std::ifstream in(path, std::ios::binary | std::ios::ate);
        auto size = static_cast<uint64_t>(in.tellg());
        in.close();
        uint64_t cut = rng.below(size + 1);
        REQUIRE(::truncate(path.c_str(), static_cast<off_t>(cut)) == 0);

        auto recovered = recover_binlog(path);
        REQUIRE(recovered.is_ok());
        const auto& records = recovered.value().records;
        CHECK(records.size() <= committed);
        CHECK(recovered.value().torn_records <= 1);
        // what survives is a gapless committed prefix
        for (size_t i = 0; i < records.size(); ++i) CHECK(records[i].lsn == i + 1);
        if (!records.empty()) CHECK(records.back().op == LogOp::Commit);
    }
    std::remove(path.c_str());
}
