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

#include <algorithm>
#include <cstdio>

#include "polystore/relational_engine.hpp"
#include "polystore/sim/rng.hpp"
#include "test_helpers.hpp"

using namespace polystore;
using namespace polystore::testing;

namespace {

RelationalEngine make_engine() {
    return RelationalEngine("s0", dict_with({orders_schema(), accounts_schema()}));
}

uint64_t must_begin(RelationalEngine& e, const std::string& tenant = "t1") {
    auto txn = e.begin(tenant);
    REQUIRE(txn.is_ok());
    return txn.value();
}

void commit_insert(RelationalEngine& e, const Row& row) {
    uint64_t txn = must_begin(e);
    REQUIRE(e.execute(txn, InsertStmt{"orders", row}).is_ok());
    REQUIRE(e.commit(txn).is_ok());
}

}  // namespace

TEST_CASE("begin: distinct ids, closed engine, abort transition") {
    auto engine = make_engine();
    uint64_t a = must_begin(engine);
    uint64_t b = must_begin(engine);
    CHECK(a != b);

    CHECK(engine.abort(a).is_ok());
    CHECK(engine.txn_state(a) == TxnState::Aborted);
    CHECK(engine.commit(a).code() == ErrorCode::AlreadyFinished);

    engine.close();
    CHECK(engine.begin("t1").code() == ErrorCode::EngineClosed);
}

TEST_CASE("execute: read-your-writes inside a transaction") {
    auto engine = make_engine();
    uint64_t txn = must_begin(engine);
    REQUIRE(engine.execute(txn, InsertStmt{"orders", order_row(1, 5000000)}).is_ok());

    Predicate by_pk;
    by_pk.conditions.push_back({"order_id", CompareOp::Eq, Value{int64_t{1}}, std::nullopt});
    auto rows = engine.execute(txn, SelectStmt{"orders", by_pk});
    REQUIRE(rows.is_ok());
    CHECK(rows.value().rows.size() == 1);

    // invisible to other transactions until commit
    uint64_t other = must_begin(engine);
    auto hidden = engine.execute(other, SelectStmt{"orders", by_pk});
    REQUIRE(hidden.is_ok());
    CHECK(hidden.value().rows.empty());
}

TEST_CASE("execute: error paths") {
    auto engine = make_engine();
    commit_insert(engine, order_row(1, 100));

    uint64_t txn = must_begin(engine);
    CHECK(engine.execute(txn, InsertStmt{"orders", order_row(1, 1)}).code() ==
          ErrorCode::PrimaryKeyViolation);
    CHECK(engine.execute(txn, UpdateStmt{"orders", pk_of("order_id", 9), {}}).code() ==
          ErrorCode::RowNotFound);
    CHECK(engine.execute(txn, DeleteStmt{"orders", pk_of("order_id", 9)}).code() ==
          ErrorCode::RowNotFound);
    CHECK(engine.execute(txn, InsertStmt{"ghost", {}}).code() == ErrorCode::UnknownEntity);

    Row bad_type = order_row(2, 100);
    bad_type["amount"] = std::string("nope");
    CHECK(engine.execute(txn, InsertStmt{"orders", bad_type}).code() == ErrorCode::TypeMismatch);

    Row missing = order_row(2, 100);
    missing.erase("amount");
    CHECK(engine.execute(txn, InsertStmt{"orders", missing}).code() == ErrorCode::TypeMismatch);

    // primary key fields are immutable
    Row change_pk;
    change_pk["order_id"] = int64_t{5};
    CHECK(engine.execute(txn, UpdateStmt{"orders", pk_of("order_id", 1), change_pk}).code() ==
          ErrorCode::TypeMismatch);
}

TEST_CASE("allowed_ops is enforced") {
    EntitySchema readonly = orders_schema();
    readonly.entity = "readonly_orders";
    readonly.allowed_ops = static_cast<uint8_t>(CrudOp::Retrieve);
    readonly.acid_required = false;
    RelationalEngine engine("s0", dict_with({readonly}));
    uint64_t txn = must_begin(engine);
    Row row;
    row["order_id"] = int64_t{1};
    row["amount"] = Decimal{1};
    CHECK(engine.execute(txn, InsertStmt{"readonly_orders", row}).code() ==
          ErrorCode::OpNotAllowed);
}

TEST_CASE("commit: empty txn writes only a Commit record") {
    auto engine = make_engine();
    uint64_t txn = must_begin(engine);
    auto lsn = engine.commit(txn);
    REQUIRE(lsn.is_ok());
    CHECK(lsn.value() == 1);
    auto log = engine.read_log(1, 100);
    REQUIRE(log.size() == 1);
    CHECK(log[0].op == LogOp::Commit);
    CHECK(engine.txn_state(txn) == TxnState::Committed);
}

TEST_CASE("commit: first committer wins on overlapping write sets") {
    auto engine = make_engine();
    commit_insert(engine, order_row(1, 1000000));

    uint64_t t1 = must_begin(engine);
    uint64_t t2 = must_begin(engine);
    Row change;
    change["amount"] = Decimal{2000000};
    REQUIRE(engine.execute(t1, UpdateStmt{"orders", pk_of("order_id", 1), change}).is_ok());
    Row change2;
    change2["amount"] = Decimal{3000000};
    REQUIRE(engine.execute(t2, UpdateStmt{"orders", pk_of("order_id", 1), change2}).is_ok());

    REQUIRE(engine.commit(t1).is_ok());
    auto second = engine.commit(t2);
    CHECK(second.code() == ErrorCode::Conflict);
    CHECK(engine.txn_state(t2) == TxnState::Aborted);

    auto table = engine.table_snapshot("t1", "orders");
    CHECK(std::get<Decimal>(table.at("1").at("amount")).micros == 2000000);
}

TEST_CASE("concurrent transfers preserve the total balance") {
    // Oracle: sequential execution of every permutation of the committed
    // transfers yields the same conserved sum, so any accepted interleaving
    // must conserve it too.
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        auto engine = make_engine();
        {
            uint64_t setup = must_begin(engine);
            REQUIRE(engine.execute(setup, InsertStmt{"accounts", account_row(1, 100)}).is_ok());
            REQUIRE(engine.execute(setup, InsertStmt{"accounts", account_row(2, 100)}).is_ok());
            REQUIRE(engine.execute(setup, InsertStmt{"accounts", account_row(3, 100)}).is_ok());
            REQUIRE(engine.commit(setup).is_ok());
        }
        SplitMix64 rng(seed);

        // Three concurrent transfers with interleaved statements.
        struct Transfer {
            uint64_t txn;
            int64_t from, to, amount;
            size_t step = 0;
            bool done = false;
        };
        std::vector<Transfer> transfers;
        for (int i = 0; i < 3; ++i) {
            int64_t from = static_cast<int64_t>(1 + rng.below(3));
            int64_t to = static_cast<int64_t>(1 + rng.below(3));
            while (to == from) to = static_cast<int64_t>(1 + rng.below(3));
            transfers.push_back({must_begin(engine), from, to,
                                 static_cast<int64_t>(1 + rng.below(50)), 0, false});
        }

        auto read_balance = [&](uint64_t txn, int64_t account) -> std::optional<int64_t> {
            Predicate p;
            p.conditions.push_back(
                {"account_id", CompareOp::Eq, Value{account}, std::nullopt});
            auto r = engine.execute(txn, SelectStmt{"accounts", p});
            if (!r.is_ok() || r.value().rows.empty()) return std::nullopt;
            return std::get<int64_t>(r.value().rows[0].at("balance"));
        };

        size_t remaining = transfers.size();
        while (remaining > 0) {
            size_t pick = rng.below(transfers.size());
            Transfer& tr = transfers[pick];
            if (tr.done) continue;
            if (tr.step == 0) {
                // debit via read + absolute update
                auto from_balance = read_balance(tr.txn, tr.from);
                auto to_balance = read_balance(tr.txn, tr.to);
                REQUIRE(from_balance.has_value());
                REQUIRE(to_balance.has_value());
                Row debit;
                debit["balance"] = *from_balance - tr.amount;
                Row credit;
                credit["balance"] = *to_balance + tr.amount;
                engine.execute(tr.txn, UpdateStmt{"accounts", pk_of("account_id", tr.from), debit});
                engine.execute(tr.txn, UpdateStmt{"accounts", pk_of("account_id", tr.to), credit});
                tr.step = 1;
            } else {
                engine.commit(tr.txn);  // Conflict auto-aborts, which is fine
                tr.done = true;
                --remaining;
            }
        }

        int64_t total = 0;
        for (const auto& [pk, row] : engine.table_snapshot("t1", "accounts"))
            total += std::get<int64_t>(row.at("balance"));
        CHECK(total == 300);
    }
}

TEST_CASE("read_log: chunking identity and tail behavior") {
    auto engine = make_engine();
    for (int i = 1; i <= 3; ++i) commit_insert(engine, order_row(i, i * 1000000));

    // 3 single-insert txns: lsns 1..6 alternating data/Commit
    auto all = engine.read_log(1, UINT64_MAX);
    REQUIRE(all.size() == 6);
    for (size_t i = 0; i < all.size(); ++i) {
        CHECK(all[i].lsn == i + 1);
        CHECK((all[i].op == LogOp::Commit) == (i % 2 == 1));
    }

    CHECK(engine.read_log(7, 10).empty());

    std::vector<LogRecord> chunked;
    uint64_t from = 1;
    for (;;) {
        auto chunk = engine.read_log(from, 2);
        if (chunk.empty()) break;
        from = chunk.back().lsn + 1;
        chunked.insert(chunked.end(), chunk.begin(), chunk.end());
    }
    REQUIRE(chunked.size() == all.size());
    for (size_t i = 0; i < all.size(); ++i) CHECK(chunked[i].lsn == all[i].lsn);
}

TEST_CASE("apply_replica: idempotence and gap detection") {
    auto master = make_engine();
    RelationalEngine replica("s0", master.dictionary(), RelationalEngine::Role::Replica);

    for (int i = 1; i <= 5; ++i) commit_insert(master, order_row(i, 7));
    auto log = master.read_log(1, UINT64_MAX);

    auto first = replica.apply_replica(log);
    REQUIRE(first.is_ok());
    CHECK(first.value() == log.size());
    auto again = replica.apply_replica(log);  // full redelivery
    REQUIRE(again.is_ok());
    CHECK(again.value() == log.size());
    CHECK(replica.state_fingerprint() == master.state_fingerprint());

    commit_insert(master, order_row(6, 7));
    auto tail = master.read_log(log.size() + 2, 10);  // skips one record
    CHECK(replica.apply_replica(tail).code() == ErrorCode::LsnGap);

    // replica rejects fresh reads, serves stale ones
    Predicate all_rows;
    CHECK(replica.select("t1", "orders", all_rows, false).code() == ErrorCode::NotPrimary);
    auto stale = replica.select("t1", "orders", all_rows, true);
    REQUIRE(stale.is_ok());
    CHECK(stale.value().size() == 5);
}

TEST_CASE("random workload ships to an identical replica") {
    SplitMix64 rng(1234);
    auto master = make_engine();
    RelationalEngine replica("s0", master.dictionary(), RelationalEngine::Role::Replica);

    std::vector<int64_t> live;
    for (int round = 0; round < 400; ++round) {
        uint64_t txn = must_begin(master);
        bool wrote = false;
        for (int stmt = 0; stmt < 3; ++stmt) {
            switch (rng.below(3)) {
                case 0: {
                    int64_t key = static_cast<int64_t>(rng.below(120));
                    if (master.execute(txn, InsertStmt{"orders",
                                                       order_row(key, static_cast<int64_t>(
                                                                          rng.below(1000000)))})
                            .is_ok()) {
                        live.push_back(key);
                        wrote = true;
                    }
                    break;
                }
                case 1: {
                    if (live.empty()) break;
                    Row change;
                    change["amount"] = Decimal{static_cast<int64_t>(rng.below(1000000))};
                    wrote |= master
                                 .execute(txn, UpdateStmt{"orders",
                                                          pk_of("order_id",
                                                                live[rng.below(live.size())]),
                                                          change})
                                 .is_ok();
                    break;
                }
                default: {
                    if (live.empty()) break;
                    size_t at = rng.below(live.size());
                    if (master.execute(txn, DeleteStmt{"orders", pk_of("order_id", live[at])})
                            .is_ok()) {
                        live.erase(live.begin() + static_cast<long>(at));
                        wrote = true;
                    }
                    break;
                }
            }
        }
        (void)wrote;
        if (rng.below(10) == 0) master.abort(txn);
        else master.commit(txn);
    }

    // ship in random-size chunks
    uint64_t from = 1;
    for (;;) {
        auto chunk = master.read_log(from, 1 + rng.below(7));
        if (chunk.empty()) break;
        from = chunk.back().lsn + 1;
        REQUIRE(replica.apply_replica(chunk).is_ok());
    }
    CHECK(replica.state_fingerprint() == master.state_fingerprint());
    CHECK(!master.state_fingerprint().empty());
}

TEST_CASE("log completeness: replay reproduces committed state") {
    SplitMix64 rng(555);
    auto engine = make_engine();
    for (int i = 0; i < 100; ++i) {
        uint64_t txn = must_begin(engine);
        engine.execute(txn, InsertStmt{"orders", order_row(static_cast<int64_t>(rng.below(50)),
                                                           static_cast<int64_t>(rng.below(99)))});
        if (rng.below(5) == 0) engine.abort(txn);
        else engine.commit(txn);
    }
    RelationalEngine fresh("s0", engine.dictionary(), RelationalEngine::Role::Replica);
    REQUIRE(fresh.apply_replica(engine.read_log(1, UINT64_MAX)).is_ok());
    CHECK(fresh.state_fingerprint() == engine.state_fingerprint());
}

TEST_CASE("atomicity: aborted transactions leave no trace") {
    auto engine = make_engine();
    commit_insert(engine, order_row(1, 111));
    uint64_t before_lsn = engine.last_lsn();
    std::string before_state = engine.state_fingerprint();

    uint64_t txn = must_begin(engine);
    REQUIRE(engine.execute(txn, InsertStmt{"orders", order_row(2, 5)}).is_ok());
    Row change;
    change["amount"] = Decimal{99};
    REQUIRE(engine.execute(txn, UpdateStmt{"orders", pk_of("order_id", 1), change}).is_ok());
    REQUIRE(engine.abort(txn).is_ok());

    CHECK(engine.last_lsn() == before_lsn);  // nothing logged
    CHECK(engine.state_fingerprint() == before_state);
}

TEST_CASE("insert+delete in one txn nets out of the log") {
    auto engine = make_engine();
    uint64_t txn = must_begin(engine);
    REQUIRE(engine.execute(txn, InsertStmt{"orders", order_row(7, 1)}).is_ok());
    REQUIRE(engine.execute(txn, DeleteStmt{"orders", pk_of("order_id", 7)}).is_ok());
    auto lsn = engine.commit(txn);
    REQUIRE(lsn.is_ok());
    auto log = engine.read_log(1, 10);
    REQUIRE(log.size() == 1);  // just the Commit marker
    CHECK(log[0].op == LogOp::Commit);
}

TEST_CASE("binlog-backed engine recovers acknowledged commits") {
    std::string path = "/tmp/polystore_engine_" + std::to_string(::getpid()) + ".binlog";
    std::remove(path.c_str());
    std::string fingerprint;
    uint64_t tail;
    {
        RelationalEngine engine("s0", dict_with({orders_schema()}));
        REQUIRE(engine.open_binlog(path, Durability::Strict));
        for (int i = 1; i <= 10; ++i) {
            uint64_t txn = engine.begin("t1").value();
            REQUIRE(engine.execute(txn, InsertStmt{"orders", order_row(i, i)}).is_ok());
            REQUIRE(engine.commit(txn).is_ok());
        }
        fingerprint = engine.state_fingerprint();
        tail = engine.last_lsn();
    }
    RelationalEngine reopened("s0", dict_with({orders_schema()}));
    REQUIRE(reopened.open_binlog(path, Durability::Strict));
    CHECK(reopened.state_fingerprint() == fingerprint);
    CHECK(reopened.last_lsn() == tail);
    REQUIRE(reopened.last_recovery() != nullptr);
    CHECK(reopened.last_recovery()->torn_records == 0);

    // and it keeps appending with gapless lsns
    uint64_t txn = reopened.begin("t1").value();
    REQUIRE(reopened.execute(txn, InsertStmt{"orders", order_row(11, 11)}).is_ok());
    auto lsn = reopened.commit(txn);
    REQUIRE(lsn.is_ok());
    CHECK(lsn.value() == tail + 2);
    std::remove(path.c_str());
}
