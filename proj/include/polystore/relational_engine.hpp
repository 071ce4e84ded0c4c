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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "polystore/binlog.hpp"
#include "polystore/data_model.hpp"
#include "polystore/predicate.hpp"
#include "polystore/value.hpp"

namespace polystore {

struct InsertStmt {
    std::string entity;
    Row row;
};
struct UpdateStmt {
    std::string entity;
    Row pk;       // exactly the primary-key fields
    Row changes;  // absolute new values, pk fields immutable
};
struct DeleteStmt {
    std::string entity;
    Row pk;
};
struct SelectStmt {
    std::string entity;
    Predicate predicate;
};
using Statement = std::variant<InsertStmt, UpdateStmt, DeleteStmt, SelectStmt>;

struct ExecResult {
    std::vector<Row> rows;   // Select
    uint64_t affected = 0;   // Insert/Update/Delete
};

enum class TxnState { Active, Committed, Aborted };

// Canonical key text: primary-key values joined by "|" in declared order.
// Shared with the CDC doc_id rule and the routing key.
Result<std::string> pk_text(const EntitySchema& schema, const Row& row);

// Per-node embedded relational store. One logical writer per shard:
// statements run optimistically against committed state plus the
// transaction's own writes, and commit validates the (attempted) write set
// against transactions that committed in between — first committer wins.
class RelationalEngine {
  public:
    enum class Role { Master, Replica };

    RelationalEngine(std::string shard_id, DictionaryPtr dict, Role role = Role::Master);

    // Master durability. Replays whatever the file already holds (recovery
    // truncates a torn tail), then appends. Empty path keeps the log in
    // memory only.
    Status open_binlog(const std::string& path, Durability durability);
    const RecoveryResult* last_recovery() const { return recovery_ ? &*recovery_ : nullptr; }

    void set_dictionary(DictionaryPtr dict);
    DictionaryPtr dictionary() const;

    void close();
    bool is_open() const { return open_; }

    const std::string& shard_id() const { return shard_id_; }
    Role role() const { return role_; }

    // --- transactions (Master role) ---
    Result<uint64_t> begin(const std::string& tenant_id);
    Result<ExecResult> execute(uint64_t txn_id, const Statement& stmt);
    Result<uint64_t> commit(uint64_t txn_id);  // returns the Commit record's lsn
    Status abort(uint64_t txn_id);
    std::optional<TxnState> txn_state(uint64_t txn_id) const;

    // --- log shipping ---
    // Records with lsn in [from_lsn, from_lsn + max_records), durable only.
    std::vector<LogRecord> read_log(uint64_t from_lsn, uint64_t max_records) const;
    uint64_t last_lsn() const;

    // Replica role: applies shipped records. Records with lsn <= applied_lsn
    // are ignored (idempotent re-delivery); skipping ahead is LsnGap.
    Result<uint64_t> apply_replica(const std::vector<LogRecord>& records);
    uint64_t applied_lsn() const;

    // --- reads outside transactions ---
    // Master serves fresh reads; a replica requires stale_ok.
    Result<std::vector<Row>> select(const std::string& tenant_id, const std::string& entity,
                                    const Predicate& predicate, bool stale_ok = false) const;

    // --- inspection (tests, CDC bootstrap, state comparison) ---
    std::map<std::string, Row> table_snapshot(const std::string& tenant_id,
                                              const std::string& entity) const;
    std::vector<std::pair<std::string, std::string>> table_names() const;  // (tenant, entity)
    std::string state_fingerprint() const;

  private:
    struct WriteEntry {
        std::string entity;
        std::string pk;
        std::optional<Row> before;
        std::optional<Row> after;
    };
    struct Txn {
        uint64_t id = 0;
        std::string tenant;
        TxnState state = TxnState::Active;
        uint64_t begin_seq = 0;
        std::vector<WriteEntry> writes;               // first-touch order, net effect
        std::map<std::string, size_t> write_index;    // "entity|pk" -> writes slot
        std::vector<std::string> attempted_keys;      // includes failed statements
    };
    struct PendingTxn {
        std::vector<LogRecord> records;  // replica-side buffer until Commit
    };

    using Table = std::map<std::string, Row>;  // pk text -> row

    const EntitySchema* schema_for(const std::string& entity, Status& status) const;
    Status check_writable(const Txn& txn, const EntitySchema& schema, CrudOp op) const;
    Result<Row> validated_row(const EntitySchema& schema, const Row& row) const;
    const Row* visible_row(const Txn& txn, const std::string& tenant, const std::string& entity,
                           const std::string& pk) const;
    void record_write(Txn& txn, const std::string& entity, const std::string& pk,
                      std::optional<Row> before, std::optional<Row> after);
    void apply_write(const std::string& tenant, const std::string& entity, const std::string& pk,
                     const std::optional<Row>& after);
    Result<ExecResult> do_select(const Txn* txn, const std::string& tenant,
                                 const SelectStmt& stmt) const;

    std::string shard_id_;
    DictionaryPtr dict_;
    Role role_;
    bool open_ = true;

    std::map<std::pair<std::string, std::string>, Table> tables_;  // (tenant, entity)
    std::vector<LogRecord> log_;
    uint64_t next_txn_id_ = 1;
    uint64_t commit_seq_ = 0;
    std::vector<std::pair<uint64_t, std::vector<std::string>>> commit_history_;  // (seq, keys)
    std::map<uint64_t, Txn> txns_;
    uint64_t replica_applied_lsn_ = 0;
    std::map<uint64_t, PendingTxn> replica_pending_;

    BinlogFile binlog_;
    std::optional<RecoveryResult> recovery_;

    mutable std::mutex mutex_;  // commit lock; also guards shared reads in service mode
};

}  // namespace polystore
