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

#include "polystore/relational_engine.hpp"

#include <algorithm>

namespace polystore {

Result<std::string> pk_text(const EntitySchema& schema, const Row& row) {
    std::string out;
    for (size_t i = 0; i < schema.primary_key.size(); ++i) {
        auto it = row.find(schema.primary_key[i]);
        if (it == row.end())
            return Result<std::string>(ErrorCode::TypeMismatch,
                                       "missing primary key field '" + schema.primary_key[i] + "'");
        if (i) out += '|';
        out += value_text(it->second);
    }
    return out;
}

namespace {

std::string write_key(const std::string& entity, const std::string& pk) {
    return entity + "|" + pk;
}

}  // namespace

RelationalEngine::RelationalEngine(std::string shard_id, DictionaryPtr dict, Role role)
    : shard_id_(std::move(shard_id)), dict_(std::move(dict)), role_(role) {}

Status RelationalEngine::open_binlog(const std::string& path, Durability durability) {
    std::lock_guard lock(mutex_);
    auto recovered = recover_binlog(path);
    if (!recovered) return recovered.status();
    recovery_ = recovered.take();

    // Replay the clean committed prefix.
    std::map<uint64_t, std::vector<LogRecord>> pending;
    for (const auto& rec : recovery_->records) {
        log_.push_back(rec);
        if (rec.is_data()) {
            pending[rec.txn_id].push_back(rec);
        } else if (rec.op == LogOp::Commit) {
            for (const auto& data : pending[rec.txn_id]) {
                const EntitySchema* schema = dict_ ? dict_->find(data.entity) : nullptr;
                if (!schema) continue;
                const Row& key_row = data.after ? *data.after : *data.before;
                auto pk = pk_text(*schema, key_row);
                if (!pk) continue;
                apply_write(data.tenant_id, data.entity, pk.value(), data.after);
            }
            pending.erase(rec.txn_id);
            ++commit_seq_;
        } else if (rec.op == LogOp::Abort) {
            pending.erase(rec.txn_id);
        }
    }
    return binlog_.open(path, durability);
}

void RelationalEngine::set_dictionary(DictionaryPtr dict) {
    std::lock_guard lock(mutex_);
    dict_ = std::move(dict);
}

DictionaryPtr RelationalEngine::dictionary() const {
    std::lock_guard lock(mutex_);
    return dict_;
}

void RelationalEngine::close() {
    std::lock_guard lock(mutex_);
    open_ = false;
    binlog_.close();
}

Result<uint64_t> RelationalEngine::begin(const std::string& tenant_id) {
    std::lock_guard lock(mutex_);
    if (!open_) return Result<uint64_t>(ErrorCode::EngineClosed, shard_id_);
    if (role_ != Role::Master)
        return Result<uint64_t>(ErrorCode::NotPrimary, "replica does not accept transactions");
    Txn txn;
    txn.id = next_txn_id_++;
    txn.tenant = tenant_id;
    txn.begin_seq = commit_seq_;
    uint64_t id = txn.id;
    txns_.emplace(id, std::move(txn));
    return id;
}

const EntitySchema* RelationalEngine::schema_for(const std::string& entity, Status& status) const {
    if (!dict_) {
        status = Status::error(ErrorCode::UnknownEntity, entity);
        return nullptr;
    }
    const EntitySchema* schema = dict_->find(entity);
    if (!schema) {
        status = Status::error(ErrorCode::UnknownEntity, entity);
        return nullptr;
    }
    auto binding = dict_->engine_binding.find(entity);
    if (binding == dict_->engine_binding.end() || binding->second != EngineKind::Relational) {
        status = Status::error(ErrorCode::OpNotAllowed, entity + " is not bound to the relational engine");
        return nullptr;
    }
    return schema;
}

Status RelationalEngine::check_writable(const Txn&, const EntitySchema& schema, CrudOp op) const {
    if (!schema.allows(op))
        return Status::error(ErrorCode::OpNotAllowed,
                             schema.entity + " does not allow this operation");
    return Status::ok();
}

Result<Row> RelationalEngine::validated_row(const EntitySchema& schema, const Row& row) const {
    Row out;
    for (const auto& [name, value] : row) {
        const FieldDef* field = schema.field(name);
        if (!field)
            return Result<Row>(ErrorCode::TypeMismatch,
                               "unknown field '" + name + "' on " + schema.entity);
        if (kind_of(value) != field->scalar)
            return Result<Row>(ErrorCode::TypeMismatch,
                               "field '" + name + "' expects " + scalar_kind_name(field->scalar));
        out[name] = value;
    }
    for (const auto& field : schema.fields) {
        if (!field.nullable && out.find(field.name) == out.end())
            return Result<Row>(ErrorCode::TypeMismatch,
                               "non-nullable field '" + field.name + "' missing");
    }
    return out;
}

const Row* RelationalEngine::visible_row(const Txn& txn, const std::string& tenant,
                                         const std::string& entity, const std::string& pk) const {
    auto idx = txn.write_index.find(write_key(entity, pk));
    if (idx != txn.write_index.end()) {
        const auto& entry = txn.writes[idx->second];
        return entry.after ? &*entry.after : nullptr;  // own delete hides the row
    }
    auto table = tables_.find({tenant, entity});
    if (table == tables_.end()) return nullptr;
    auto row = table->second.find(pk);
    return row == table->second.end() ? nullptr : &row->second;
}

void RelationalEngine::record_write(Txn& txn, const std::string& entity, const std::string& pk,
                                    std::optional<Row> before, std::optional<Row> after) {
    std::string key = write_key(entity, pk);
    txn.attempted_keys.push_back(key);
    auto idx = txn.write_index.find(key);
    if (idx != txn.write_index.end()) {
        txn.writes[idx->second].after = std::move(after);  // before stays the first-touch image
    } else {
        txn.write_index[key] = txn.writes.size();
        txn.writes.push_back({entity, pk, std::move(before), std::move(after)});
    }
}

void RelationalEngine::apply_write(const std::string& tenant, const std::string& entity,
                                   const std::string& pk, const std::optional<Row>& after) {
    Table& table = tables_[{tenant, entity}];
    if (after) table[pk] = *after;
    else table.erase(pk);
    if (table.empty()) tables_.erase({tenant, entity});
}

Result<ExecResult> RelationalEngine::do_select(const Txn* txn, const std::string& tenant,
                                               const SelectStmt& stmt) const {
    ExecResult result;
    auto table = tables_.find({tenant, stmt.entity});
    std::map<std::string, const Row*> view;
    if (table != tables_.end())
        for (const auto& [pk, row] : table->second) view[pk] = &row;
    if (txn) {
        for (const auto& entry : txn->writes) {
            if (entry.entity != stmt.entity) continue;
            if (entry.after) view[entry.pk] = &*entry.after;
            else view.erase(entry.pk);
        }
    }
    for (const auto& [pk, row] : view) {
        auto match = stmt.predicate.matches_row(*row);
        if (!match) return match.status();
        if (match.value()) result.rows.push_back(*row);
    }
    return result;
}

Result<ExecResult> RelationalEngine::execute(uint64_t txn_id, const Statement& stmt) {
    std::lock_guard lock(mutex_);
    if (!open_) return Result<ExecResult>(ErrorCode::EngineClosed, shard_id_);
    auto it = txns_.find(txn_id);
    if (it == txns_.end())
        return Result<ExecResult>(ErrorCode::RowNotFound, "unknown txn " + std::to_string(txn_id));
    Txn& txn = it->second;
    if (txn.state != TxnState::Active)
        return Result<ExecResult>(ErrorCode::AlreadyFinished, "txn is not active");

    Status status;
    if (const auto* ins = std::get_if<InsertStmt>(&stmt)) {
        const EntitySchema* schema = schema_for(ins->entity, status);
        if (!schema) return status;
        if (auto s = check_writable(txn, *schema, CrudOp::Create); !s) return s;
        auto row = validated_row(*schema, ins->row);
        if (!row) return row.status();
        auto pk = pk_text(*schema, row.value());
        if (!pk) return pk.status();
        if (visible_row(txn, txn.tenant, ins->entity, pk.value())) {
            txn.attempted_keys.push_back(write_key(ins->entity, pk.value()));
            return Result<ExecResult>(ErrorCode::PrimaryKeyViolation,
                                      ins->entity + " pk " + pk.value());
        }
        record_write(txn, ins->entity, pk.value(), std::nullopt, row.take());
        return ExecResult{{}, 1};
    }
    if (const auto* upd = std::get_if<UpdateStmt>(&stmt)) {
        const EntitySchema* schema = schema_for(upd->entity, status);
        if (!schema) return status;
        if (auto s = check_writable(txn, *schema, CrudOp::Update); !s) return s;
        auto pk = pk_text(*schema, upd->pk);
        if (!pk) return pk.status();
        const Row* current = visible_row(txn, txn.tenant, upd->entity, pk.value());
        if (!current) {
            txn.attempted_keys.push_back(write_key(upd->entity, pk.value()));
            return Result<ExecResult>(ErrorCode::RowNotFound, upd->entity + " pk " + pk.value());
        }
        Row next = *current;
        for (const auto& [name, value] : upd->changes) {
            const FieldDef* field = schema->field(name);
            if (!field)
                return Result<ExecResult>(ErrorCode::TypeMismatch, "unknown field '" + name + "'");
            if (std::find(schema->primary_key.begin(), schema->primary_key.end(), name) !=
                schema->primary_key.end())
                return Result<ExecResult>(ErrorCode::TypeMismatch,
                                          "primary key field '" + name + "' is immutable");
            if (kind_of(value) != field->scalar)
                return Result<ExecResult>(ErrorCode::TypeMismatch,
                                          "field '" + name + "' expects " +
                                              scalar_kind_name(field->scalar));
            next[name] = value;
        }
        Row before = *current;
        record_write(txn, upd->entity, pk.value(), std::move(before), std::move(next));
        return ExecResult{{}, 1};
    }
    if (const auto* del = std::get_if<DeleteStmt>(&stmt)) {
        const EntitySchema* schema = schema_for(del->entity, status);
        if (!schema) return status;
        if (auto s = check_writable(txn, *schema, CrudOp::Delete); !s) return s;
        auto pk = pk_text(*schema, del->pk);
        if (!pk) return pk.status();
        const Row* current = visible_row(txn, txn.tenant, del->entity, pk.value());
        if (!current) {
            txn.attempted_keys.push_back(write_key(del->entity, pk.value()));
            return Result<ExecResult>(ErrorCode::RowNotFound, del->entity + " pk " + pk.value());
        }
        record_write(txn, del->entity, pk.value(), *current, std::nullopt);
        return ExecResult{{}, 1};
    }
    const auto& sel = std::get<SelectStmt>(stmt);
    const EntitySchema* schema = schema_for(sel.entity, status);
    if (!schema) return status;
    if (auto s = check_writable(txn, *schema, CrudOp::Retrieve); !s) return s;
    return do_select(&txn, txn.tenant, sel);
}

Result<uint64_t> RelationalEngine::commit(uint64_t txn_id) {
    std::lock_guard lock(mutex_);
    if (!open_) return Result<uint64_t>(ErrorCode::EngineClosed, shard_id_);
    auto it = txns_.find(txn_id);
    if (it == txns_.end())
        return Result<uint64_t>(ErrorCode::RowNotFound, "unknown txn " + std::to_string(txn_id));
    Txn& txn = it->second;
    if (txn.state != TxnState::Active)
        return Result<uint64_t>(ErrorCode::AlreadyFinished, "txn is not active");

    // First committer wins: any transaction committed after our begin that
    // touched a key we attempted to write aborts us.
    for (auto hist = commit_history_.rbegin(); hist != commit_history_.rend(); ++hist) {
        if (hist->first <= txn.begin_seq) break;
        for (const auto& key : hist->second) {
            if (std::find(txn.attempted_keys.begin(), txn.attempted_keys.end(), key) !=
                txn.attempted_keys.end()) {
                txn.state = TxnState::Aborted;
                txn.writes.clear();
                return Result<uint64_t>(ErrorCode::Conflict, "write set overlaps committed txn");
            }
        }
    }

    std::vector<LogRecord> group;
    std::vector<std::string> touched;
    for (const auto& entry : txn.writes) {
        if (!entry.before && !entry.after) continue;  // insert+delete nets out
        LogRecord rec;
        rec.lsn = log_.size() + group.size() + 1;
        rec.txn_id = txn.id;
        rec.tenant_id = txn.tenant;
        rec.entity = entry.entity;
        if (!entry.before) rec.op = LogOp::Insert;
        else if (!entry.after) rec.op = LogOp::Delete;
        else rec.op = LogOp::Update;
        rec.before = entry.before;
        rec.after = entry.after;
        group.push_back(std::move(rec));
        touched.push_back(write_key(entry.entity, entry.pk));
    }
    LogRecord commit_rec;
    commit_rec.lsn = log_.size() + group.size() + 1;
    commit_rec.txn_id = txn.id;
    commit_rec.tenant_id = txn.tenant;
    commit_rec.op = LogOp::Commit;
    group.push_back(std::move(commit_rec));

    if (binlog_.is_open()) {
        if (auto s = binlog_.append_group(group); !s) return s;
    }
    uint64_t commit_lsn = group.back().lsn;
    for (auto& rec : group) log_.push_back(std::move(rec));
    for (const auto& entry : txn.writes)
        apply_write(txn.tenant, entry.entity, entry.pk, entry.after);

    commit_history_.emplace_back(++commit_seq_, std::move(touched));
    txn.state = TxnState::Committed;
    txn.writes.clear();
    txn.write_index.clear();
    txn.attempted_keys.clear();
    return commit_lsn;
}

Status RelationalEngine::abort(uint64_t txn_id) {
    std::lock_guard lock(mutex_);
    auto it = txns_.find(txn_id);
    if (it == txns_.end())
        return Status::error(ErrorCode::RowNotFound, "unknown txn " + std::to_string(txn_id));
    if (it->second.state != TxnState::Active)
        return Status::error(ErrorCode::AlreadyFinished, "txn is not active");
    it->second.state = TxnState::Aborted;
    it->second.writes.clear();
    it->second.write_index.clear();
    it->second.attempted_keys.clear();
    return Status::ok();
}

std::optional<TxnState> RelationalEngine::txn_state(uint64_t txn_id) const {
    std::lock_guard lock(mutex_);
    auto it = txns_.find(txn_id);
    if (it == txns_.end()) return std::nullopt;
    return it->second.state;
}

std::vector<LogRecord> RelationalEngine::read_log(uint64_t from_lsn, uint64_t max_records) const {
    std::lock_guard lock(mutex_);
    std::vector<LogRecord> out;
    if (from_lsn < 1) from_lsn = 1;
    for (uint64_t lsn = from_lsn; lsn <= log_.size() && out.size() < max_records; ++lsn)
        out.push_back(log_[lsn - 1]);
    return out;
}

uint64_t RelationalEngine::last_lsn() const {
    std::lock_guard lock(mutex_);
    return log_.size();
}

Result<uint64_t> RelationalEngine::apply_replica(const std::vector<LogRecord>& records) {
    std::lock_guard lock(mutex_);
    if (!open_) return Result<uint64_t>(ErrorCode::EngineClosed, shard_id_);
    for (const auto& rec : records) {
        if (rec.lsn <= replica_applied_lsn_) continue;  // re-delivered prefix
        if (rec.lsn != replica_applied_lsn_ + 1)
            return Result<uint64_t>(ErrorCode::LsnGap,
                                    "expected lsn " + std::to_string(replica_applied_lsn_ + 1) +
                                        ", got " + std::to_string(rec.lsn));
        log_.push_back(rec);
        replica_applied_lsn_ = rec.lsn;
        if (rec.is_data()) {
            replica_pending_[rec.txn_id].records.push_back(rec);
        } else if (rec.op == LogOp::Commit) {
            auto pending = replica_pending_.find(rec.txn_id);
            if (pending != replica_pending_.end()) {
                for (const auto& data : pending->second.records) {
                    const EntitySchema* schema = dict_ ? dict_->find(data.entity) : nullptr;
                    if (!schema) continue;
                    const Row& key_row = data.after ? *data.after : *data.before;
                    auto pk = pk_text(*schema, key_row);
                    if (!pk) continue;
                    apply_write(data.tenant_id, data.entity, pk.value(), data.after);
                }
                replica_pending_.erase(pending);
            }
        } else if (rec.op == LogOp::Abort) {
            replica_pending_.erase(rec.txn_id);
        }
    }
    return replica_applied_lsn_;
}

uint64_t RelationalEngine::applied_lsn() const {
    std::lock_guard lock(mutex_);
    return replica_applied_lsn_;
}

Result<std::vector<Row>> RelationalEngine::select(const std::string& tenant_id,
                                                  const std::string& entity,
                                                  const Predicate& predicate,
                                                  bool stale_ok) const {
    std::lock_guard lock(mutex_);
    if (!open_) return Result<std::vector<Row>>(ErrorCode::EngineClosed, shard_id_);
    if (role_ == Role::Replica && !stale_ok)
        return Result<std::vector<Row>>(ErrorCode::NotPrimary, "replica reads require stale_ok");
    Status status;
    const EntitySchema* schema = schema_for(entity, status);
    if (!schema) return status;
    auto result = do_select(nullptr, tenant_id, SelectStmt{entity, predicate});
    if (!result) return result.status();
    return std::move(result.value().rows);
}

std::map<std::string, Row> RelationalEngine::table_snapshot(const std::string& tenant_id,
                                                            const std::string& entity) const {
    std::lock_guard lock(mutex_);
    auto it = tables_.find({tenant_id, entity});
    if (it == tables_.end()) return {};
    return it->second;
}

std::vector<std::pair<std::string, std::string>> RelationalEngine::table_names() const {
    std::lock_guard lock(mutex_);
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(tables_.size());
    for (const auto& [key, _] : tables_) out.push_back(key);
    return out;
}

std::string RelationalEngine::state_fingerprint() const {
    std::lock_guard lock(mutex_);
    std::string out;
    for (const auto& [key, table] : tables_) {
        for (const auto& [pk, row] : table) {
            out += key.first;
            out += '/';
            out += key.second;
            out += '/';
            out += pk;
            out += '=';
            out += row_to_string(row);
            out += '\n';
        }
    }
    return out;
}

}  // namespace polystore
