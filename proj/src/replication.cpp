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

#include "polystore/replication.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace polystore {

Result<CollectionMapping> map_schema(const EntitySchema& schema, const DataDictionary& dict) {
    if (!schema.is_structured())
        return Result<CollectionMapping>(ErrorCode::NotStructured, schema.entity);

    CollectionMapping mapping;
    mapping.entity = schema.entity;
    mapping.collection = schema.entity;
    mapping.doc_id_fields = schema.primary_key;
    for (const auto& rel : schema.relationships) {
        RelationshipMapping rm;
        rm.relationship = rel;
        auto binding = dict.engine_binding.find(rel.to_entity);
        bool graph_bound =
            binding != dict.engine_binding.end() && binding->second == EngineKind::GraphStore;
        if (graph_bound) {
            rm.kind = RelationshipMapping::Kind::GraphEdge;
            rm.name = rel.name;
        } else {
            rm.kind = RelationshipMapping::Kind::ReferenceField;
            rm.name = rel.name + "_id";
        }
        mapping.relationships.push_back(std::move(rm));
    }
    return mapping;
}

std::string doc_id_for(const CollectionMapping& mapping, const Row& row) {
    std::string id;
    for (size_t i = 0; i < mapping.doc_id_fields.size(); ++i) {
        if (i) id += '|';
        auto it = row.find(mapping.doc_id_fields[i]);
        if (it != row.end()) id += value_text(it->second);
    }
    return id;
}

namespace {

std::string relationship_key_text(const Relationship& rel, const Row& row) {
    std::string key;
    bool complete = true;
    for (size_t i = 0; i < rel.key_fields.size(); ++i) {
        auto it = row.find(rel.key_fields[i]);
        if (it == row.end()) {
            complete = false;
            break;
        }
        if (i) key += '|';
        key += value_text(it->second);
    }
    return complete ? key : std::string{};
}

}  // namespace

json map_row_to_document(const CollectionMapping& mapping, const Row& row) {
    json doc = row_to_json(row);
    for (const auto& rm : mapping.relationships) {
        if (rm.kind != RelationshipMapping::Kind::ReferenceField) continue;
        std::string key = relationship_key_text(rm.relationship, row);
        if (!key.empty()) doc[rm.name] = key;
    }
    return doc;
}

Result<std::vector<NoSqlOp>> transform(const LogRecord& record, const CollectionMapping& mapping) {
    std::vector<NoSqlOp> ops;
    if (!record.is_data()) return ops;  // Commit/Abort: skip
    if (record.entity != mapping.entity)
        return Result<std::vector<NoSqlOp>>(ErrorCode::UnmappedEntity, record.entity);

    const std::string& tenant = record.tenant_id;
    if (record.op == LogOp::Delete) {
        const Row& before = *record.before;
        std::string doc_id = doc_id_for(mapping, before);
        for (const auto& rm : mapping.relationships) {
            if (rm.kind != RelationshipMapping::Kind::GraphEdge) continue;
            std::string to = relationship_key_text(rm.relationship, before);
            if (!to.empty())
                ops.push_back(DeleteEdge{tenant, rm.name, doc_id, to, record.lsn});
        }
        ops.push_back(DeleteDoc{tenant, mapping.collection, doc_id, record.lsn});
        return ops;
    }

    const Row& after = *record.after;
    std::string doc_id = doc_id_for(mapping, after);
    ops.push_back(UpsertDoc{tenant, mapping.collection, doc_id,
                            map_row_to_document(mapping, after), record.lsn});
    for (const auto& rm : mapping.relationships) {
        if (rm.kind != RelationshipMapping::Kind::GraphEdge) continue;
        std::string to = relationship_key_text(rm.relationship, after);
        if (record.op == LogOp::Update && record.before) {
            std::string old_to = relationship_key_text(rm.relationship, *record.before);
            if (!old_to.empty() && old_to != to)
                ops.push_back(DeleteEdge{tenant, rm.name, doc_id, old_to, record.lsn});
        }
        if (!to.empty()) ops.push_back(UpsertEdge{tenant, rm.name, doc_id, to, record.lsn});
    }
    return ops;
}

std::vector<LogRecord> TxnBuffer::push(const LogRecord& record) {
    if (record.is_data()) {
        pending_[record.txn_id].push_back(record);
        return {};
    }
    auto it = pending_.find(record.txn_id);
    std::vector<LogRecord> released;
    if (record.op == LogOp::Commit && it != pending_.end()) released = std::move(it->second);
    if (it != pending_.end()) pending_.erase(it);
    return released;
}

// --- checkpoint stores -------------------------------------------------------

Result<Checkpoint> FileCheckpointStore::load(const std::string& shard_id) {
    std::string path = directory_ + "/" + shard_id + ".ckpt";
    std::ifstream in(path);
    if (!in.is_open()) return Checkpoint{shard_id, 0, 0};  // fresh shard
    std::string id;
    uint64_t lsn = 0;
    if (!(in >> id >> lsn) || id != shard_id)
        return Result<Checkpoint>(ErrorCode::IoError, "malformed checkpoint " + path);
    return Checkpoint{shard_id, lsn, 0};
}

Status FileCheckpointStore::store(const Checkpoint& checkpoint) {
    std::string path = directory_ + "/" + checkpoint.shard_id + ".ckpt";
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out.is_open()) return Status::error(ErrorCode::IoError, "cannot write " + tmp);
        out << checkpoint.shard_id << '\t' << checkpoint.last_applied_lsn << '\n';
        out.flush();
        if (!out.good()) return Status::error(ErrorCode::IoError, "short write " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        return Status::error(ErrorCode::IoError, std::strerror(errno));
    return Status::ok();
}

Result<Checkpoint> MemCheckpointStore::load(const std::string& shard_id) {
    auto it = checkpoints_.find(shard_id);
    if (it == checkpoints_.end()) return Checkpoint{shard_id, 0, 0};
    return it->second;
}

Status MemCheckpointStore::store(const Checkpoint& checkpoint) {
    checkpoints_[checkpoint.shard_id] = checkpoint;
    return Status::ok();
}

// --- pipeline ------------------------------------------------------------------

CdcPipeline::CdcPipeline(std::string shard_id, CdcSource* source, CdcSink* sink,
                         CheckpointStore* store, uint64_t batch_size)
    : shard_id_(std::move(shard_id)), source_(source), sink_(sink), store_(store),
      batch_size_(batch_size ? batch_size : 1) {}

Status CdcPipeline::register_entity(const CollectionMapping& mapping) {
    mappings_[mapping.entity] = mapping;
    return Status::ok();
}

Status CdcPipeline::load_checkpoint() {
    auto loaded = store_->load(shard_id_);
    if (!loaded) return loaded.status();
    checkpoint_ = loaded.value().last_applied_lsn;
    checkpoint_loaded_ = true;
    return Status::ok();
}

void CdcPipeline::crash() {
    checkpoint_loaded_ = false;
    checkpoint_ = 0;
}

Result<PipelineRun> CdcPipeline::run_once(uint64_t now) {
    if (!checkpoint_loaded_) {
        if (auto s = load_checkpoint(); !s) return s;
    }
    PipelineRun run;
    run.checkpoint = checkpoint_;

    uint64_t window = batch_size_;
    std::vector<LogRecord> records;
    // A transaction larger than one batch must still reach its Commit record,
    // so the window grows until a txn boundary (or the tail) is inside it.
    for (;;) {
        auto read = source_->read(checkpoint_ + 1, window);
        if (!read) return read.status();
        records = read.take();
        if (records.size() < window) break;  // tail reached
        bool boundary = false;
        for (const auto& rec : records)
            if (!rec.is_data()) {
                boundary = true;
                break;
            }
        if (boundary) break;
        window *= 2;
    }
    if (records.empty()) return run;

    TxnBuffer buffer;
    uint64_t applied_through = checkpoint_;
    for (const auto& rec : records) {
        run.records_read++;
        if (rec.is_data()) {
            buffer.push(rec);
            continue;
        }
        auto released = buffer.push(rec);
        for (const auto& data : released) {
            auto mapping = mappings_.find(data.entity);
            if (mapping == mappings_.end())
                return Result<PipelineRun>(ErrorCode::UnmappedEntity, data.entity);
            auto ops = transform(data, mapping->second);
            if (!ops) return ops.status();
            for (const auto& op : ops.value()) {
                auto applied = sink_->apply(op);
                if (!applied) return applied.status();
                run.ops_applied++;
            }
        }
        applied_through = rec.lsn;  // Commit or Abort closes the txn
    }

    if (applied_through > checkpoint_) {
        if (after_apply_hook && !after_apply_hook()) {
            crash();
            return Result<PipelineRun>(ErrorCode::IoError, "pipeline crashed before persist");
        }
        auto s = store_->store(Checkpoint{shard_id_, applied_through, now});
        if (!s) return s;
        checkpoint_ = applied_through;
        checkpoint_advanced_at_ = now;
        run.checkpoint = checkpoint_;
    }
    return run;
}

Result<LagMetric> CdcPipeline::measure_lag(uint64_t now) {
    auto tail = source_->tail_lsn();
    if (!tail) return tail.status();
    if (!checkpoint_loaded_) {
        if (auto s = load_checkpoint(); !s) return s;
    }
    LagMetric metric;
    metric.shard_id = shard_id_;
    metric.master_lsn = tail.value();
    metric.applied_lsn = checkpoint_;
    metric.lag_records = metric.master_lsn > checkpoint_ ? metric.master_lsn - checkpoint_ : 0;
    metric.lag_millis =
        metric.lag_records > 0 && now > checkpoint_advanced_at_ ? now - checkpoint_advanced_at_ : 0;
    return metric;
}

Status bootstrap_entity(const RelationalEngine& master, const CollectionMapping& mapping,
                        CdcSink& sink) {
    uint64_t snapshot_lsn = master.last_lsn();
    for (const auto& [tenant, entity] : master.table_names()) {
        if (entity != mapping.entity) continue;
        for (const auto& [pk, row] : master.table_snapshot(tenant, entity)) {
            (void)pk;
            UpsertDoc op{tenant, mapping.collection, doc_id_for(mapping, row),
                         map_row_to_document(mapping, row), snapshot_lsn};
            auto applied = sink.apply(op);
            if (!applied) return applied.status();
        }
    }
    return Status::ok();
}

}  // namespace polystore
