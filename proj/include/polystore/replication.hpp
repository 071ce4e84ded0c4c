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
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "polystore/binlog.hpp"
#include "polystore/data_model.hpp"
#include "polystore/nosql_engines.hpp"
#include "polystore/relational_engine.hpp"

namespace polystore {

struct RelationshipMapping {
    enum class Kind { ReferenceField, GraphEdge };
    Kind kind = Kind::ReferenceField;
    // ReferenceField: "<rel>_id" document field. GraphEdge: edge label = rel name.
    std::string name;
    Relationship relationship;
};

struct CollectionMapping {
    std::string entity;
    std::string collection;  // equals the entity name
    std::vector<std::string> doc_id_fields;  // pk fields, joined by "|"
    std::vector<RelationshipMapping> relationships;
};

// Deterministic schema -> collection mapping for a Structured entity:
// identity on field names, doc_id = pk joined by "|", relationships become
// reference fields, or graph edges when the target entity is graph-bound.
Result<CollectionMapping> map_schema(const EntitySchema& schema, const DataDictionary& dict);

std::string doc_id_for(const CollectionMapping& mapping, const Row& row);

// The document image of one relational row: identity on field names plus
// "<rel>_id" reference fields for non-graph relationships.
json map_row_to_document(const CollectionMapping& mapping, const Row& row);

// Committed data record -> NoSQL mutations. Insert/Update carry the full
// after-image (update also retargets edges whose key moved); Delete drops the
// document and its edges. Commit/Abort yield no ops.
Result<std::vector<NoSqlOp>> transform(const LogRecord& record, const CollectionMapping& mapping);

// Buffers a transaction's data records until its outcome record: Commit
// releases them, Abort discards them.
class TxnBuffer {
  public:
    // Returns records released for downstream transform (non-empty only for
    // Commit records).
    std::vector<LogRecord> push(const LogRecord& record);
    void clear() { pending_.clear(); }
    bool idle() const { return pending_.empty(); }

  private:
    std::map<uint64_t, std::vector<LogRecord>> pending_;
};

struct Checkpoint {
    std::string shard_id;
    uint64_t last_applied_lsn = 0;
    uint64_t updated_at = 0;  // simulated time
};

class CheckpointStore {
  public:
    virtual ~CheckpointStore() = default;
    virtual Result<Checkpoint> load(const std::string& shard_id) = 0;
    virtual Status store(const Checkpoint& checkpoint) = 0;
};

// One text line "shard_id<TAB>last_applied_lsn", written atomically via
// rename of a sibling temp file.
class FileCheckpointStore : public CheckpointStore {
  public:
    explicit FileCheckpointStore(std::string directory) : directory_(std::move(directory)) {}
    Result<Checkpoint> load(const std::string& shard_id) override;
    Status store(const Checkpoint& checkpoint) override;

  private:
    std::string directory_;
};

class MemCheckpointStore : public CheckpointStore {
  public:
    Result<Checkpoint> load(const std::string& shard_id) override;
    Status store(const Checkpoint& checkpoint) override;

  private:
    std::map<std::string, Checkpoint> checkpoints_;
};

struct LagMetric {
    std::string shard_id;
    uint64_t master_lsn = 0;
    uint64_t applied_lsn = 0;
    uint64_t lag_records = 0;
    uint64_t lag_millis = 0;
};

// Where the pipeline reads the shard's log and writes the replica set.
// The deployment (simulator or service runtime) supplies both, which is
// where crashes, partitions and primary discovery live.
struct CdcSource {
    virtual ~CdcSource() = default;
    virtual Result<std::vector<LogRecord>> read(uint64_t from_lsn, uint64_t max_records) = 0;
    virtual Result<uint64_t> tail_lsn() = 0;
};
struct CdcSink {
    virtual ~CdcSink() = default;
    virtual Result<uint64_t> apply(const NoSqlOp& op) = 0;
};

struct PipelineRun {
    uint64_t records_read = 0;
    uint64_t ops_applied = 0;
    uint64_t checkpoint = 0;
};

// Per-shard CDC worker: read_log from checkpoint+1, buffer per transaction,
// transform on commit, apply to the replica-set primary, then persist the
// checkpoint. At-least-once: a crash between apply and persist re-delivers,
// and the per-collection source-lsn high-water mark makes re-delivery a
// no-op.
class CdcPipeline {
  public:
    CdcPipeline(std::string shard_id, CdcSource* source, CdcSink* sink, CheckpointStore* store,
                uint64_t batch_size);

    Status register_entity(const CollectionMapping& mapping);
    bool has_entity(const std::string& entity) const { return mappings_.count(entity) > 0; }

    // One iteration. PrimaryUnavailable pauses the pipeline (the caller
    // retries after promotion); LsnGap is fatal and demands a resync.
    Result<PipelineRun> run_once(uint64_t now);

    // Simulates a pipeline-process crash: all in-flight state is dropped;
    // the next run reloads the persisted checkpoint.
    void crash();

    Result<LagMetric> measure_lag(uint64_t now);

    uint64_t checkpoint() const { return checkpoint_; }
    const std::string& shard_id() const { return shard_id_; }

    // Fault hook: invoked after apply, before checkpoint persist. Returning
    // false models a process crash at exactly that point: the run aborts
    // without persisting and the pipeline restarts from the stored
    // checkpoint (idempotent re-delivery).
    std::function<bool()> after_apply_hook;

  private:
    Status load_checkpoint();

    std::string shard_id_;
    CdcSource* source_;
    CdcSink* sink_;
    CheckpointStore* store_;
    uint64_t batch_size_;
    bool checkpoint_loaded_ = false;
    uint64_t checkpoint_ = 0;
    uint64_t checkpoint_advanced_at_ = 0;
    std::map<std::string, CollectionMapping> mappings_;
};

// Initial sync for an entity that already has rows: snapshot every tenant's
// table at the current tail lsn and upsert the mapped documents; streaming
// then continues from the checkpoint with duplicates suppressed by the
// high-water mark.
Status bootstrap_entity(const RelationalEngine& master, const CollectionMapping& mapping,
                        CdcSink& sink);

}  // namespace polystore
