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

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "polystore/autoscaler.hpp"
#include "polystore/data_model.hpp"
#include "polystore/query_cache.hpp"
#include "polystore/relational_engine.hpp"
#include "polystore/replica_set.hpp"
#include "polystore/replication.hpp"
#include "polystore/router.hpp"
#include "polystore/shard_manager.hpp"

namespace polystore {

// Environment callbacks. The simulator injects liveness, reachability and
// the logical clock; the service runtime leaves the defaults (everything
// reachable, wall-driven ticks).
struct ClusterHooks {
    std::function<bool(const NodeId&)> alive;
    std::function<bool(const NodeId&, const NodeId&)> reachable;  // src -> dst
    std::function<void(const std::string&)> trace;
};

struct ClusterOptions {
    size_t shards = 2;
    size_t secondaries_per_set = 2;
    size_t slaves_per_shard = 1;
    uint64_t cdc_batch = 64;
    uint64_t ship_batch = 64;
    uint64_t heartbeat_interval = 100;
    uint64_t heartbeat_timeout = 500;
    size_t cache_capacity = 1024;
    ScalingPolicy autoscale;
    bool autoscale_enabled = false;
    uint64_t autoscale_interval = 100;
    Durability durability = Durability::Relaxed;
    std::string data_dir;  // empty: everything stays in memory
};

struct AckedNosqlWrite {
    uint64_t uid = 0;
    ReplicaSetId set;
    NodeId node;
    uint64_t epoch = 0;
    uint64_t apply_lsn = 0;
};

struct PromotionEvent {
    ReplicaSetId set;
    NodeId old_primary;
    NodeId new_primary;
    uint64_t new_epoch = 0;
    uint64_t new_primary_applied = 0;
    // The old primary's unreplicated suffix: acknowledged writes lost to
    // asynchronous replication, kept for loss attribution.
    std::vector<uint64_t> discarded_uids;
    std::vector<NosqlNode::LoggedOp> discarded_ops;
};

// The whole deployment in one process: data dictionary, relational shards
// with slaves, per-shard CDC pipelines, replica sets of NoSQL nodes, the
// router with its query cache, the autoscaler, and the single membership
// authority. Message delay, drops and faults live in the caller: the
// cluster exposes synchronous steps plus payloads to deliver later.
class Cluster : public ClusterView {
  public:
    Cluster(ClusterOptions options, ClusterHooks hooks);
    ~Cluster() override;

    // --- schema / tenants ---
    Status apply_schema(const EntitySchema& schema);
    Status evolve_entity(const std::string& entity, const std::vector<FieldDef>& new_fields);
    Status register_tenant(TenantConfig config);
    Status add_premise_node(const std::string& endpoint);

    // --- ClusterView ---
    DictionaryPtr dictionary() const override;
    const ShardMap& shard_map() const override;
    Result<TenantConfig> tenant(const std::string& tenant_id) const override;
    Result<SetView> replica_set_for_shard(const ShardId& shard) const override;
    Result<SetView> replica_set_by_id(const ReplicaSetId& set) const override;
    bool node_alive(const NodeId& node) const override;
    Result<ResultSet> execute(const NodeId& node, const SubRequest& sub) override;

    // --- client entry points ---
    Result<ResultSet> client_request(const Request& req, uint64_t now);

    Result<uint64_t> txn_begin(const std::string& tenant_id);
    Result<ExecResult> txn_exec(uint64_t txn, const Statement& stmt);
    Result<uint64_t> txn_commit(uint64_t txn);
    Status txn_abort(uint64_t txn);

    // --- periodic machinery (synchronous pieces; callers add delays) ---
    // Heartbeat receipt at the authority.
    void heartbeat_from(const NodeId& node, uint64_t applied_lsn, uint64_t now);
    // Failure detection + promotion when the primary is not Healthy.
    void detector_tick(uint64_t now);
    // One run of every CDC pipeline (skips unreachable shards/primaries).
    void cdc_tick(uint64_t now);
    // Payloads the caller should deliver (possibly delayed): master->slave
    // log batches and primary->secondary op streams.
    struct ShipPayload {
        NodeId to;
        std::vector<LogRecord> records;
    };
    struct StreamPayload {
        NodeId to;
        std::vector<NosqlNode::LoggedOp> entries;
    };
    std::vector<ShipPayload> collect_relational_ship();
    std::vector<StreamPayload> collect_nosql_stream();
    void deliver_ship(const NodeId& slave, const std::vector<LogRecord>& records);
    void deliver_stream(const NodeId& node, const std::vector<NosqlNode::LoggedOp>& entries);
    // Autoscaler evaluation + action execution.
    std::vector<ScalingAction> autoscale_tick(uint64_t now);
    // Operator-triggered shard addition (same path the autoscaler takes).
    Status trigger_add_shard(uint64_t now);

    // --- fault/membership transitions (driven by the simulator) ---
    void mark_down(const NodeId& node, uint64_t now);
    Status rejoin_node(const NodeId& node, uint64_t now);
    void crash_pipeline(const ShardId& shard);
    void pause_pipeline(const ShardId& shard, bool paused);

    // --- introspection ---
    RelationalEngine* relational_master(const ShardId& shard);
    const RelationalEngine* relational_master(const ShardId& shard) const;
    std::vector<RelationalEngine*> relational_slaves(const ShardId& shard);
    NosqlNode* nosql_node(const NodeId& node);
    const NosqlNode* nosql_node(const NodeId& node) const;
    const std::map<ReplicaSetId, ReplicaSet>& replica_sets() const { return sets_; }
    const ReplicaSet* replica_set(const ReplicaSetId& id) const;
    CdcPipeline* pipeline(const ShardId& shard);
    QueryCache& cache() { return cache_; }
    Router& router() { return router_; }
    const std::vector<AckedNosqlWrite>& acked_nosql_writes() const { return acked_; }
    const std::vector<PromotionEvent>& promotions() const { return promotion_events_; }
    Result<LagMetric> shard_lag(const ShardId& shard, uint64_t now);
    const ClusterOptions& options() const { return options_; }
    std::vector<NodeId> all_nosql_node_ids() const;
    uint64_t last_autoscale_action_tick() const { return last_action_tick_; }

    // Exact multiset equality between every CDC'd collection and map_schema
    // of the relational committed state; mismatches are returned as text.
    std::vector<std::string> cdc_convergence_report() const;

  private:
    struct Shard {
        ShardId id;
        std::unique_ptr<RelationalEngine> master;
        std::vector<std::unique_ptr<RelationalEngine>> slaves;
        std::vector<NodeId> slave_ids;
        std::unique_ptr<CdcSource> cdc_source;
        std::unique_ptr<CdcSink> cdc_sink;
        std::unique_ptr<CdcPipeline> pipeline;
        bool pipeline_paused = false;
    };
    struct TxnSession {
        std::string tenant;
        ShardId pinned_shard;  // empty until the first write
        uint64_t engine_txn = 0;
    };

    friend struct ClusterCdcSource;
    friend struct ClusterCdcSink;

    void trace(const std::string& line);
    bool alive(const NodeId& node) const;
    bool reachable(const NodeId& from, const NodeId& to) const;
    Status make_shard(const ShardId& shard_id, const ReplicaSetId& set_id);
    Status register_mappings_for(const EntitySchema& schema);
    Result<ResultSet> execute_relational(RelationalEngine* engine, const SubRequest& sub);
    Result<ResultSet> execute_nosql(const NodeId& node_id, NosqlNode* node, const SubRequest& sub);
    Result<uint64_t> apply_to_primary(const ReplicaSetId& set_id, const NoSqlOp& op);
    void note_request(const NodeId& node);
    void promote_set(ReplicaSet& rs, uint64_t now);
    Status execute_scaling(const ScalingAction& action, uint64_t now);
    Status add_shard_with_migration(uint64_t now);
    std::string next_shard_id();

    ClusterOptions options_;
    ClusterHooks hooks_;

    DictionaryPtr dict_;
    std::map<std::string, TenantConfig> tenants_;
    ShardMap map_;
    std::vector<std::unique_ptr<Shard>> shards_;
    std::map<ShardId, size_t> shard_index_;
    std::map<NodeId, std::pair<ShardId, RelationalEngine*>> relational_nodes_;

    std::map<ReplicaSetId, ReplicaSet> sets_;
    std::map<NodeId, std::unique_ptr<NosqlNode>> nosql_nodes_;
    std::map<NodeId, ReplicaSetId> set_of_node_;
    std::map<ShardId, ReplicaSetId> set_of_shard_;

    std::map<std::string, std::unique_ptr<RelationalEngine>> premise_nodes_;

    std::unique_ptr<CheckpointStore> checkpoints_;
    QueryCache cache_;
    Router router_;

    std::map<std::string, CollectionMapping> cdc_mappings_;

    uint64_t next_uid_ = 1;
    uint64_t next_session_txn_ = 1;
    std::map<uint64_t, TxnSession> txn_sessions_;

    std::vector<AckedNosqlWrite> acked_;
    std::vector<PromotionEvent> promotion_events_;

    std::map<NodeId, uint64_t> request_counts_;  // since last autoscale tick
    uint64_t last_action_tick_ = 0;
    uint64_t last_metric_tick_ = 0;
    std::vector<ScalingAction> last_actions_;
    int next_shard_ordinal_ = 0;
};

}  // namespace polystore
