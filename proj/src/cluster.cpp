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

#include "polystore/cluster.hpp"

#include <algorithm>

namespace polystore {

namespace {

constexpr const char* kLoadBalancer = "lb";

}  // namespace

// CDC pipeline endpoints. The source reads the shard master's log; the sink
// applies to the replica set primary of the pipeline's shard, except graph
// edges, which follow the tenant-affine graph placement the router reads
// from.
struct ClusterCdcSource : CdcSource {
    Cluster* cluster;
    ShardId shard;

    ClusterCdcSource(Cluster* c, ShardId s) : cluster(c), shard(std::move(s)) {}

    Result<std::vector<LogRecord>> read(uint64_t from_lsn, uint64_t max_records) override {
        NodeId master = cluster->map_.members.at(shard).master;
        if (!cluster->alive(master) || !cluster->reachable(kLoadBalancer, master))
            return Result<std::vector<LogRecord>>(ErrorCode::ShardUnreachable, shard);
        return cluster->relational_master(shard)->read_log(from_lsn, max_records);
    }

    Result<uint64_t> tail_lsn() override {
        NodeId master = cluster->map_.members.at(shard).master;
        if (!cluster->alive(master) || !cluster->reachable(kLoadBalancer, master))
            return Result<uint64_t>(ErrorCode::ShardUnreachable, shard);
        return cluster->relational_master(shard)->last_lsn();
    }
};

struct ClusterCdcSink : CdcSink {
    Cluster* cluster;
    ShardId shard;

    ClusterCdcSink(Cluster* c, ShardId s) : cluster(c), shard(std::move(s)) {}

    Result<uint64_t> apply(const NoSqlOp& op) override {
        ReplicaSetId set = cluster->set_of_shard_.at(shard);
        if (const auto* edge = std::get_if<UpsertEdge>(&op)) {
            auto affine = shard_for(cluster->map_, edge->tenant, "");
            if (affine) set = cluster->set_of_shard_.at(affine.value());
        } else if (const auto* edge_del = std::get_if<DeleteEdge>(&op)) {
            auto affine = shard_for(cluster->map_, edge_del->tenant, "");
            if (affine) set = cluster->set_of_shard_.at(affine.value());
        }
        auto applied = cluster->apply_to_primary(set, op);
        if (!applied &&
            (applied.code() == ErrorCode::StaleEpoch || applied.code() == ErrorCode::NotPrimary))
            return Result<uint64_t>(ErrorCode::PrimaryUnavailable, "promotion in progress");
        return applied;
    }
};

Cluster::Cluster(ClusterOptions options, ClusterHooks hooks)
    : options_(std::move(options)), hooks_(std::move(hooks)),
      cache_(options_.cache_capacity) {
    dict_ = std::make_shared<DataDictionary>();
    if (options_.data_dir.empty())
        checkpoints_ = std::make_unique<MemCheckpointStore>();
    else
        checkpoints_ = std::make_unique<FileCheckpointStore>(options_.data_dir);

    cache_.on_lookup = [this](const CacheKey& key, const CacheEntry* entry, bool hit) {
        if (hit)
            trace("cache_hit entity=" + key.entity + " inserted_at=" +
                  std::to_string(entry->inserted_at) + " as_of=" +
                  std::to_string(entry->as_of_lsn));
    };

    map_.version = 1;
    next_shard_ordinal_ = static_cast<int>(options_.shards);
    for (size_t i = 0; i < options_.shards; ++i) {
        ShardId shard = "s" + std::to_string(i);
        ReplicaSetId set = "rs" + std::to_string(i);
        map_.shards.push_back(shard);
        map_.replica_set_of[shard] = set;
        make_shard(shard, set);
    }
}

Cluster::~Cluster() = default;

void Cluster::trace(const std::string& line) {
    if (hooks_.trace) hooks_.trace(line);
}

bool Cluster::alive(const NodeId& node) const {
    return hooks_.alive ? hooks_.alive(node) : true;
}

bool Cluster::reachable(const NodeId& from, const NodeId& to) const {
    return hooks_.reachable ? hooks_.reachable(from, to) : true;
}

Status Cluster::make_shard(const ShardId& shard_id, const ReplicaSetId& set_id) {
    auto shard = std::make_unique<Shard>();
    shard->id = shard_id;

    NodeId master_id = shard_id + "m";
    shard->master = std::make_unique<RelationalEngine>(shard_id, dict_);
    if (!options_.data_dir.empty()) {
        auto s = shard->master->open_binlog(options_.data_dir + "/" + shard_id + ".binlog",
                                            options_.durability);
        if (!s) return s;
    }
    relational_nodes_[master_id] = {shard_id, shard->master.get()};

    for (size_t j = 1; j <= options_.slaves_per_shard; ++j) {
        NodeId slave_id = shard_id + "r" + std::to_string(j);
        auto slave =
            std::make_unique<RelationalEngine>(shard_id, dict_, RelationalEngine::Role::Replica);
        relational_nodes_[slave_id] = {shard_id, slave.get()};
        shard->slave_ids.push_back(slave_id);
        shard->slaves.push_back(std::move(slave));
    }

    auto& members = map_.members[shard_id];
    members.master = master_id;
    members.slaves = shard->slave_ids;

    // Replica set: n0 starts as primary at epoch 1.
    ReplicaSet rs;
    rs.id = set_id;
    rs.epoch = 1;
    for (size_t j = 0; j <= options_.secondaries_per_set; ++j) {
        NodeId node_id = set_id + "n" + std::to_string(j);
        auto node = std::make_unique<NosqlNode>(node_id);
        if (j == 0) {
            node->grant_primary(rs.epoch);
            rs.primary = node_id;
        } else {
            node->grant_secondary(rs.epoch);
        }
        rs.members.push_back(node_id);
        rs.state[node_id] = MemberState::Healthy;
        rs.applied[node_id] = 0;
        rs.last_heartbeat[node_id] = 0;
        set_of_node_[node_id] = set_id;
        nosql_nodes_[node_id] = std::move(node);
    }
    sets_[set_id] = std::move(rs);
    set_of_shard_[shard_id] = set_id;

    shard->cdc_source = std::make_unique<ClusterCdcSource>(this, shard_id);
    shard->cdc_sink = std::make_unique<ClusterCdcSink>(this, shard_id);
    shard->pipeline = std::make_unique<CdcPipeline>(shard_id, shard->cdc_source.get(),
                                                    shard->cdc_sink.get(), checkpoints_.get(),
                                                    options_.cdc_batch);
    for (const auto& [entity, mapping] : cdc_mappings_) {
        (void)entity;
        shard->pipeline->register_entity(mapping);
    }

    shard_index_[shard_id] = shards_.size();
    shards_.push_back(std::move(shard));
    return Status::ok();
}

Status Cluster::apply_schema(const EntitySchema& schema) {
    auto next = define_schema(*dict_, schema);
    if (!next) return next.status();
    dict_ = std::make_shared<DataDictionary>(next.take());
    for (auto& shard : shards_) {
        shard->master->set_dictionary(dict_);
        for (auto& slave : shard->slaves) slave->set_dictionary(dict_);
    }
    for (auto& [endpoint, engine] : premise_nodes_) {
        (void)endpoint;
        engine->set_dictionary(dict_);
    }
    return register_mappings_for(*dict_->find(schema.entity));
}

Status Cluster::evolve_entity(const std::string& entity, const std::vector<FieldDef>& new_fields) {
    auto next = evolve_schema(*dict_, entity, new_fields);
    if (!next) return next.status();
    dict_ = std::make_shared<DataDictionary>(next.take());
    for (auto& shard : shards_) {
        shard->master->set_dictionary(dict_);
        for (auto& slave : shard->slaves) slave->set_dictionary(dict_);
    }
    return Status::ok();
}

Status Cluster::register_mappings_for(const EntitySchema& schema) {
    if (!schema.is_structured()) return Status::ok();
    auto mapping = map_schema(schema, *dict_);
    if (!mapping) return mapping.status();
    cdc_mappings_[schema.entity] = mapping.value();
    for (auto& shard : shards_) {
        shard->pipeline->register_entity(mapping.value());
        // Entities registered after rows exist get a snapshot seed; streaming
        // continues from the checkpoint with duplicates suppressed.
        if (!shard->master->table_names().empty())
            bootstrap_entity(*shard->master, mapping.value(), *shard->cdc_sink);
    }
    return Status::ok();
}

Status Cluster::register_tenant(TenantConfig config) {
    tenants_[config.tenant_id] = std::move(config);
    return Status::ok();
}

Status Cluster::add_premise_node(const std::string& endpoint) {
    if (premise_nodes_.count(endpoint)) return Status::ok();
    premise_nodes_[endpoint] =
        std::make_unique<RelationalEngine>("premise:" + endpoint, dict_);
    return Status::ok();
}

DictionaryPtr Cluster::dictionary() const { return dict_; }

const ShardMap& Cluster::shard_map() const { return map_; }

Result<TenantConfig> Cluster::tenant(const std::string& tenant_id) const {
    auto it = tenants_.find(tenant_id);
    if (it != tenants_.end()) return it->second;
    return TenantConfig{tenant_id, {}, std::nullopt};  // default: public cloud
}

Result<ClusterView::SetView> Cluster::replica_set_by_id(const ReplicaSetId& set) const {
    auto it = sets_.find(set);
    if (it == sets_.end()) return Result<SetView>(ErrorCode::UnknownNode, set);
    const ReplicaSet& rs = it->second;
    SetView view;
    view.id = rs.id;
    view.primary = rs.primary;
    view.epoch = rs.epoch;
    view.primary_healthy = rs.state.count(rs.primary) &&
                           rs.state.at(rs.primary) == MemberState::Healthy && alive(rs.primary);
    for (const auto& node : rs.members) {
        if (node == rs.primary) continue;
        if (rs.state.count(node) && rs.state.at(node) == MemberState::Healthy)
            view.healthy_secondaries.push_back(node);
    }
    return view;
}

Result<ClusterView::SetView> Cluster::replica_set_for_shard(const ShardId& shard) const {
    auto it = set_of_shard_.find(shard);
    if (it == set_of_shard_.end()) return Result<SetView>(ErrorCode::UnknownShard, shard);
    return replica_set_by_id(it->second);
}

bool Cluster::node_alive(const NodeId& node) const { return alive(node); }

void Cluster::note_request(const NodeId& node) { request_counts_[node]++; }

Result<ResultSet> Cluster::execute(const NodeId& node, const SubRequest& sub) {
    if (!alive(node) || !reachable(kLoadBalancer, node))
        return Result<ResultSet>(ErrorCode::NoHealthyTarget, node + " unreachable");
    note_request(node);

    if (node.rfind("premise:", 0) == 0) {
        auto it = premise_nodes_.find(node.substr(8));
        if (it == premise_nodes_.end())
            return Result<ResultSet>(ErrorCode::NoHealthyTarget, node + " not registered");
        return execute_relational(it->second.get(), sub);
    }
    auto rel = relational_nodes_.find(node);
    if (rel != relational_nodes_.end()) return execute_relational(rel->second.second, sub);
    auto nosql = nosql_nodes_.find(node);
    if (nosql != nosql_nodes_.end()) return execute_nosql(node, nosql->second.get(), sub);
    return Result<ResultSet>(ErrorCode::UnknownNode, node);
}

Result<ResultSet> Cluster::execute_relational(RelationalEngine* engine, const SubRequest& sub) {
    if (const auto* read = std::get_if<RelationalReadPart>(&sub.body)) {
        auto rows = engine->select(sub.tenant, read->query.entity, read->query.predicate,
                                   read->stale_ok);
        if (!rows) return rows.status();
        std::vector<json> out;
        out.reserve(rows.value().size());
        for (const auto& row : rows.value()) out.push_back(row_to_json(row));
        uint64_t progress = engine->role() == RelationalEngine::Role::Replica
                                ? engine->applied_lsn()
                                : engine->last_lsn();
        return apply_query_shape(std::move(out), read->query, progress);
    }
    const auto* stmt = std::get_if<RelationalStmtPart>(&sub.body);
    if (!stmt)
        return Result<ResultSet>(ErrorCode::OpNotAllowed, "non-relational sub-request");

    // Auto-commit single statement.
    auto txn = engine->begin(sub.tenant);
    if (!txn) return txn.status();
    auto result = engine->execute(txn.value(), stmt->statement);
    if (!result) {
        engine->abort(txn.value());
        return result.status();
    }
    auto lsn = engine->commit(txn.value());
    if (!lsn) return lsn.status();
    trace("ack_rel shard=" + engine->shard_id() + " lsn=" + std::to_string(lsn.value()) +
          " txn=" + std::to_string(txn.value()));

    ResultSet out;
    if (std::holds_alternative<SelectStmt>(stmt->statement)) {
        for (const auto& row : result.value().rows) out.rows.push_back(row_to_json(row));
    } else {
        out.rows.push_back(json{{"affected", result.value().affected},
                                {"commit_lsn", lsn.value()}});
    }
    return out;
}

Result<uint64_t> Cluster::apply_to_primary(const ReplicaSetId& set_id, const NoSqlOp& op) {
    auto it = sets_.find(set_id);
    if (it == sets_.end()) return Result<uint64_t>(ErrorCode::UnknownNode, set_id);
    ReplicaSet& rs = it->second;
    if (rs.primary.empty() || !rs.state.count(rs.primary) ||
        rs.state.at(rs.primary) != MemberState::Healthy)
        return Result<uint64_t>(ErrorCode::PrimaryUnavailable, set_id);
    if (!alive(rs.primary) || !reachable(kLoadBalancer, rs.primary))
        return Result<uint64_t>(ErrorCode::PrimaryUnavailable, set_id + " primary unreachable");

    NosqlNode* node = nosql_nodes_.at(rs.primary).get();
    uint64_t before = node->applied_lsn();
    uint64_t uid = next_uid_++;
    auto applied = node->apply(op, rs.epoch, uid);
    if (!applied) return applied;
    note_request(rs.primary);
    if (applied.value() > before) {
        rs.applied[rs.primary] = applied.value();
        acked_.push_back({uid, set_id, rs.primary, rs.epoch, applied.value()});
        trace("ack_nosql set=" + set_id + " node=" + rs.primary + " epoch=" +
              std::to_string(rs.epoch) + " lsn=" + std::to_string(applied.value()) +
              " uid=" + std::to_string(uid) + " op=" + op_to_string(op));
        if (const auto* doc = std::get_if<UpsertDoc>(&op)) {
            uint64_t evicted = cache_.invalidate(doc->collection);
            trace("cache_invalidate entity=" + doc->collection + " evicted=" +
                  std::to_string(evicted));
        } else if (const auto* del = std::get_if<DeleteDoc>(&op)) {
            uint64_t evicted = cache_.invalidate(del->collection);
            trace("cache_invalidate entity=" + del->collection + " evicted=" +
                  std::to_string(evicted));
        }
    }
    return applied;
}

Result<ResultSet> Cluster::execute_nosql(const NodeId& node_id, NosqlNode* node,
                                         const SubRequest& sub) {
    if (const auto* write = std::get_if<NoSqlWritePart>(&sub.body)) {
        auto set_it = set_of_node_.find(node_id);
        if (set_it == set_of_node_.end())
            return Result<ResultSet>(ErrorCode::UnknownNode, node_id);
        auto applied = apply_to_primary(set_it->second, write->op);
        if (!applied) return applied.status();
        ResultSet out;
        out.applied_lsn = applied.value();
        out.rows.push_back(json{{"applied_lsn", applied.value()}});
        return out;
    }

    ResultSet out;
    out.applied_lsn = node->applied_lsn();
    if (const auto* query = std::get_if<DocQueryPart>(&sub.body)) {
        auto docs = node->docs().query(sub.tenant, query->query.entity, query->query.predicate);
        if (!docs) {
            // Registered entities with no data on this member read as empty;
            // truly unknown collections keep the engine error.
            if (docs.code() == ErrorCode::UnknownCollection && dict_ &&
                dict_->find(query->query.entity))
                return apply_query_shape({}, query->query, out.applied_lsn);
            return docs.status();
        }
        std::vector<json> rows;
        rows.reserve(docs.value().size());
        for (const auto& doc : docs.value()) rows.push_back(doc.fields);
        return apply_query_shape(std::move(rows), query->query, out.applied_lsn);
    }
    if (const auto* get = std::get_if<KvGetPart>(&sub.body)) {
        auto value = node->kv().get(sub.tenant, get->key);
        if (value) out.rows.push_back(json{{"key", get->key}, {"value", *value}});
        return out;
    }
    if (const auto* scan = std::get_if<KvScanPart>(&sub.body)) {
        for (const auto& [key, value] : node->kv().scan_prefix(sub.tenant, scan->prefix))
            out.rows.push_back(json{{"key", key}, {"value", value}});
        return out;
    }
    if (const auto* nbr = std::get_if<GraphNeighborsPart>(&sub.body)) {
        auto reached = node->graph().neighbors(sub.tenant, nbr->node, nbr->depth);
        if (!reached) return reached.status();
        auto rows = reached.take();
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second < b.second : a.first < b.first;
        });
        for (const auto& [id, depth] : rows)
            out.rows.push_back(json{{"node", id}, {"depth", depth}});
        return out;
    }
    if (const auto* range = std::get_if<StRangePart>(&sub.body)) {
        auto points = node->st().range(sub.tenant, range->x1, range->y1, range->x2, range->y2,
                                       range->t1, range->t2);
        if (!points) return points.status();
        for (const auto& p : points.value())
            out.rows.push_back(
                json{{"id", p.id}, {"x", p.x}, {"y", p.y}, {"t", p.t}, {"payload", p.payload}});
        return out;
    }
    return Result<ResultSet>(ErrorCode::OpNotAllowed, "relational sub-request on a NoSQL node");
}

Result<ResultSet> Cluster::client_request(const Request& req, uint64_t now) {
    return router_.dispatch(req, *this, &cache_, now);
}

// --- transactions -------------------------------------------------------------

Result<uint64_t> Cluster::txn_begin(const std::string& tenant_id) {
    uint64_t id = next_session_txn_++;
    txn_sessions_[id] = TxnSession{tenant_id, "", 0};
    return id;
}

Result<ExecResult> Cluster::txn_exec(uint64_t txn, const Statement& stmt) {
    auto it = txn_sessions_.find(txn);
    if (it == txn_sessions_.end())
        return Result<ExecResult>(ErrorCode::RowNotFound, "unknown txn " + std::to_string(txn));
    TxnSession& session = it->second;

    const EntitySchema* schema = nullptr;
    std::optional<std::string> pk;
    bool is_write = true;
    if (const auto* ins = std::get_if<InsertStmt>(&stmt)) {
        schema = dict_->find(ins->entity);
        if (!schema) return Result<ExecResult>(ErrorCode::UnknownEntity, ins->entity);
        auto text = pk_text(*schema, ins->row);
        if (!text) return text.status();
        pk = text.value();
    } else if (const auto* upd = std::get_if<UpdateStmt>(&stmt)) {
        schema = dict_->find(upd->entity);
        if (!schema) return Result<ExecResult>(ErrorCode::UnknownEntity, upd->entity);
        auto text = pk_text(*schema, upd->pk);
        if (!text) return text.status();
        pk = text.value();
    } else if (const auto* del = std::get_if<DeleteStmt>(&stmt)) {
        schema = dict_->find(del->entity);
        if (!schema) return Result<ExecResult>(ErrorCode::UnknownEntity, del->entity);
        auto text = pk_text(*schema, del->pk);
        if (!text) return text.status();
        pk = text.value();
    } else {
        is_write = false;
    }

    if (is_write) {
        auto shard = shard_for(map_, session.tenant, *pk);
        if (!shard) return shard.status();
        if (session.pinned_shard.empty()) {
            NodeId master = map_.members.at(shard.value()).master;
            if (!alive(master))
                return Result<ExecResult>(ErrorCode::NoHealthyTarget, master + " is down");
            RelationalEngine* engine = relational_master(shard.value());
            auto engine_txn = engine->begin(session.tenant);
            if (!engine_txn) return engine_txn.status();
            session.pinned_shard = shard.value();
            session.engine_txn = engine_txn.value();
        } else if (session.pinned_shard != shard.value()) {
            return Result<ExecResult>(ErrorCode::CrossShardTransaction,
                                      "transaction is pinned to " + session.pinned_shard +
                                          ", statement targets " + shard.value());
        }
        return relational_master(session.pinned_shard)->execute(session.engine_txn, stmt);
    }

    // Reads: pinned transactions read their own shard (and their own
    // writes); unpinned reads are plain routed reads.
    const auto& sel = std::get<SelectStmt>(stmt);
    if (!session.pinned_shard.empty())
        return relational_master(session.pinned_shard)->execute(session.engine_txn, stmt);

    Request req;
    req.tenant_id = session.tenant;
    req.kind = RequestKind::OLTP;
    req.entity = sel.entity;
    req.consistency = Consistency::Fresh;
    req.payload = QuerySpec{sel.entity, sel.predicate, std::nullopt, std::nullopt};
    auto result = router_.dispatch(req, *this, nullptr, 0);
    if (!result) return result.status();
    ExecResult out;
    for (const auto& row : result.value().rows) {
        Row typed;
        const EntitySchema* s = dict_->find(sel.entity);
        if (s) {
            for (const auto& field : s->fields) {
                if (!row.contains(field.name)) continue;
                auto v = value_from_json(field.scalar, row.at(field.name));
                if (v) typed[field.name] = v.take();
            }
        }
        out.rows.push_back(std::move(typed));
    }
    return out;
}

Result<uint64_t> Cluster::txn_commit(uint64_t txn) {
    auto it = txn_sessions_.find(txn);
    if (it == txn_sessions_.end())
        return Result<uint64_t>(ErrorCode::RowNotFound, "unknown txn " + std::to_string(txn));
    TxnSession session = it->second;
    txn_sessions_.erase(it);
    if (session.pinned_shard.empty()) return uint64_t{0};  // empty txn, nothing durable

    auto lsn = relational_master(session.pinned_shard)->commit(session.engine_txn);
    if (!lsn) return lsn;
    trace("ack_rel shard=" + session.pinned_shard + " lsn=" + std::to_string(lsn.value()) +
          " txn=" + std::to_string(session.engine_txn));
    return lsn;
}

Status Cluster::txn_abort(uint64_t txn) {
    auto it = txn_sessions_.find(txn);
    if (it == txn_sessions_.end())
        return Status::error(ErrorCode::RowNotFound, "unknown txn " + std::to_string(txn));
    TxnSession session = it->second;
    txn_sessions_.erase(it);
    if (session.pinned_shard.empty()) return Status::ok();
    return relational_master(session.pinned_shard)->abort(session.engine_txn);
}

// --- periodic machinery ---------------------------------------------------------

void Cluster::heartbeat_from(const NodeId& node, uint64_t applied_lsn, uint64_t now) {
    auto set_it = set_of_node_.find(node);
    if (set_it == set_of_node_.end()) return;
    ReplicaSet& rs = sets_.at(set_it->second);
    rs.last_heartbeat[node] = now;
    rs.applied[node] = applied_lsn;
}

void Cluster::detector_tick(uint64_t now) {
    for (auto& [set_id, rs] : sets_) {
        (void)set_id;
        for (const auto& t : heartbeat_tick(rs, now, options_.heartbeat_timeout))
            trace("member_state set=" + rs.id + " node=" + t.node + " " +
                  member_state_name(t.from) + "->" + member_state_name(t.to));
        if (!rs.primary.empty() && rs.state.count(rs.primary) &&
            rs.state.at(rs.primary) != MemberState::Healthy)
            promote_set(rs, now);
    }
}

void Cluster::promote_set(ReplicaSet& rs, uint64_t now) {
    (void)now;
    NosqlNode* old_node =
        nosql_nodes_.count(rs.primary) ? nosql_nodes_.at(rs.primary).get() : nullptr;
    auto result = promote(rs);
    if (!result) {
        trace("promote_failed set=" + rs.id + " reason=" + result.status().to_string());
        return;
    }
    const PromotionResult& p = result.value();

    PromotionEvent event;
    event.set = rs.id;
    event.old_primary = p.old_primary;
    event.new_primary = p.new_primary;
    event.new_epoch = p.new_epoch;
    event.new_primary_applied = p.new_primary_applied;

    // The fenced suffix: everything the deposed primary accepted beyond what
    // the promoted node had applied. These acknowledged writes are the
    // bounded loss of asynchronous replication.
    if (old_node) {
        old_node->fence();
        for (auto& entry :
             old_node->log_suffix(p.new_primary_applied, old_node->applied_lsn())) {
            event.discarded_uids.push_back(entry.op_uid);
            event.discarded_ops.push_back(std::move(entry));
        }
    }
    nosql_nodes_.at(p.new_primary)->grant_primary(p.new_epoch);

    std::string discarded;
    for (size_t i = 0; i < event.discarded_uids.size(); ++i) {
        if (i) discarded += ',';
        discarded += std::to_string(event.discarded_uids[i]);
    }
    trace("promote set=" + rs.id + " epoch=" + std::to_string(p.new_epoch) + " new=" +
          p.new_primary + " applied=" + std::to_string(p.new_primary_applied) + " old=" +
          p.old_primary + " discarded=" + (discarded.empty() ? "-" : discarded));
    promotion_events_.push_back(std::move(event));
}

void Cluster::cdc_tick(uint64_t now) {
    for (auto& shard : shards_) {
        if (!shard->pipeline || shard->pipeline_paused) continue;
        auto run = shard->pipeline->run_once(now);
        if (!run) {
            trace("cdc_pause shard=" + shard->id + " reason=" + run.status().to_string());
            continue;
        }
        if (run.value().ops_applied > 0)
            trace("cdc_apply shard=" + shard->id + " records=" +
                  std::to_string(run.value().records_read) + " ops=" +
                  std::to_string(run.value().ops_applied) + " checkpoint=" +
                  std::to_string(run.value().checkpoint));
    }
}

std::vector<Cluster::ShipPayload> Cluster::collect_relational_ship() {
    std::vector<ShipPayload> out;
    for (auto& shard : shards_) {
        NodeId master = map_.members.at(shard->id).master;
        if (!alive(master)) continue;
        for (size_t i = 0; i < shard->slaves.size(); ++i) {
            auto records =
                shard->master->read_log(shard->slaves[i]->applied_lsn() + 1, options_.ship_batch);
            if (!records.empty()) out.push_back({shard->slave_ids[i], std::move(records)});
        }
    }
    return out;
}

void Cluster::deliver_ship(const NodeId& slave, const std::vector<LogRecord>& records) {
    auto it = relational_nodes_.find(slave);
    if (it == relational_nodes_.end()) return;
    auto applied = it->second.second->apply_replica(records);
    if (!applied)
        trace("ship_error node=" + slave + " " + applied.status().to_string());
}

std::vector<Cluster::StreamPayload> Cluster::collect_nosql_stream() {
    std::vector<StreamPayload> out;
    for (auto& [set_id, rs] : sets_) {
        (void)set_id;
        if (rs.primary.empty() || !alive(rs.primary)) continue;
        NosqlNode* primary = nosql_nodes_.at(rs.primary).get();
        if (primary->fenced()) continue;
        for (const auto& member : rs.members) {
            if (member == rs.primary) continue;
            if (rs.state.count(member) && rs.state.at(member) == MemberState::Down) continue;
            NosqlNode* node = nosql_nodes_.at(member).get();
            auto entries = primary->log_suffix(node->applied_lsn(), primary->applied_lsn());
            if (!entries.empty()) out.push_back({member, std::move(entries)});
        }
    }
    return out;
}

void Cluster::deliver_stream(const NodeId& node_id,
                             const std::vector<NosqlNode::LoggedOp>& entries) {
    auto it = nosql_nodes_.find(node_id);
    if (it == nosql_nodes_.end()) return;
    NosqlNode* node = it->second.get();
    if (node->fenced()) return;  // rejoin resets a fenced node first
    node->apply_stream(entries);
}

std::vector<ScalingAction> Cluster::autoscale_tick(uint64_t now) {
    uint64_t window = now > last_metric_tick_ ? now - last_metric_tick_ : 1;
    Metrics metrics;
    for (const auto& [set_id, rs] : sets_) metrics.set_members[set_id] = rs.members;
    for (const auto& [node, count] : request_counts_) {
        double qps = static_cast<double>(count) * 100.0 / static_cast<double>(window);
        if (set_of_node_.count(node)) metrics.node_qps[node] = qps;
        auto rel = relational_nodes_.find(node);
        if (rel != relational_nodes_.end() && map_.members.at(rel->second.first).master == node)
            metrics.master_qps[rel->second.first] = qps;
    }
    for (auto& shard : shards_) {
        uint64_t tail = shard->master->last_lsn();
        uint64_t ckpt = shard->pipeline->checkpoint();
        metrics.shard_lag_records[shard->id] = tail > ckpt ? tail - ckpt : 0;
    }
    auto stats = cache_.stats();
    metrics.cache_hit_rate = (stats.hits + stats.misses) > 0
                                 ? static_cast<double>(stats.hits) /
                                       static_cast<double>(stats.hits + stats.misses)
                                 : 0.0;

    auto actions = evaluate(metrics, options_.autoscale, last_action_tick_, now, set_of_shard_,
                            map_.shards.size());
    bool acted = false;
    for (const auto& action : actions) {
        if (action.kind == ScalingAction::Kind::None) continue;
        auto s = execute_scaling(action, now);
        trace("autoscale action=" + scaling_action_to_string(action) +
              (s ? "" : " failed=" + s.to_string()));
        if (s) acted = true;
    }
    if (acted) last_action_tick_ = now;
    last_actions_ = actions;
    request_counts_.clear();
    last_metric_tick_ = now;
    return actions;
}

Status Cluster::execute_scaling(const ScalingAction& action, uint64_t now) {
    if (action.kind == ScalingAction::Kind::AddSecondary) {
        auto it = sets_.find(action.set);
        if (it == sets_.end()) return Status::error(ErrorCode::UnknownNode, action.set);
        ReplicaSet& rs = it->second;
        if (rs.members.size() - 1 >= options_.autoscale.max_secondaries)
            return Status::error(ErrorCode::OpNotAllowed, "max secondaries reached");
        int ordinal = 0;
        for (const auto& member : rs.members) {
            size_t pos = member.find('n', rs.id.size() - 1);
            if (pos != std::string::npos)
                ordinal = std::max(ordinal, std::atoi(member.c_str() + pos + 1));
        }
        NodeId node_id = rs.id + "n" + std::to_string(ordinal + 1);
        auto node = std::make_unique<NosqlNode>(node_id);
        if (!rs.primary.empty() && nosql_nodes_.count(rs.primary))
            node->clone_from(*nosql_nodes_.at(rs.primary));
        node->grant_secondary(rs.epoch);
        rs.members.push_back(node_id);
        rs.state[node_id] = MemberState::Healthy;
        rs.applied[node_id] = node->applied_lsn();
        rs.last_heartbeat[node_id] = now;
        set_of_node_[node_id] = rs.id;
        nosql_nodes_[node_id] = std::move(node);
        return Status::ok();
    }
    if (action.kind == ScalingAction::Kind::RemoveSecondary) {
        auto it = sets_.find(action.set);
        if (it == sets_.end()) return Status::error(ErrorCode::UnknownNode, action.set);
        ReplicaSet& rs = it->second;
        if (rs.members.size() - 1 <= options_.autoscale.min_secondaries)
            return Status::error(ErrorCode::OpNotAllowed, "min secondaries reached");
        const NodeId* victim = nullptr;
        uint64_t victim_applied = 0;
        for (const auto& member : rs.members) {
            if (member == rs.primary) continue;
            if (!rs.state.count(member) || rs.state.at(member) != MemberState::Healthy) continue;
            uint64_t applied = nosql_nodes_.at(member)->applied_lsn();
            if (!victim || applied < victim_applied ||
                (applied == victim_applied && member < *victim)) {
                victim = &member;
                victim_applied = applied;
            }
        }
        if (!victim) return Status::error(ErrorCode::NoEligibleSecondary, rs.id);
        NodeId gone = *victim;
        rs.members.erase(std::remove(rs.members.begin(), rs.members.end(), gone),
                         rs.members.end());
        rs.state.erase(gone);
        rs.applied.erase(gone);
        rs.last_heartbeat.erase(gone);
        set_of_node_.erase(gone);
        nosql_nodes_.erase(gone);
        return Status::ok();
    }
    if (action.kind == ScalingAction::Kind::AddShard) return add_shard_with_migration(now);
    return Status::ok();
}

Status Cluster::trigger_add_shard(uint64_t now) { return add_shard_with_migration(now); }

std::string Cluster::next_shard_id() { return "s" + std::to_string(next_shard_ordinal_++); }

Status Cluster::add_shard_with_migration(uint64_t now) {
    if (map_.shards.size() >= options_.autoscale.max_shards)
        return Status::error(ErrorCode::OpNotAllowed, "max shards reached");
    (void)now;
    ShardId new_shard = next_shard_id();
    ReplicaSetId new_set = "rs" + new_shard.substr(1);

    // Row locations per routing key (one key can cover rows of several
    // entities).
    struct RowLoc {
        ShardId shard;
        std::string tenant;
        std::string entity;
        Row row;
    };
    std::set<std::string> keys;
    std::multimap<std::string, RowLoc> rows;
    for (auto& shard : shards_) {
        for (const auto& [tenant, entity] : shard->master->table_names()) {
            const EntitySchema* schema = dict_->find(entity);
            if (!schema || !schema->is_structured()) continue;
            for (const auto& [pk, row] : shard->master->table_snapshot(tenant, entity)) {
                std::string key = routing_key(tenant, pk);
                keys.insert(key);
                rows.insert({key, RowLoc{shard->id, tenant, entity, row}});
            }
        }
    }

    auto result = add_shard(map_, new_shard, keys);
    if (!result) return result.status();
    auto [new_map, plan] = result.take();
    new_map.replica_set_of[new_shard] = new_set;

    if (auto s = make_shard(new_shard, new_set); !s) return s;
    // make_shard registered members under the old map object; refresh both.
    new_map.members[new_shard] = map_.members[new_shard];
    map_ = std::move(new_map);

    // Relational rows move as ordinary transactions so binlogs and CDC stay
    // coherent.
    uint64_t moved = 0;
    for (const auto& move : plan.moves) {
        auto range = rows.equal_range(move.routing_key);
        for (auto it = range.first; it != range.second; ++it) {
            const RowLoc& loc = it->second;
            const EntitySchema* schema = dict_->find(loc.entity);
            if (!schema) continue;
            Row pk_row;
            for (const auto& field : schema->primary_key) {
                auto f = loc.row.find(field);
                if (f != loc.row.end()) pk_row[field] = f->second;
            }
            RelationalEngine* source = relational_master(loc.shard);
            auto txn = source->begin(loc.tenant);
            if (txn) {
                source->execute(txn.value(), DeleteStmt{loc.entity, pk_row});
                source->commit(txn.value());
            }
            RelationalEngine* dest = relational_master(new_shard);
            auto txn2 = dest->begin(loc.tenant);
            if (txn2) {
                dest->execute(txn2.value(), InsertStmt{loc.entity, loc.row});
                dest->commit(txn2.value());
            }
            ++moved;
        }
    }

    // Direct NoSQL data re-homes when its rendezvous choice changed.
    for (auto& [set_id, rs] : sets_) {
        if (set_id == new_set) continue;
        if (rs.primary.empty() || !nosql_nodes_.count(rs.primary)) continue;
        NosqlNode* primary = nosql_nodes_.at(rs.primary).get();
        ShardId home_shard;
        for (const auto& [shard, set] : set_of_shard_)
            if (set == set_id) home_shard = shard;

        auto rehome = [&](const std::string& key, const std::string& tenant) -> bool {
            auto dest = shard_for(map_, tenant, key);
            return dest && dest.value() != home_shard && set_of_shard_.count(dest.value());
        };

        for (const auto& [tenant, key, value] : primary->kv().all_pairs()) {
            if (!rehome(key, tenant)) continue;
            auto dest = set_of_shard_.at(shard_for(map_, tenant, key).value());
            apply_to_primary(dest, KvPut{tenant, key, value, 0});
            apply_to_primary(set_id, KvDelete{tenant, key, 0});
        }
        for (const auto& [tenant, point] : primary->st().all_points()) {
            if (!rehome(point.id, tenant)) continue;
            auto dest = set_of_shard_.at(shard_for(map_, tenant, point.id).value());
            apply_to_primary(dest, StUpsert{tenant, point});
            apply_to_primary(set_id, StDelete{tenant, point.id});
        }
        for (const auto& [tenant, collection] : primary->docs().all_collections()) {
            const EntitySchema* schema = dict_->find(collection);
            bool direct = schema && dict_->engine_binding.count(collection) &&
                          dict_->engine_binding.at(collection) == EngineKind::DocumentStore;
            if (!direct) continue;  // CDC'd collections moved via relational txns
            for (const auto& [doc_id, doc] : primary->docs().collection_snapshot(tenant,
                                                                                 collection)) {
                if (!rehome(doc_id, tenant)) continue;
                auto dest = set_of_shard_.at(shard_for(map_, tenant, doc_id).value());
                apply_to_primary(dest, UpsertDoc{tenant, collection, doc_id, doc.fields, 0});
                apply_to_primary(set_id, DeleteDoc{tenant, collection, doc_id, 0});
            }
        }
        // Graph data is tenant-affine: a tenant whose affine set moved takes
        // its whole subgraph along.
        std::set<std::string> graph_tenants;
        for (const auto& [tenant, node, props] : primary->graph().all_nodes()) {
            (void)node;
            (void)props;
            graph_tenants.insert(tenant);
        }
        for (const auto& tenant : graph_tenants) {
            auto affine = shard_for(map_, tenant, "");
            if (!affine || set_of_shard_.at(affine.value()) == set_id) continue;
            auto dest = set_of_shard_.at(affine.value());
            for (const auto& [t, node, props] : primary->graph().all_nodes()) {
                if (t != tenant) continue;
                apply_to_primary(dest, UpsertNode{tenant, node, props});
            }
            for (const auto& [t, from, label, to] : primary->graph().all_edges()) {
                if (t != tenant) continue;
                apply_to_primary(dest, UpsertEdge{tenant, label, from, to, 0});
                apply_to_primary(set_id, DeleteEdge{tenant, label, from, to, 0});
            }
        }
    }

    trace("add_shard shard=" + new_shard + " set=" + new_set + " map_version=" +
          std::to_string(map_.version) + " moves=" + std::to_string(moved));
    return Status::ok();
}

// --- faults / membership ----------------------------------------------------------

void Cluster::mark_down(const NodeId& node, uint64_t now) {
    auto set_it = set_of_node_.find(node);
    if (set_it == set_of_node_.end()) return;
    ReplicaSet& rs = sets_.at(set_it->second);
    MemberState previous = rs.state.count(node) ? rs.state.at(node) : MemberState::Healthy;
    if (previous == MemberState::Down) return;
    rs.state[node] = MemberState::Down;
    trace("member_state set=" + rs.id + " node=" + node + " " + member_state_name(previous) +
          "->down");
    if (rs.primary == node) promote_set(rs, now);
}

Status Cluster::rejoin_node(const NodeId& node, uint64_t now) {
    auto set_it = set_of_node_.find(node);
    if (set_it == set_of_node_.end()) return Status::error(ErrorCode::UnknownNode, node);
    ReplicaSet& rs = sets_.at(set_it->second);
    NosqlNode* joining = nosql_nodes_.at(node).get();

    if (rs.primary == node) {
        // The primary came back before anyone could be promoted.
        joining->grant_primary(rs.epoch);
        rs.state[node] = MemberState::Healthy;
        rs.last_heartbeat[node] = now;
        trace("rejoin set=" + rs.id + " node=" + node + " role=primary");
        return Status::ok();
    }
    if (rs.primary.empty() || !rs.state.count(rs.primary) ||
        rs.state.at(rs.primary) != MemberState::Healthy || !alive(rs.primary))
        return Status::error(ErrorCode::NoPrimary, rs.id);

    NosqlNode* primary = nosql_nodes_.at(rs.primary).get();
    bool diverged = log_diverged(*joining, *primary);
    auto plan = catch_up_plan(joining->applied_lsn(), primary->applied_lsn(), diverged);
    if (plan.full_resync) {
        joining->clone_from(*primary);
    } else if (!plan.empty()) {
        joining->apply_stream(primary->log_suffix(plan.from_lsn, plan.to_lsn));
    }
    joining->grant_secondary(rs.epoch);
    rs.state[node] = MemberState::Healthy;
    rs.applied[node] = joining->applied_lsn();
    rs.last_heartbeat[node] = now;
    trace("rejoin set=" + rs.id + " node=" + node + (plan.full_resync ? " resync=full" : "") +
          " applied=" + std::to_string(joining->applied_lsn()));
    return Status::ok();
}

void Cluster::crash_pipeline(const ShardId& shard) {
    auto it = shard_index_.find(shard);
    if (it == shard_index_.end()) return;
    shards_[it->second]->pipeline->crash();
    trace("pipeline_crash shard=" + shard);
}

void Cluster::pause_pipeline(const ShardId& shard, bool paused) {
    auto it = shard_index_.find(shard);
    if (it == shard_index_.end()) return;
    shards_[it->second]->pipeline_paused = paused;
}

// --- introspection --------------------------------------------------------------

RelationalEngine* Cluster::relational_master(const ShardId& shard) {
    auto it = shard_index_.find(shard);
    return it == shard_index_.end() ? nullptr : shards_[it->second]->master.get();
}

const RelationalEngine* Cluster::relational_master(const ShardId& shard) const {
    auto it = shard_index_.find(shard);
    return it == shard_index_.end() ? nullptr : shards_[it->second]->master.get();
}

std::vector<RelationalEngine*> Cluster::relational_slaves(const ShardId& shard) {
    std::vector<RelationalEngine*> out;
    auto it = shard_index_.find(shard);
    if (it == shard_index_.end()) return out;
    for (auto& slave : shards_[it->second]->slaves) out.push_back(slave.get());
    return out;
}

NosqlNode* Cluster::nosql_node(const NodeId& node) {
    auto it = nosql_nodes_.find(node);
    return it == nosql_nodes_.end() ? nullptr : it->second.get();
}

const NosqlNode* Cluster::nosql_node(const NodeId& node) const {
    auto it = nosql_nodes_.find(node);
    return it == nosql_nodes_.end() ? nullptr : it->second.get();
}

const ReplicaSet* Cluster::replica_set(const ReplicaSetId& id) const {
    auto it = sets_.find(id);
    return it == sets_.end() ? nullptr : &it->second;
}

CdcPipeline* Cluster::pipeline(const ShardId& shard) {
    auto it = shard_index_.find(shard);
    return it == shard_index_.end() ? nullptr : shards_[it->second]->pipeline.get();
}

Result<LagMetric> Cluster::shard_lag(const ShardId& shard, uint64_t now) {
    auto it = shard_index_.find(shard);
    if (it == shard_index_.end()) return Result<LagMetric>(ErrorCode::UnknownShard, shard);
    return shards_[it->second]->pipeline->measure_lag(now);
}

std::vector<NodeId> Cluster::all_nosql_node_ids() const {
    std::vector<NodeId> out;
    for (const auto& [id, _] : nosql_nodes_) out.push_back(id);
    return out;
}

std::vector<std::string> Cluster::cdc_convergence_report() const {
    std::vector<std::string> problems;
    for (const auto& shard : shards_) {
        auto set_it = set_of_shard_.find(shard->id);
        if (set_it == set_of_shard_.end()) continue;
        const ReplicaSet& rs = sets_.at(set_it->second);
        if (rs.primary.empty()) continue;
        const NosqlNode* primary = nosql_nodes_.at(rs.primary).get();

        for (const auto& [entity, mapping] : cdc_mappings_) {
            (void)entity;
            // Expected: map_schema over the committed relational state.
            std::map<std::pair<std::string, std::string>, json> expected;
            for (const auto& [tenant, table_entity] : shard->master->table_names()) {
                if (table_entity != mapping.entity) continue;
                for (const auto& [pk, row] : shard->master->table_snapshot(tenant, table_entity)) {
                    (void)pk;
                    expected[{tenant, doc_id_for(mapping, row)}] =
                        map_row_to_document(mapping, row);
                }
            }
            // Actual: every document in the collection on the set primary.
            std::set<std::string> tenants;
            for (const auto& [key, _] : expected) tenants.insert(key.first);
            for (const auto& [tenant, collection] : primary->docs().all_collections())
                if (collection == mapping.collection) tenants.insert(tenant);

            for (const auto& tenant : tenants) {
                auto actual = primary->docs().collection_snapshot(tenant, mapping.collection);
                for (const auto& [key, doc] : expected) {
                    if (key.first != tenant) continue;
                    auto it = actual.find(key.second);
                    if (it == actual.end())
                        problems.push_back("missing doc " + tenant + "." + mapping.collection +
                                           "/" + key.second + " on " + rs.primary);
                    else if (it->second.fields != doc)
                        problems.push_back("stale doc " + tenant + "." + mapping.collection + "/" +
                                           key.second + " on " + rs.primary);
                }
                for (const auto& [doc_id, doc] : actual) {
                    (void)doc;
                    if (!expected.count({tenant, doc_id}))
                        problems.push_back("orphan doc " + tenant + "." + mapping.collection + "/" +
                                           doc_id + " on " + rs.primary);
                }
            }
        }
    }
    return problems;
}

}  // namespace polystore
