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

#include "polystore/service/runtime.hpp"

#include <sys/stat.h>

#include <chrono>

namespace polystore {

ServiceRuntime::ServiceRuntime(ServiceSettings settings) : settings_(std::move(settings)) {
    if (!settings_.cluster.data_dir.empty())
        ::mkdir(settings_.cluster.data_dir.c_str(), 0755);
    cluster_ = std::make_unique<Cluster>(settings_.cluster, ClusterHooks{});
    for (const auto& [id, tenant] : settings_.tenants) {
        (void)id;
        cluster_->register_tenant(tenant);
        if (tenant.premise_endpoint) cluster_->add_premise_node(*tenant.premise_endpoint);
    }
    // The NoSQL tier is rebuilt from the relational logs on every server
    // start, so replication begins again from lsn 1; re-delivery is
    // idempotent against the per-collection high-water marks.
    for (const auto& shard : cluster_->shard_map().shards) {
        CdcPipeline* p = cluster_->pipeline(shard);
        if (p) p->crash();
    }
    if (!settings_.cluster.data_dir.empty()) {
        FileCheckpointStore store(settings_.cluster.data_dir);
        for (const auto& shard : cluster_->shard_map().shards)
            store.store(Checkpoint{shard, 0, 0});
    }
}

ServiceRuntime::~ServiceRuntime() { stop_ticker(); }

void ServiceRuntime::tick() {
    std::lock_guard lock(mutex_);
    ++ticks_;
    for (const auto& node : cluster_->all_nosql_node_ids()) {
        const NosqlNode* n = cluster_->nosql_node(node);
        cluster_->heartbeat_from(node, n->applied_lsn(), ticks_ * 100);
    }
    cluster_->detector_tick(ticks_ * 100);
    cluster_->cdc_tick(ticks_);
    for (auto& payload : cluster_->collect_relational_ship())
        cluster_->deliver_ship(payload.to, payload.records);
    for (auto& payload : cluster_->collect_nosql_stream())
        cluster_->deliver_stream(payload.to, payload.entries);
    if (settings_.cluster.autoscale_enabled &&
        ticks_ % std::max<uint64_t>(1, settings_.cluster.autoscale_interval) == 0)
        cluster_->autoscale_tick(ticks_);
}

void ServiceRuntime::start_ticker() {
    if (ticker_running_.exchange(true)) return;
    ticker_ = std::thread([this] {
        while (ticker_running_.load()) {
            tick();
            std::this_thread::sleep_for(std::chrono::milliseconds(settings_.tick_ms));
        }
    });
}

void ServiceRuntime::stop_ticker() {
    if (!ticker_running_.exchange(false)) return;
    if (ticker_.joinable()) ticker_.join();
}

json ServiceRuntime::handle_line(const std::string& line) {
    auto msg = parse_wire_message(line);
    if (!msg) return wire_error(0, msg.status());
    return handle(msg.value());
}

json ServiceRuntime::handle(const WireMessage& msg) {
    std::lock_guard lock(mutex_);
    try {
        const std::string& verb = msg.verb;
        json body;
        if (verb == "schema.apply") body = verb_schema_apply(msg.body);
        else if (verb == "txn.begin") body = verb_txn_begin(msg.body);
        else if (verb == "txn.exec") body = verb_txn_exec(msg.body);
        else if (verb == "txn.commit") body = verb_txn_commit(msg.body);
        else if (verb == "txn.abort") body = verb_txn_abort(msg.body);
        else if (verb == "query") body = verb_query(msg.body);
        else if (verb.rfind("kv.", 0) == 0) body = verb_kv(verb, msg.body);
        else if (verb.rfind("graph.", 0) == 0) body = verb_graph(verb, msg.body);
        else if (verb.rfind("st.", 0) == 0) body = verb_st(verb, msg.body);
        else if (verb.rfind("doc.", 0) == 0) body = verb_doc(verb, msg.body);
        else if (verb.rfind("admin.", 0) == 0) body = verb_admin(verb, msg.body);
        else return wire_error(msg.id, ErrorCode::UnknownVerb, verb);

        if (body.contains("__error")) {
            return wire_error(msg.id,
                              Status{static_cast<ErrorCode>(body["__error"].get<int>()),
                                     body.value("message", std::string{})});
        }
        return wire_ok(msg.id, std::move(body));
    } catch (const json::exception& e) {
        return wire_error(msg.id, ErrorCode::MalformedMessage, e.what());
    } catch (const std::exception& e) {
        return wire_error(msg.id, ErrorCode::MalformedMessage, e.what());
    }
}

namespace {

json fail(const Status& status) {
    return json{{"__error", static_cast<int>(status.code)}, {"message", status.message}};
}

json fail(ErrorCode code, const std::string& message) {
    return json{{"__error", static_cast<int>(code)}, {"message", message}};
}

}  // namespace

json ServiceRuntime::verb_schema_apply(const json& body) {
    auto schema = schema_from_json(body.contains("schema") ? body.at("schema") : body);
    if (!schema) return fail(schema.status());
    auto s = cluster_->apply_schema(schema.value());
    if (!s) return fail(s);
    return json{{"entity", schema.value().entity},
                {"version", cluster_->dictionary()->version},
                {"binding",
                 engine_kind_name(cluster_->dictionary()->engine_binding.at(schema.value().entity))}};
}

Result<Predicate> ServiceRuntime::predicate_for_entity(const std::string& entity,
                                                       const json& j) const {
    DictionaryPtr dict = cluster_->dictionary();
    const EntitySchema* schema = dict ? dict->find(entity) : nullptr;
    FieldKindFn kind_fn;
    if (schema && schema->is_structured()) {
        kind_fn = [schema](const std::string& field) -> std::optional<ScalarKind> {
            const FieldDef* def = schema->field(field);
            return def ? std::make_optional(def->scalar) : std::nullopt;
        };
    }
    return predicate_from_json(j, kind_fn);
}

Result<Statement> ServiceRuntime::statement_from_json(const json& j) const {
    auto bad = [](const std::string& m) {
        return Result<Statement>(ErrorCode::MalformedMessage, m);
    };
    if (!j.is_object() || !j.contains("op") || !j.contains("entity"))
        return bad("statement needs op and entity");
    std::string op = j.at("op").get<std::string>();
    std::string entity = j.at("entity").get<std::string>();

    DictionaryPtr dict = cluster_->dictionary();
    const EntitySchema* schema = dict ? dict->find(entity) : nullptr;
    if (!schema) return Result<Statement>(ErrorCode::UnknownEntity, entity);

    auto typed_row = [&](const json& jr) -> Result<Row> {
        if (!jr.is_object()) return Result<Row>(ErrorCode::MalformedMessage, "row must be object");
        Row row;
        for (const auto& [field, value] : jr.items()) {
            const FieldDef* def = schema->field(field);
            if (!def) return Result<Row>(ErrorCode::TypeMismatch, "unknown field '" + field + "'");
            auto v = value_from_json(def->scalar, value);
            if (!v) return v.status();
            row[field] = v.take();
        }
        return row;
    };

    if (op == "insert") {
        if (!j.contains("row")) return bad("insert needs row");
        auto row = typed_row(j.at("row"));
        if (!row) return row.status();
        return Statement{InsertStmt{entity, row.take()}};
    }
    if (op == "update") {
        if (!j.contains("pk") || !j.contains("changes")) return bad("update needs pk and changes");
        auto pk = typed_row(j.at("pk"));
        if (!pk) return pk.status();
        auto changes = typed_row(j.at("changes"));
        if (!changes) return changes.status();
        return Statement{UpdateStmt{entity, pk.take(), changes.take()}};
    }
    if (op == "delete") {
        if (!j.contains("pk")) return bad("delete needs pk");
        auto pk = typed_row(j.at("pk"));
        if (!pk) return pk.status();
        return Statement{DeleteStmt{entity, pk.take()}};
    }
    if (op == "select") {
        auto predicate = predicate_for_entity(entity, j.value("predicate", json()));
        if (!predicate) return predicate.status();
        return Statement{SelectStmt{entity, predicate.take()}};
    }
    return bad("unknown statement op '" + op + "'");
}

json ServiceRuntime::verb_txn_begin(const json& body) {
    auto txn = cluster_->txn_begin(body.value("tenant", "t1"));
    if (!txn) return fail(txn.status());
    return json{{"txn", txn.value()}};
}

json ServiceRuntime::verb_txn_exec(const json& body) {
    if (!body.contains("statement")) return fail(ErrorCode::MalformedMessage, "missing statement");
    auto stmt = statement_from_json(body.at("statement"));
    if (!stmt) return fail(stmt.status());

    if (body.contains("txn")) {
        auto result = cluster_->txn_exec(body.at("txn").get<uint64_t>(), stmt.value());
        if (!result) return fail(result.status());
        json rows = json::array();
        for (const auto& row : result.value().rows) rows.push_back(row_to_json(row));
        return json{{"rows", rows}, {"affected", result.value().affected}};
    }

    // Txn-less exec: routed auto-commit (reads scatter, writes hit the
    // owning shard master).
    Request req;
    req.tenant_id = body.value("tenant", "t1");
    req.kind = RequestKind::OLTP;
    req.consistency = Consistency::Fresh;
    if (const auto* ins = std::get_if<InsertStmt>(&stmt.value())) req.entity = ins->entity;
    else if (const auto* upd = std::get_if<UpdateStmt>(&stmt.value())) req.entity = upd->entity;
    else if (const auto* del = std::get_if<DeleteStmt>(&stmt.value())) req.entity = del->entity;
    else req.entity = std::get<SelectStmt>(stmt.value()).entity;
    req.payload = stmt.take();
    auto result = cluster_->client_request(req, ticks_);
    if (!result) return fail(result.status());
    return json{{"rows", result.value().rows}};
}

json ServiceRuntime::verb_txn_commit(const json& body) {
    if (!body.contains("txn")) return fail(ErrorCode::MalformedMessage, "missing txn");
    auto lsn = cluster_->txn_commit(body.at("txn").get<uint64_t>());
    if (!lsn) return fail(lsn.status());
    return json{{"commit_lsn", lsn.value()}};
}

json ServiceRuntime::verb_txn_abort(const json& body) {
    if (!body.contains("txn")) return fail(ErrorCode::MalformedMessage, "missing txn");
    auto s = cluster_->txn_abort(body.at("txn").get<uint64_t>());
    if (!s) return fail(s);
    return json{{"aborted", true}};
}

json ServiceRuntime::verb_query(const json& body) {
    if (!body.contains("entity")) return fail(ErrorCode::MalformedMessage, "missing entity");
    Request req;
    req.tenant_id = body.value("tenant", "t1");
    req.kind = RequestKind::OLAP;
    req.entity = body.at("entity").get<std::string>();
    req.consistency =
        body.value("consistency", "fresh") == "stale_ok" ? Consistency::StaleOk
                                                         : Consistency::Fresh;
    QuerySpec spec;
    spec.entity = req.entity;
    auto predicate = predicate_for_entity(req.entity, body.value("predicate", json()));
    if (!predicate) return fail(predicate.status());
    spec.predicate = predicate.take();
    if (body.contains("aggregate")) {
        const json& agg = body.at("aggregate");
        AggregateSpec a;
        std::string fn = agg.value("fn", "count");
        if (fn == "count") a.fn = AggregateFn::Count;
        else if (fn == "sum") a.fn = AggregateFn::Sum;
        else if (fn == "min") a.fn = AggregateFn::Min;
        else if (fn == "max") a.fn = AggregateFn::Max;
        else return fail(ErrorCode::MalformedMessage, "unknown aggregate fn '" + fn + "'");
        a.field = agg.value("field", "");
        spec.aggregate = a;
    }
    if (body.contains("order_by")) spec.order_by = body.at("order_by").get<std::string>();
    req.payload = spec;

    auto result = cluster_->client_request(req, ticks_);
    if (!result) return fail(result.status());
    return json{{"rows", result.value().rows}, {"as_of_lsn", result.value().applied_lsn}};
}

json ServiceRuntime::verb_kv(const std::string& verb, const json& body) {
    Request req;
    req.tenant_id = body.value("tenant", "t1");
    req.kind = RequestKind::OLAP;
    req.entity = body.value("entity", "blobs");
    req.consistency =
        body.value("consistency", "fresh") == "stale_ok" ? Consistency::StaleOk
                                                         : Consistency::Fresh;
    if (verb == "kv.get") req.payload = KvGetReq{body.at("key").get<std::string>()};
    else if (verb == "kv.put")
        req.payload =
            KvPutReq{body.at("key").get<std::string>(), body.at("value").get<std::string>()};
    else if (verb == "kv.delete") req.payload = KvDeleteReq{body.at("key").get<std::string>()};
    else if (verb == "kv.scan") req.payload = KvScanReq{body.value("prefix", "")};
    else return fail(ErrorCode::UnknownVerb, verb);

    auto result = cluster_->client_request(req, ticks_);
    if (!result) return fail(result.status());
    return json{{"rows", result.value().rows}};
}

json ServiceRuntime::verb_graph(const std::string& verb, const json& body) {
    Request req;
    req.tenant_id = body.value("tenant", "t1");
    req.kind = RequestKind::OLAP;
    req.entity = body.value("entity", "social");
    req.consistency =
        body.value("consistency", "fresh") == "stale_ok" ? Consistency::StaleOk
                                                         : Consistency::Fresh;
    if (verb == "graph.neighbors")
        req.payload = GraphNeighborsReq{body.at("node").get<std::string>(),
                                        body.value("depth", 1u)};
    else if (verb == "graph.upsert_node")
        req.payload = GraphUpsertNodeReq{body.at("node").get<std::string>(),
                                         body.value("properties", json::object())};
    else if (verb == "graph.upsert_edge")
        req.payload = GraphUpsertEdgeReq{body.at("from").get<std::string>(),
                                         body.value("label", "edge"),
                                         body.at("to").get<std::string>()};
    else if (verb == "graph.delete_edge")
        req.payload = GraphDeleteEdgeReq{body.at("from").get<std::string>(),
                                         body.value("label", "edge"),
                                         body.at("to").get<std::string>()};
    else return fail(ErrorCode::UnknownVerb, verb);

    auto result = cluster_->client_request(req, ticks_);
    if (!result) return fail(result.status());
    return json{{"rows", result.value().rows}};
}

json ServiceRuntime::verb_st(const std::string& verb, const json& body) {
    Request req;
    req.tenant_id = body.value("tenant", "t1");
    req.kind = RequestKind::OLAP;
    req.entity = body.value("entity", "tracks");
    req.consistency =
        body.value("consistency", "fresh") == "stale_ok" ? Consistency::StaleOk
                                                         : Consistency::Fresh;
    if (verb == "st.range") {
        const json& box = body.at("box");
        const json& interval = body.at("interval");
        if (!box.is_array() || box.size() != 4 || !interval.is_array() || interval.size() != 2)
            return fail(ErrorCode::MalformedMessage, "box=[x1,y1,x2,y2], interval=[t1,t2]");
        req.payload = StRangeReq{box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                                 box[3].get<double>(), interval[0].get<int64_t>(),
                                 interval[1].get<int64_t>()};
    } else if (verb == "st.upsert") {
        const json& p = body.at("point");
        SpatioTemporalPoint point;
        point.id = p.at("id").get<std::string>();
        point.x = p.at("x").get<double>();
        point.y = p.at("y").get<double>();
        point.t = p.at("t").get<int64_t>();
        point.payload = p.value("payload", json::object());
        req.payload = StUpsertReq{std::move(point)};
    } else if (verb == "st.delete") {
        req.payload = StDeleteReq{body.at("id").get<std::string>()};
    } else {
        return fail(ErrorCode::UnknownVerb, verb);
    }

    auto result = cluster_->client_request(req, ticks_);
    if (!result) return fail(result.status());
    return json{{"rows", result.value().rows}};
}

json ServiceRuntime::verb_doc(const std::string& verb, const json& body) {
    Request req;
    req.tenant_id = body.value("tenant", "t1");
    req.kind = RequestKind::OLAP;
    req.entity = body.at("entity").get<std::string>();
    if (verb == "doc.upsert")
        req.payload = DocUpsertReq{body.at("id").get<std::string>(),
                                   body.value("document", json::object())};
    else if (verb == "doc.delete")
        req.payload = DocDeleteReq{body.at("id").get<std::string>()};
    else return fail(ErrorCode::UnknownVerb, verb);

    auto result = cluster_->client_request(req, ticks_);
    if (!result) return fail(result.status());
    return json{{"rows", result.value().rows}};
}

json ServiceRuntime::verb_admin(const std::string& verb, const json&) {
    if (verb == "admin.shards") {
        const ShardMap& map = cluster_->shard_map();
        json shards = json::array();
        for (const auto& shard : map.shards) {
            const auto& members = map.members.at(shard);
            shards.push_back(json{{"shard", shard},
                                  {"master", members.master},
                                  {"slaves", members.slaves},
                                  {"replica_set", map.replica_set_of.at(shard)}});
        }
        return json{{"version", map.version}, {"shards", shards}};
    }
    if (verb == "admin.replsets") {
        json sets = json::array();
        for (const auto& [id, rs] : cluster_->replica_sets()) {
            json members = json::array();
            for (const auto& member : rs.members) {
                const NosqlNode* node = cluster_->nosql_node(member);
                members.push_back(
                    json{{"node", member},
                         {"state", member_state_name(rs.state.count(member)
                                                         ? rs.state.at(member)
                                                         : MemberState::Healthy)},
                         {"applied_lsn", node ? node->applied_lsn() : 0}});
            }
            sets.push_back(json{{"set", id},
                                {"epoch", rs.epoch},
                                {"primary", rs.primary},
                                {"members", members}});
        }
        return json{{"replsets", sets}};
    }
    if (verb == "admin.cache") {
        auto stats = cluster_->cache().stats();
        return json{{"size", stats.size},        {"capacity", stats.capacity},
                    {"hits", stats.hits},        {"misses", stats.misses},
                    {"evictions", stats.evictions}, {"invalidations", stats.invalidations}};
    }
    if (verb == "admin.autoscale") {
        const auto& policy = cluster_->options().autoscale;
        return json{{"enabled", cluster_->options().autoscale_enabled},
                    {"qps_high", policy.qps_high},
                    {"qps_low", policy.qps_low},
                    {"lag_high", policy.lag_high},
                    {"cooldown_ticks", policy.cooldown_ticks},
                    {"last_action_tick", cluster_->last_autoscale_action_tick()}};
    }
    if (verb == "admin.lag") {
        json lags = json::array();
        for (const auto& shard : cluster_->shard_map().shards) {
            auto lag = cluster_->shard_lag(shard, ticks_);
            if (!lag) {
                lags.push_back(json{{"shard", shard}, {"error", lag.status().to_string()}});
                continue;
            }
            lags.push_back(json{{"shard", shard},
                                {"master_lsn", lag.value().master_lsn},
                                {"applied_lsn", lag.value().applied_lsn},
                                {"lag_records", lag.value().lag_records},
                                {"lag_millis", lag.value().lag_millis}});
        }
        return json{{"lag", lags}};
    }
    return fail(ErrorCode::UnknownVerb, verb);
}

}  // namespace polystore
