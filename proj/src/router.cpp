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

#include "polystore/router.hpp"

#include <algorithm>

#include "polystore/query_cache.hpp"

namespace polystore {

const char* aggregate_fn_name(AggregateFn fn) {
    switch (fn) {
        case AggregateFn::Count: return "count";
        case AggregateFn::Sum: return "sum";
        case AggregateFn::Min: return "min";
        case AggregateFn::Max: return "max";
    }
    return "?";
}

namespace {

int type_rank(const json& v) {
    if (v.is_null()) return 0;
    if (v.is_boolean()) return 1;
    if (v.is_number()) return 2;
    if (v.is_string()) return Decimal::parse(v.get<std::string>()) ? 2 : 3;
    return 4;
}

std::optional<Decimal> as_decimal(const json& v) {
    if (v.is_number_integer()) return Decimal{v.get<int64_t>() * 1000000};
    if (v.is_number_float()) return Decimal::from_double(v.get<double>());
    if (v.is_string()) return Decimal::parse(v.get<std::string>());
    return std::nullopt;
}

}  // namespace

int json_order_compare(const json& a, const json& b) {
    int ra = type_rank(a), rb = type_rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (ra) {
        case 0: return 0;
        case 1: {
            bool x = a.get<bool>(), y = b.get<bool>();
            return x == y ? 0 : (x < y ? -1 : 1);
        }
        case 2: {
            auto x = as_decimal(a), y = as_decimal(b);
            if (x && y) return x->micros == y->micros ? 0 : (x->micros < y->micros ? -1 : 1);
            return 0;
        }
        case 3: {
            int c = a.get<std::string>().compare(b.get<std::string>());
            return c < 0 ? -1 : (c > 0 ? 1 : 0);
        }
        default: {
            std::string x = a.dump(), y = b.dump();
            int c = x.compare(y);
            return c < 0 ? -1 : (c > 0 ? 1 : 0);
        }
    }
}

Result<json> partial_aggregate(const std::vector<json>& rows, const AggregateSpec& spec) {
    if (spec.fn == AggregateFn::Count)
        return json{{"count", rows.size()}};

    bool decimal_mode = false;
    int64_t int_sum = 0;
    Decimal dec_sum{0};
    json best;  // min/max
    bool any = false;
    for (const auto& row : rows) {
        if (!row.is_object() || !row.contains(spec.field)) continue;
        const json& v = row.at(spec.field);
        if (spec.fn == AggregateFn::Sum) {
            if (v.is_number_integer() && !decimal_mode) {
                int_sum += v.get<int64_t>();
            } else {
                auto d = as_decimal(v);
                if (!d)
                    return Result<json>(ErrorCode::TypeMismatch,
                                        "sum over non-numeric field '" + spec.field + "'");
                if (!decimal_mode) {
                    dec_sum = Decimal{int_sum * 1000000};
                    decimal_mode = true;
                }
                dec_sum.micros += d->micros;
            }
            any = true;
        } else {
            if (!any) {
                best = v;
                any = true;
            } else {
                int cmp = json_order_compare(v, best);
                if ((spec.fn == AggregateFn::Min && cmp < 0) ||
                    (spec.fn == AggregateFn::Max && cmp > 0))
                    best = v;
            }
        }
    }
    if (spec.fn == AggregateFn::Sum) {
        if (!any) return json{{"value", nullptr}};
        if (decimal_mode) return json{{"value", dec_sum.to_string()}};
        return json{{"value", int_sum}};
    }
    return json{{"value", any ? best : json(nullptr)}};
}

Result<ResultSet> apply_query_shape(std::vector<json> rows, const QuerySpec& spec,
                                    uint64_t applied_lsn) {
    ResultSet out;
    out.applied_lsn = applied_lsn;
    if (spec.aggregate) {
        auto agg = partial_aggregate(rows, *spec.aggregate);
        if (!agg) return agg.status();
        out.rows.push_back(agg.take());
        return out;
    }
    if (spec.order_by) {
        const std::string& field = *spec.order_by;
        std::stable_sort(rows.begin(), rows.end(), [&](const json& a, const json& b) {
            const json& va = a.is_object() && a.contains(field) ? a.at(field) : json();
            const json& vb = b.is_object() && b.contains(field) ? b.at(field) : json();
            return json_order_compare(va, vb) < 0;
        });
    }
    out.rows = std::move(rows);
    return out;
}

Result<ResultSet> aggregate(const GatherPlan& plan, const std::vector<ResultSet>& partials) {
    ResultSet out;
    if (partials.empty())
        return Result<ResultSet>(ErrorCode::PartialMissing, "no partial results");
    bool first = true;
    for (const auto& p : partials) {
        if (first || p.applied_lsn < out.applied_lsn) out.applied_lsn = p.applied_lsn;
        first = false;
    }

    switch (plan.kind) {
        case GatherPlan::Kind::Single: {
            if (partials.size() != 1)
                return Result<ResultSet>(ErrorCode::PartialMissing,
                                         "single gather expects one partial");
            out.rows = partials[0].rows;
            return out;
        }
        case GatherPlan::Kind::Union: {
            for (const auto& p : partials)
                out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
            return out;
        }
        case GatherPlan::Kind::OrderedMergeBy: {
            const std::string& field = plan.field;
            auto field_of = [&](const json& row) -> json {
                return row.is_object() && row.contains(field) ? row.at(field) : json();
            };
            std::vector<size_t> cursor(partials.size(), 0);
            for (;;) {
                int best = -1;
                for (size_t i = 0; i < partials.size(); ++i) {
                    if (cursor[i] >= partials[i].rows.size()) continue;
                    if (best < 0 ||
                        json_order_compare(field_of(partials[i].rows[cursor[i]]),
                                           field_of(partials[static_cast<size_t>(best)]
                                                        .rows[cursor[static_cast<size_t>(best)]])) <
                            0)
                        best = static_cast<int>(i);
                }
                if (best < 0) break;
                out.rows.push_back(partials[static_cast<size_t>(best)]
                                       .rows[cursor[static_cast<size_t>(best)]++]);
            }
            return out;
        }
        case GatherPlan::Kind::Aggregate: {
            if (!plan.agg)
                return Result<ResultSet>(ErrorCode::PartialMissing, "missing aggregate spec");
            const auto& spec = *plan.agg;
            if (spec.fn == AggregateFn::Count) {
                uint64_t total = 0;
                for (const auto& p : partials) {
                    if (p.rows.size() != 1 || !p.rows[0].contains("count"))
                        return Result<ResultSet>(ErrorCode::TypeMismatch,
                                                 "count partial malformed");
                    total += p.rows[0].at("count").get<uint64_t>();
                }
                out.rows.push_back(json{{"count", total}});
                return out;
            }
            // Recombine sums/mins/maxes over the partial "value" rows; null
            // partials (no matching rows on that node) are skipped.
            std::vector<json> values;
            for (const auto& p : partials) {
                if (p.rows.size() != 1 || !p.rows[0].contains("value"))
                    return Result<ResultSet>(ErrorCode::TypeMismatch, "value partial malformed");
                if (!p.rows[0].at("value").is_null())
                    values.push_back(json{{"value", p.rows[0].at("value")}});
            }
            AggregateSpec recombine{spec.fn == AggregateFn::Sum ? AggregateFn::Sum : spec.fn,
                                    "value"};
            auto combined = partial_aggregate(values, recombine);
            if (!combined) return combined.status();
            out.rows.push_back(combined.take());
            return out;
        }
    }
    return Result<ResultSet>(ErrorCode::PartialMissing, "unreachable gather kind");
}

namespace {

GatherPlan gather_for(const QuerySpec& spec, size_t target_count) {
    GatherPlan plan;
    if (target_count == 1) {
        plan.kind = GatherPlan::Kind::Single;
        return plan;
    }
    if (spec.aggregate) {
        plan.kind = GatherPlan::Kind::Aggregate;
        plan.agg = spec.aggregate;
    } else if (spec.order_by) {
        plan.kind = GatherPlan::Kind::OrderedMergeBy;
        plan.field = *spec.order_by;
    } else {
        plan.kind = GatherPlan::Kind::Union;
    }
    return plan;
}

GatherPlan gather_single() { return GatherPlan{GatherPlan::Kind::Single, "", std::nullopt}; }

// Full-pk point lookup: every primary-key field constrained by equality.
std::optional<std::string> pk_from_predicate(const EntitySchema& schema, const Predicate& pred) {
    std::string pk;
    for (size_t i = 0; i < schema.primary_key.size(); ++i) {
        auto v = pred.eq_value(schema.primary_key[i]);
        if (!v) return std::nullopt;
        if (i) pk += '|';
        pk += value_text(*v);
    }
    return schema.primary_key.empty() ? std::nullopt : std::make_optional(pk);
}

std::string query_shape_text(const QuerySpec& spec) {
    std::string s = spec.predicate.canonical_text();
    if (spec.aggregate) {
        s += "|agg=";
        s += aggregate_fn_name(spec.aggregate->fn);
        s += ':';
        s += spec.aggregate->field;
    }
    if (spec.order_by) {
        s += "|order=";
        s += *spec.order_by;
    }
    return s;
}

}  // namespace

Result<NodeId> Router::pick_read_member(const ClusterView::SetView& set, Consistency consistency) {
    if (consistency == Consistency::Fresh) {
        if (!set.primary_healthy)
            return Result<NodeId>(ErrorCode::NoHealthyTarget, "primary of " + set.id + " is down");
        return set.primary;
    }
    if (!set.healthy_secondaries.empty()) {
        std::lock_guard lock(mutex_);
        uint64_t n = rr_counters_[set.id]++;
        return set.healthy_secondaries[n % set.healthy_secondaries.size()];
    }
    if (set.primary_healthy) return set.primary;
    return Result<NodeId>(ErrorCode::NoHealthyTarget, "no healthy member in " + set.id);
}

Result<NodeId> Router::alternate_member(const ClusterView::SetView& set, const NodeId& failed) {
    std::vector<NodeId> candidates;
    for (const auto& n : set.healthy_secondaries)
        if (n != failed) candidates.push_back(n);
    if (set.primary_healthy && set.primary != failed) candidates.push_back(set.primary);
    if (candidates.empty())
        return Result<NodeId>(ErrorCode::NoHealthyTarget, "no alternate member in " + set.id);
    return candidates.front();
}

Result<RouteDecision> Router::route(const Request& req, ClusterView& view) {
    using R = Result<RouteDecision>;
    DictionaryPtr dict = view.dictionary();
    if (!dict) return R(ErrorCode::UnknownEntity, "no dictionary published");
    const EntitySchema* schema = dict->find(req.entity);
    if (!schema) return R(ErrorCode::UnknownEntity, req.entity);
    auto binding_it = dict->engine_binding.find(req.entity);
    if (binding_it == dict->engine_binding.end()) return R(ErrorCode::UnknownEntity, req.entity);
    EngineKind binding = binding_it->second;

    auto tenant = view.tenant(req.tenant_id);
    if (!tenant) return tenant.status();
    auto placement = resolve_placement(*schema, tenant.value());
    if (!placement) return placement.status();

    RouteDecision decision;
    decision.engine = binding;

    // Tenant-premise data bypasses the shared cluster entirely: one premise
    // node holds the tenant's copy, whatever the engine kind.
    if (placement.value().placement == Placement::TenantPremise) {
        NodeId premise = "premise:" + placement.value().endpoint;
        if (!view.node_alive(premise))
            return R(ErrorCode::NoHealthyTarget, "premise node " + premise + " unreachable");
        SubRequest sub{req.tenant_id, RelationalStmtPart{}};
        if (const auto* stmt = std::get_if<Statement>(&req.payload)) {
            sub.body = RelationalStmtPart{*stmt};
        } else if (const auto* query = std::get_if<QuerySpec>(&req.payload)) {
            sub.body = RelationalReadPart{*query, req.consistency == Consistency::StaleOk};
        } else {
            return R(ErrorCode::OpNotAllowed, "premise routing supports OLTP and queries only");
        }
        decision.targets.push_back({premise, std::move(sub), ""});
        decision.gather = gather_single();
        return decision;
    }

    const ShardMap& map = view.shard_map();
    if (map.shards.empty()) return R(ErrorCode::EmptyShardMap);

    auto master_target = [&](const ShardId& shard, SubRequestBody body) -> Result<RouteTarget> {
        auto members = map.members.find(shard);
        if (members == map.members.end())
            return Result<RouteTarget>(ErrorCode::UnknownShard, shard);
        const NodeId& master = members->second.master;
        if (!view.node_alive(master))
            return Result<RouteTarget>(ErrorCode::NoHealthyTarget, "master of " + shard + " down");
        return RouteTarget{master, SubRequest{req.tenant_id, std::move(body)}, ""};
    };

    auto set_read_target = [&](const ShardId& shard, SubRequestBody body) -> Result<RouteTarget> {
        auto set = view.replica_set_for_shard(shard);
        if (!set) return set.status();
        auto member = pick_read_member(set.value(), req.consistency);
        if (!member) return member.status();
        return RouteTarget{member.value(), SubRequest{req.tenant_id, std::move(body)},
                           set.value().id};
    };

    auto set_write_target = [&](const ShardId& shard, NoSqlOp op) -> Result<RouteTarget> {
        auto set = view.replica_set_for_shard(shard);
        if (!set) return set.status();
        if (!set.value().primary_healthy)
            return Result<RouteTarget>(ErrorCode::NoHealthyTarget,
                                       "primary of " + set.value().id + " is down");
        return RouteTarget{set.value().primary,
                           SubRequest{req.tenant_id, NoSqlWritePart{std::move(op)}},
                           set.value().id};
    };

    // --- OLTP statements -> relational tier ---
    if (const auto* stmt = std::get_if<Statement>(&req.payload)) {
        if (binding != EngineKind::Relational)
            return R(ErrorCode::OpNotAllowed, req.entity + " is not OLTP-capable");

        std::optional<std::string> pk;
        if (const auto* ins = std::get_if<InsertStmt>(stmt)) {
            auto text = pk_text(*schema, ins->row);
            if (!text) return text.status();
            pk = text.value();
        } else if (const auto* upd = std::get_if<UpdateStmt>(stmt)) {
            auto text = pk_text(*schema, upd->pk);
            if (!text) return text.status();
            pk = text.value();
        } else if (const auto* del = std::get_if<DeleteStmt>(stmt)) {
            auto text = pk_text(*schema, del->pk);
            if (!text) return text.status();
            pk = text.value();
        } else if (const auto* sel = std::get_if<SelectStmt>(stmt)) {
            pk = pk_from_predicate(*schema, sel->predicate);
        }

        if (pk) {
            auto shard = shard_for(map, req.tenant_id, *pk);
            if (!shard) return shard.status();
            auto target = master_target(shard.value(), RelationalStmtPart{*stmt});
            if (!target) return target.status();
            decision.targets.push_back(target.take());
            decision.gather = gather_single();
            return decision;
        }

        // Select without a full pk: scatter to every shard master.
        const auto* sel = std::get_if<SelectStmt>(stmt);
        if (!sel) return R(ErrorCode::TypeMismatch, "write statement without a primary key");
        for (const auto& shard : map.shards) {
            auto target =
                master_target(shard, RelationalReadPart{QuerySpec{sel->entity, sel->predicate,
                                                                  std::nullopt, std::nullopt},
                                                        false});
            if (!target) return target.status();
            decision.targets.push_back(target.take());
        }
        decision.gather = decision.targets.size() == 1
                              ? gather_single()
                              : GatherPlan{GatherPlan::Kind::Union, "", std::nullopt};
        return decision;
    }

    // --- query spec: OLTP scatter over masters, or OLAP over NoSQL ---
    if (const auto* query = std::get_if<QuerySpec>(&req.payload)) {
        if (req.kind == RequestKind::OLTP) {
            if (binding != EngineKind::Relational)
                return R(ErrorCode::OpNotAllowed, "OLTP reads target relational entities");
            auto pk = pk_from_predicate(*schema, query->predicate);
            if (pk && !query->aggregate) {
                auto shard = shard_for(map, req.tenant_id, *pk);
                if (!shard) return shard.status();
                auto target = master_target(shard.value(), RelationalReadPart{*query, false});
                if (!target) return target.status();
                decision.targets.push_back(target.take());
                decision.gather = gather_single();
                return decision;
            }
            for (const auto& shard : map.shards) {
                auto target = master_target(shard, RelationalReadPart{*query, false});
                if (!target) return target.status();
                decision.targets.push_back(target.take());
            }
            decision.gather = gather_for(*query, decision.targets.size());
            return decision;
        }

        // OLAP: document collections (CDC'd relational entities or
        // document-bound entities), fanned out one member per replica set.
        if (binding != EngineKind::Relational && binding != EngineKind::DocumentStore)
            return R(ErrorCode::OpNotAllowed,
                     "use the dedicated kv/graph/st operations for this entity");
        for (const auto& shard : map.shards) {
            auto target = set_read_target(shard, DocQueryPart{*query});
            if (!target) return target.status();
            decision.targets.push_back(target.take());
        }
        decision.engine = EngineKind::DocumentStore;
        decision.gather = gather_for(*query, decision.targets.size());
        return decision;
    }

    // --- key-value ---
    if (binding == EngineKind::KeyValueStore) {
        if (const auto* get = std::get_if<KvGetReq>(&req.payload)) {
            auto shard = shard_for(map, req.tenant_id, get->key);
            if (!shard) return shard.status();
            auto target = set_read_target(shard.value(), KvGetPart{get->key});
            if (!target) return target.status();
            decision.targets.push_back(target.take());
            decision.gather = gather_single();
            return decision;
        }
        if (const auto* put = std::get_if<KvPutReq>(&req.payload)) {
            auto shard = shard_for(map, req.tenant_id, put->key);
            if (!shard) return shard.status();
            auto target =
                set_write_target(shard.value(), KvPut{req.tenant_id, put->key, put->value, 0});
            if (!target) return target.status();
            decision.targets.push_back(target.take());
            decision.gather = gather_single();
            return decision;
        }
        if (const auto* del = std::get_if<KvDeleteReq>(&req.payload)) {
            auto shard = shard_for(map, req.tenant_id, del->key);
            if (!shard) return shard.status();
            auto target = set_write_target(shard.value(), KvDelete{req.tenant_id, del->key, 0});
            if (!target) return target.status();
            decision.targets.push_back(target.take());
            decision.gather = gather_single();
            return decision;
        }
        if (const auto* scan = std::get_if<KvScanReq>(&req.payload)) {
            for (const auto& shard : map.shards) {
                auto target = set_read_target(shard, KvScanPart{scan->prefix});
                if (!target) return target.status();
                decision.targets.push_back(target.take());
            }
            decision.gather = decision.targets.size() == 1
                                  ? gather_single()
                                  : GatherPlan{GatherPlan::Kind::OrderedMergeBy, "key",
                                               std::nullopt};
            return decision;
        }
        return R(ErrorCode::OpNotAllowed, "unsupported key-value operation");
    }

    // --- graph: tenant-affine so k-hop traversals stay in one set ---
    if (binding == EngineKind::GraphStore) {
        auto shard = shard_for(map, req.tenant_id, "");
        if (!shard) return shard.status();
        if (const auto* nbr = std::get_if<GraphNeighborsReq>(&req.payload)) {
            auto target = set_read_target(shard.value(), GraphNeighborsPart{nbr->node, nbr->depth});
            if (!target) return target.status();
            decision.targets.push_back(target.take());
            decision.gather = gather_single();
            return decision;
        }
        Result<RouteTarget> target = Result<RouteTarget>(ErrorCode::OpNotAllowed, "graph op");
        if (const auto* up = std::get_if<GraphUpsertNodeReq>(&req.payload))
            target = set_write_target(shard.value(),
                                      UpsertNode{req.tenant_id, up->node, up->properties});
        else if (const auto* edge = std::get_if<GraphUpsertEdgeReq>(&req.payload))
            target = set_write_target(
                shard.value(), UpsertEdge{req.tenant_id, edge->label, edge->from, edge->to, 0});
        else if (const auto* del = std::get_if<GraphDeleteEdgeReq>(&req.payload))
            target = set_write_target(
                shard.value(), DeleteEdge{req.tenant_id, del->label, del->from, del->to, 0});
        else
            return R(ErrorCode::OpNotAllowed, "unsupported graph operation");
        if (!target) return target.status();
        decision.targets.push_back(target.take());
        decision.gather = gather_single();
        return decision;
    }

    // --- spatio-temporal ---
    if (binding == EngineKind::SpatialTemporalStore) {
        if (const auto* range = std::get_if<StRangeReq>(&req.payload)) {
            if (range->x1 > range->x2 || range->y1 > range->y2 || range->t1 > range->t2)
                return R(ErrorCode::InvalidBox, "box/interval bounds are inverted");
            for (const auto& shard : map.shards) {
                auto target = set_read_target(shard, StRangePart{range->x1, range->y1, range->x2,
                                                                 range->y2, range->t1, range->t2});
                if (!target) return target.status();
                decision.targets.push_back(target.take());
            }
            decision.gather =
                decision.targets.size() == 1
                    ? gather_single()
                    : GatherPlan{GatherPlan::Kind::OrderedMergeBy, "t", std::nullopt};
            return decision;
        }
        if (const auto* up = std::get_if<StUpsertReq>(&req.payload)) {
            if (up->point.x < -180.0 || up->point.x > 180.0 || up->point.y < -90.0 ||
                up->point.y > 90.0)
                return R(ErrorCode::InvalidBox, "coordinates out of range");
            auto shard = shard_for(map, req.tenant_id, up->point.id);
            if (!shard) return shard.status();
            auto target = set_write_target(shard.value(), StUpsert{req.tenant_id, up->point});
            if (!target) return target.status();
            decision.targets.push_back(target.take());
            decision.gather = gather_single();
            return decision;
        }
        if (const auto* del = std::get_if<StDeleteReq>(&req.payload)) {
            auto shard = shard_for(map, req.tenant_id, del->id);
            if (!shard) return shard.status();
            auto target = set_write_target(shard.value(), StDelete{req.tenant_id, del->id});
            if (!target) return target.status();
            decision.targets.push_back(target.take());
            decision.gather = gather_single();
            return decision;
        }
        return R(ErrorCode::OpNotAllowed, "unsupported spatio-temporal operation");
    }

    // --- direct document writes (semi-/unstructured document entities) ---
    if (binding == EngineKind::DocumentStore) {
        if (const auto* up = std::get_if<DocUpsertReq>(&req.payload)) {
            auto shard = shard_for(map, req.tenant_id, up->doc_id);
            if (!shard) return shard.status();
            auto target = set_write_target(
                shard.value(), UpsertDoc{req.tenant_id, req.entity, up->doc_id, up->document, 0});
            if (!target) return target.status();
            decision.targets.push_back(target.take());
            decision.gather = gather_single();
            return decision;
        }
        if (const auto* del = std::get_if<DocDeleteReq>(&req.payload)) {
            auto shard = shard_for(map, req.tenant_id, del->doc_id);
            if (!shard) return shard.status();
            auto target = set_write_target(shard.value(),
                                           DeleteDoc{req.tenant_id, req.entity, del->doc_id, 0});
            if (!target) return target.status();
            decision.targets.push_back(target.take());
            decision.gather = gather_single();
            return decision;
        }
    }

    return R(ErrorCode::OpNotAllowed, "request payload does not match the entity's engine");
}

Result<ResultSet> Router::dispatch(const Request& req, ClusterView& view, QueryCache* cache,
                                   uint64_t now) {
    const QuerySpec* query = std::get_if<QuerySpec>(&req.payload);
    bool cacheable = cache && query && req.kind == RequestKind::OLAP &&
                     req.consistency == Consistency::StaleOk;
    CacheKey key;
    if (cacheable) {
        key = CacheKey{req.tenant_id, req.entity, query_shape_text(*query), "document"};
        if (auto hit = cache->lookup(key))
            return ResultSet{hit->rows, hit->as_of_lsn};
    }

    auto routed = route(req, view);
    if (!routed) return routed.status();
    const RouteDecision& decision = routed.value();

    bool is_write = std::holds_alternative<Statement>(req.payload) ||
                    (!decision.targets.empty() &&
                     std::holds_alternative<NoSqlWritePart>(decision.targets[0].sub.body));
    bool retryable = !is_write && req.consistency == Consistency::StaleOk;

    std::vector<ResultSet> partials;
    partials.reserve(decision.targets.size());
    for (const auto& target : decision.targets) {
        auto result = view.execute(target.node, target.sub);
        if (!result && retryable && !target.set.empty()) {
            // One shot on an alternate healthy member of the same set.
            auto set = view.replica_set_by_id(target.set);
            if (set) {
                auto alternate = alternate_member(set.value(), target.node);
                if (alternate) result = view.execute(alternate.value(), target.sub);
            }
        }
        if (!result) return result.status();
        partials.push_back(result.take());
    }

    auto combined = aggregate(decision.gather, partials);
    if (!combined) return combined.status();

    if (cacheable)
        cache->insert(key, CacheEntry{combined.value().rows, combined.value().applied_lsn, now});
    return combined;
}

}  // namespace polystore
