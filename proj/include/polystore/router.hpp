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
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "polystore/data_model.hpp"
#include "polystore/nosql_engines.hpp"
#include "polystore/predicate.hpp"
#include "polystore/relational_engine.hpp"
#include "polystore/shard_manager.hpp"

namespace polystore {

enum class RequestKind { OLTP, OLAP };
enum class Consistency { Fresh, StaleOk };

enum class AggregateFn { Count, Sum, Min, Max };

const char* aggregate_fn_name(AggregateFn fn);

struct AggregateSpec {
    AggregateFn fn = AggregateFn::Count;
    std::string field;  // unused for Count
};

// Shared read shape for OLTP scatter scans (relational masters) and OLAP
// queries (document collections).
struct QuerySpec {
    std::string entity;
    Predicate predicate;
    std::optional<AggregateSpec> aggregate;
    std::optional<std::string> order_by;
};

struct KvGetReq { std::string key; };
struct KvPutReq { std::string key; std::string value; };
struct KvDeleteReq { std::string key; };
struct KvScanReq { std::string prefix; };
struct GraphNeighborsReq { std::string node; uint32_t depth = 1; };
struct GraphUpsertNodeReq { std::string node; json properties; };
struct GraphUpsertEdgeReq { std::string from; std::string label; std::string to; };
struct GraphDeleteEdgeReq { std::string from; std::string label; std::string to; };
struct StRangeReq { double x1, y1, x2, y2; int64_t t1, t2; };
struct StUpsertReq { SpatioTemporalPoint point; };
struct StDeleteReq { std::string id; };
struct DocUpsertReq { std::string doc_id; json document; };
struct DocDeleteReq { std::string doc_id; };

using RequestPayload =
    std::variant<Statement, QuerySpec, KvGetReq, KvPutReq, KvDeleteReq, KvScanReq,
                 GraphNeighborsReq, GraphUpsertNodeReq, GraphUpsertEdgeReq, GraphDeleteEdgeReq,
                 StRangeReq, StUpsertReq, StDeleteReq, DocUpsertReq, DocDeleteReq>;

struct Request {
    std::string tenant_id;
    RequestKind kind = RequestKind::OLTP;
    std::string entity;
    Consistency consistency = Consistency::Fresh;
    RequestPayload payload;
};

// Unit of work shipped to one node by the dispatcher.
struct RelationalStmtPart { Statement statement; };               // auto-commit write
struct RelationalReadPart { QuerySpec query; bool stale_ok = false; };
struct DocQueryPart { QuerySpec query; };
struct NoSqlWritePart { NoSqlOp op; };                            // epoch attached by the view
struct KvGetPart { std::string key; };
struct KvScanPart { std::string prefix; };
struct GraphNeighborsPart { std::string node; uint32_t depth = 1; };
struct StRangePart { double x1, y1, x2, y2; int64_t t1, t2; };

using SubRequestBody =
    std::variant<RelationalStmtPart, RelationalReadPart, DocQueryPart, NoSqlWritePart, KvGetPart,
                 KvScanPart, GraphNeighborsPart, StRangePart>;

struct SubRequest {
    std::string tenant;
    SubRequestBody body;
};

struct GatherPlan {
    enum class Kind { Single, Union, OrderedMergeBy, Aggregate };
    Kind kind = Kind::Single;
    std::string field;                 // OrderedMergeBy
    std::optional<AggregateSpec> agg;  // Aggregate
};

struct RouteTarget {
    NodeId node;
    SubRequest sub;
    ReplicaSetId set;  // non-empty for replica-set targets (enables retry)
};

struct RouteDecision {
    EngineKind engine = EngineKind::Relational;
    std::vector<RouteTarget> targets;
    GatherPlan gather;
};

struct ResultSet {
    std::vector<json> rows;
    uint64_t applied_lsn = 0;  // serving member's applied lsn (NoSQL reads)
};

// Topology/health view the router plans against; the deployment (simulator
// or service runtime) implements execution, liveness and epochs.
class ClusterView {
  public:
    struct SetView {
        ReplicaSetId id;
        NodeId primary;
        uint64_t epoch = 1;
        bool primary_healthy = false;
        std::vector<NodeId> healthy_secondaries;
    };

    virtual ~ClusterView() = default;
    virtual DictionaryPtr dictionary() const = 0;
    virtual const ShardMap& shard_map() const = 0;
    virtual Result<TenantConfig> tenant(const std::string& tenant_id) const = 0;
    virtual Result<SetView> replica_set_for_shard(const ShardId& shard) const = 0;
    virtual Result<SetView> replica_set_by_id(const ReplicaSetId& set) const = 0;
    virtual bool node_alive(const NodeId& node) const = 0;
    virtual Result<ResultSet> execute(const NodeId& node, const SubRequest& sub) = 0;
};

// Total deterministic order over JSON scalars used for ordered merges and
// min/max: rank null < bool < number < string < other; numeric strings that
// parse as decimals compare numerically (CDC encodes decimals as strings).
int json_order_compare(const json& a, const json& b);

// Node-side partial aggregation: Count -> {"count": n}; Sum/Min/Max over the
// field among the given rows -> {"value": v} (exact decimal addition).
Result<json> partial_aggregate(const std::vector<json>& rows, const AggregateSpec& spec);

// Node-side shaping of a result set: sorts by order_by (absent field first)
// or reduces to the partial aggregate row, per the query spec.
Result<ResultSet> apply_query_shape(std::vector<json> rows, const QuerySpec& spec,
                                    uint64_t applied_lsn);

// Gather-side recombination: union is multiset concatenation, ordered merge
// assumes sorted partials (absent field sorts first), aggregates recombine
// (sum of sums, min of mins, count = sum of counts).
Result<ResultSet> aggregate(const GatherPlan& plan, const std::vector<ResultSet>& partials);

class QueryCache;

// The load-balancer core: consults the dictionary and shard map to plan each
// request, fans sub-requests out, and recombines partial results. Stateless
// apart from round-robin counters.
class Router {
  public:
    // Pure given (request, dictionary version, map version, health view, rr
    // counters): computes the plan without executing it.
    Result<RouteDecision> route(const Request& req, ClusterView& view);

    // route + execute + aggregate. StaleOk reads retry once on an alternate
    // healthy member; writes never retry. StaleOk document queries are served
    // through `cache` when one is given (Fresh bypasses it); `now` stamps
    // inserted cache entries.
    Result<ResultSet> dispatch(const Request& req, ClusterView& view, QueryCache* cache = nullptr,
                               uint64_t now = 0);

  private:
    Result<NodeId> pick_read_member(const ClusterView::SetView& set, Consistency consistency);
    Result<NodeId> alternate_member(const ClusterView::SetView& set, const NodeId& failed);

    std::map<ReplicaSetId, uint64_t> rr_counters_;
    std::mutex mutex_;
};

}  // namespace polystore
