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
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "polystore/predicate.hpp"
#include "polystore/value.hpp"

namespace polystore {

struct Document {
    std::string doc_id;
    json fields;  // scalar or nested mapping/list
    uint64_t source_lsn = 0;
};

struct SpatioTemporalPoint {
    std::string id;
    double x = 0.0;  // degrees in [-180, 180]
    double y = 0.0;  // degrees in [-90, 90]
    int64_t t = 0;   // timestamp millis
    json payload;

    friend bool operator==(const SpatioTemporalPoint& a, const SpatioTemporalPoint& b) {
        return a.id == b.id && a.x == b.x && a.y == b.y && a.t == b.t && a.payload == b.payload;
    }
};

// --- replicated mutations -------------------------------------------------
// Every mutation a replica-set node can apply. source_lsn > 0 marks CDC
// traffic and drives the per-collection idempotence high-water mark;
// client-originated ops carry 0.

struct UpsertDoc {
    std::string tenant;
    std::string collection;
    std::string doc_id;
    json document;
    uint64_t source_lsn = 0;
};
struct DeleteDoc {
    std::string tenant;
    std::string collection;
    std::string doc_id;
    uint64_t source_lsn = 0;
};
struct UpsertEdge {
    std::string tenant;
    std::string label;
    std::string from;
    std::string to;
    uint64_t source_lsn = 0;
};
struct DeleteEdge {
    std::string tenant;
    std::string label;
    std::string from;
    std::string to;
    uint64_t source_lsn = 0;
};
struct UpsertNode {
    std::string tenant;
    std::string node_id;
    json properties;
};
struct KvPut {
    std::string tenant;
    std::string key;
    std::string value;
    uint64_t source_lsn = 0;
};
struct KvDelete {
    std::string tenant;
    std::string key;
    uint64_t source_lsn = 0;
};
struct StUpsert {
    std::string tenant;
    SpatioTemporalPoint point;
};
struct StDelete {
    std::string tenant;
    std::string id;
};

using NoSqlOp = std::variant<UpsertDoc, DeleteDoc, UpsertEdge, DeleteEdge, UpsertNode, KvPut,
                             KvDelete, StUpsert, StDelete>;

uint64_t op_source_lsn(const NoSqlOp& op);
std::string op_to_string(const NoSqlOp& op);

// --- embedded engines -----------------------------------------------------

class DocumentStore {
  public:
    void upsert(const std::string& tenant, const std::string& collection, Document doc);
    // Returns false when the document was absent.
    bool remove(const std::string& tenant, const std::string& collection,
                const std::string& doc_id);
    Result<std::vector<Document>> query(const std::string& tenant, const std::string& collection,
                                        const Predicate& predicate) const;
    std::optional<Document> get(const std::string& tenant, const std::string& collection,
                                const std::string& doc_id) const;
    std::map<std::string, Document> collection_snapshot(const std::string& tenant,
                                                        const std::string& collection) const;
    // Highest CDC source_lsn applied to the collection.
    uint64_t high_water_mark(const std::string& tenant, const std::string& collection) const;
    void note_source_lsn(const std::string& tenant, const std::string& collection, uint64_t lsn);

    std::vector<std::pair<std::string, std::string>> all_collections() const;

    std::string fingerprint() const;

  private:
    using Key = std::pair<std::string, std::string>;  // (tenant, collection)
    std::map<Key, std::map<std::string, Document>> collections_;
    std::map<Key, uint64_t> hwm_;
};

class KvStore {
  public:
    void put(const std::string& tenant, const std::string& key, std::string value);
    std::optional<std::string> get(const std::string& tenant, const std::string& key) const;
    bool remove(const std::string& tenant, const std::string& key);
    // Pairs in ascending key order.
    std::vector<std::pair<std::string, std::string>> scan_prefix(const std::string& tenant,
                                                                 const std::string& prefix) const;
    std::vector<std::tuple<std::string, std::string, std::string>> all_pairs() const;
    std::string fingerprint() const;

  private:
    std::map<std::pair<std::string, std::string>, std::string> data_;  // (tenant, key)
};

class GraphStore {
  public:
    void upsert_node(const std::string& tenant, const std::string& node_id, json properties);
    // Missing endpoints are materialized as empty nodes so edges never dangle.
    void upsert_edge(const std::string& tenant, const std::string& from, const std::string& label,
                     const std::string& to);
    void remove_edge(const std::string& tenant, const std::string& from, const std::string& label,
                     const std::string& to);
    bool has_node(const std::string& tenant, const std::string& node_id) const;

    // Breadth-first reachable set along outgoing edges, minimal depth,
    // excluding the start node.
    Result<std::vector<std::pair<std::string, uint32_t>>> neighbors(const std::string& tenant,
                                                                    const std::string& node_id,
                                                                    uint32_t max_depth) const;
    std::vector<std::tuple<std::string, std::string, json>> all_nodes() const;
    std::vector<std::tuple<std::string, std::string, std::string, std::string>> all_edges() const;
    std::string fingerprint() const;

  private:
    std::map<std::pair<std::string, std::string>, json> nodes_;  // (tenant, node)
    // (tenant, from, label, to) -> present
    std::set<std::tuple<std::string, std::string, std::string, std::string>> edges_;
};

class SpatioTemporalStore {
  public:
    Status upsert(const std::string& tenant, SpatioTemporalPoint point);
    bool remove(const std::string& tenant, const std::string& id);
    // Inclusive box and interval; results ordered by (t, id).
    Result<std::vector<SpatioTemporalPoint>> range(const std::string& tenant, double x1, double y1,
                                                   double x2, double y2, int64_t t1,
                                                   int64_t t2) const;
    std::vector<std::pair<std::string, SpatioTemporalPoint>> all_points() const;
    std::string fingerprint() const;

  private:
    std::map<std::pair<std::string, std::string>, SpatioTemporalPoint> points_;  // (tenant, id)
};

}  // namespace polystore
