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

#include "polystore/nosql_engines.hpp"

#include <algorithm>
#include <deque>

namespace polystore {

uint64_t op_source_lsn(const NoSqlOp& op) {
    return std::visit(
        [](const auto& o) -> uint64_t {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, UpsertNode> || std::is_same_v<T, StUpsert> ||
                          std::is_same_v<T, StDelete>)
                return 0;
            else
                return o.source_lsn;
        },
        op);
}

std::string op_to_string(const NoSqlOp& op) {
    return std::visit(
        [](const auto& o) -> std::string {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, UpsertDoc>)
                return "upsert_doc " + o.tenant + "." + o.collection + "/" + o.doc_id + " lsn=" +
                       std::to_string(o.source_lsn) + " " + o.document.dump();
            else if constexpr (std::is_same_v<T, DeleteDoc>)
                return "delete_doc " + o.tenant + "." + o.collection + "/" + o.doc_id +
                       " lsn=" + std::to_string(o.source_lsn);
            else if constexpr (std::is_same_v<T, UpsertEdge>)
                return "upsert_edge " + o.tenant + " " + o.from + "-[" + o.label + "]->" + o.to +
                       " lsn=" + std::to_string(o.source_lsn);
            else if constexpr (std::is_same_v<T, DeleteEdge>)
                return "delete_edge " + o.tenant + " " + o.from + "-[" + o.label + "]->" + o.to +
                       " lsn=" + std::to_string(o.source_lsn);
            else if constexpr (std::is_same_v<T, UpsertNode>)
                return "upsert_node " + o.tenant + " " + o.node_id + " " + o.properties.dump();
            else if constexpr (std::is_same_v<T, KvPut>)
                return "kv_put " + o.tenant + " " + o.key + "=" + o.value;
            else if constexpr (std::is_same_v<T, KvDelete>)
                return "kv_delete " + o.tenant + " " + o.key;
            else if constexpr (std::is_same_v<T, StUpsert>)
                return "st_upsert " + o.tenant + " " + o.point.id;
            else
                return "st_delete " + o.tenant + " " + o.id;
        },
        op);
}

// --- DocumentStore ---------------------------------------------------------

void DocumentStore::upsert(const std::string& tenant, const std::string& collection,
                           Document doc) {
    auto& coll = collections_[{tenant, collection}];
    coll[doc.doc_id] = std::move(doc);
}

bool DocumentStore::remove(const std::string& tenant, const std::string& collection,
                           const std::string& doc_id) {
    auto it = collections_.find({tenant, collection});
    if (it == collections_.end()) {
        collections_[{tenant, collection}];  // deletes still mark the collection as known
        return false;
    }
    return it->second.erase(doc_id) > 0;
}

Result<std::vector<Document>> DocumentStore::query(const std::string& tenant,
                                                   const std::string& collection,
                                                   const Predicate& predicate) const {
    auto it = collections_.find({tenant, collection});
    if (it == collections_.end())
        return Result<std::vector<Document>>(ErrorCode::UnknownCollection,
                                             tenant + "." + collection);
    std::vector<Document> out;
    for (const auto& [_, doc] : it->second)
        if (predicate.matches_document(doc.fields)) out.push_back(doc);
    return out;
}

std::optional<Document> DocumentStore::get(const std::string& tenant,
                                           const std::string& collection,
                                           const std::string& doc_id) const {
    auto it = collections_.find({tenant, collection});
    if (it == collections_.end()) return std::nullopt;
    auto doc = it->second.find(doc_id);
    if (doc == it->second.end()) return std::nullopt;
    return doc->second;
}

std::map<std::string, Document> DocumentStore::collection_snapshot(
    const std::string& tenant, const std::string& collection) const {
    auto it = collections_.find({tenant, collection});
    return it == collections_.end() ? std::map<std::string, Document>{} : it->second;
}

uint64_t DocumentStore::high_water_mark(const std::string& tenant,
                                        const std::string& collection) const {
    auto it = hwm_.find({tenant, collection});
    return it == hwm_.end() ? 0 : it->second;
}

void DocumentStore::note_source_lsn(const std::string& tenant, const std::string& collection,
                                    uint64_t lsn) {
    auto& hwm = hwm_[{tenant, collection}];
    if (lsn > hwm) hwm = lsn;
}

std::vector<std::pair<std::string, std::string>> DocumentStore::all_collections() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [key, _] : collections_) out.push_back(key);
    return out;
}

std::string DocumentStore::fingerprint() const {
    std::string out;
    for (const auto& [key, coll] : collections_) {
        for (const auto& [id, doc] : coll) {
            out += key.first + "." + key.second + "/" + id + "=" + doc.fields.dump() + "\n";
        }
    }
    return out;
}

// --- KvStore ----------------------------------------------------------------

void KvStore::put(const std::string& tenant, const std::string& key, std::string value) {
    data_[{tenant, key}] = std::move(value);
}

std::optional<std::string> KvStore::get(const std::string& tenant, const std::string& key) const {
    auto it = data_.find({tenant, key});
    if (it == data_.end()) return std::nullopt;
    return it->second;
}

bool KvStore::remove(const std::string& tenant, const std::string& key) {
    return data_.erase({tenant, key}) > 0;
}

std::vector<std::pair<std::string, std::string>> KvStore::scan_prefix(
    const std::string& tenant, const std::string& prefix) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto it = data_.lower_bound({tenant, prefix}); it != data_.end(); ++it) {
        if (it->first.first != tenant) break;
        const std::string& key = it->first.second;
        if (key.compare(0, prefix.size(), prefix) != 0) break;
        out.emplace_back(key, it->second);
    }
    return out;
}

std::vector<std::tuple<std::string, std::string, std::string>> KvStore::all_pairs() const {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& [key, value] : data_) out.emplace_back(key.first, key.second, value);
    return out;
}

std::string KvStore::fingerprint() const {
    std::string out;
    for (const auto& [key, value] : data_)
        out += key.first + "/" + key.second + "=" + value + "\n";
    return out;
}

// --- GraphStore --------------------------------------------------------------

void GraphStore::upsert_node(const std::string& tenant, const std::string& node_id,
                             json properties) {
    nodes_[{tenant, node_id}] = std::move(properties);
}

void GraphStore::upsert_edge(const std::string& tenant, const std::string& from,
                             const std::string& label, const std::string& to) {
    if (!nodes_.count({tenant, from})) nodes_[{tenant, from}] = json::object();
    if (!nodes_.count({tenant, to})) nodes_[{tenant, to}] = json::object();
    edges_.insert({tenant, from, label, to});
}

void GraphStore::remove_edge(const std::string& tenant, const std::string& from,
                             const std::string& label, const std::string& to) {
    edges_.erase({tenant, from, label, to});
}

bool GraphStore::has_node(const std::string& tenant, const std::string& node_id) const {
    return nodes_.count({tenant, node_id}) > 0;
}

Result<std::vector<std::pair<std::string, uint32_t>>> GraphStore::neighbors(
    const std::string& tenant, const std::string& node_id, uint32_t max_depth) const {
    if (!has_node(tenant, node_id))
        return Result<std::vector<std::pair<std::string, uint32_t>>>(ErrorCode::UnknownNode,
                                                                     node_id);
    std::map<std::string, uint32_t> depth;
    std::deque<std::string> frontier{node_id};
    depth[node_id] = 0;
    while (!frontier.empty()) {
        std::string current = frontier.front();
        frontier.pop_front();
        uint32_t d = depth[current];
        if (d >= max_depth) continue;
        // edges_ is ordered, so the scan over a node's out-edges is a range
        auto it = edges_.lower_bound({tenant, current, "", ""});
        for (; it != edges_.end(); ++it) {
            if (std::get<0>(*it) != tenant || std::get<1>(*it) != current) break;
            const std::string& next = std::get<3>(*it);
            if (depth.emplace(next, d + 1).second) frontier.push_back(next);
        }
    }
    std::vector<std::pair<std::string, uint32_t>> out;
    for (const auto& [node, d] : depth)
        if (node != node_id) out.emplace_back(node, d);
    return out;
}

std::vector<std::tuple<std::string, std::string, json>> GraphStore::all_nodes() const {
    std::vector<std::tuple<std::string, std::string, json>> out;
    for (const auto& [key, props] : nodes_) out.emplace_back(key.first, key.second, props);
    return out;
}

std::vector<std::tuple<std::string, std::string, std::string, std::string>> GraphStore::all_edges()
    const {
    return {edges_.begin(), edges_.end()};
}

std::string GraphStore::fingerprint() const {
    std::string out;
    for (const auto& [key, props] : nodes_)
        out += "n " + key.first + "/" + key.second + "=" + props.dump() + "\n";
    for (const auto& [tenant, from, label, to] : edges_)
        out += "e " + tenant + "/" + from + "-[" + label + "]->" + to + "\n";
    return out;
}

// --- SpatioTemporalStore ------------------------------------------------------

Status SpatioTemporalStore::upsert(const std::string& tenant, SpatioTemporalPoint point) {
    if (point.x < -180.0 || point.x > 180.0 || point.y < -90.0 || point.y > 90.0)
        return Status::error(ErrorCode::InvalidBox,
                             "coordinates out of range for point '" + point.id + "'");
    points_[{tenant, point.id}] = std::move(point);
    return Status::ok();
}

bool SpatioTemporalStore::remove(const std::string& tenant, const std::string& id) {
    return points_.erase({tenant, id}) > 0;
}

Result<std::vector<SpatioTemporalPoint>> SpatioTemporalStore::range(const std::string& tenant,
                                                                    double x1, double y1, double x2,
                                                                    double y2, int64_t t1,
                                                                    int64_t t2) const {
    if (x1 > x2 || y1 > y2 || t1 > t2)
        return Result<std::vector<SpatioTemporalPoint>>(ErrorCode::InvalidBox,
                                                        "box/interval bounds are inverted");
    std::vector<SpatioTemporalPoint> out;
    for (const auto& [key, p] : points_) {
        if (key.first != tenant) continue;
        if (p.x >= x1 && p.x <= x2 && p.y >= y1 && p.y <= y2 && p.t >= t1 && p.t <= t2)
            out.push_back(p);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.t != b.t ? a.t < b.t : a.id < b.id;
    });
    return out;
}

std::vector<std::pair<std::string, SpatioTemporalPoint>> SpatioTemporalStore::all_points() const {
    std::vector<std::pair<std::string, SpatioTemporalPoint>> out;
    for (const auto& [key, p] : points_) out.emplace_back(key.first, p);
    return out;
}

std::string SpatioTemporalStore::fingerprint() const {
    std::string out;
    for (const auto& [key, p] : points_) {
        char buf[96];
        std::snprintf(buf, sizeof buf, " %.17g %.17g %lld ", p.x, p.y,
                      static_cast<long long>(p.t));
        out += key.first + "/" + key.second + buf + p.payload.dump() + "\n";
    }
    return out;
}

}  // namespace polystore
