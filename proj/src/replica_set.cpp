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

#include "polystore/replica_set.hpp"

#include <algorithm>

namespace polystore {

void NosqlNode::grant_primary(uint64_t epoch) {
    primary_ = true;
    granted_epoch_ = epoch;
    fenced_ = false;
}

void NosqlNode::grant_secondary(uint64_t epoch) {
    primary_ = false;
    granted_epoch_ = epoch;
    fenced_ = false;
}

void NosqlNode::fence() {
    fenced_ = true;
    primary_ = false;
}

Result<uint64_t> NosqlNode::apply(const NoSqlOp& op, uint64_t epoch_claimed, uint64_t op_uid) {
    if (fenced_ || epoch_claimed != granted_epoch_)
        return Result<uint64_t>(ErrorCode::StaleEpoch,
                                "claimed epoch " + std::to_string(epoch_claimed) +
                                    ", node epoch " + std::to_string(granted_epoch_));
    if (!primary_)
        return Result<uint64_t>(ErrorCode::NotPrimary,
                                "current epoch " + std::to_string(granted_epoch_));

    if (const auto* doc = std::get_if<UpsertDoc>(&op)) {
        if (doc->source_lsn > 0 &&
            doc->source_lsn <= docs_.high_water_mark(doc->tenant, doc->collection))
            return applied_lsn();  // duplicate CDC delivery
    } else if (const auto* del = std::get_if<DeleteDoc>(&op)) {
        if (del->source_lsn > 0 &&
            del->source_lsn <= docs_.high_water_mark(del->tenant, del->collection))
            return applied_lsn();
    }

    apply_op(op);
    log_.push_back({log_.size() + 1, granted_epoch_, op_uid, op});
    return applied_lsn();
}

uint64_t NosqlNode::apply_stream(const std::vector<LoggedOp>& entries) {
    for (const auto& entry : entries) {
        if (entry.apply_lsn <= log_.size()) continue;
        if (entry.apply_lsn != log_.size() + 1) break;  // gap: wait for retransmit
        apply_op(entry.op);
        log_.push_back(entry);
    }
    return applied_lsn();
}

std::vector<NosqlNode::LoggedOp> NosqlNode::log_suffix(uint64_t from, uint64_t to) const {
    std::vector<LoggedOp> out;
    for (uint64_t lsn = from + 1; lsn <= to && lsn <= log_.size(); ++lsn)
        out.push_back(log_[lsn - 1]);
    return out;
}

void NosqlNode::clone_from(const NosqlNode& source) {
    docs_ = source.docs_;
    kv_ = source.kv_;
    graph_ = source.graph_;
    st_ = source.st_;
    log_ = source.log_;
}

void NosqlNode::reset() {
    docs_ = DocumentStore{};
    kv_ = KvStore{};
    graph_ = GraphStore{};
    st_ = SpatioTemporalStore{};
    log_.clear();
}

void NosqlNode::apply_op(const NoSqlOp& op) {
    std::visit(
        [this](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, UpsertDoc>) {
                docs_.upsert(o.tenant, o.collection, Document{o.doc_id, o.document, o.source_lsn});
                docs_.note_source_lsn(o.tenant, o.collection, o.source_lsn);
            } else if constexpr (std::is_same_v<T, DeleteDoc>) {
                docs_.remove(o.tenant, o.collection, o.doc_id);
                docs_.note_source_lsn(o.tenant, o.collection, o.source_lsn);
            } else if constexpr (std::is_same_v<T, UpsertEdge>) {
                graph_.upsert_edge(o.tenant, o.from, o.label, o.to);
            } else if constexpr (std::is_same_v<T, DeleteEdge>) {
                graph_.remove_edge(o.tenant, o.from, o.label, o.to);
            } else if constexpr (std::is_same_v<T, UpsertNode>) {
                graph_.upsert_node(o.tenant, o.node_id, o.properties);
            } else if constexpr (std::is_same_v<T, KvPut>) {
                kv_.put(o.tenant, o.key, o.value);
            } else if constexpr (std::is_same_v<T, KvDelete>) {
                kv_.remove(o.tenant, o.key);
            } else if constexpr (std::is_same_v<T, StUpsert>) {
                st_.upsert(o.tenant, o.point);  // range pre-validated at the router
            } else if constexpr (std::is_same_v<T, StDelete>) {
                st_.remove(o.tenant, o.id);
            }
        },
        op);
}

std::string NosqlNode::state_fingerprint() const {
    return docs_.fingerprint() + kv_.fingerprint() + graph_.fingerprint() + st_.fingerprint();
}

const char* member_state_name(MemberState s) {
    switch (s) {
        case MemberState::Healthy: return "healthy";
        case MemberState::Suspected: return "suspected";
        case MemberState::Down: return "down";
    }
    return "?";
}

bool ReplicaSet::has_member(const NodeId& node) const {
    return std::find(members.begin(), members.end(), node) != members.end();
}

std::vector<NodeId> ReplicaSet::secondaries() const {
    std::vector<NodeId> out;
    for (const auto& m : members)
        if (m != primary) out.push_back(m);
    return out;
}

std::vector<MemberTransition> heartbeat_tick(ReplicaSet& rs, uint64_t now, uint64_t timeout) {
    std::vector<MemberTransition> transitions;
    for (const auto& node : rs.members) {
        MemberState current = rs.state.count(node) ? rs.state[node] : MemberState::Healthy;
        if (current == MemberState::Down) continue;
        uint64_t last = rs.last_heartbeat.count(node) ? rs.last_heartbeat[node] : 0;
        MemberState next =
            (now > last && now - last > timeout) ? MemberState::Suspected : MemberState::Healthy;
        if (next != current) {
            transitions.push_back({node, current, next});
            rs.state[node] = next;
        }
    }
    return transitions;
}

Result<PromotionResult> promote(ReplicaSet& rs) {
    const NodeId* best = nullptr;
    uint64_t best_applied = 0;
    for (const auto& node : rs.members) {
        if (node == rs.primary) continue;
        auto state = rs.state.find(node);
        if (state == rs.state.end() || state->second != MemberState::Healthy) continue;
        uint64_t applied = rs.applied.count(node) ? rs.applied.at(node) : 0;
        if (!best || applied > best_applied || (applied == best_applied && node < *best)) {
            best = &node;
            best_applied = applied;
        }
    }
    if (!best) return Result<PromotionResult>(ErrorCode::NoEligibleSecondary, rs.id);

    PromotionResult result;
    result.old_primary = rs.primary;
    result.new_primary = *best;
    result.new_epoch = rs.epoch + 1;
    result.new_primary_applied = best_applied;
    rs.primary = *best;
    rs.epoch = result.new_epoch;
    return result;
}

CatchUpPlan catch_up_plan(uint64_t node_applied, uint64_t primary_applied, bool diverged) {
    if (diverged) return CatchUpPlan{0, primary_applied, true};
    return CatchUpPlan{node_applied, primary_applied, false};
}

bool log_diverged(const NosqlNode& node, const NosqlNode& primary) {
    const auto& mine = node.op_log();
    const auto& theirs = primary.op_log();
    if (mine.size() > theirs.size()) return true;
    for (size_t i = 0; i < mine.size(); ++i) {
        if (mine[i].op_uid != theirs[i].op_uid || mine[i].epoch != theirs[i].epoch) return true;
    }
    return false;
}

}  // namespace polystore
