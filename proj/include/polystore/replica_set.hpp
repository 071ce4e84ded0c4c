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
#include <string>
#include <vector>

#include "polystore/nosql_engines.hpp"
#include "polystore/shard_manager.hpp"

namespace polystore {

// One member of a replica set: the four embedded engines plus an ordered op
// log that secondaries replay verbatim. Writes are fenced by epoch.
class NosqlNode {
  public:
    struct LoggedOp {
        uint64_t apply_lsn = 0;
        uint64_t epoch = 0;
        uint64_t op_uid = 0;  // deployment-wide unique id, for loss attribution
        NoSqlOp op;
    };

    explicit NosqlNode(NodeId id) : id_(std::move(id)) {}

    const NodeId& id() const { return id_; }
    bool is_primary() const { return primary_; }
    uint64_t granted_epoch() const { return granted_epoch_; }
    bool fenced() const { return fenced_; }
    uint64_t applied_lsn() const { return log_.size(); }
    const std::vector<LoggedOp>& op_log() const { return log_; }

    // Membership grants, issued by the single membership authority.
    void grant_primary(uint64_t epoch);
    void grant_secondary(uint64_t epoch);
    void fence();

    // Primary-side apply: rejects stale epochs and non-primaries, dedupes
    // CDC ops against the per-collection source-lsn high-water mark, applies
    // the mutation, appends to the op log. Returns the set-local apply lsn.
    Result<uint64_t> apply(const NoSqlOp& op, uint64_t epoch_claimed, uint64_t op_uid);

    // Secondary-side apply of streamed entries; entries already applied are
    // ignored, a gap stops the batch (retransmitted later). Returns applied_lsn.
    uint64_t apply_stream(const std::vector<LoggedOp>& entries);

    // Entries with apply_lsn in (from, to]; used for streaming and rejoin.
    std::vector<LoggedOp> log_suffix(uint64_t from, uint64_t to) const;

    // Wholesale state adoption (rejoin after divergence).
    void clone_from(const NosqlNode& source);
    // Drops state back to empty (new node bootstrap).
    void reset();

    // CDC idempotence floor for an entity's collection on this node.
    uint64_t doc_high_water_mark(const std::string& tenant, const std::string& collection) const {
        return docs_.high_water_mark(tenant, collection);
    }

    const DocumentStore& docs() const { return docs_; }
    const KvStore& kv() const { return kv_; }
    const GraphStore& graph() const { return graph_; }
    const SpatioTemporalStore& st() const { return st_; }

    std::string state_fingerprint() const;

  private:
    void apply_op(const NoSqlOp& op);

    NodeId id_;
    bool primary_ = false;
    uint64_t granted_epoch_ = 0;
    bool fenced_ = false;

    DocumentStore docs_;
    KvStore kv_;
    GraphStore graph_;
    SpatioTemporalStore st_;
    std::vector<LoggedOp> log_;
};

enum class MemberState { Healthy, Suspected, Down };

const char* member_state_name(MemberState s);

// Control-plane view of one replica set, owned by the membership authority.
struct ReplicaSet {
    ReplicaSetId id;
    std::vector<NodeId> members;
    NodeId primary;
    uint64_t epoch = 1;
    std::map<NodeId, MemberState> state;
    std::map<NodeId, uint64_t> applied;         // last reported applied_lsn
    std::map<NodeId, uint64_t> last_heartbeat;  // tick of last heartbeat seen

    bool has_member(const NodeId& node) const;
    std::vector<NodeId> secondaries() const;
};

struct MemberTransition {
    NodeId node;
    MemberState from;
    MemberState to;
};

// Marks members silent for longer than `timeout` ticks Suspected and
// refreshes recovered ones back to Healthy. Down members stay Down (only an
// explicit rejoin revives them).
std::vector<MemberTransition> heartbeat_tick(ReplicaSet& rs, uint64_t now, uint64_t timeout);

struct PromotionResult {
    NodeId old_primary;
    NodeId new_primary;
    uint64_t new_epoch = 0;
    uint64_t new_primary_applied = 0;
};

// Precondition: the current primary is Suspected or Down. Picks the Healthy
// secondary with maximal applied lsn (ties: lexicographically smallest id),
// bumps the epoch. The caller fences the old primary and grants the new one.
Result<PromotionResult> promote(ReplicaSet& rs);

struct CatchUpPlan {
    uint64_t from_lsn = 0;  // exclusive
    uint64_t to_lsn = 0;    // inclusive
    bool full_resync = false;

    bool empty() const { return !full_resync && from_lsn >= to_lsn; }
};

// Plan for a rejoining node: incremental (node_applied, primary_applied] when
// the node's log is a prefix of the primary's history, full resync when it
// diverged under a fenced epoch.
CatchUpPlan catch_up_plan(uint64_t node_applied, uint64_t primary_applied, bool diverged);

// True when `node`'s log is not a prefix of `primary`'s (fenced-epoch suffix).
bool log_diverged(const NosqlNode& node, const NosqlNode& primary);

}  // namespace polystore
