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
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "polystore/result.hpp"

namespace polystore {

using ShardId = std::string;
using NodeId = std::string;
using ReplicaSetId = std::string;

// FNV-1a 64-bit: offset basis 0xcbf29ce484222325, prime 0x100000001b3.
uint64_t fnv1a64(std::string_view data);

struct ShardMembers {
    NodeId master;
    std::vector<NodeId> slaves;
};

struct ShardMap {
    uint64_t version = 0;
    std::vector<ShardId> shards;
    std::map<ShardId, ShardMembers> members;
    std::map<ShardId, ReplicaSetId> replica_set_of;

    bool has(const ShardId& shard) const;
};

struct Move {
    std::string routing_key;
    ShardId from_shard;
    ShardId to_shard;
};

struct MigrationPlan {
    std::vector<Move> moves;
};

inline std::string routing_key(const std::string& tenant_id, const std::string& primary_key) {
    return tenant_id + ":" + primary_key;
}

// Rendezvous (highest-random-weight) choice over the map's shards:
// score(s) = fnv1a64(shard_id ++ "|" ++ routing_key), ties broken by the
// lexicographically smallest shard id. Pure and deterministic.
Result<ShardId> shard_for(const ShardMap& map, const std::string& tenant_id,
                          const std::string& primary_key);

Result<ShardId> shard_for_key(const ShardMap& map, const std::string& routing_key);

// Appends a shard (members default to "<shard>m" master, no slaves, replica
// set "rs_<shard>") and computes which of the given keys move. Rendezvous
// guarantees every move targets the new shard.
Result<std::pair<ShardMap, MigrationPlan>> add_shard(const ShardMap& map, const ShardId& new_shard,
                                                     const std::set<std::string>& keys);

// Removes a shard; only keys previously owned by it appear in the plan.
Result<std::pair<ShardMap, MigrationPlan>> remove_shard(const ShardMap& map, const ShardId& shard,
                                                        const std::set<std::string>& keys);

}  // namespace polystore
