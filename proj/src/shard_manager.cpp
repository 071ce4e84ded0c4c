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

#include "polystore/shard_manager.hpp"

#include <algorithm>

namespace polystore {

uint64_t fnv1a64(std::string_view data) {
    uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char byte : data) {
        hash ^= byte;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

bool ShardMap::has(const ShardId& shard) const {
    return std::find(shards.begin(), shards.end(), shard) != shards.end();
}

Result<ShardId> shard_for_key(const ShardMap& map, const std::string& routing_key) {
    if (map.shards.empty()) return Result<ShardId>(ErrorCode::EmptyShardMap);
    const ShardId* best = nullptr;
    uint64_t best_score = 0;
    for (const auto& shard : map.shards) {
        uint64_t score = fnv1a64(shard + "|" + routing_key);
        if (!best || score > best_score || (score == best_score && shard < *best)) {
            best = &shard;
            best_score = score;
        }
    }
    return *best;
}

Result<ShardId> shard_for(const ShardMap& map, const std::string& tenant_id,
                          const std::string& primary_key) {
    return shard_for_key(map, routing_key(tenant_id, primary_key));
}

Result<std::pair<ShardMap, MigrationPlan>> add_shard(const ShardMap& map, const ShardId& new_shard,
                                                     const std::set<std::string>& keys) {
    using R = Result<std::pair<ShardMap, MigrationPlan>>;
    if (map.has(new_shard)) return R(ErrorCode::DuplicateShard, new_shard);

    ShardMap next = map;
    next.version = map.version + 1;
    next.shards.push_back(new_shard);
    next.members[new_shard] = ShardMembers{new_shard + "m", {}};
    next.replica_set_of[new_shard] = "rs_" + new_shard;

    MigrationPlan plan;
    for (const auto& key : keys) {
        auto before = shard_for_key(map, key);
        auto after = shard_for_key(next, key);
        if (!before || !after) continue;  // empty source map: nothing to move
        if (before.value() != after.value())
            plan.moves.push_back({key, before.value(), after.value()});
    }
    return std::make_pair(std::move(next), std::move(plan));
}

Result<std::pair<ShardMap, MigrationPlan>> remove_shard(const ShardMap& map, const ShardId& shard,
                                                        const std::set<std::string>& keys) {
    using R = Result<std::pair<ShardMap, MigrationPlan>>;
    if (!map.has(shard)) return R(ErrorCode::UnknownShard, shard);
    if (map.shards.size() < 2) return R(ErrorCode::LastShard, shard);

    ShardMap next = map;
    next.version = map.version + 1;
    next.shards.erase(std::remove(next.shards.begin(), next.shards.end(), shard),
                      next.shards.end());
    next.members.erase(shard);
    next.replica_set_of.erase(shard);

    MigrationPlan plan;
    for (const auto& key : keys) {
        auto before = shard_for_key(map, key);
        auto after = shard_for_key(next, key);
        if (before.value() != after.value())
            plan.moves.push_back({key, before.value(), after.value()});
    }
    return std::make_pair(std::move(next), std::move(plan));
}

}  // namespace polystore
