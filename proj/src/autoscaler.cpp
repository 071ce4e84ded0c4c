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

#include "polystore/autoscaler.hpp"

namespace polystore {

std::string scaling_action_to_string(const ScalingAction& action) {
    switch (action.kind) {
        case ScalingAction::Kind::None: return "none";
        case ScalingAction::Kind::AddSecondary: return "add_secondary " + action.set;
        case ScalingAction::Kind::RemoveSecondary: return "remove_secondary " + action.set;
        case ScalingAction::Kind::AddShard: return "add_shard";
    }
    return "?";
}

std::vector<ScalingAction> evaluate(const Metrics& metrics, const ScalingPolicy& policy,
                                    uint64_t last_action_tick, uint64_t now,
                                    const std::map<ShardId, ReplicaSetId>& set_of_shard,
                                    size_t shard_count) {
    std::vector<ScalingAction> actions;
    if (!policy.valid()) return {ScalingAction{}};
    if (now < last_action_tick + policy.cooldown_ticks && last_action_tick > 0)
        return {ScalingAction{}};  // hysteresis window

    std::map<ReplicaSetId, uint64_t> set_lag;
    for (const auto& [shard, lag] : metrics.shard_lag_records) {
        auto it = set_of_shard.find(shard);
        if (it != set_of_shard.end()) set_lag[it->second] = lag;
    }

    for (const auto& [set, members] : metrics.set_members) {
        if (members.empty()) continue;
        double total = 0.0;
        for (const auto& node : members) {
            auto it = metrics.node_qps.find(node);
            if (it != metrics.node_qps.end()) total += it->second;
        }
        double avg = total / static_cast<double>(members.size());
        size_t secondaries = members.size() > 0 ? members.size() - 1 : 0;
        uint64_t lag = set_lag.count(set) ? set_lag.at(set) : 0;

        if ((avg > policy.qps_high || lag > policy.lag_high) &&
            secondaries < policy.max_secondaries) {
            actions.push_back({ScalingAction::Kind::AddSecondary, set});
        } else if (avg < policy.qps_low && secondaries > policy.min_secondaries) {
            actions.push_back({ScalingAction::Kind::RemoveSecondary, set});
        }
    }

    double master_total = 0.0;
    for (const auto& [shard, qps] : metrics.master_qps) {
        (void)shard;
        master_total += qps;
    }
    if (master_total > policy.qps_high && shard_count < policy.max_shards)
        actions.push_back({ScalingAction::Kind::AddShard, ""});

    if (actions.empty()) actions.push_back(ScalingAction{});
    return actions;
}

}  // namespace polystore
