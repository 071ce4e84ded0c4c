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

#include "polystore/shard_manager.hpp"

namespace polystore {

// Window-averaged cluster metrics, all values >= 0.
struct Metrics {
    std::map<NodeId, double> node_qps;                      // per replica-set member
    std::map<ReplicaSetId, std::vector<NodeId>> set_members;
    std::map<ShardId, uint64_t> shard_lag_records;
    std::map<ShardId, double> master_qps;
    double cache_hit_rate = 0.0;  // in [0, 1]
};

struct ScalingPolicy {
    double qps_high = 100.0;
    double qps_low = 10.0;
    uint64_t lag_high = 1000;
    uint64_t cooldown_ticks = 50;
    size_t min_secondaries = 1;
    size_t max_secondaries = 5;
    size_t max_shards = 8;

    bool valid() const { return qps_low < qps_high && min_secondaries <= max_secondaries; }
};

struct ScalingAction {
    enum class Kind { None, AddSecondary, RemoveSecondary, AddShard };
    Kind kind = Kind::None;
    ReplicaSetId set;  // AddSecondary/RemoveSecondary

    friend bool operator==(const ScalingAction& a, const ScalingAction& b) {
        return a.kind == b.kind && a.set == b.set;
    }
};

std::string scaling_action_to_string(const ScalingAction& action);

// Pure threshold policy with hysteresis: per set, average member qps above
// qps_high or shard lag above lag_high adds a secondary (below the max);
// a window averaging under qps_low removes one (above the min); aggregate
// master qps above qps_high adds a shard (below the max). Nothing fires
// within cooldown_ticks of the last action.
std::vector<ScalingAction> evaluate(const Metrics& metrics, const ScalingPolicy& policy,
                                    uint64_t last_action_tick, uint64_t now,
                                    const std::map<ShardId, ReplicaSetId>& set_of_shard,
                                    size_t shard_count);

}  // namespace polystore
