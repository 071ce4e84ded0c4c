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

#include "polystore/result.hpp"

namespace polystore {

// One scripted line: `<tick> <command> <args...>`. key=value args land in
// `kv`, bare words in `args`.
struct ScenarioCommand {
    uint64_t at = 0;
    std::string command;
    std::vector<std::string> args;
    std::map<std::string, std::string> kv;

    std::string kv_or(const std::string& key, const std::string& fallback) const {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    }
};

struct Scenario {
    uint64_t seed = 1;
    std::vector<ScenarioCommand> commands;  // sorted by (at, file order)
    uint64_t end_tick = 0;                  // 0: derived from the last command
};

// Line-oriented text, comments with '#'. Commands:
//   setup shards=N secondaries=M slaves=K cdc_batch=B
//   workload oltp <entity> rate=R mix=I/U/D [tenant=T] [keys=N]
//   workload olap <entity> rate=R [stale=PCT] [tenant=T]
//   stop_workload [oltp|olap|all]
//   crash <node>|primary:<set>|master:<shard>
//   recover <node>
//   partition a,b|c,d     (unlisted nodes stay reachable to everyone)
//   heal
//   crash_pipeline <shard> [point=after_apply|now]
//   recover_pipeline <shard>
//   add_shard
//   assert <name>
//   end
Result<Scenario> parse_scenario(const std::string& text);
Result<Scenario> load_scenario(const std::string& path);

}  // namespace polystore
