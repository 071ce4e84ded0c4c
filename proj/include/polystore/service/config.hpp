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

#include "polystore/cluster.hpp"
#include "polystore/result.hpp"

namespace polystore {

// key = value lines with [section] headers; a key inside [cache] becomes
// "cache.<key>". '#' starts a comment.
class Config {
  public:
    static Result<Config> parse(const std::string& text);
    static Result<Config> load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback = {}) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

struct ServiceSettings {
    std::string listen_host = "127.0.0.1";
    uint16_t listen_port = 7171;
    std::string data_dir = "polystore-data";
    uint64_t tick_ms = 5;
    ClusterOptions cluster;
    std::map<std::string, TenantConfig> tenants;
};

// Documented keys (defaults in parentheses):
//   durability (relaxed), data_dir (polystore-data), listen (127.0.0.1:7171)
//   [cluster] shards (2), secondaries (2), slaves (1)
//   [cache] capacity (1024)
//   [cdc] batch (64)
//   [heartbeat] interval_ticks (100), timeout_ticks (500)
//   [autoscale] enabled (0), qps_high (100), qps_low (10), lag_high (1000),
//               cooldown_ticks (50), min_secondaries (1), max_secondaries (5),
//               max_shards (8), interval_ticks (100)
//   [tenants] <id>.premise_endpoint, <id>.override.<entity> = tenant_premise
Result<ServiceSettings> service_settings_from(const Config& config);

}  // namespace polystore
