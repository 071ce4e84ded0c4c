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

#include "polystore/service/config.hpp"

#include <fstream>
#include <sstream>

namespace polystore {

namespace {

std::string trim(const std::string& s) {
    size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

Result<Config> Config::parse(const std::string& text) {
    Config config;
    std::istringstream in(text);
    std::string line, section;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                return Result<Config>(ErrorCode::ConfigError,
                                      "line " + std::to_string(line_no) + ": unclosed section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            return Result<Config>(ErrorCode::ConfigError,
                                  "line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            return Result<Config>(ErrorCode::ConfigError,
                                  "line " + std::to_string(line_no) + ": empty key");
        config.values_[section.empty() ? key : section + "." + key] = value;
    }
    return config;
}

Result<Config> Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) return Result<Config>(ErrorCode::IoError, "cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

uint64_t Config::get_u64(const std::string& key, uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return std::stoull(it->second);
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return std::stod(it->second);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return it->second == "1" || it->second == "true" || it->second == "yes";
}

Result<ServiceSettings> service_settings_from(const Config& config) {
    ServiceSettings s;

    std::string listen = config.get("listen", "127.0.0.1:7171");
    auto colon = listen.rfind(':');
    if (colon == std::string::npos)
        return Result<ServiceSettings>(ErrorCode::ConfigError, "listen must be host:port");
    s.listen_host = listen.substr(0, colon);
    s.listen_port = static_cast<uint16_t>(std::stoul(listen.substr(colon + 1)));
    s.data_dir = config.get("data_dir", "polystore-data");
    s.tick_ms = config.get_u64("tick_ms", 5);

    std::string durability = config.get("durability", "relaxed");
    if (durability == "strict") s.cluster.durability = Durability::Strict;
    else if (durability == "relaxed") s.cluster.durability = Durability::Relaxed;
    else return Result<ServiceSettings>(ErrorCode::ConfigError, "durability: strict|relaxed");

    s.cluster.data_dir = s.data_dir;
    s.cluster.shards = config.get_u64("cluster.shards", 2);
    s.cluster.secondaries_per_set = config.get_u64("cluster.secondaries", 2);
    s.cluster.slaves_per_shard = config.get_u64("cluster.slaves", 1);
    s.cluster.cache_capacity = config.get_u64("cache.capacity", 1024);
    s.cluster.cdc_batch = config.get_u64("cdc.batch", 64);
    s.cluster.heartbeat_interval = config.get_u64("heartbeat.interval_ticks", 100);
    s.cluster.heartbeat_timeout = config.get_u64("heartbeat.timeout_ticks", 500);
    s.cluster.autoscale_enabled = config.get_bool("autoscale.enabled", false);
    s.cluster.autoscale_interval = config.get_u64("autoscale.interval_ticks", 100);
    s.cluster.autoscale.qps_high = config.get_double("autoscale.qps_high", 100.0);
    s.cluster.autoscale.qps_low = config.get_double("autoscale.qps_low", 10.0);
    s.cluster.autoscale.lag_high = config.get_u64("autoscale.lag_high", 1000);
    s.cluster.autoscale.cooldown_ticks = config.get_u64("autoscale.cooldown_ticks", 50);
    s.cluster.autoscale.min_secondaries = config.get_u64("autoscale.min_secondaries", 1);
    s.cluster.autoscale.max_secondaries = config.get_u64("autoscale.max_secondaries", 5);
    s.cluster.autoscale.max_shards = config.get_u64("autoscale.max_shards", 8);
    if (!s.cluster.autoscale.valid())
        return Result<ServiceSettings>(ErrorCode::ConfigError, "autoscale thresholds inconsistent");

    // [tenants] acme.premise_endpoint = host:port
    //           acme.override.orders = tenant_premise
    for (const auto& [key, value] : config.values()) {
        if (key.rfind("tenants.", 0) != 0) continue;
        std::string rest = key.substr(8);
        auto dot = rest.find('.');
        if (dot == std::string::npos)
            return Result<ServiceSettings>(ErrorCode::ConfigError, "bad tenant key " + key);
        std::string tenant_id = rest.substr(0, dot);
        std::string field = rest.substr(dot + 1);
        TenantConfig& tenant = s.tenants[tenant_id];
        tenant.tenant_id = tenant_id;
        if (field == "premise_endpoint") {
            tenant.premise_endpoint = value;
        } else if (field.rfind("override.", 0) == 0) {
            std::string entity = field.substr(9);
            if (value == "tenant_premise")
                tenant.placement_overrides[entity] = Placement::TenantPremise;
            else if (value == "public_cloud")
                tenant.placement_overrides[entity] = Placement::PublicCloud;
            else
                return Result<ServiceSettings>(ErrorCode::ConfigError,
                                               "bad placement '" + value + "'");
        } else {
            return Result<ServiceSettings>(ErrorCode::ConfigError, "unknown tenant key " + key);
        }
    }
    return s;
}

}  // namespace polystore
