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
#include <functional>
#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "polystore/value.hpp"

namespace polystore {

struct CacheKey {
    std::string tenant_id;
    std::string entity;
    std::string canonical_query;  // canonical predicate + query shape
    std::string engine;

    std::string composite() const {
        return tenant_id + "\x1f" + entity + "\x1f" + canonical_query + "\x1f" + engine;
    }
};

struct CacheEntry {
    std::vector<json> rows;
    uint64_t as_of_lsn = 0;    // serving member's applied lsn at read time
    uint64_t inserted_at = 0;  // logical time supplied by the caller
};

struct CacheStats {
    uint64_t hits = 0;
    uint64_t misses = 0;
    uint64_t evictions = 0;
    uint64_t invalidations = 0;
    size_t size = 0;
    size_t capacity = 0;
};

// LRU cache of recent OLAP results, invalidated entity-wide on replication
// applies. Lookups refresh recency; inserting over capacity evicts the least
// recently used entry.
class QueryCache {
  public:
    explicit QueryCache(size_t capacity = 1024);

    std::optional<CacheEntry> lookup(const CacheKey& key);
    void insert(const CacheKey& key, CacheEntry entry);
    // Removes every cached result for the entity, across all tenants.
    uint64_t invalidate(const std::string& entity);

    CacheStats stats() const;
    size_t size() const;

    // Observation hook for tracing: fired on every lookup (hit or miss).
    std::function<void(const CacheKey&, const CacheEntry*, bool hit)> on_lookup;

  private:
    struct Slot {
        std::string composite;
        std::string entity;
        CacheEntry entry;
    };

    size_t capacity_;
    std::list<Slot> lru_;  // front = most recent
    std::map<std::string, std::list<Slot>::iterator> index_;
    mutable std::mutex mutex_;
    uint64_t hits_ = 0, misses_ = 0, evictions_ = 0, invalidations_ = 0;
};

}  // namespace polystore
