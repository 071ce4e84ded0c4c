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

#include "polystore/query_cache.hpp"

namespace polystore {

QueryCache::QueryCache(size_t capacity) : capacity_(capacity ? capacity : 1) {}

std::optional<CacheEntry> QueryCache::lookup(const CacheKey& key) {
    std::unique_lock lock(mutex_);
    auto it = index_.find(key.composite());
    if (it == index_.end()) {
        ++misses_;
        lock.unlock();
        if (on_lookup) on_lookup(key, nullptr, false);
        return std::nullopt;
    }
    lru_.splice(lru_.begin(), lru_, it->second);  // refresh recency
    ++hits_;
    CacheEntry entry = it->second->entry;
    lock.unlock();
    if (on_lookup) on_lookup(key, &entry, true);
    return entry;
}

void QueryCache::insert(const CacheKey& key, CacheEntry entry) {
    std::lock_guard lock(mutex_);
    std::string composite = key.composite();
    auto it = index_.find(composite);
    if (it != index_.end()) {
        it->second->entry = std::move(entry);  // overwrite wins
        lru_.splice(lru_.begin(), lru_, it->second);
        return;
    }
    lru_.push_front(Slot{composite, key.entity, std::move(entry)});
    index_[composite] = lru_.begin();
    while (lru_.size() > capacity_) {
        index_.erase(lru_.back().composite);
        lru_.pop_back();
        ++evictions_;
    }
}

uint64_t QueryCache::invalidate(const std::string& entity) {
    std::lock_guard lock(mutex_);
    uint64_t evicted = 0;
    for (auto it = lru_.begin(); it != lru_.end();) {
        if (it->entity == entity) {
            index_.erase(it->composite);
            it = lru_.erase(it);
            ++evicted;
        } else {
            ++it;
        }
    }
    invalidations_ += evicted;
    return evicted;
}

CacheStats QueryCache::stats() const {
    std::lock_guard lock(mutex_);
    return CacheStats{hits_, misses_, evictions_, invalidations_, lru_.size(), capacity_};
}

size_t QueryCache::size() const {
    std::lock_guard lock(mutex_);
    return lru_.size();
}

}  // namespace polystore
