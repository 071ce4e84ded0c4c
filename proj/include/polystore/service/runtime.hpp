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

#include <atomic>
#include <memory>
#include <mutex>
#include <thread>

#include "polystore/cluster.hpp"
#include "polystore/service/config.hpp"
#include "polystore/service/wire.hpp"

namespace polystore {

// In-process deployment behind the wire protocol. One runtime per server:
// concurrent sessions funnel through handle(); a background ticker drives
// heartbeats, CDC, log shipping, op streaming and autoscaling.
class ServiceRuntime {
  public:
    explicit ServiceRuntime(ServiceSettings settings);
    ~ServiceRuntime();

    // Dispatches one request message; always produces a response carrying
    // the same id (unknown verbs answer UNKNOWN_VERB).
    json handle(const WireMessage& msg);
    json handle_line(const std::string& line);

    void start_ticker();
    void stop_ticker();
    // One synchronous round of the periodic machinery (also what the ticker
    // runs); tests drive it directly.
    void tick();

    Cluster& cluster() { return *cluster_; }
    const ServiceSettings& settings() const { return settings_; }

  private:
    json verb_schema_apply(const json& body);
    json verb_txn_begin(const json& body);
    json verb_txn_exec(const json& body);
    json verb_txn_commit(const json& body);
    json verb_txn_abort(const json& body);
    json verb_query(const json& body);
    json verb_kv(const std::string& verb, const json& body);
    json verb_graph(const std::string& verb, const json& body);
    json verb_st(const std::string& verb, const json& body);
    json verb_doc(const std::string& verb, const json& body);
    json verb_admin(const std::string& verb, const json& body);

    Result<Statement> statement_from_json(const json& j) const;
    Result<Predicate> predicate_for_entity(const std::string& entity, const json& j) const;

    ServiceSettings settings_;
    std::unique_ptr<Cluster> cluster_;
    std::mutex mutex_;

    std::thread ticker_;
    std::atomic<bool> ticker_running_{false};
    uint64_t ticks_ = 0;
};

}  // namespace polystore
