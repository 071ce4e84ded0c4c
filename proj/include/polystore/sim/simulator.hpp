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
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "polystore/cluster.hpp"
#include "polystore/sim/rng.hpp"
#include "polystore/sim/scenario.hpp"

namespace polystore {

struct AssertionResult {
    std::string name;
    bool pass = false;
    std::string detail;
    int64_t first_violation = -1;  // trace line index, -1 when passing
};

struct SimReport {
    std::vector<std::string> trace;
    std::vector<AssertionResult> assertions;

    bool all_passed() const {
        for (const auto& a : assertions)
            if (!a.pass) return false;
        return true;
    }
};

struct SimConfig {
    uint64_t max_delay = 3;    // message delay drawn from [1, max_delay]
    double drop_rate = 0.0;    // per-message drop probability
    uint64_t cdc_interval = 10;
    uint64_t ship_interval = 5;
    uint64_t stream_interval = 5;
    uint64_t drain_rounds = 10000;
    ClusterOptions cluster;
};

// Deterministic discrete-event simulation of the whole deployment: logical
// clock, delayed/dropped messages, fault injection, scripted scenarios and
// invariant checks over the produced trace. Events are processed in
// (tick, insertion sequence) order; all randomness comes from the seed.
class Simulator {
  public:
    Simulator(SimConfig config, uint64_t seed);
    ~Simulator();

    // Scripted run: schedules the scenario commands, runs to the end tick,
    // drains replication, evaluates the requested assertions.
    SimReport run(const Scenario& scenario);

    Cluster& cluster() { return *cluster_; }
    uint64_t now() const { return now_; }
    const std::vector<std::string>& trace() const { return trace_; }

    // Direct fault injection (also used by tests between run phases).
    Status inject_crash(const NodeId& node);
    Status inject_recover(const NodeId& node);
    Status inject_partition(const std::vector<std::set<NodeId>>& groups);
    void inject_heal();

    // Drives replication to quiescence under the current fault pattern.
    void drain();

  private:
    struct HeartbeatMsg { NodeId node; uint64_t applied = 0; };
    struct ShipMsg { NodeId to; std::vector<LogRecord> records; };
    struct StreamMsg { NodeId to; std::vector<NosqlNode::LoggedOp> entries; };
    using Message = std::variant<HeartbeatMsg, ShipMsg, StreamMsg>;

    struct OltpWorkload {
        std::string entity;
        std::string tenant = "t1";
        uint64_t interval = 2;
        int insert_pct = 70, update_pct = 20;
        uint64_t key_space = 200;
        SplitMix64 rng{0};
        std::vector<int64_t> live_keys;
        int64_t next_key = 1;
        bool active = true;
    };
    struct OlapWorkload {
        std::string entity;
        std::string tenant = "t1";
        uint64_t interval = 10;
        int stale_pct = 80;
        SplitMix64 rng{0};
        bool active = true;
    };

    enum class TickKind { Heartbeat, Detector, Cdc, Ship, Stream, Autoscale };

    struct Event {
        uint64_t at = 0;
        uint64_t seq = 0;
        // exactly one of these is meaningful, selected by kind
        enum class Kind { Deliver, Command, Tick, OltpGen, OlapGen } kind = Kind::Tick;
        std::optional<Message> message;
        std::optional<ScenarioCommand> command;
        TickKind tick = TickKind::Heartbeat;
        size_t workload = 0;

        struct Order {
            bool operator()(const Event& a, const Event& b) const {
                return a.at != b.at ? a.at > b.at : a.seq > b.seq;
            }
        };
    };

    void schedule(Event ev, uint64_t at);
    void schedule_message(Message msg, const NodeId& to);
    void process(const Event& ev);
    void process_command(const ScenarioCommand& cmd);
    void process_tick(TickKind kind);
    void deliver(const Message& msg);
    void run_oltp(size_t index);
    void run_olap(size_t index);
    NodeId resolve_node(const std::string& spec) const;
    bool alive(const NodeId& node) const { return crashed_.count(node) == 0; }
    bool reachable(const NodeId& a, const NodeId& b) const;
    void trace_line(const std::string& line);
    void setup_cluster(const ScenarioCommand* setup);
    void default_schema();

    SimConfig config_;
    uint64_t seed_;
    SplitMix64 rng_;
    std::unique_ptr<Cluster> cluster_;

    std::priority_queue<Event, std::vector<Event>, Event::Order> queue_;
    uint64_t next_seq_ = 0;
    uint64_t now_ = 0;
    uint64_t end_tick_ = 0;

    std::set<NodeId> crashed_;
    std::vector<std::set<NodeId>> partition_;
    std::vector<OltpWorkload> oltp_;
    std::vector<OlapWorkload> olap_;
    std::vector<std::string> requested_assertions_;
    std::vector<std::string> trace_;
    bool cluster_ready_ = false;
};

// Global invariant suite over a finished run: single primary per epoch,
// epoch/checkpoint monotonicity, gapless lsns, replication convergence at
// quiescence (with bounded-loss attribution when promotions happened), cache
// staleness, bounded loss, member convergence, routing determinism.
std::vector<AssertionResult> check_invariants(Cluster& cluster,
                                              const std::vector<std::string>& trace,
                                              const std::vector<std::string>& requested);

}  // namespace polystore
