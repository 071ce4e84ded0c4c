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

#include "polystore/sim/simulator.hpp"

#include <algorithm>
#include <sstream>

namespace polystore {

Simulator::Simulator(SimConfig config, uint64_t seed)
    : config_(std::move(config)), seed_(seed), rng_(seed) {}

Simulator::~Simulator() = default;

void Simulator::trace_line(const std::string& line) {
    trace_.push_back("t=" + std::to_string(now_) + " " + line);
}

bool Simulator::reachable(const NodeId& a, const NodeId& b) const {
    if (partition_.empty() || a == b) return true;
    int group_a = -1, group_b = -1;
    for (size_t i = 0; i < partition_.size(); ++i) {
        if (partition_[i].count(a)) group_a = static_cast<int>(i);
        if (partition_[i].count(b)) group_b = static_cast<int>(i);
    }
    // Unlisted nodes stay reachable to everyone.
    if (group_a < 0 || group_b < 0) return true;
    return group_a == group_b;
}

void Simulator::setup_cluster(const ScenarioCommand* setup) {
    ClusterOptions opts = config_.cluster;
    if (setup) {
        opts.shards = std::stoul(setup->kv_or("shards", std::to_string(opts.shards)));
        opts.secondaries_per_set =
            std::stoul(setup->kv_or("secondaries", std::to_string(opts.secondaries_per_set)));
        opts.slaves_per_shard =
            std::stoul(setup->kv_or("slaves", std::to_string(opts.slaves_per_shard)));
        opts.cdc_batch = std::stoull(setup->kv_or("cdc_batch", std::to_string(opts.cdc_batch)));
        opts.autoscale_enabled = setup->kv_or("autoscale", opts.autoscale_enabled ? "1" : "0") == "1";
    }
    ClusterHooks hooks;
    hooks.alive = [this](const NodeId& n) { return alive(n); };
    hooks.reachable = [this](const NodeId& a, const NodeId& b) { return reachable(a, b); };
    hooks.trace = [this](const std::string& line) { trace_line(line); };
    cluster_ = std::make_unique<Cluster>(opts, hooks);
    default_schema();
    cluster_ready_ = true;
}

void Simulator::default_schema() {
    // A small polyglot catalog the scripted workloads draw from.
    EntitySchema social;
    social.entity = "social";
    social.data_class = DataClass::unstructured(UnstructuredVariant::Graph);
    cluster_->apply_schema(social);

    EntitySchema orders;
    orders.entity = "orders";
    orders.data_class = DataClass::structured();
    orders.fields = {{"order_id", ScalarKind::Int64, false},
                     {"amount", ScalarKind::Decimal, false},
                     {"note", ScalarKind::Text, true}};
    orders.primary_key = {"order_id"};
    orders.acid_required = true;
    cluster_->apply_schema(orders);

    EntitySchema customers;
    customers.entity = "customers";
    customers.data_class = DataClass::structured();
    customers.fields = {{"customer_id", ScalarKind::Int64, false},
                        {"name", ScalarKind::Text, false}};
    customers.primary_key = {"customer_id"};
    Relationship rel;
    rel.name = "knows";
    rel.from_entity = "customers";
    rel.to_entity = "social";
    rel.cardinality = Cardinality::OneToMany;
    rel.key_fields = {"customer_id"};
    customers.relationships = {rel};
    cluster_->apply_schema(customers);

    EntitySchema profiles;
    profiles.entity = "profiles";
    profiles.data_class = DataClass::semi_structured();
    cluster_->apply_schema(profiles);

    EntitySchema blobs;
    blobs.entity = "blobs";
    blobs.data_class = DataClass::unstructured(UnstructuredVariant::KeyValue);
    cluster_->apply_schema(blobs);

    EntitySchema tracks;
    tracks.entity = "tracks";
    tracks.data_class = DataClass::unstructured(UnstructuredVariant::SpatialTemporal);
    cluster_->apply_schema(tracks);
}

void Simulator::schedule(Event ev, uint64_t at) {
    ev.at = at;
    ev.seq = next_seq_++;
    queue_.push(std::move(ev));
}

void Simulator::schedule_message(Message msg, const NodeId&) {
    if (config_.drop_rate > 0.0 && rng_.unit() < config_.drop_rate) {
        trace_line("drop reason=lossy_link");
        return;
    }
    Event ev;
    ev.kind = Event::Kind::Deliver;
    ev.message = std::move(msg);
    schedule(std::move(ev), now_ + rng_.range(1, std::max<uint64_t>(1, config_.max_delay)));
}

NodeId Simulator::resolve_node(const std::string& spec) const {
    if (spec.rfind("primary:", 0) == 0) {
        const ReplicaSet* rs = cluster_->replica_set(spec.substr(8));
        return rs ? rs->primary : spec;
    }
    if (spec.rfind("master:", 0) == 0) {
        const auto& map = cluster_->shard_map();
        auto it = map.members.find(spec.substr(7));
        return it != map.members.end() ? it->second.master : spec;
    }
    return spec;
}

Status Simulator::inject_crash(const NodeId& node) {
    crashed_.insert(node);
    trace_line("crash node=" + node);
    if (cluster_->nosql_node(node)) cluster_->mark_down(node, now_);
    return Status::ok();
}

Status Simulator::inject_recover(const NodeId& node) {
    crashed_.erase(node);
    trace_line("recover node=" + node);
    if (cluster_->nosql_node(node)) {
        auto s = cluster_->rejoin_node(node, now_);
        if (!s) trace_line("rejoin_failed node=" + node + " " + s.to_string());
    }
    return Status::ok();
}

Status Simulator::inject_partition(const std::vector<std::set<NodeId>>& groups) {
    partition_ = groups;
    std::string desc;
    for (size_t i = 0; i < groups.size(); ++i) {
        if (i) desc += '|';
        bool first = true;
        for (const auto& n : groups[i]) {
            if (!first) desc += ',';
            first = false;
            desc += n;
        }
    }
    trace_line("partition groups=" + desc);
    return Status::ok();
}

void Simulator::inject_heal() {
    partition_.clear();
    trace_line("heal");
}

void Simulator::process_command(const ScenarioCommand& cmd) {
    if (cmd.command == "workload") {
        if (cmd.args.size() < 2) return;
        const std::string& kind = cmd.args[0];
        if (kind == "oltp") {
            OltpWorkload w;
            w.entity = cmd.args[1];
            w.tenant = cmd.kv_or("tenant", "t1");
            uint64_t rate = std::stoull(cmd.kv_or("rate", "50"));
            w.interval = std::max<uint64_t>(1, 100 / std::max<uint64_t>(1, rate));
            std::string mix = cmd.kv_or("mix", "70/20/10");
            std::sscanf(mix.c_str(), "%d/%d", &w.insert_pct, &w.update_pct);
            w.key_space = std::stoull(cmd.kv_or("keys", "200"));
            w.rng = rng_.fork(1000 + oltp_.size());
            oltp_.push_back(std::move(w));
            trace_line("workload_start kind=oltp entity=" + cmd.args[1]);
            Event ev;
            ev.kind = Event::Kind::OltpGen;
            ev.workload = oltp_.size() - 1;
            schedule(std::move(ev), now_ + 1);
        } else if (kind == "olap") {
            OlapWorkload w;
            w.entity = cmd.args[1];
            w.tenant = cmd.kv_or("tenant", "t1");
            uint64_t rate = std::stoull(cmd.kv_or("rate", "10"));
            w.interval = std::max<uint64_t>(1, 100 / std::max<uint64_t>(1, rate));
            w.stale_pct = std::stoi(cmd.kv_or("stale", "80"));
            w.rng = rng_.fork(2000 + olap_.size());
            olap_.push_back(std::move(w));
            trace_line("workload_start kind=olap entity=" + cmd.args[1]);
            Event ev;
            ev.kind = Event::Kind::OlapGen;
            ev.workload = olap_.size() - 1;
            schedule(std::move(ev), now_ + 1);
        }
        return;
    }
    if (cmd.command == "stop_workload") {
        std::string which = cmd.args.empty() ? "all" : cmd.args[0];
        if (which == "oltp" || which == "all")
            for (auto& w : oltp_) w.active = false;
        if (which == "olap" || which == "all")
            for (auto& w : olap_) w.active = false;
        trace_line("workload_stop which=" + which);
        return;
    }
    if (cmd.command == "crash") {
        if (!cmd.args.empty()) inject_crash(resolve_node(cmd.args[0]));
        return;
    }
    if (cmd.command == "recover") {
        if (!cmd.args.empty()) inject_recover(resolve_node(cmd.args[0]));
        return;
    }
    if (cmd.command == "partition") {
        if (cmd.args.empty()) return;
        std::vector<std::set<NodeId>> groups;
        std::istringstream in(cmd.args[0]);
        std::string group;
        while (std::getline(in, group, '|')) {
            std::set<NodeId> nodes;
            std::istringstream gs(group);
            std::string node;
            while (std::getline(gs, node, ',')) nodes.insert(resolve_node(node));
            groups.push_back(std::move(nodes));
        }
        inject_partition(groups);
        return;
    }
    if (cmd.command == "heal") {
        inject_heal();
        return;
    }
    if (cmd.command == "crash_pipeline") {
        if (cmd.args.empty()) return;
        const std::string shard = cmd.args[0];
        std::string point = cmd.kv_or("point", "after_apply");
        if (point == "now") {
            cluster_->crash_pipeline(shard);
            cluster_->pause_pipeline(shard, true);
        } else {
            CdcPipeline* p = cluster_->pipeline(shard);
            if (p) {
                Cluster* cluster = cluster_.get();
                p->after_apply_hook = [cluster, p, shard]() {
                    p->after_apply_hook = nullptr;  // one-shot
                    cluster->pause_pipeline(shard, true);
                    return false;
                };
            }
        }
        trace_line("pipeline_fault shard=" + shard + " point=" + point);
        return;
    }
    if (cmd.command == "recover_pipeline") {
        if (!cmd.args.empty()) {
            cluster_->pause_pipeline(cmd.args[0], false);
            trace_line("pipeline_recover shard=" + cmd.args[0]);
        }
        return;
    }
    if (cmd.command == "add_shard") {
        auto s = cluster_->trigger_add_shard(now_);
        if (!s) trace_line("add_shard_failed " + s.to_string());
        return;
    }
    if (cmd.command == "assert") {
        for (const auto& name : cmd.args) requested_assertions_.push_back(name);
        return;
    }
}

void Simulator::run_oltp(size_t index) {
    OltpWorkload& w = oltp_[index];
    if (!w.active) return;

    int roll = static_cast<int>(w.rng.below(100));
    Request req;
    req.tenant_id = w.tenant;
    req.kind = RequestKind::OLTP;
    req.entity = w.entity;
    req.consistency = Consistency::Fresh;
    std::string op;
    if (w.live_keys.empty() || roll < w.insert_pct) {
        op = "insert";
        int64_t key = w.next_key++;
        Row row;
        row["order_id"] = key;
        row["amount"] = Decimal{static_cast<int64_t>(w.rng.range(1, 500)) * 1000000};
        row["note"] = std::string("n") + std::to_string(w.rng.below(10));
        req.payload = Statement{InsertStmt{w.entity, row}};
        w.live_keys.push_back(key);
    } else if (roll < w.insert_pct + w.update_pct) {
        op = "update";
        int64_t key = w.live_keys[w.rng.below(w.live_keys.size())];
        Row pk;
        pk["order_id"] = key;
        Row changes;
        changes["amount"] = Decimal{static_cast<int64_t>(w.rng.range(1, 500)) * 1000000};
        req.payload = Statement{UpdateStmt{w.entity, pk, changes}};
    } else {
        op = "delete";
        size_t at = w.rng.below(w.live_keys.size());
        int64_t key = w.live_keys[at];
        w.live_keys.erase(w.live_keys.begin() + static_cast<long>(at));
        Row pk;
        pk["order_id"] = key;
        req.payload = Statement{DeleteStmt{w.entity, pk}};
    }

    auto result = cluster_->client_request(req, now_);
    trace_line("client kind=oltp op=" + op + " entity=" + w.entity +
               (result ? " ok=1" : std::string(" ok=0 code=") +
                                       error_code_name(result.status().code)));

    Event ev;
    ev.kind = Event::Kind::OltpGen;
    ev.workload = index;
    schedule(std::move(ev), now_ + w.interval);
}

void Simulator::run_olap(size_t index) {
    OlapWorkload& w = olap_[index];
    if (!w.active) return;

    Request req;
    req.tenant_id = w.tenant;
    req.kind = RequestKind::OLAP;
    req.entity = w.entity;
    req.consistency = static_cast<int>(w.rng.below(100)) < w.stale_pct ? Consistency::StaleOk
                                                                       : Consistency::Fresh;
    QuerySpec spec;
    spec.entity = w.entity;
    if (w.rng.below(2) == 0) {
        Condition c;
        c.field = "amount";
        c.op = CompareOp::Gt;
        c.value = Decimal{static_cast<int64_t>(w.rng.range(1, 10)) * 50 * 1000000};
        spec.predicate.conditions.push_back(std::move(c));
    }
    req.payload = spec;

    auto result = cluster_->client_request(req, now_);
    trace_line("client kind=olap entity=" + w.entity +
               (result ? " ok=1 rows=" + std::to_string(result.value().rows.size())
                       : std::string(" ok=0 code=") + error_code_name(result.status().code)));

    Event ev;
    ev.kind = Event::Kind::OlapGen;
    ev.workload = index;
    schedule(std::move(ev), now_ + w.interval);
}

void Simulator::process_tick(TickKind kind) {
    const ClusterOptions& opts = cluster_->options();
    switch (kind) {
        case TickKind::Heartbeat: {
            for (const auto& node : cluster_->all_nosql_node_ids()) {
                if (!alive(node)) continue;
                const NosqlNode* n = cluster_->nosql_node(node);
                schedule_message(HeartbeatMsg{node, n->applied_lsn()}, "lb");
            }
            Event ev;
            ev.kind = Event::Kind::Tick;
            ev.tick = TickKind::Heartbeat;
            schedule(std::move(ev), now_ + opts.heartbeat_interval);
            return;
        }
        case TickKind::Detector: {
            cluster_->detector_tick(now_);
            Event ev;
            ev.kind = Event::Kind::Tick;
            ev.tick = TickKind::Detector;
            schedule(std::move(ev), now_ + opts.heartbeat_interval);
            return;
        }
        case TickKind::Cdc: {
            cluster_->cdc_tick(now_);
            Event ev;
            ev.kind = Event::Kind::Tick;
            ev.tick = TickKind::Cdc;
            schedule(std::move(ev), now_ + config_.cdc_interval);
            return;
        }
        case TickKind::Ship: {
            for (auto& payload : cluster_->collect_relational_ship())
                schedule_message(ShipMsg{payload.to, std::move(payload.records)}, payload.to);
            Event ev;
            ev.kind = Event::Kind::Tick;
            ev.tick = TickKind::Ship;
            schedule(std::move(ev), now_ + config_.ship_interval);
            return;
        }
        case TickKind::Stream: {
            for (auto& payload : cluster_->collect_nosql_stream())
                schedule_message(StreamMsg{payload.to, std::move(payload.entries)}, payload.to);
            Event ev;
            ev.kind = Event::Kind::Tick;
            ev.tick = TickKind::Stream;
            schedule(std::move(ev), now_ + config_.stream_interval);
            return;
        }
        case TickKind::Autoscale: {
            if (cluster_->options().autoscale_enabled) cluster_->autoscale_tick(now_);
            Event ev;
            ev.kind = Event::Kind::Tick;
            ev.tick = TickKind::Autoscale;
            schedule(std::move(ev), now_ + cluster_->options().autoscale_interval);
            return;
        }
    }
}

void Simulator::deliver(const Message& msg) {
    if (const auto* hb = std::get_if<HeartbeatMsg>(&msg)) {
        if (!alive(hb->node) || !reachable(hb->node, "lb")) {
            trace_line("drop kind=heartbeat node=" + hb->node);
            return;
        }
        cluster_->heartbeat_from(hb->node, hb->applied, now_);
        return;
    }
    if (const auto* ship = std::get_if<ShipMsg>(&msg)) {
        // Source is the shard master; shipping rides the master->slave link.
        NodeId master = ship->to.substr(0, ship->to.find('r')) + "m";
        if (!alive(ship->to) || !reachable(master, ship->to)) {
            trace_line("drop kind=ship node=" + ship->to);
            return;
        }
        cluster_->deliver_ship(ship->to, ship->records);
        return;
    }
    const auto& stream = std::get<StreamMsg>(msg);
    const ReplicaSet* rs = nullptr;
    for (const auto& [id, set] : cluster_->replica_sets()) {
        (void)id;
        if (set.has_member(stream.to)) rs = &set;
    }
    NodeId primary = rs ? rs->primary : NodeId{};
    if (!alive(stream.to) || (rs && !reachable(primary, stream.to))) {
        trace_line("drop kind=stream node=" + stream.to);
        return;
    }
    cluster_->deliver_stream(stream.to, stream.entries);
}

void Simulator::process(const Event& ev) {
    switch (ev.kind) {
        case Event::Kind::Deliver:
            deliver(*ev.message);
            return;
        case Event::Kind::Command:
            process_command(*ev.command);
            return;
        case Event::Kind::Tick:
            process_tick(ev.tick);
            return;
        case Event::Kind::OltpGen:
            run_oltp(ev.workload);
            return;
        case Event::Kind::OlapGen:
            run_olap(ev.workload);
            return;
    }
}

void Simulator::drain() {
    for (uint64_t round = 0; round < config_.drain_rounds; ++round) {
        bool progress = false;

        std::map<ShardId, uint64_t> before;
        for (const auto& shard : cluster_->shard_map().shards)
            before[shard] = cluster_->pipeline(shard) ? cluster_->pipeline(shard)->checkpoint() : 0;
        cluster_->cdc_tick(now_);
        for (const auto& shard : cluster_->shard_map().shards) {
            uint64_t after =
                cluster_->pipeline(shard) ? cluster_->pipeline(shard)->checkpoint() : 0;
            if (after != before[shard]) progress = true;
        }

        for (auto& payload : cluster_->collect_relational_ship()) {
            NodeId master = payload.to.substr(0, payload.to.find('r')) + "m";
            if (!alive(payload.to) || !reachable(master, payload.to)) continue;
            cluster_->deliver_ship(payload.to, payload.records);
            progress = true;
        }
        for (auto& payload : cluster_->collect_nosql_stream()) {
            const ReplicaSet* rs = nullptr;
            for (const auto& [id, set] : cluster_->replica_sets()) {
                (void)id;
                if (set.has_member(payload.to)) rs = &set;
            }
            if (!alive(payload.to) || (rs && !reachable(rs->primary, payload.to))) continue;
            cluster_->deliver_stream(payload.to, payload.entries);
            progress = true;
        }

        if (!progress) {
            trace_line("drain_complete rounds=" + std::to_string(round));
            return;
        }
    }
    trace_line("drain_incomplete rounds=" + std::to_string(config_.drain_rounds));
}

SimReport Simulator::run(const Scenario& scenario) {
    rng_ = SplitMix64(scenario.seed ? scenario.seed : seed_);
    end_tick_ = scenario.end_tick;

    const ScenarioCommand* setup = nullptr;
    for (const auto& cmd : scenario.commands)
        if (cmd.command == "setup") setup = &cmd;
    setup_cluster(setup);
    trace_line("scenario_start seed=" + std::to_string(scenario.seed ? scenario.seed : seed_) +
               " end=" + std::to_string(end_tick_));

    for (const auto& cmd : scenario.commands) {
        if (cmd.command == "setup") continue;
        Event ev;
        ev.kind = Event::Kind::Command;
        ev.command = cmd;
        schedule(std::move(ev), cmd.at);
    }
    for (TickKind kind : {TickKind::Heartbeat, TickKind::Detector, TickKind::Cdc, TickKind::Ship,
                          TickKind::Stream, TickKind::Autoscale}) {
        Event ev;
        ev.kind = Event::Kind::Tick;
        ev.tick = kind;
        schedule(std::move(ev), kind == TickKind::Detector ? 2 : 1);
    }

    while (!queue_.empty() && queue_.top().at <= end_tick_) {
        Event ev = queue_.top();
        queue_.pop();
        now_ = ev.at;
        process(ev);
    }
    now_ = end_tick_;
    for (auto& w : oltp_) w.active = false;
    for (auto& w : olap_) w.active = false;
    drain();

    SimReport report;
    report.trace = trace_;
    report.assertions = check_invariants(*cluster_, trace_, requested_assertions_);
    return report;
}

}  // namespace polystore
