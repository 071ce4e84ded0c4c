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

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "polystore/sim/simulator.hpp"

namespace polystore {

namespace {

// Trace lines look like "t=<tick> <type> k=v k=v ...".
struct TraceLine {
    uint64_t tick = 0;
    std::string type;
    std::map<std::string, std::string> kv;
};

std::optional<TraceLine> parse_line(const std::string& line) {
    std::istringstream in(line);
    std::string word;
    TraceLine out;
    if (!(in >> word) || word.rfind("t=", 0) != 0) return std::nullopt;
    out.tick = std::stoull(word.substr(2));
    if (!(in >> out.type)) return std::nullopt;
    while (in >> word) {
        auto eq = word.find('=');
        if (eq != std::string::npos) out.kv[word.substr(0, eq)] = word.substr(eq + 1);
    }
    return out;
}

uint64_t kv_u64(const TraceLine& line, const std::string& key) {
    auto it = line.kv.find(key);
    return it == line.kv.end() ? 0 : std::stoull(it->second);
}

std::string kv_str(const TraceLine& line, const std::string& key) {
    auto it = line.kv.find(key);
    return it == line.kv.end() ? std::string{} : it->second;
}

struct Checker {
    Cluster& cluster;
    const std::vector<std::string>& raw;
    std::vector<TraceLine> lines;
    std::vector<int64_t> line_index;  // maps parsed line -> raw index

    AssertionResult single_primary() const {
        AssertionResult result{"single_primary", true, "", -1};
        // Per (set, epoch): at most one distinct acking node; per (set, node):
        // ack epochs never decrease (fencing).
        std::map<std::pair<std::string, uint64_t>, std::string> epoch_owner;
        std::map<std::pair<std::string, std::string>, uint64_t> node_epoch;
        for (size_t i = 0; i < lines.size(); ++i) {
            const auto& l = lines[i];
            if (l.type != "ack_nosql") continue;
            std::string set = kv_str(l, "set"), node = kv_str(l, "node");
            uint64_t epoch = kv_u64(l, "epoch");
            auto owner = epoch_owner.find({set, epoch});
            if (owner == epoch_owner.end()) {
                epoch_owner[{set, epoch}] = node;
            } else if (owner->second != node) {
                return {"single_primary", false,
                        "two nodes accepted writes in " + set + " epoch " +
                            std::to_string(epoch),
                        line_index[i]};
            }
            auto prev = node_epoch.find({set, node});
            if (prev != node_epoch.end() && epoch < prev->second)
                return {"single_primary", false,
                        node + " accepted a write under a fenced epoch", line_index[i]};
            node_epoch[{set, node}] = epoch;
        }
        return result;
    }

    AssertionResult epochs_monotone() const {
        std::map<std::string, uint64_t> last;
        for (size_t i = 0; i < lines.size(); ++i) {
            const auto& l = lines[i];
            if (l.type != "promote") continue;
            std::string set = kv_str(l, "set");
            uint64_t epoch = kv_u64(l, "epoch");
            if (last.count(set) && epoch <= last[set])
                return {"epochs_monotone", false, set + " epoch did not increase",
                        line_index[i]};
            last[set] = epoch;
        }
        return {"epochs_monotone", true, "", -1};
    }

    AssertionResult checkpoint_monotone() const {
        std::map<std::string, uint64_t> last;
        for (size_t i = 0; i < lines.size(); ++i) {
            const auto& l = lines[i];
            if (l.type != "cdc_apply") continue;
            std::string shard = kv_str(l, "shard");
            uint64_t ckpt = kv_u64(l, "checkpoint");
            if (last.count(shard) && ckpt < last[shard])
                return {"checkpoint_monotone", false, shard + " checkpoint went backwards",
                        line_index[i]};
            last[shard] = ckpt;
        }
        return {"checkpoint_monotone", true, "", -1};
    }

    AssertionResult lsn_gapless() const {
        for (const auto& shard : cluster.shard_map().shards) {
            const RelationalEngine* master = cluster.relational_master(shard);
            if (!master) continue;
            auto log = master->read_log(1, UINT64_MAX);
            for (size_t i = 0; i < log.size(); ++i) {
                if (log[i].lsn != i + 1)
                    return {"lsn_gapless", false,
                            shard + " lsn " + std::to_string(log[i].lsn) + " at position " +
                                std::to_string(i + 1),
                            -1};
            }
        }
        return {"lsn_gapless", true, "", -1};
    }

    AssertionResult convergence() const {
        auto problems = cluster.cdc_convergence_report();
        if (problems.empty()) return {"convergence", true, "", -1};

        // With promotions in the history, divergence is legitimate exactly
        // when a discarded (fenced-suffix) op covers the same document.
        for (const auto& problem : problems) {
            // problem text: "<kind> doc <tenant>.<collection>/<doc_id> on <node>"
            auto doc_pos = problem.find("doc ");
            if (doc_pos == std::string::npos)
                return {"convergence", false, problem, -1};
            auto on_pos = problem.rfind(" on ");
            std::string ref = problem.substr(doc_pos + 4, on_pos - doc_pos - 4);
            auto dot = ref.find('.');
            auto slash = ref.find('/', dot);
            std::string tenant = ref.substr(0, dot);
            std::string collection = ref.substr(dot + 1, slash - dot - 1);
            std::string doc_id = ref.substr(slash + 1);

            bool attributed = false;
            for (const auto& promotion : cluster.promotions()) {
                for (const auto& op : promotion.discarded_ops) {
                    if (const auto* up = std::get_if<UpsertDoc>(&op.op)) {
                        if (up->tenant == tenant && up->collection == collection &&
                            up->doc_id == doc_id)
                            attributed = true;
                    } else if (const auto* del = std::get_if<DeleteDoc>(&op.op)) {
                        if (del->tenant == tenant && del->collection == collection &&
                            del->doc_id == doc_id)
                            attributed = true;
                    }
                }
            }
            if (!attributed)
                return {"convergence", false, "unattributed divergence: " + problem, -1};
        }
        return {"convergence", true,
                std::to_string(problems.size()) + " divergences, all attributed to fenced suffixes",
                -1};
    }

    AssertionResult bounded_loss() const {
        std::map<std::string, std::set<uint64_t>> discarded;
        for (const auto& promotion : cluster.promotions())
            for (uint64_t uid : promotion.discarded_uids) discarded[promotion.set].insert(uid);

        for (const auto& ack : cluster.acked_nosql_writes()) {
            const ReplicaSet* rs = cluster.replica_set(ack.set);
            if (!rs || rs->primary.empty()) continue;
            const NosqlNode* primary = cluster.nosql_node(rs->primary);
            if (!primary) continue;
            bool present = false;
            for (const auto& entry : primary->op_log())
                if (entry.op_uid == ack.uid) {
                    present = true;
                    break;
                }
            if (present) continue;
            if (!discarded[ack.set].count(ack.uid))
                return {"bounded_loss", false,
                        "acked uid " + std::to_string(ack.uid) + " on " + ack.set +
                            " lost without a matching fenced suffix",
                        -1};
        }
        return {"bounded_loss", true, "", -1};
    }

    AssertionResult cache_staleness() const {
        std::map<std::string, uint64_t> last_invalidate;
        for (size_t i = 0; i < lines.size(); ++i) {
            const auto& l = lines[i];
            if (l.type == "cache_invalidate") {
                last_invalidate[kv_str(l, "entity")] = l.tick;
            } else if (l.type == "cache_hit") {
                std::string entity = kv_str(l, "entity");
                uint64_t inserted_at = kv_u64(l, "inserted_at");
                auto it = last_invalidate.find(entity);
                if (it != last_invalidate.end() && inserted_at < it->second)
                    return {"cache_staleness", false,
                            "hit on " + entity + " predates its last invalidation",
                            line_index[i]};
            }
        }
        return {"cache_staleness", true, "", -1};
    }

    AssertionResult members_converged() const {
        for (const auto& [set_id, rs] : cluster.replica_sets()) {
            std::string reference;
            std::string reference_node;
            for (const auto& member : rs.members) {
                auto state = rs.state.find(member);
                if (state == rs.state.end() || state->second == MemberState::Down) continue;
                const NosqlNode* node = cluster.nosql_node(member);
                if (!node) continue;
                std::string fp = node->state_fingerprint();
                if (reference_node.empty()) {
                    reference = fp;
                    reference_node = member;
                } else if (fp != reference) {
                    return {"members_converged", false,
                            set_id + ": " + member + " diverges from " + reference_node, -1};
                }
            }
        }
        return {"members_converged", true, "", -1};
    }

    AssertionResult routing_deterministic() {
        // Same request, same view, fresh round-robin state: identical plans.
        DictionaryPtr dict = cluster.dictionary();
        if (!dict || dict->entities.empty()) return {"routing_deterministic", true, "", -1};
        Request req;
        req.tenant_id = "t1";
        req.kind = RequestKind::OLAP;
        req.consistency = Consistency::Fresh;
        for (const auto& [name, schema] : dict->entities) {
            (void)schema;
            if (dict->engine_binding.at(name) != EngineKind::Relational) continue;
            req.entity = name;
            req.payload = QuerySpec{name, Predicate{}, std::nullopt, std::nullopt};
            Router r1, r2;
            auto d1 = r1.route(req, cluster);
            auto d2 = r2.route(req, cluster);
            if (d1.is_ok() != d2.is_ok())
                return {"routing_deterministic", false, "divergent outcome for " + name, -1};
            if (!d1) continue;
            if (d1.value().targets.size() != d2.value().targets.size())
                return {"routing_deterministic", false, "divergent fan-out for " + name, -1};
            for (size_t i = 0; i < d1.value().targets.size(); ++i)
                if (d1.value().targets[i].node != d2.value().targets[i].node)
                    return {"routing_deterministic", false, "divergent target for " + name, -1};
        }
        return {"routing_deterministic", true, "", -1};
    }
};

}  // namespace

std::vector<AssertionResult> check_invariants(Cluster& cluster,
                                              const std::vector<std::string>& trace,
                                              const std::vector<std::string>& requested) {
    Checker checker{cluster, trace, {}, {}};
    for (size_t i = 0; i < trace.size(); ++i) {
        auto line = parse_line(trace[i]);
        if (!line) continue;
        checker.lines.push_back(std::move(*line));
        checker.line_index.push_back(static_cast<int64_t>(i));
    }

    std::set<std::string> want(requested.begin(), requested.end());
    bool all = want.empty() || want.count("all") > 0;
    std::vector<AssertionResult> results;
    auto maybe = [&](const char* name, auto&& fn) {
        if (all || want.count(name)) results.push_back(fn());
    };
    maybe("single_primary", [&] { return checker.single_primary(); });
    maybe("epochs_monotone", [&] { return checker.epochs_monotone(); });
    maybe("checkpoint_monotone", [&] { return checker.checkpoint_monotone(); });
    maybe("lsn_gapless", [&] { return checker.lsn_gapless(); });
    maybe("convergence", [&] { return checker.convergence(); });
    maybe("bounded_loss", [&] { return checker.bounded_loss(); });
    maybe("cache_staleness", [&] { return checker.cache_staleness(); });
    maybe("members_converged", [&] { return checker.members_converged(); });
    maybe("routing_deterministic", [&] { return checker.routing_deterministic(); });
    return results;
}

}  // namespace polystore
