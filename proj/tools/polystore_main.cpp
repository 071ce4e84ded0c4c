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

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "polystore/service/net.hpp"
#include "polystore/service/runtime.hpp"
#include "polystore/sim/simulator.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

int fail_op(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return 1;
}

polystore::Result<std::pair<std::string, uint16_t>> split_addr(const std::string& addr) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos)
        return polystore::Result<std::pair<std::string, uint16_t>>(
            polystore::ErrorCode::ConfigError, "address must be host:port");
    return std::make_pair(addr.substr(0, colon),
                          static_cast<uint16_t>(std::stoul(addr.substr(colon + 1))));
}

int run_serve(const std::string& config_path) {
    auto config = polystore::Config::load(config_path);
    if (!config) return fail_op(config.status().to_string());
    auto settings = polystore::service_settings_from(config.value());
    if (!settings) return fail_op(settings.status().to_string());

    polystore::ServiceRuntime runtime(settings.value());
    runtime.start_ticker();
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << settings.value().listen_host << ":"
              << settings.value().listen_port << " data_dir=" << settings.value().data_dir
              << "\n";
    auto status = polystore::serve(runtime, settings.value().listen_host,
                                   settings.value().listen_port, g_stop);
    runtime.stop_ticker();
    if (!status) return fail_op(status.to_string());
    return 0;
}

int send_lines(const std::string& addr, const std::vector<std::string>& lines, bool echo) {
    auto host_port = split_addr(addr);
    if (!host_port) return fail_op(host_port.status().to_string());
    auto responses = polystore::client_send(host_port.value().first, host_port.value().second,
                                            lines);
    if (!responses) return fail_op(responses.status().to_string());
    bool any_error = false;
    for (const auto& response : responses.value()) {
        if (echo) std::cout << response << "\n";
        auto parsed = polystore::json::parse(response, nullptr, false);
        if (parsed.is_discarded() || !parsed.value("ok", false)) any_error = true;
    }
    return any_error ? 1 : 0;
}

int run_client_exec(const std::string& path, const std::string& addr) {
    std::vector<std::string> lines;
    std::string line;
    if (path == "-") {
        while (std::getline(std::cin, line))
            if (!line.empty()) lines.push_back(line);
    } else {
        std::ifstream in(path);
        if (!in.is_open()) return fail_op("cannot open " + path);
        while (std::getline(in, line))
            if (!line.empty()) lines.push_back(line);
    }
    return send_lines(addr, lines, true);
}

int run_schema_apply(const std::string& path, const std::string& addr) {
    std::ifstream in(path);
    if (!in.is_open()) return fail_op("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    uint64_t id = 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto doc = polystore::json::parse(line, nullptr, false);
        if (doc.is_discarded()) return fail_op("bad schema document: " + line);
        polystore::json msg = {{"id", id++}, {"verb", "schema.apply"}, {"body", doc}};
        lines.push_back(msg.dump());
    }
    return send_lines(addr, lines, true);
}

int run_simulate(const std::string& path, uint64_t seed, const std::string& trace_out) {
    auto scenario = polystore::load_scenario(path);
    if (!scenario) return fail_op(scenario.status().to_string());
    if (seed) scenario.value().seed = seed;

    polystore::Simulator sim(polystore::SimConfig{}, scenario.value().seed);
    auto report = sim.run(scenario.value());

    if (!trace_out.empty()) {
        std::ofstream out(trace_out, std::ios::trunc);
        if (!out.is_open()) return fail_op("cannot write " + trace_out);
        for (const auto& line : report.trace) out << line << "\n";
    }
    for (const auto& assertion : report.assertions) {
        std::cout << (assertion.pass ? "PASS " : "FAIL ") << assertion.name;
        if (!assertion.detail.empty()) std::cout << " (" << assertion.detail << ")";
        if (!assertion.pass && assertion.first_violation >= 0)
            std::cout << " first_violation_line=" << assertion.first_violation;
        std::cout << "\n";
    }
    std::cout << "trace_events=" << report.trace.size() << "\n";
    return report.all_passed() ? 0 : 1;
}

int run_bench(const std::string& workload, const std::string& report_path) {
    using clock = std::chrono::steady_clock;
    auto parse_kv = [&](const std::string& spec) {
        std::map<std::string, std::string> kv;
        std::string rest = spec;
        auto colon = rest.find(':');
        std::string name = rest.substr(0, colon);
        if (colon != std::string::npos) {
            std::istringstream in(rest.substr(colon + 1));
            std::string item;
            while (std::getline(in, item, ',')) {
                auto eq = item.find('=');
                if (eq != std::string::npos) kv[item.substr(0, eq)] = item.substr(eq + 1);
            }
        }
        return std::make_pair(name, kv);
    };
    auto [name, kv] = parse_kv(workload);
    uint64_t records = kv.count("records") ? std::stoull(kv["records"]) : 10000;
    uint64_t batch = kv.count("batch") ? std::stoull(kv["batch"]) : 64;

    polystore::ClusterOptions opts;
    opts.shards = kv.count("shards") ? std::stoull(kv["shards"]) : 1;
    opts.cdc_batch = batch;
    polystore::Cluster cluster(opts, polystore::ClusterHooks{});

    polystore::EntitySchema orders;
    orders.entity = "orders";
    orders.data_class = polystore::DataClass::structured();
    orders.fields = {{"order_id", polystore::ScalarKind::Int64, false},
                     {"amount", polystore::ScalarKind::Decimal, false}};
    orders.primary_key = {"order_id"};
    cluster.apply_schema(orders);

    polystore::json report;
    report["workload"] = workload;
    auto start = clock::now();

    if (name == "cdc") {
        // Commit batches interleaved with pipeline runs; lag sampled at
        // every pipeline step.
        uint64_t committed = 0, max_lag = 0;
        uint64_t per_round = batch / 2 ? batch / 2 : 1;
        uint64_t tick = 0;
        while (committed < records) {
            for (uint64_t i = 0; i < per_round && committed < records; ++i, ++committed) {
                polystore::Request req;
                req.tenant_id = "t1";
                req.kind = polystore::RequestKind::OLTP;
                req.entity = "orders";
                polystore::Row row;
                row["order_id"] = static_cast<int64_t>(committed + 1);
                row["amount"] = polystore::Decimal{1250000};
                req.payload = polystore::Statement{polystore::InsertStmt{"orders", row}};
                auto r = cluster.client_request(req, tick);
                if (!r) return fail_op(r.status().to_string());
            }
            cluster.cdc_tick(++tick);
            for (const auto& shard : cluster.shard_map().shards) {
                auto lag = cluster.shard_lag(shard, tick);
                if (lag && lag.value().lag_records > max_lag) max_lag = lag.value().lag_records;
            }
        }
        // Drain and confirm visibility.
        for (int i = 0; i < 10000; ++i) {
            bool behind = false;
            cluster.cdc_tick(++tick);
            for (const auto& shard : cluster.shard_map().shards) {
                auto lag = cluster.shard_lag(shard, tick);
                if (lag && lag.value().lag_records > 0) behind = true;
            }
            if (!behind) break;
        }
        auto problems = cluster.cdc_convergence_report();
        double ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
        report["records"] = records;
        report["elapsed_ms"] = ms;
        report["throughput_per_s"] = records / (ms / 1000.0);
        report["steady_state_max_lag_records"] = max_lag;
        report["lag_bound_2x_batch"] = batch * 2;
        report["converged"] = problems.empty();
        report["pass"] = problems.empty() && max_lag <= batch * 2 && ms < 10000.0;
    } else if (name == "oltp") {
        for (uint64_t i = 0; i < records; ++i) {
            polystore::Request req;
            req.tenant_id = "t1";
            req.kind = polystore::RequestKind::OLTP;
            req.entity = "orders";
            polystore::Row row;
            row["order_id"] = static_cast<int64_t>(i + 1);
            row["amount"] = polystore::Decimal{990000};
            req.payload = polystore::Statement{polystore::InsertStmt{"orders", row}};
            auto r = cluster.client_request(req, i);
            if (!r) return fail_op(r.status().to_string());
        }
        double ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
        report["records"] = records;
        report["elapsed_ms"] = ms;
        report["throughput_per_s"] = records / (ms / 1000.0);
        report["pass"] = true;
    } else {
        std::cerr << "unknown workload '" << name << "' (use cdc:... or oltp:...)\n";
        return 2;
    }

    std::cout << report.dump(2) << "\n";
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::trunc);
        if (!out.is_open()) return fail_op("cannot write " + report_path);
        out << report.dump(2) << "\n";
    }
    return report.value("pass", false) ? 0 : 1;
}

int run_admin(const std::string& what, const std::string& addr) {
    polystore::json msg = {{"id", 1}, {"verb", "admin." + what}, {"body", polystore::json::object()}};
    auto host_port = split_addr(addr);
    if (!host_port) return fail_op(host_port.status().to_string());
    auto responses =
        polystore::client_send(host_port.value().first, host_port.value().second, {msg.dump()});
    if (!responses) return fail_op(responses.status().to_string());
    auto parsed = polystore::json::parse(responses.value().at(0), nullptr, false);
    if (parsed.is_discarded() || !parsed.value("ok", false)) {
        std::cerr << responses.value().at(0) << "\n";
        return 1;
    }
    const polystore::json& body = parsed.at("body");

    // One record per line, diff-friendly.
    if (what == "shards") {
        std::cout << "map_version=" << body.at("version").get<uint64_t>() << "\n";
        for (const auto& shard : body.at("shards")) {
            std::cout << "shard=" << shard.at("shard").get<std::string>()
                      << " master=" << shard.at("master").get<std::string>() << " slaves=";
            const auto& slaves = shard.at("slaves");
            for (size_t i = 0; i < slaves.size(); ++i)
                std::cout << (i ? "," : "") << slaves[i].get<std::string>();
            std::cout << " replica_set=" << shard.at("replica_set").get<std::string>() << "\n";
        }
        return 0;
    }
    if (what == "replsets") {
        for (const auto& set : body.at("replsets")) {
            std::cout << "set=" << set.at("set").get<std::string>() << " epoch="
                      << set.at("epoch").get<uint64_t>() << " primary="
                      << set.at("primary").get<std::string>();
            for (const auto& member : set.at("members"))
                std::cout << " " << member.at("node").get<std::string>() << ":"
                          << member.at("state").get<std::string>() << ":"
                          << member.at("applied_lsn").get<uint64_t>();
            std::cout << "\n";
        }
        return 0;
    }
    if (what == "lag") {
        for (const auto& lag : body.at("lag")) {
            std::cout << "shard=" << lag.at("shard").get<std::string>();
            if (lag.contains("error")) {
                std::cout << " error=" << lag.at("error").get<std::string>() << "\n";
                continue;
            }
            std::cout << " master_lsn=" << lag.at("master_lsn").get<uint64_t>()
                      << " applied_lsn=" << lag.at("applied_lsn").get<uint64_t>()
                      << " lag_records=" << lag.at("lag_records").get<uint64_t>() << "\n";
        }
        return 0;
    }
    std::cout << body.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polyglot-persistence middleware: sharded relational OLTP, log-based "
                 "replication into NoSQL replica sets, OLAP routing with caching"};
    app.require_subcommand(1);

    std::string config_path;
    auto* serve_cmd = app.add_subcommand("serve", "run the wire-protocol server");
    serve_cmd->add_option("--config", config_path, "config file")->required();

    std::string client_file = "-";
    std::string addr = "127.0.0.1:7171";
    auto* client_cmd = app.add_subcommand("client", "send wire messages");
    auto* exec_cmd = client_cmd->add_subcommand("exec", "send NDJSON messages from file or stdin");
    exec_cmd->add_option("file", client_file, "message file, or - for stdin");
    exec_cmd->add_option("--addr", addr, "server address");

    std::string schema_file;
    auto* schema_cmd = app.add_subcommand("schema", "schema management");
    auto* apply_cmd = schema_cmd->add_subcommand("apply", "apply entity declarations");
    apply_cmd->add_option("file", schema_file, "one JSON entity document per line")->required();
    apply_cmd->add_option("--addr", addr, "server address");

    std::string scenario_path, trace_out;
    uint64_t seed = 0;
    auto* sim_cmd = app.add_subcommand("simulate", "run a deterministic scenario");
    sim_cmd->add_option("scenario", scenario_path, "scenario file")->required();
    sim_cmd->add_option("--seed", seed, "override the scenario seed");
    sim_cmd->add_option("--trace", trace_out, "write the trace to this file");

    std::string workload, report_path;
    auto* bench_cmd = app.add_subcommand("bench", "desk-scale performance checks");
    bench_cmd->add_option("--workload", workload, "cdc:records=10000,batch=64 | oltp:records=N")
        ->required();
    bench_cmd->add_option("--report", report_path, "write the JSON report here");

    auto* admin_cmd = app.add_subcommand("admin", "inspect a running server");
    std::string admin_what;
    admin_cmd->add_option("what", admin_what, "shards|replsets|cache|autoscale|lag")
        ->required()
        ->check(CLI::IsMember({"shards", "replsets", "cache", "autoscale", "lag"}));
    admin_cmd->add_option("--addr", addr, "server address");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2
    }

    if (serve_cmd->parsed()) return run_serve(config_path);
    if (client_cmd->parsed() && exec_cmd->parsed()) return run_client_exec(client_file, addr);
    if (schema_cmd->parsed() && apply_cmd->parsed()) return run_schema_apply(schema_file, addr);
    if (sim_cmd->parsed()) return run_simulate(scenario_path, seed, trace_out);
    if (bench_cmd->parsed()) return run_bench(workload, report_path);
    if (admin_cmd->parsed()) return run_admin(admin_what, addr);
    std::cerr << "no subcommand\n";
    return 2;
}
