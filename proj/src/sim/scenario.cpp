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

#include "polystore/sim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace polystore {

namespace {

const std::set<std::string> kKnownCommands = {
    "setup",          "workload",       "stop_workload", "crash",    "recover",
    "partition",      "heal",           "crash_pipeline", "recover_pipeline",
    "add_shard",      "assert",         "end",           "seed",
};

}  // namespace

Result<Scenario> parse_scenario(const std::string& text) {
    Scenario scenario;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    uint64_t max_at = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string tick_word;
        if (!(ls >> tick_word)) continue;  // blank line

        ScenarioCommand cmd;
        try {
            cmd.at = std::stoull(tick_word);
        } catch (...) {
            return Result<Scenario>(ErrorCode::ScenarioParseError,
                                    "line " + std::to_string(line_no) + ": bad tick '" +
                                        tick_word + "'");
        }
        if (!(ls >> cmd.command))
            return Result<Scenario>(ErrorCode::ScenarioParseError,
                                    "line " + std::to_string(line_no) + ": missing command");
        if (!kKnownCommands.count(cmd.command))
            return Result<Scenario>(ErrorCode::ScenarioParseError,
                                    "line " + std::to_string(line_no) + ": unknown command '" +
                                        cmd.command + "'");
        std::string word;
        while (ls >> word) {
            auto eq = word.find('=');
            if (eq != std::string::npos)
                cmd.kv[word.substr(0, eq)] = word.substr(eq + 1);
            else
                cmd.args.push_back(word);
        }

        if (cmd.command == "seed") {
            if (cmd.args.empty())
                return Result<Scenario>(ErrorCode::ScenarioParseError, "seed needs a value");
            scenario.seed = std::stoull(cmd.args[0]);
            continue;
        }
        if (cmd.command == "end") {
            scenario.end_tick = cmd.at;
            continue;
        }
        max_at = std::max(max_at, cmd.at);
        scenario.commands.push_back(std::move(cmd));
    }
    std::stable_sort(scenario.commands.begin(), scenario.commands.end(),
                     [](const ScenarioCommand& a, const ScenarioCommand& b) { return a.at < b.at; });
    if (scenario.end_tick == 0) scenario.end_tick = max_at + 3000;  // room to drain
    return scenario;
}

Result<Scenario> load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open())
        return Result<Scenario>(ErrorCode::IoError, "cannot open scenario " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

}  // namespace polystore
