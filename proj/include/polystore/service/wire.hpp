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
#include <string>

#include "polystore/result.hpp"
#include "polystore/value.hpp"

namespace polystore {

// Newline-delimited JSON, one message per line:
//   request:  {"id": 7, "verb": "txn.begin", "body": {...}}
//   response: {"id": 7, "ok": true,  "body": {...}}
//             {"id": 7, "ok": false, "error": {"code": "...", "message": "..."}}
// Responses echo the request id; unknown verbs are answered, never dropped.
struct WireMessage {
    uint64_t id = 0;
    std::string verb;
    json body = json::object();
};

Result<WireMessage> parse_wire_message(const std::string& line);

json wire_ok(uint64_t id, json body);
json wire_error(uint64_t id, ErrorCode code, const std::string& message);
json wire_error(uint64_t id, const Status& status);

}  // namespace polystore
