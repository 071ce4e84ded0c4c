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

#include "polystore/service/wire.hpp"

namespace polystore {

Result<WireMessage> parse_wire_message(const std::string& line) {
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
        return Result<WireMessage>(ErrorCode::MalformedMessage, "not a JSON object");
    WireMessage msg;
    if (parsed.contains("id")) {
        if (!parsed.at("id").is_number_unsigned() && !parsed.at("id").is_number_integer())
            return Result<WireMessage>(ErrorCode::MalformedMessage, "id must be an integer");
        msg.id = parsed.at("id").get<uint64_t>();
    }
    if (!parsed.contains("verb") || !parsed.at("verb").is_string())
        return Result<WireMessage>(ErrorCode::MalformedMessage, "missing verb");
    msg.verb = parsed.at("verb").get<std::string>();
    msg.body = parsed.value("body", json::object());
    return msg;
}

json wire_ok(uint64_t id, json body) {
    return json{{"id", id}, {"ok", true}, {"body", std::move(body)}};
}

json wire_error(uint64_t id, ErrorCode code, const std::string& message) {
    return json{{"id", id},
                {"ok", false},
                {"error", {{"code", error_code_name(code)}, {"message", message}}}};
}

json wire_error(uint64_t id, const Status& status) {
    return wire_error(id, status.code, status.message);
}

}  // namespace polystore
