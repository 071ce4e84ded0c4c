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
#include <string>
#include <vector>

#include "polystore/result.hpp"
#include "polystore/service/runtime.hpp"

namespace polystore {

// Line-framed TCP server for the wire protocol: one thread per connection,
// one JSON message per line, per-session ordering preserved. Blocks until
// `stop` flips.
Status serve(ServiceRuntime& runtime, const std::string& host, uint16_t port,
             std::atomic<bool>& stop);

// Sends each line and collects one response line per request.
Result<std::vector<std::string>> client_send(const std::string& host, uint16_t port,
                                             const std::vector<std::string>& lines);

}  // namespace polystore
