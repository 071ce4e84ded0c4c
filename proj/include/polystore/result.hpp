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

#include <cassert>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace polystore {

enum class ErrorCode {
    None = 0,
    // schema / dictionary
    DuplicateEntity,
    ValidationFailed,
    MissingPremiseEndpoint,
    UnknownEntity,
    NotStructured,
    // sharding
    EmptyShardMap,
    DuplicateShard,
    LastShard,
    UnknownShard,
    // relational engine
    EngineClosed,
    PrimaryKeyViolation,
    RowNotFound,
    TypeMismatch,
    OpNotAllowed,
    Conflict,
    AlreadyFinished,
    LsnGap,
    // routing / dispatch
    NoHealthyTarget,
    CrossShardTransaction,
    PartialMissing,
    // replication
    UnmappedEntity,
    PrimaryUnavailable,
    ShardUnreachable,
    // replica sets
    NotPrimary,
    StaleEpoch,
    UnknownCollection,
    UnknownNode,
    InvalidBox,
    NoEligibleSecondary,
    NoPrimary,
    // harness / service
    ScenarioParseError,
    MalformedMessage,
    UnknownVerb,
    ConfigError,
    IoError,
};

const char* error_code_name(ErrorCode code);

struct Status {
    ErrorCode code = ErrorCode::None;
    std::string message;

    static Status ok() { return {}; }
    static Status error(ErrorCode c, std::string msg = {}) { return Status{c, std::move(msg)}; }

    bool is_ok() const { return code == ErrorCode::None; }
    explicit operator bool() const { return is_ok(); }

    std::string to_string() const {
        if (is_ok()) return "ok";
        std::string s = error_code_name(code);
        if (!message.empty()) {
            s += ": ";
            s += message;
        }
        return s;
    }
};

// Minimal expected-style result. GCC 11 has no std::expected; this carries
// either a value or a Status with a non-None code.
template <typename T>
class Result {
  public:
    Result(T value) : inner_(std::move(value)) {}
    Result(Status status) : inner_(std::move(status)) {
        assert(!std::get<Status>(inner_).is_ok());
    }
    Result(ErrorCode code, std::string msg = {}) : inner_(Status::error(code, std::move(msg))) {}

    bool is_ok() const { return std::holds_alternative<T>(inner_); }
    explicit operator bool() const { return is_ok(); }

    T& value() & {
        assert(is_ok());
        return std::get<T>(inner_);
    }
    const T& value() const& {
        assert(is_ok());
        return std::get<T>(inner_);
    }
    T&& take() {
        assert(is_ok());
        return std::move(std::get<T>(inner_));
    }

    const Status& status() const {
        assert(!is_ok());
        return std::get<Status>(inner_);
    }
    ErrorCode code() const { return is_ok() ? ErrorCode::None : status().code; }

  private:
    std::variant<T, Status> inner_;
};

}  // namespace polystore
