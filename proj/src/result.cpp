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

#include "polystore/result.hpp"

namespace polystore {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::None: return "OK";
        case ErrorCode::DuplicateEntity: return "DUPLICATE_ENTITY";
        case ErrorCode::ValidationFailed: return "VALIDATION_FAILED";
        case ErrorCode::MissingPremiseEndpoint: return "MISSING_PREMISE_ENDPOINT";
        case ErrorCode::UnknownEntity: return "UNKNOWN_ENTITY";
        case ErrorCode::NotStructured: return "NOT_STRUCTURED";
        case ErrorCode::EmptyShardMap: return "EMPTY_SHARD_MAP";
        case ErrorCode::DuplicateShard: return "DUPLICATE_SHARD";
        case ErrorCode::LastShard: return "LAST_SHARD";
        case ErrorCode::UnknownShard: return "UNKNOWN_SHARD";
        case ErrorCode::EngineClosed: return "ENGINE_CLOSED";
        case ErrorCode::PrimaryKeyViolation: return "PRIMARY_KEY_VIOLATION";
        case ErrorCode::RowNotFound: return "ROW_NOT_FOUND";
        case ErrorCode::TypeMismatch: return "TYPE_MISMATCH";
        case ErrorCode::OpNotAllowed: return "OP_NOT_ALLOWED";
        case ErrorCode::Conflict: return "CONFLICT";
        case ErrorCode::AlreadyFinished: return "ALREADY_FINISHED";
        case ErrorCode::LsnGap: return "LSN_GAP";
        case ErrorCode::NoHealthyTarget: return "NO_HEALTHY_TARGET";
        case ErrorCode::CrossShardTransaction: return "CROSS_SHARD_TRANSACTION";
        case ErrorCode::PartialMissing: return "PARTIAL_MISSING";
        case ErrorCode::UnmappedEntity: return "UNMAPPED_ENTITY";
        case ErrorCode::PrimaryUnavailable: return "PRIMARY_UNAVAILABLE";
        case ErrorCode::ShardUnreachable: return "SHARD_UNREACHABLE";
        case ErrorCode::NotPrimary: return "NOT_PRIMARY";
        case ErrorCode::StaleEpoch: return "STALE_EPOCH";
        case ErrorCode::UnknownCollection: return "UNKNOWN_COLLECTION";
        case ErrorCode::UnknownNode: return "UNKNOWN_NODE";
        case ErrorCode::InvalidBox: return "INVALID_BOX";
        case ErrorCode::NoEligibleSecondary: return "NO_ELIGIBLE_SECONDARY";
        case ErrorCode::NoPrimary: return "NO_PRIMARY";
        case ErrorCode::ScenarioParseError: return "SCENARIO_PARSE_ERROR";
        case ErrorCode::MalformedMessage: return "MALFORMED_MESSAGE";
        case ErrorCode::UnknownVerb: return "UNKNOWN_VERB";
        case ErrorCode::ConfigError: return "CONFIG_ERROR";
        case ErrorCode::IoError: return "IO_ERROR";
    }
    return "UNKNOWN";
}

}  // namespace polystore
