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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polystore/value.hpp"

namespace polystore {

enum class CompareOp : uint8_t { Eq, Lt, Gt, Range };

const char* compare_op_name(CompareOp op);

struct Condition {
    std::string field;
    CompareOp op = CompareOp::Eq;
    Value value;
    std::optional<Value> hi;  // Range upper bound, inclusive
};

// Conjunction of field comparisons; empty matches everything.
struct Predicate {
    std::vector<Condition> conditions;

    bool empty() const { return conditions.empty(); }

    // Typed evaluation over a relational row. Absent fields never match;
    // comparing against a differently-typed present field is an error.
    Result<bool> matches_row(const Row& row) const;

    // Schema-less evaluation over a document; incomparable fields simply
    // fail the condition.
    bool matches_document(const json& doc) const;

    // Deterministic key text: conditions sorted by (field, op, value).
    // Logically identical predicates canonicalize identically.
    std::string canonical_text() const;

    // Value of the single Eq condition on `field`, if any.
    std::optional<Value> eq_value(const std::string& field) const;

    json to_json() const;
};

using FieldKindFn = std::function<std::optional<ScalarKind>(const std::string&)>;

// Parses [{"field":.., "op":"eq|lt|gt|range", "value":.., "hi":..}, ...].
// kind_of resolves the scalar kind per field; nullopt falls back to JSON
// inference (document predicates).
Result<Predicate> predicate_from_json(const json& j, const FieldKindFn& kind_of_field);

}  // namespace polystore
