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
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "polystore/result.hpp"

namespace polystore {

using json = nlohmann::json;

// Scalar kinds as stored in the binlog (tag bytes 1..6).
enum class ScalarKind : uint8_t {
    Int64 = 1,
    Decimal = 2,
    Text = 3,
    Bool = 4,
    TimestampMillis = 5,
    GeoPoint = 6,
};

const char* scalar_kind_name(ScalarKind kind);
std::optional<ScalarKind> scalar_kind_from_name(const std::string& name);

// Fixed-point decimal with six fractional digits. Exact addition keeps
// partial-aggregate recombination (sum of sums) equal to a single-pass sum.
struct Decimal {
    int64_t micros = 0;

    static Decimal from_micros(int64_t m) { return Decimal{m}; }
    static std::optional<Decimal> parse(const std::string& text);
    static Decimal from_double(double d);

    std::string to_string() const;

    friend bool operator==(const Decimal& a, const Decimal& b) { return a.micros == b.micros; }
    friend bool operator<(const Decimal& a, const Decimal& b) { return a.micros < b.micros; }
};

struct Timestamp {
    int64_t millis = 0;

    friend bool operator==(const Timestamp& a, const Timestamp& b) { return a.millis == b.millis; }
    friend bool operator<(const Timestamp& a, const Timestamp& b) { return a.millis < b.millis; }
};

struct GeoPoint {
    double x = 0.0;  // degrees, [-180, 180]
    double y = 0.0;  // degrees, [-90, 90]

    friend bool operator==(const GeoPoint& a, const GeoPoint& b) { return a.x == b.x && a.y == b.y; }
    friend bool operator<(const GeoPoint& a, const GeoPoint& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    }
};

// Variant index + 1 == ScalarKind tag value.
using Value = std::variant<int64_t, Decimal, std::string, bool, Timestamp, GeoPoint>;

ScalarKind kind_of(const Value& v);

// Total order within one kind; cross-kind comparison is a caller error and
// returns nullopt.
std::optional<int> compare_values(const Value& a, const Value& b);

// Canonical text form: ints/timestamps as digits, decimals trimmed, text raw,
// bools true/false, geo "x,y". Used for routing keys, doc ids and cache keys.
std::string value_text(const Value& v);

json value_to_json(const Value& v);
Result<Value> value_from_json(ScalarKind kind, const json& j);

// Schema-less inference for predicates against documents: integer -> Int64,
// float -> Decimal, string -> Text, bool -> Bool.
Result<Value> value_from_json_inferred(const json& j);

// Compares a JSON document field against a typed value; nullopt when the two
// are not comparable (schema-less documents never raise type errors).
std::optional<int> compare_json_to_value(const json& field, const Value& v);

// A relational row: field name -> value. Nullable fields may be absent.
using Row = std::map<std::string, Value>;

std::string row_to_string(const Row& row);
json row_to_json(const Row& row);

bool valid_identifier(const std::string& s);

}  // namespace polystore
