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

#include "polystore/predicate.hpp"

#include <algorithm>

namespace polystore {

const char* compare_op_name(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Lt: return "<";
        case CompareOp::Gt: return ">";
        case CompareOp::Range: return "range";
    }
    return "?";
}

namespace {

bool condition_holds(int cmp, CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return cmp == 0;
        case CompareOp::Lt: return cmp < 0;
        case CompareOp::Gt: return cmp > 0;
        case CompareOp::Range: return cmp >= 0;  // lower bound; hi handled by caller
    }
    return false;
}

std::string condition_text(const Condition& c) {
    std::string s = c.field;
    s += ' ';
    s += compare_op_name(c.op);
    s += ' ';
    s += value_text(c.value);
    if (c.op == CompareOp::Range) {
        s += "..";
        s += c.hi ? value_text(*c.hi) : std::string("inf");
    }
    return s;
}

}  // namespace

Result<bool> Predicate::matches_row(const Row& row) const {
    for (const auto& c : conditions) {
        auto it = row.find(c.field);
        if (it == row.end()) return false;  // absent field never matches
        auto cmp = compare_values(it->second, c.value);
        if (!cmp)
            return Result<bool>(ErrorCode::TypeMismatch,
                                "predicate on field '" + c.field + "' compares " +
                                    scalar_kind_name(kind_of(it->second)) + " against " +
                                    scalar_kind_name(kind_of(c.value)));
        if (!condition_holds(*cmp, c.op)) return false;
        if (c.op == CompareOp::Range && c.hi) {
            auto cmp_hi = compare_values(it->second, *c.hi);
            if (!cmp_hi)
                return Result<bool>(ErrorCode::TypeMismatch,
                                    "range bounds on field '" + c.field + "' are mixed-type");
            if (*cmp_hi > 0) return false;
        }
    }
    return true;
}

bool Predicate::matches_document(const json& doc) const {
    for (const auto& c : conditions) {
        if (!doc.is_object() || !doc.contains(c.field)) return false;
        auto cmp = compare_json_to_value(doc.at(c.field), c.value);
        if (!cmp || !condition_holds(*cmp, c.op)) return false;
        if (c.op == CompareOp::Range && c.hi) {
            auto cmp_hi = compare_json_to_value(doc.at(c.field), *c.hi);
            if (!cmp_hi || *cmp_hi > 0) return false;
        }
    }
    return true;
}

std::string Predicate::canonical_text() const {
    std::vector<std::string> parts;
    parts.reserve(conditions.size());
    for (const auto& c : conditions) parts.push_back(condition_text(c));
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += " & ";
        out += parts[i];
    }
    return out;
}

std::optional<Value> Predicate::eq_value(const std::string& field) const {
    for (const auto& c : conditions)
        if (c.field == field && c.op == CompareOp::Eq) return c.value;
    return std::nullopt;
}

json Predicate::to_json() const {
    json arr = json::array();
    for (const auto& c : conditions) {
        json jc = {{"field", c.field},
                   {"op", c.op == CompareOp::Eq   ? "eq"
                          : c.op == CompareOp::Lt ? "lt"
                          : c.op == CompareOp::Gt ? "gt"
                                                  : "range"},
                   {"value", value_to_json(c.value)}};
        if (c.hi) jc["hi"] = value_to_json(*c.hi);
        arr.push_back(jc);
    }
    return arr;
}

Result<Predicate> predicate_from_json(const json& j, const FieldKindFn& kind_of_field) {
    Predicate p;
    if (j.is_null()) return p;
    if (!j.is_array())
        return Result<Predicate>(ErrorCode::MalformedMessage, "predicate must be an array");
    for (const auto& jc : j) {
        if (!jc.is_object() || !jc.contains("field") || !jc.contains("op") || !jc.contains("value"))
            return Result<Predicate>(ErrorCode::MalformedMessage,
                                     "predicate condition needs field/op/value");
        Condition c;
        c.field = jc.at("field").get<std::string>();
        std::string op = jc.at("op").get<std::string>();
        if (op == "eq") c.op = CompareOp::Eq;
        else if (op == "lt") c.op = CompareOp::Lt;
        else if (op == "gt") c.op = CompareOp::Gt;
        else if (op == "range") c.op = CompareOp::Range;
        else return Result<Predicate>(ErrorCode::MalformedMessage, "unknown op '" + op + "'");

        auto kind = kind_of_field ? kind_of_field(c.field) : std::nullopt;
        auto parse = [&](const json& jv) -> Result<Value> {
            return kind ? value_from_json(*kind, jv) : value_from_json_inferred(jv);
        };
        auto v = parse(jc.at("value"));
        if (!v) return v.status();
        c.value = v.take();
        if (c.op == CompareOp::Range) {
            if (!jc.contains("hi"))
                return Result<Predicate>(ErrorCode::MalformedMessage, "range needs 'hi'");
            auto hi = parse(jc.at("hi"));
            if (!hi) return hi.status();
            c.hi = hi.take();
        }
        p.conditions.push_back(std::move(c));
    }
    return p;
}

}  // namespace polystore
