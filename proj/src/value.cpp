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

#include "polystore/value.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace polystore {

namespace {

constexpr int64_t kDecimalScale = 1000000;

int sign_of(int64_t d) { return d < 0 ? -1 : (d > 0 ? 1 : 0); }

}  // namespace

const char* scalar_kind_name(ScalarKind kind) {
    switch (kind) {
        case ScalarKind::Int64: return "int64";
        case ScalarKind::Decimal: return "decimal";
        case ScalarKind::Text: return "text";
        case ScalarKind::Bool: return "bool";
        case ScalarKind::TimestampMillis: return "timestamp_millis";
        case ScalarKind::GeoPoint: return "geo_point";
    }
    return "unknown";
}

std::optional<ScalarKind> scalar_kind_from_name(const std::string& name) {
    if (name == "int64") return ScalarKind::Int64;
    if (name == "decimal") return ScalarKind::Decimal;
    if (name == "text") return ScalarKind::Text;
    if (name == "bool") return ScalarKind::Bool;
    if (name == "timestamp_millis") return ScalarKind::TimestampMillis;
    if (name == "geo_point") return ScalarKind::GeoPoint;
    return std::nullopt;
}

std::optional<Decimal> Decimal::parse(const std::string& text) {
    if (text.empty()) return std::nullopt;
    size_t pos = 0;
    bool negative = false;
    if (text[pos] == '-' || text[pos] == '+') {
        negative = text[pos] == '-';
        ++pos;
    }
    if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
        return std::nullopt;
    int64_t whole = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        whole = whole * 10 + (text[pos] - '0');
        ++pos;
    }
    int64_t frac = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        int digits = 0;
        if (pos >= text.size()) return std::nullopt;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            if (digits < 6) {
                frac = frac * 10 + (text[pos] - '0');
                ++digits;
            }
            ++pos;
        }
        while (digits < 6) {
            frac *= 10;
            ++digits;
        }
    }
    if (pos != text.size()) return std::nullopt;
    int64_t micros = whole * kDecimalScale + frac;
    return Decimal{negative ? -micros : micros};
}

Decimal Decimal::from_double(double d) {
    return Decimal{static_cast<int64_t>(std::llround(d * static_cast<double>(kDecimalScale)))};
}

std::string Decimal::to_string() const {
    int64_t m = micros;
    std::string out;
    if (m < 0) {
        out += '-';
        m = -m;
    }
    out += std::to_string(m / kDecimalScale);
    int64_t frac = m % kDecimalScale;
    if (frac != 0) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(frac));
        std::string fs(buf);
        while (!fs.empty() && fs.back() == '0') fs.pop_back();
        out += '.';
        out += fs;
    }
    return out;
}

ScalarKind kind_of(const Value& v) {
    return static_cast<ScalarKind>(v.index() + 1);
}

std::optional<int> compare_values(const Value& a, const Value& b) {
    if (a.index() != b.index()) return std::nullopt;
    if (a < b) return -1;
    if (b < a) return 1;
    return 0;
}

std::string value_text(const Value& v) {
    switch (kind_of(v)) {
        case ScalarKind::Int64: return std::to_string(std::get<int64_t>(v));
        case ScalarKind::Decimal: return std::get<Decimal>(v).to_string();
        case ScalarKind::Text: return std::get<std::string>(v);
        case ScalarKind::Bool: return std::get<bool>(v) ? "true" : "false";
        case ScalarKind::TimestampMillis: return std::to_string(std::get<Timestamp>(v).millis);
        case ScalarKind::GeoPoint: {
            const auto& g = std::get<GeoPoint>(v);
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g,%.17g", g.x, g.y);
            return buf;
        }
    }
    return {};
}

json value_to_json(const Value& v) {
    switch (kind_of(v)) {
        case ScalarKind::Int64: return std::get<int64_t>(v);
        case ScalarKind::Decimal: return std::get<Decimal>(v).to_string();
        case ScalarKind::Text: return std::get<std::string>(v);
        case ScalarKind::Bool: return std::get<bool>(v);
        case ScalarKind::TimestampMillis: return std::get<Timestamp>(v).millis;
        case ScalarKind::GeoPoint: {
            const auto& g = std::get<GeoPoint>(v);
            return json::array({g.x, g.y});
        }
    }
    return nullptr;
}

Result<Value> value_from_json(ScalarKind kind, const json& j) {
    switch (kind) {
        case ScalarKind::Int64:
            if (j.is_number_integer()) return Value{j.get<int64_t>()};
            break;
        case ScalarKind::Decimal:
            if (j.is_string()) {
                auto d = Decimal::parse(j.get<std::string>());
                if (d) return Value{*d};
            } else if (j.is_number_integer()) {
                return Value{Decimal{j.get<int64_t>() * 1000000}};
            } else if (j.is_number_float()) {
                return Value{Decimal::from_double(j.get<double>())};
            }
            break;
        case ScalarKind::Text:
            if (j.is_string()) return Value{j.get<std::string>()};
            break;
        case ScalarKind::Bool:
            if (j.is_boolean()) return Value{j.get<bool>()};
            break;
        case ScalarKind::TimestampMillis:
            if (j.is_number_integer()) return Value{Timestamp{j.get<int64_t>()}};
            break;
        case ScalarKind::GeoPoint:
            if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
                return Value{GeoPoint{j[0].get<double>(), j[1].get<double>()}};
            break;
    }
    return Result<Value>(ErrorCode::TypeMismatch,
                         std::string("expected ") + scalar_kind_name(kind) + ", got " + j.dump());
}

Result<Value> value_from_json_inferred(const json& j) {
    if (j.is_number_integer()) return Value{j.get<int64_t>()};
    if (j.is_number_float()) return Value{Decimal::from_double(j.get<double>())};
    if (j.is_string()) return Value{j.get<std::string>()};
    if (j.is_boolean()) return Value{j.get<bool>()};
    return Result<Value>(ErrorCode::TypeMismatch, "unsupported predicate value: " + j.dump());
}

std::optional<int> compare_json_to_value(const json& field, const Value& v) {
    switch (kind_of(v)) {
        case ScalarKind::Int64:
        case ScalarKind::TimestampMillis: {
            int64_t want = kind_of(v) == ScalarKind::Int64 ? std::get<int64_t>(v)
                                                           : std::get<Timestamp>(v).millis;
            if (field.is_number_integer()) {
                int64_t got = field.get<int64_t>();
                return sign_of(got - want);
            }
            if (field.is_number_float()) {
                double got = field.get<double>();
                double w = static_cast<double>(want);
                return got < w ? -1 : (got > w ? 1 : 0);
            }
            return std::nullopt;
        }
        case ScalarKind::Decimal: {
            Decimal want = std::get<Decimal>(v);
            std::optional<Decimal> got;
            if (field.is_string()) got = Decimal::parse(field.get<std::string>());
            else if (field.is_number_integer()) got = Decimal{field.get<int64_t>() * 1000000};
            else if (field.is_number_float()) got = Decimal::from_double(field.get<double>());
            if (!got) return std::nullopt;
            if (*got < want) return -1;
            if (want < *got) return 1;
            return 0;
        }
        case ScalarKind::Text: {
            if (!field.is_string()) return std::nullopt;
            const std::string& got = field.get_ref<const std::string&>();
            const std::string& want = std::get<std::string>(v);
            return got.compare(want) < 0 ? -1 : (got.compare(want) > 0 ? 1 : 0);
        }
        case ScalarKind::Bool: {
            if (!field.is_boolean()) return std::nullopt;
            bool got = field.get<bool>(), want = std::get<bool>(v);
            return got == want ? 0 : (got < want ? -1 : 1);
        }
        case ScalarKind::GeoPoint:
            return std::nullopt;  // geo points are not orderable in predicates
    }
    return std::nullopt;
}

std::string row_to_string(const Row& row) {
    std::string out = "{";
    bool first = true;
    for (const auto& [name, value] : row) {
        if (!first) out += ", ";
        first = false;
        out += name;
        out += "=";
        out += value_text(value);
    }
    out += "}";
    return out;
}

json row_to_json(const Row& row) {
    json j = json::object();
    for (const auto& [name, value] : row) j[name] = value_to_json(value);
    return j;
}

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

}  // namespace polystore
