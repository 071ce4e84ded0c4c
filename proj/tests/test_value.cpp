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

#include <doctest.h>

#include "polystore/predicate.hpp"
#include "polystore/value.hpp"

using namespace polystore;

TEST_CASE("decimal parse and canonical text") {
    CHECK(Decimal::parse("1.5")->micros == 1500000);
    CHECK(Decimal::parse("-2.25")->micros == -2250000);
    CHECK(Decimal::parse("3")->micros == 3000000);
    CHECK(Decimal::parse("0.000001")->micros == 1);
    CHECK(!Decimal::parse(""));
    CHECK(!Decimal::parse("abc"));
    CHECK(!Decimal::parse("1."));
    CHECK(Decimal{1500000}.to_string() == "1.5");
    CHECK(Decimal{-2250000}.to_string() == "-2.25");
    CHECK(Decimal{3000000}.to_string() == "3");
    CHECK(Decimal{1}.to_string() == "0.000001");
}

TEST_CASE("decimal round-trips through text") {
    for (int64_t micros : {0L, 1L, -1L, 999999L, 1000000L, -77250000L, 123456789L}) {
        Decimal d{micros};
        CHECK(Decimal::parse(d.to_string())->micros == micros);
    }
}

TEST_CASE("value text forms") {
    CHECK(value_text(Value{int64_t{42}}) == "42");
    CHECK(value_text(Value{std::string("abc")}) == "abc");
    CHECK(value_text(Value{true}) == "true");
    CHECK(value_text(Value{Timestamp{1700000000000}}) == "1700000000000");
    CHECK(value_text(Value{Decimal{1500000}}) == "1.5");
}

TEST_CASE("json conversion respects scalar kinds") {
    auto v = value_from_json(ScalarKind::Int64, json(7));
    REQUIRE(v.is_ok());
    CHECK(std::get<int64_t>(v.value()) == 7);

    CHECK(!value_from_json(ScalarKind::Int64, json("7")).is_ok());
    CHECK(std::get<Decimal>(value_from_json(ScalarKind::Decimal, json("1.5")).value()).micros ==
          1500000);
    CHECK(std::get<Decimal>(value_from_json(ScalarKind::Decimal, json(2)).value()).micros ==
          2000000);
    auto geo = value_from_json(ScalarKind::GeoPoint, json::array({1.0, -2.0}));
    REQUIRE(geo.is_ok());
    CHECK(std::get<GeoPoint>(geo.value()).x == 1.0);

    CHECK(value_to_json(Value{Decimal{1500000}}) == json("1.5"));
    CHECK(value_to_json(Value{Timestamp{5}}) == json(5));
}

TEST_CASE("predicate evaluation over rows") {
    Row row{{"a", int64_t{5}}, {"b", std::string("x")}};
    Predicate p;
    p.conditions.push_back({"a", CompareOp::Gt, Value{int64_t{3}}, std::nullopt});
    CHECK(p.matches_row(row).value());
    p.conditions.push_back({"b", CompareOp::Eq, Value{std::string("x")}, std::nullopt});
    CHECK(p.matches_row(row).value());
    p.conditions.push_back({"a", CompareOp::Range, Value{int64_t{1}}, Value{int64_t{4}}});
    CHECK(!p.matches_row(row).value());

    Predicate mismatched;
    mismatched.conditions.push_back({"a", CompareOp::Eq, Value{std::string("5")}, std::nullopt});
    CHECK(mismatched.matches_row(row).code() == ErrorCode::TypeMismatch);

    Predicate absent;
    absent.conditions.push_back({"zz", CompareOp::Eq, Value{int64_t{1}}, std::nullopt});
    CHECK(!absent.matches_row(row).value());
}

TEST_CASE("predicate canonical text is order independent") {
    Predicate p1, p2;
    p1.conditions.push_back({"b", CompareOp::Lt, Value{int64_t{9}}, std::nullopt});
    p1.conditions.push_back({"a", CompareOp::Eq, Value{int64_t{1}}, std::nullopt});
    p2.conditions.push_back({"a", CompareOp::Eq, Value{int64_t{1}}, std::nullopt});
    p2.conditions.push_back({"b", CompareOp::Lt, Value{int64_t{9}}, std::nullopt});
    CHECK(p1.canonical_text() == p2.canonical_text());
    CHECK(p1.canonical_text() == "a = 1 & b < 9");
}

TEST_CASE("predicate against documents is lenient about types") {
    Predicate p;
    p.conditions.push_back({"amount", CompareOp::Gt, Value{Decimal{1000000}}, std::nullopt});
    CHECK(p.matches_document(json{{"amount", "1.5"}}));
    CHECK(!p.matches_document(json{{"amount", "0.5"}}));
    CHECK(!p.matches_document(json{{"amount", true}}));  // incomparable, no error
    CHECK(!p.matches_document(json{{"other", 1}}));
}

TEST_CASE("identifiers") {
    CHECK(valid_identifier("abc"));
    CHECK(valid_identifier("_a1"));
    CHECK(!valid_identifier(""));
    CHECK(!valid_identifier("1a"));
    CHECK(!valid_identifier("a-b"));
}
