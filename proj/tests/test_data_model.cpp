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

#include "polystore/data_model.hpp"
#include "polystore/sim/rng.hpp"

using namespace polystore;

namespace {

EntitySchema orders_schema() {
    EntitySchema s;
    s.entity = "orders";
    s.data_class = DataClass::structured();
    s.fields = {{"order_id", ScalarKind::Int64, false},
                {"amount", ScalarKind::Decimal, false},
                {"note", ScalarKind::Text, true}};
    s.primary_key = {"order_id"};
    s.acid_required = true;
    return s;
}

bool has_violation(const std::vector<Violation>& vs, const std::string& code) {
    for (const auto& v : vs)
        if (v.code == code) return true;
    return false;
}

}  // namespace

TEST_CASE("define_schema registers and classifies") {
    DataDictionary empty;
    auto v1 = define_schema(empty, orders_schema());
    REQUIRE(v1.is_ok());
    CHECK(v1.value().version == 1);
    CHECK(v1.value().engine_binding.at("orders") == EngineKind::Relational);
    CHECK(empty.entities.empty());  // input untouched

    // duplicate entity
    auto dup = define_schema(v1.value(), orders_schema());
    CHECK(dup.code() == ErrorCode::DuplicateEntity);

    // graph entity gets the graph engine
    EntitySchema friends;
    friends.entity = "friendships";
    friends.data_class = DataClass::unstructured(UnstructuredVariant::Graph);
    auto v2 = define_schema(v1.value(), friends);
    REQUIRE(v2.is_ok());
    CHECK(v2.value().version == 2);
    CHECK(v2.value().engine_binding.at("friendships") == EngineKind::GraphStore);
}

TEST_CASE("classify is variant-directed and total") {
    CHECK(classify(orders_schema()) == EngineKind::Relational);

    EntitySchema st;
    st.entity = "tracks";
    st.data_class = DataClass::unstructured(UnstructuredVariant::SpatialTemporal);
    CHECK(classify(st) == EngineKind::SpatialTemporalStore);

    EntitySchema semi;
    semi.entity = "profiles";
    semi.data_class = DataClass::semi_structured();
    CHECK(classify(semi) == EngineKind::DocumentStore);  // stated default

    semi.data_class = DataClass::semi_structured(UnstructuredVariant::KeyValue);
    CHECK(classify(semi) == EngineKind::KeyValueStore);
}

TEST_CASE("classify relational iff structured") {
    SplitMix64 rng(7);
    for (int i = 0; i < 200; ++i) {
        EntitySchema s;
        s.entity = "e" + std::to_string(i);
        switch (rng.below(3)) {
            case 0: {
                s.data_class = DataClass::structured();
                s.fields = {{"id", ScalarKind::Int64, false}};
                s.primary_key = {"id"};
                break;
            }
            case 1:
                s.data_class = DataClass::semi_structured(
                    rng.below(2) ? std::make_optional(UnstructuredVariant::Document)
                                 : std::nullopt);
                break;
            default:
                s.data_class = DataClass::unstructured(
                    static_cast<UnstructuredVariant>(rng.below(4)));
                break;
        }
        CHECK((classify(s) == EngineKind::Relational) ==
              (s.data_class.kind == DataClassKind::Structured));
    }
}

TEST_CASE("validate_schema reports every violated invariant") {
    EntitySchema s = orders_schema();
    s.primary_key.clear();
    CHECK(has_violation(validate_schema(s), "MissingPrimaryKey"));

    s = orders_schema();
    s.data_class = DataClass::semi_structured(UnstructuredVariant::Document);
    s.primary_key.clear();
    CHECK(has_violation(validate_schema(s), "AcidRequiresStructured"));

    s = orders_schema();
    s.fields[0].nullable = true;
    CHECK(has_violation(validate_schema(s), "NullablePrimaryKey"));

    s = orders_schema();
    s.fields.push_back({"order_id", ScalarKind::Text, false});
    CHECK(has_violation(validate_schema(s), "DuplicateField"));

    s = orders_schema();
    s.entity = "9bad";
    CHECK(has_violation(validate_schema(s), "BadIdentifier"));

    CHECK(validate_schema(orders_schema()).empty());
}

TEST_CASE("relationship invariants use the dictionary") {
    DataDictionary dict;
    auto with_orders = define_schema(dict, orders_schema());
    REQUIRE(with_orders.is_ok());

    EntitySchema line_items;
    line_items.entity = "line_items";
    line_items.data_class = DataClass::structured();
    line_items.fields = {{"item_id", ScalarKind::Int64, false},
                         {"order_ref", ScalarKind::Int64, false}};
    line_items.primary_key = {"item_id"};
    Relationship rel;
    rel.name = "of_order";
    rel.from_entity = "line_items";
    rel.to_entity = "orders";
    rel.key_fields = {"order_ref"};
    line_items.relationships = {rel};
    CHECK(validate_schema(line_items, &with_orders.value()).empty());

    // unknown target entity
    line_items.relationships[0].to_entity = "nope";
    CHECK(has_violation(validate_schema(line_items, &with_orders.value()),
                        "UnknownRelationshipTarget"));

    // nullable key field
    line_items.relationships[0].to_entity = "orders";
    line_items.fields[1].nullable = true;
    CHECK(has_violation(validate_schema(line_items, &with_orders.value()),
                        "NullableRelationshipKeyField"));
}

TEST_CASE("property: planted violations are always caught") {
    SplitMix64 rng(99);
    for (int round = 0; round < 300; ++round) {
        EntitySchema s = orders_schema();
        s.entity = "entity" + std::to_string(round);
        int plant = static_cast<int>(rng.below(4));
        std::string expect;
        switch (plant) {
            case 0:
                s.primary_key.clear();
                expect = "MissingPrimaryKey";
                break;
            case 1:
                s.fields[0].nullable = true;
                expect = "NullablePrimaryKey";
                break;
            case 2:
                s.primary_key = {"ghost"};
                expect = "UnknownPrimaryKeyField";
                break;
            default:
                s.data_class.variant = UnstructuredVariant::Document;
                expect = "StructuredHasVariant";
                break;
        }
        CHECK(has_violation(validate_schema(s), expect));
    }
}

TEST_CASE("evolve_schema is additive only") {
    DataDictionary dict;
    auto v1 = define_schema(dict, orders_schema());
    REQUIRE(v1.is_ok());

    auto v2 = evolve_schema(v1.value(), "orders", {{"tag", ScalarKind::Text, true}});
    REQUIRE(v2.is_ok());
    CHECK(v2.value().version == 2);
    CHECK(v2.value().find("orders")->field("tag") != nullptr);

    CHECK(evolve_schema(v1.value(), "orders", {{"x", ScalarKind::Text, false}}).code() ==
          ErrorCode::ValidationFailed);
    CHECK(evolve_schema(v1.value(), "orders", {{"amount", ScalarKind::Text, true}}).code() ==
          ErrorCode::ValidationFailed);
    CHECK(evolve_schema(v1.value(), "ghost", {}).code() == ErrorCode::UnknownEntity);
}

TEST_CASE("resolve_placement: override wins, premise needs endpoint") {
    EntitySchema s = orders_schema();
    TenantConfig tenant{"acme", {}, std::nullopt};

    auto rp = resolve_placement(s, tenant);
    REQUIRE(rp.is_ok());
    CHECK(rp.value().placement == Placement::PublicCloud);

    tenant.placement_overrides["orders"] = Placement::TenantPremise;
    CHECK(resolve_placement(s, tenant).code() == ErrorCode::MissingPremiseEndpoint);

    tenant.premise_endpoint = "10.0.0.5:7000";
    auto premise = resolve_placement(s, tenant);
    REQUIRE(premise.is_ok());
    CHECK(premise.value() == (PlacementTarget{Placement::TenantPremise, "10.0.0.5:7000"}));
}

TEST_CASE("schema wire encoding round-trips") {
    EntitySchema s = orders_schema();
    Relationship rel;
    rel.name = "placed_by";
    rel.from_entity = "orders";
    rel.to_entity = "customers";
    rel.cardinality = Cardinality::ManyToMany;
    rel.key_fields = {"order_id"};
    s.relationships = {rel};
    s.allowed_ops = static_cast<uint8_t>(CrudOp::Create) | static_cast<uint8_t>(CrudOp::Retrieve);

    auto back = schema_from_json(schema_to_json(s));
    REQUIRE(back.is_ok());
    const EntitySchema& b = back.value();
    CHECK(b.entity == s.entity);
    CHECK(b.fields.size() == s.fields.size());
    CHECK(b.primary_key == s.primary_key);
    CHECK(b.relationships.size() == 1);
    CHECK(b.relationships[0].cardinality == Cardinality::ManyToMany);
    CHECK(b.allowed_ops == s.allowed_ops);
    CHECK(b.acid_required == s.acid_required);
}

TEST_CASE("dictionary version sequence is gapless") {
    DataDictionary dict;
    uint64_t expect = 1;
    for (const char* name : {"a", "b", "c", "d"}) {
        EntitySchema s;
        s.entity = name;
        s.data_class = DataClass::semi_structured();
        auto next = define_schema(dict, s);
        REQUIRE(next.is_ok());
        dict = next.take();
        CHECK(dict.version == expect++);
    }
}
