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

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "polystore/value.hpp"

namespace polystore {

enum class DataClassKind { Structured, SemiStructured, Unstructured };
enum class UnstructuredVariant { Document, KeyValue, Graph, SpatialTemporal };
enum class EngineKind { Relational, DocumentStore, KeyValueStore, GraphStore, SpatialTemporalStore };
enum class Cardinality { OneToOne, OneToMany, ManyToMany };
enum class CrudOp : uint8_t { Create = 1, Retrieve = 2, Update = 4, Delete = 8 };
enum class Placement { PublicCloud, TenantPremise };

const char* engine_kind_name(EngineKind kind);

struct DataClass {
    DataClassKind kind = DataClassKind::Structured;
    // Present for SemiStructured/Unstructured; SemiStructured defaults to
    // Document when omitted.
    std::optional<UnstructuredVariant> variant;

    static DataClass structured() { return {DataClassKind::Structured, std::nullopt}; }
    static DataClass semi_structured(
        std::optional<UnstructuredVariant> v = std::nullopt) {
        return {DataClassKind::SemiStructured, v};
    }
    static DataClass unstructured(UnstructuredVariant v) {
        return {DataClassKind::Unstructured, v};
    }
};

struct FieldDef {
    std::string name;
    ScalarKind scalar = ScalarKind::Int64;
    bool nullable = false;
};

struct Relationship {
    std::string name;
    std::string from_entity;
    std::string to_entity;
    Cardinality cardinality = Cardinality::OneToMany;
    std::vector<std::string> key_fields;  // on from_entity, non-nullable
};

struct EntitySchema {
    std::string entity;
    DataClass data_class;
    std::vector<FieldDef> fields;          // required for Structured
    std::vector<std::string> primary_key;  // Structured only
    std::vector<Relationship> relationships;
    bool acid_required = false;
    uint8_t allowed_ops = 0xF;  // CrudOp bitmask, all by default
    Placement placement = Placement::PublicCloud;

    bool allows(CrudOp op) const { return allowed_ops & static_cast<uint8_t>(op); }
    const FieldDef* field(const std::string& name) const;
    bool is_structured() const { return data_class.kind == DataClassKind::Structured; }
};

struct Violation {
    std::string code;  // e.g. MissingPrimaryKey, AcidRequiresStructured
    std::string detail;
};

struct DataDictionary {
    uint64_t version = 0;
    std::map<std::string, EntitySchema> entities;
    std::map<std::string, EngineKind> engine_binding;

    const EntitySchema* find(const std::string& entity) const;
};

using DictionaryPtr = std::shared_ptr<const DataDictionary>;

struct TenantConfig {
    std::string tenant_id;
    std::map<std::string, Placement> placement_overrides;
    std::optional<std::string> premise_endpoint;
};

struct PlacementTarget {
    Placement placement = Placement::PublicCloud;
    std::string endpoint;  // set for TenantPremise

    friend bool operator==(const PlacementTarget& a, const PlacementTarget& b) {
        return a.placement == b.placement && a.endpoint == b.endpoint;
    }
};

// Pure classification: Structured -> Relational, otherwise the engine that
// matches the variant (SemiStructured without a variant -> DocumentStore).
EngineKind classify(const EntitySchema& schema);

// Returns every violated invariant; empty means valid. When dict is given,
// relationship targets are resolved against it (plus the schema itself).
std::vector<Violation> validate_schema(const EntitySchema& schema,
                                       const DataDictionary* dict = nullptr);

// Registers a new entity, returning version+1. The input dictionary is never
// mutated; versions are immutable values.
Result<DataDictionary> define_schema(const DataDictionary& dict, EntitySchema schema);

// Additive-only evolution: appends new nullable fields to an existing entity.
// Anything destructive (drops, type changes, non-nullable adds) is rejected.
Result<DataDictionary> evolve_schema(const DataDictionary& dict, const std::string& entity,
                                     const std::vector<FieldDef>& new_fields);

Result<PlacementTarget> resolve_placement(const EntitySchema& schema, const TenantConfig& tenant);

// Wire encoding of one entity declaration (the `schema apply` file carries
// one JSON document per line).
json schema_to_json(const EntitySchema& schema);
Result<EntitySchema> schema_from_json(const json& j);

}  // namespace polystore
