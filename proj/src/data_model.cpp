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

#include "polystore/data_model.hpp"

#include <algorithm>
#include <set>

namespace polystore {

const char* engine_kind_name(EngineKind kind) {
    switch (kind) {
        case EngineKind::Relational: return "relational";
        case EngineKind::DocumentStore: return "document";
        case EngineKind::KeyValueStore: return "key_value";
        case EngineKind::GraphStore: return "graph";
        case EngineKind::SpatialTemporalStore: return "spatial_temporal";
    }
    return "unknown";
}

const FieldDef* EntitySchema::field(const std::string& name) const {
    for (const auto& f : fields)
        if (f.name == name) return &f;
    return nullptr;
}

const EntitySchema* DataDictionary::find(const std::string& entity) const {
    auto it = entities.find(entity);
    return it == entities.end() ? nullptr : &it->second;
}

EngineKind classify(const EntitySchema& schema) {
    switch (schema.data_class.kind) {
        case DataClassKind::Structured:
            return EngineKind::Relational;
        case DataClassKind::SemiStructured:
        case DataClassKind::Unstructured: {
            auto variant = schema.data_class.variant.value_or(UnstructuredVariant::Document);
            switch (variant) {
                case UnstructuredVariant::Document: return EngineKind::DocumentStore;
                case UnstructuredVariant::KeyValue: return EngineKind::KeyValueStore;
                case UnstructuredVariant::Graph: return EngineKind::GraphStore;
                case UnstructuredVariant::SpatialTemporal: return EngineKind::SpatialTemporalStore;
            }
        }
    }
    return EngineKind::DocumentStore;
}

std::vector<Violation> validate_schema(const EntitySchema& schema, const DataDictionary* dict) {
    std::vector<Violation> out;
    auto add = [&](std::string code, std::string detail) {
        out.push_back({std::move(code), std::move(detail)});
    };

    if (!valid_identifier(schema.entity)) add("BadIdentifier", "entity '" + schema.entity + "'");

    if (schema.data_class.kind == DataClassKind::Structured && schema.data_class.variant)
        add("StructuredHasVariant", schema.entity);

    std::set<std::string> seen;
    for (const auto& f : schema.fields) {
        if (!valid_identifier(f.name)) add("BadIdentifier", "field '" + f.name + "'");
        if (!seen.insert(f.name).second) add("DuplicateField", f.name);
    }

    if (schema.is_structured()) {
        if (schema.primary_key.empty()) add("MissingPrimaryKey", schema.entity);
        for (const auto& pk : schema.primary_key) {
            const FieldDef* f = schema.field(pk);
            if (!f) add("UnknownPrimaryKeyField", pk);
            else if (f->nullable) add("NullablePrimaryKey", pk);
        }
    } else if (!schema.primary_key.empty()) {
        add("PrimaryKeyOnNonStructured", schema.entity);
    }

    if (schema.acid_required && !schema.is_structured())
        add("AcidRequiresStructured", schema.entity);

    for (const auto& rel : schema.relationships) {
        if (!valid_identifier(rel.name)) add("BadIdentifier", "relationship '" + rel.name + "'");
        if (rel.from_entity != schema.entity)
            add("RelationshipFromMismatch", rel.name);
        bool target_known = rel.to_entity == schema.entity ||
                            (dict && dict->find(rel.to_entity) != nullptr);
        if (!target_known) add("UnknownRelationshipTarget", rel.name + " -> " + rel.to_entity);
        if (rel.key_fields.empty()) add("EmptyRelationshipKey", rel.name);
        for (const auto& kf : rel.key_fields) {
            const FieldDef* f = schema.field(kf);
            if (!f) add("UnknownRelationshipKeyField", rel.name + "." + kf);
            else if (f->nullable) add("NullableRelationshipKeyField", rel.name + "." + kf);
        }
    }
    return out;
}

namespace {

std::string violations_text(const std::vector<Violation>& vs) {
    std::string s;
    for (size_t i = 0; i < vs.size(); ++i) {
        if (i) s += "; ";
        s += vs[i].code;
        if (!vs[i].detail.empty()) s += "(" + vs[i].detail + ")";
    }
    return s;
}

}  // namespace

Result<DataDictionary> define_schema(const DataDictionary& dict, EntitySchema schema) {
    if (dict.find(schema.entity))
        return Result<DataDictionary>(ErrorCode::DuplicateEntity, schema.entity);
    // Normalize the stated default before validation.
    if (schema.data_class.kind == DataClassKind::SemiStructured && !schema.data_class.variant)
        schema.data_class.variant = UnstructuredVariant::Document;
    auto violations = validate_schema(schema, &dict);
    if (!violations.empty())
        return Result<DataDictionary>(ErrorCode::ValidationFailed, violations_text(violations));

    DataDictionary next = dict;
    next.version = dict.version + 1;
    next.engine_binding[schema.entity] = classify(schema);
    next.entities[schema.entity] = std::move(schema);
    return next;
}

Result<DataDictionary> evolve_schema(const DataDictionary& dict, const std::string& entity,
                                     const std::vector<FieldDef>& new_fields) {
    const EntitySchema* current = dict.find(entity);
    if (!current) return Result<DataDictionary>(ErrorCode::UnknownEntity, entity);

    EntitySchema evolved = *current;
    for (const auto& f : new_fields) {
        if (!f.nullable)
            return Result<DataDictionary>(ErrorCode::ValidationFailed,
                                          "new field '" + f.name + "' must be nullable");
        if (evolved.field(f.name))
            return Result<DataDictionary>(ErrorCode::ValidationFailed,
                                          "field '" + f.name + "' already exists");
        evolved.fields.push_back(f);
    }
    auto violations = validate_schema(evolved, &dict);
    if (!violations.empty())
        return Result<DataDictionary>(ErrorCode::ValidationFailed, violations_text(violations));

    DataDictionary next = dict;
    next.version = dict.version + 1;
    next.entities[entity] = std::move(evolved);
    return next;
}

Result<PlacementTarget> resolve_placement(const EntitySchema& schema, const TenantConfig& tenant) {
    Placement effective = schema.placement;
    auto it = tenant.placement_overrides.find(schema.entity);
    if (it != tenant.placement_overrides.end()) effective = it->second;

    if (effective == Placement::PublicCloud) return PlacementTarget{Placement::PublicCloud, {}};
    if (!tenant.premise_endpoint || tenant.premise_endpoint->empty())
        return Result<PlacementTarget>(ErrorCode::MissingPremiseEndpoint, tenant.tenant_id);
    return PlacementTarget{Placement::TenantPremise, *tenant.premise_endpoint};
}

namespace {

const char* class_name(DataClassKind k) {
    switch (k) {
        case DataClassKind::Structured: return "structured";
        case DataClassKind::SemiStructured: return "semi_structured";
        case DataClassKind::Unstructured: return "unstructured";
    }
    return "?";
}

const char* variant_name(UnstructuredVariant v) {
    switch (v) {
        case UnstructuredVariant::Document: return "document";
        case UnstructuredVariant::KeyValue: return "key_value";
        case UnstructuredVariant::Graph: return "graph";
        case UnstructuredVariant::SpatialTemporal: return "spatial_temporal";
    }
    return "?";
}

const char* cardinality_name(Cardinality c) {
    switch (c) {
        case Cardinality::OneToOne: return "one_to_one";
        case Cardinality::OneToMany: return "one_to_many";
        case Cardinality::ManyToMany: return "many_to_many";
    }
    return "?";
}

}  // namespace

json schema_to_json(const EntitySchema& schema) {
    json j;
    j["entity"] = schema.entity;
    j["class"] = class_name(schema.data_class.kind);
    if (schema.data_class.variant) j["variant"] = variant_name(*schema.data_class.variant);
    json fields = json::array();
    for (const auto& f : schema.fields)
        fields.push_back({{"name", f.name},
                          {"type", scalar_kind_name(f.scalar)},
                          {"nullable", f.nullable}});
    j["fields"] = fields;
    if (!schema.primary_key.empty()) j["primary_key"] = schema.primary_key;
    if (!schema.relationships.empty()) {
        json rels = json::array();
        for (const auto& r : schema.relationships)
            rels.push_back({{"name", r.name},
                            {"to", r.to_entity},
                            {"cardinality", cardinality_name(r.cardinality)},
                            {"key_fields", r.key_fields}});
        j["relationships"] = rels;
    }
    j["acid"] = schema.acid_required;
    json ops = json::array();
    if (schema.allows(CrudOp::Create)) ops.push_back("create");
    if (schema.allows(CrudOp::Retrieve)) ops.push_back("retrieve");
    if (schema.allows(CrudOp::Update)) ops.push_back("update");
    if (schema.allows(CrudOp::Delete)) ops.push_back("delete");
    j["ops"] = ops;
    j["placement"] = schema.placement == Placement::PublicCloud ? "public_cloud" : "tenant_premise";
    return j;
}

Result<EntitySchema> schema_from_json(const json& j) {
    auto bad = [](const std::string& msg) {
        return Result<EntitySchema>(ErrorCode::MalformedMessage, msg);
    };
    if (!j.is_object() || !j.contains("entity")) return bad("schema needs 'entity'");

    EntitySchema s;
    s.entity = j.at("entity").get<std::string>();

    std::string cls = j.value("class", "structured");
    if (cls == "structured") s.data_class.kind = DataClassKind::Structured;
    else if (cls == "semi_structured") s.data_class.kind = DataClassKind::SemiStructured;
    else if (cls == "unstructured") s.data_class.kind = DataClassKind::Unstructured;
    else return bad("unknown class '" + cls + "'");

    if (j.contains("variant")) {
        std::string v = j.at("variant").get<std::string>();
        if (v == "document") s.data_class.variant = UnstructuredVariant::Document;
        else if (v == "key_value") s.data_class.variant = UnstructuredVariant::KeyValue;
        else if (v == "graph") s.data_class.variant = UnstructuredVariant::Graph;
        else if (v == "spatial_temporal") s.data_class.variant = UnstructuredVariant::SpatialTemporal;
        else return bad("unknown variant '" + v + "'");
    } else if (s.data_class.kind == DataClassKind::Unstructured) {
        return bad("unstructured entities need a variant");
    }

    for (const auto& jf : j.value("fields", json::array())) {
        FieldDef f;
        f.name = jf.at("name").get<std::string>();
        auto kind = scalar_kind_from_name(jf.at("type").get<std::string>());
        if (!kind) return bad("unknown field type on '" + f.name + "'");
        f.scalar = *kind;
        f.nullable = jf.value("nullable", false);
        s.fields.push_back(std::move(f));
    }
    if (j.contains("primary_key"))
        s.primary_key = j.at("primary_key").get<std::vector<std::string>>();

    for (const auto& jr : j.value("relationships", json::array())) {
        Relationship r;
        r.name = jr.at("name").get<std::string>();
        r.from_entity = s.entity;
        r.to_entity = jr.at("to").get<std::string>();
        std::string card = jr.value("cardinality", "one_to_many");
        if (card == "one_to_one") r.cardinality = Cardinality::OneToOne;
        else if (card == "one_to_many") r.cardinality = Cardinality::OneToMany;
        else if (card == "many_to_many") r.cardinality = Cardinality::ManyToMany;
        else return bad("unknown cardinality '" + card + "'");
        r.key_fields = jr.at("key_fields").get<std::vector<std::string>>();
        s.relationships.push_back(std::move(r));
    }

    s.acid_required = j.value("acid", false);
    if (j.contains("ops")) {
        s.allowed_ops = 0;
        for (const auto& jo : j.at("ops")) {
            std::string op = jo.get<std::string>();
            if (op == "create") s.allowed_ops |= static_cast<uint8_t>(CrudOp::Create);
            else if (op == "retrieve") s.allowed_ops |= static_cast<uint8_t>(CrudOp::Retrieve);
            else if (op == "update") s.allowed_ops |= static_cast<uint8_t>(CrudOp::Update);
            else if (op == "delete") s.allowed_ops |= static_cast<uint8_t>(CrudOp::Delete);
            else return bad("unknown op '" + op + "'");
        }
    }
    std::string placement = j.value("placement", "public_cloud");
    if (placement == "public_cloud") s.placement = Placement::PublicCloud;
    else if (placement == "tenant_premise") s.placement = Placement::TenantPremise;
    else return bad("unknown placement '" + placement + "'");
    return s;
}

}  // namespace polystore
