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

#include "polystore/data_model.hpp"

namespace polystore::testing {

inline EntitySchema orders_schema() {
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

inline EntitySchema accounts_schema() {
    EntitySchema s;
    s.entity = "accounts";
    s.data_class = DataClass::structured();
    s.fields = {{"account_id", ScalarKind::Int64, false},
                {"balance", ScalarKind::Int64, false}};
    s.primary_key = {"account_id"};
    s.acid_required = true;
    return s;
}

inline DictionaryPtr dict_with(const std::vector<EntitySchema>& schemas) {
    DataDictionary dict;
    for (const auto& schema : schemas) {
        auto next = define_schema(dict, schema);
        if (!next.is_ok()) throw std::runtime_error("bad test schema: " + next.status().message);
        dict = next.take();
    }
    return std::make_shared<DataDictionary>(std::move(dict));
}

inline Row order_row(int64_t id, int64_t amount_micros, const char* note = nullptr) {
    Row row;
    row["order_id"] = id;
    row["amount"] = Decimal{amount_micros};
    if (note) row["note"] = std::string(note);
    return row;
}

inline Row account_row(int64_t id, int64_t balance) {
    Row row;
    row["account_id"] = id;
    row["balance"] = balance;
    return row;
}

inline Row pk_of(const char* field, int64_t id) {
    Row row;
    row[field] = id;
    return row;
}

}  // namespace polystore::testing
