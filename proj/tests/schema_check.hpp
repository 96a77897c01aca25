#pragma once

// Validator for the subset of JSON Schema used by docs/report.schema.json:
// type (string or list), const, enum, required, properties,
// additionalProperties = false, items, minimum and maximum.

#include <string>
#include <vector>

#include <json.hpp>

namespace schema_check {

using Json = nlohmann::json;

inline bool has_type(const Json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    return false;
}

inline void check(const Json& schema, const Json& v, const std::string& at, std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        bool ok = false;
        if (schema["type"].is_array()) {
            for (const auto& t : schema["type"]) ok = ok || has_type(v, t.get<std::string>());
        } else {
            ok = has_type(v, schema["type"].get<std::string>());
        }
        if (!ok) {
            errors.push_back(at + ": wrong type");
            return;
        }
    }
    if (schema.contains("const") && v != schema["const"]) errors.push_back(at + ": const mismatch");
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema["enum"]) found = found || e == v;
        if (!found) errors.push_back(at + ": not in enum");
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (schema.contains("minimum") && x < schema["minimum"].get<double>()) errors.push_back(at + ": below minimum");
        if (schema.contains("maximum") && x > schema["maximum"].get<double>()) errors.push_back(at + ": above maximum");
    }
    if (v.is_object()) {
        if (schema.contains("required")) {
            for (const auto& k : schema["required"]) {
                if (!v.contains(k.get<std::string>())) errors.push_back(at + ": missing " + k.get<std::string>());
            }
        }
        const Json props = schema.value("properties", Json::object());
        for (const auto& [k, sub] : v.items()) {
            if (props.contains(k)) {
                check(props[k], sub, at + "/" + k, errors);
            } else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false) {
                errors.push_back(at + ": unexpected key " + k);
            }
        }
    }
    if (v.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) check(schema["items"], v[i], at + "/" + std::to_string(i), errors);
    }
}

inline std::vector<std::string> errors(const Json& schema, const Json& v) {
    std::vector<std::string> out;
    check(schema, v, "", out);
    return out;
}

} // namespace schema_check
