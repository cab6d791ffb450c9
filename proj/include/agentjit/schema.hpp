#ifndef AGENTJIT_SCHEMA_HPP
#define AGENTJIT_SCHEMA_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace agentjit {

using Json = nlohmann::json;

// Structural value schema: the subset of JSON Schema the tool protocol uses
// (typed object properties with a required list, arrays, scalar leaves,
// optional enum). No $ref / allOf.
struct ValueSchema {
    enum class Kind { Object, Array, String, Number, Integer, Boolean };

    Kind kind = Kind::Object;
    std::map<std::string, ValueSchema> properties;  // object only
    std::vector<std::string> required;              // object only
    std::shared_ptr<ValueSchema> items;             // array only
    std::vector<Json> enum_values;

    bool is_object() const { return kind == Kind::Object; }

    static const char* kind_name(Kind k) {
        switch (k) {
            case Kind::Object: return "object";
            case Kind::Array: return "array";
            case Kind::String: return "string";
            case Kind::Number: return "number";
            case Kind::Integer: return "integer";
            case Kind::Boolean: return "boolean";
        }
        return "?";
    }
};

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline ValueSchema parse_value_schema(const Json& j, const std::string& path = "$") {
    if (!j.is_object()) throw SchemaError(path + ": schema must be a JSON object");
    ValueSchema s;
    std::string type = j.value("type", "object");
    if (type == "object") s.kind = ValueSchema::Kind::Object;
    else if (type == "array") s.kind = ValueSchema::Kind::Array;
    else if (type == "string") s.kind = ValueSchema::Kind::String;
    else if (type == "number") s.kind = ValueSchema::Kind::Number;
    else if (type == "integer") s.kind = ValueSchema::Kind::Integer;
    else if (type == "boolean") s.kind = ValueSchema::Kind::Boolean;
    else throw SchemaError(path + ": unsupported schema type '" + type + "'");

    if (s.kind == ValueSchema::Kind::Object) {
        if (j.contains("properties")) {
            for (auto& [name, sub] : j.at("properties").items())
                s.properties.emplace(name, parse_value_schema(sub, path + "." + name));
        }
        for (const auto& r : j.value("required", Json::array())) {
            std::string name = r.get<std::string>();
            if (!s.properties.count(name))
                throw SchemaError(path + ": required name '" + name + "' not in properties");
            s.required.push_back(name);
        }
    } else if (s.kind == ValueSchema::Kind::Array) {
        if (!j.contains("items")) throw SchemaError(path + ": array schema needs items");
        s.items = std::make_shared<ValueSchema>(parse_value_schema(j.at("items"), path + "[]"));
    }
    if (j.contains("enum")) {
        for (const auto& v : j.at("enum")) s.enum_values.push_back(v);
    }
    return s;
}

inline Json value_schema_to_json(const ValueSchema& s) {
    Json j;
    j["type"] = ValueSchema::kind_name(s.kind);
    if (s.kind == ValueSchema::Kind::Object) {
        Json props = Json::object();
        for (const auto& [name, sub] : s.properties) props[name] = value_schema_to_json(sub);
        j["properties"] = props;
        if (!s.required.empty()) j["required"] = s.required;
    } else if (s.kind == ValueSchema::Kind::Array) {
        j["items"] = value_schema_to_json(*s.items);
    }
    if (!s.enum_values.empty()) j["enum"] = s.enum_values;
    return j;
}

struct TypeError {
    std::string path;
    std::string message;
};

namespace detail {
inline bool kind_accepts(ValueSchema::Kind k, const Json& v) {
    switch (k) {
        case ValueSchema::Kind::Object: return v.is_object();
        case ValueSchema::Kind::Array: return v.is_array();
        case ValueSchema::Kind::String: return v.is_string();
        case ValueSchema::Kind::Number: return v.is_number();
        case ValueSchema::Kind::Integer: return v.is_number_integer();
        case ValueSchema::Kind::Boolean: return v.is_boolean();
    }
    return false;
}

inline void check_value_at(const ValueSchema& s, const Json& v, const std::string& path,
                           std::vector<TypeError>& out) {
    if (!kind_accepts(s.kind, v)) {
        out.push_back({path, std::string("expected ") + ValueSchema::kind_name(s.kind)});
        return;
    }
    if (!s.enum_values.empty() &&
        std::find(s.enum_values.begin(), s.enum_values.end(), v) == s.enum_values.end()) {
        out.push_back({path, "value not in enum"});
    }
    if (s.kind == ValueSchema::Kind::Object) {
        for (const auto& r : s.required)
            if (!v.contains(r)) out.push_back({path + "." + r, "missing required property"});
        for (auto& [name, sub] : v.items()) {
            auto it = s.properties.find(name);
            if (it != s.properties.end()) check_value_at(it->second, sub, path + "." + name, out);
        }
    } else if (s.kind == ValueSchema::Kind::Array) {
        size_t i = 0;
        for (const auto& item : v)
            check_value_at(*s.items, item, path + "[" + std::to_string(i++) + "]", out);
    }
}
}  // namespace detail

// Structural validation of a value against a schema; returns all errors.
inline std::vector<TypeError> check_value(const ValueSchema& schema, const Json& value) {
    std::vector<TypeError> out;
    detail::check_value_at(schema, value, "$", out);
    return out;
}

}  // namespace agentjit

#endif
