#ifndef AGENTJIT_MANIFEST_HPP
#define AGENTJIT_MANIFEST_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pattern.hpp"
#include "schema.hpp"

namespace agentjit {

enum class ToolType { Observe, ListItems, GetFields, SetFilter, SetFields, GotoItem, GotoField, Other };

inline ToolType tool_type_from_string(const std::string& s) {
    if (s == "observe") return ToolType::Observe;
    if (s == "listItems") return ToolType::ListItems;
    if (s == "getFields") return ToolType::GetFields;
    if (s == "setFilter") return ToolType::SetFilter;
    if (s == "setFields") return ToolType::SetFields;
    if (s == "gotoItem") return ToolType::GotoItem;
    if (s == "gotoField") return ToolType::GotoField;
    return ToolType::Other;
}

// One tool's contract. pre_check / post_check / execute bodies are opaque
// script text; nothing in this library ever runs them.
struct ToolManifest {
    std::string name;
    ToolType tool_type = ToolType::Other;
    std::string description;
    ValueSchema input_schema;
    ValueSchema output_schema;
    PatternState pre;
    PatternState post;
    std::string pre_check;
    std::string post_check;
    std::string execute;
    std::map<std::string, std::vector<std::string>> pre_tools;
    Json raw;  // original document, unknown fields preserved
};

struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline PatternState parse_pattern_state(const Json& j, const std::string& what) {
    if (!j.is_object()) throw ManifestError(what + " must be a JSON object");
    PatternState out;
    for (auto& [key, val] : j.items()) out.emplace(key, pattern_from_json(val));
    return out;
}

inline ToolManifest parse_manifest(const Json& j) {
    ToolManifest m;
    m.raw = j;
    if (!j.contains("name") || !j.at("name").is_string() || j.at("name").get<std::string>().empty())
        throw ManifestError("manifest needs a non-empty 'name'");
    m.name = j.at("name").get<std::string>();
    m.tool_type = tool_type_from_string(j.value("type", "other"));
    m.description = j.value("description", "");
    m.input_schema = parse_value_schema(j.value("input_schema", Json{{"type", "object"}}));
    m.output_schema = parse_value_schema(j.value("output_schema", Json{{"type", "object"}}));
    if (!m.input_schema.is_object())
        throw ManifestError(m.name + ": input_schema must be an object schema");
    m.pre = parse_pattern_state(j.value("pre", Json::object()), m.name + ".pre");
    m.post = parse_pattern_state(j.value("post", Json::object()), m.name + ".post");
    m.pre_check = j.value("pre_check", "");
    m.post_check = j.value("post_check", "");
    m.execute = j.value("execute", "");
    if (j.contains("pre_tools")) {
        for (auto& [param, sources] : j.at("pre_tools").items()) {
            std::vector<std::string> names;
            for (const auto& s : sources) names.push_back(s.get<std::string>());
            m.pre_tools.emplace(param, std::move(names));
        }
    }
    // Every $param in post must name a declared input parameter.
    for (const auto& [key, pat] : m.post) {
        if (auto* r = std::get_if<StatePattern::ParamRef>(&pat.variant)) {
            if (!m.input_schema.properties.count(r->name))
                throw ManifestError(m.name + ": post." + key + " references undeclared parameter $" +
                                    r->name);
        }
    }
    return m;
}

// Immutable after construction; safe to share across planner workers.
class ManifestSet {
public:
    ManifestSet() = default;

    void add(ToolManifest m) {
        if (by_name_.count(m.name)) throw ManifestError("duplicate tool name: " + m.name);
        order_.push_back(m.name);
        by_name_.emplace(m.name, std::move(m));
    }

    const ToolManifest* find(const std::string& name) const {
        auto it = by_name_.find(name);
        return it == by_name_.end() ? nullptr : &it->second;
    }

    const std::vector<std::string>& names() const { return order_; }
    bool empty() const { return by_name_.empty(); }
    size_t size() const { return by_name_.size(); }

private:
    std::map<std::string, ToolManifest> by_name_;
    std::vector<std::string> order_;
};

// Loads every *.json in a directory as one manifest per file.
inline ManifestSet load_manifest_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ManifestError("manifest directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    ManifestSet set;
    for (const auto& f : files) {
        std::ifstream in(f);
        Json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw ManifestError(f.string() + ": " + e.what());
        }
        set.add(parse_manifest(j));
    }
    return set;
}

}  // namespace agentjit

#endif
