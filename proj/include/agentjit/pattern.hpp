#ifndef AGENTJIT_PATTERN_HPP
#define AGENTJIT_PATTERN_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace agentjit {

using Json = nlohmann::json;

// Pattern language over abstract-state variables:
//   "*"      any non-null value
//   "a|b|c"  one of the listed values
//   "$x"     must equal the bound argument x
//   ""       must be null
//   else     concrete value (also numbers/bools when declared as JSON)
struct StatePattern {
    struct Any {};
    struct Null {};
    struct Concrete { Json value; };
    struct OneOf { std::vector<std::string> values; };
    struct ParamRef { std::string name; };

    std::variant<Concrete, Any, OneOf, ParamRef, Null> variant;

    bool is_any() const { return std::holds_alternative<Any>(variant); }
    bool is_null() const { return std::holds_alternative<Null>(variant); }
    bool is_concrete() const { return std::holds_alternative<Concrete>(variant); }
    bool is_one_of() const { return std::holds_alternative<OneOf>(variant); }
    bool is_param_ref() const { return std::holds_alternative<ParamRef>(variant); }
};

// Parsing is total: every text maps to some pattern variant.
inline StatePattern parse_pattern(const std::string& text) {
    if (text == "*") return {StatePattern::Any{}};
    if (text.empty()) return {StatePattern::Null{}};
    if (text.front() == '$' && text.size() > 1) return {StatePattern::ParamRef{text.substr(1)}};
    if (text.find('|') != std::string::npos) {
        std::vector<std::string> vals;
        std::string cur;
        std::stringstream ss(text);
        while (std::getline(ss, cur, '|')) vals.push_back(cur);
        // "a|a" collapses; a single distinct value is just a concrete
        std::vector<std::string> uniq;
        for (auto& v : vals)
            if (std::find(uniq.begin(), uniq.end(), v) == uniq.end()) uniq.push_back(v);
        if (uniq.size() >= 2) return {StatePattern::OneOf{std::move(uniq)}};
        return {StatePattern::Concrete{Json(uniq.front())}};
    }
    return {StatePattern::Concrete{Json(text)}};
}

// Non-string JSON values in pre/post maps are concrete patterns as-is.
inline StatePattern pattern_from_json(const Json& j) {
    if (j.is_string()) return parse_pattern(j.get<std::string>());
    if (j.is_null()) return {StatePattern::Null{}};
    return {StatePattern::Concrete{j}};
}

inline std::string render_pattern(const StatePattern& p) {
    struct V {
        std::string operator()(const StatePattern::Any&) const { return "*"; }
        std::string operator()(const StatePattern::Null&) const { return ""; }
        std::string operator()(const StatePattern::ParamRef& r) const { return "$" + r.name; }
        std::string operator()(const StatePattern::Concrete& c) const {
            return c.value.is_string() ? c.value.get<std::string>() : c.value.dump();
        }
        std::string operator()(const StatePattern::OneOf& o) const {
            std::string out;
            for (size_t i = 0; i < o.values.size(); ++i) {
                if (i) out += '|';
                out += o.values[i];
            }
            return out;
        }
    };
    return std::visit(V{}, p.variant);
}

// A tracked value in the static validator's state: either a known concrete
// JSON value, null, a widened unknown-but-non-null mark, or an unknown value
// constrained to a set (written by a OneOf postcondition).
struct TrackedValue {
    enum class Kind { Concrete, Null, UnknownNonNull, UnknownOneOf };
    Kind kind = Kind::Null;
    Json value;                        // Concrete only
    std::vector<std::string> allowed;  // UnknownOneOf only

    static TrackedValue concrete(Json v) {
        if (v.is_null()) return null();
        return {Kind::Concrete, std::move(v), {}};
    }
    static TrackedValue null() { return {Kind::Null, Json(), {}}; }
    static TrackedValue unknown() { return {Kind::UnknownNonNull, Json(), {}}; }
    static TrackedValue one_of(std::vector<std::string> vals) {
        return {Kind::UnknownOneOf, Json(), std::move(vals)};
    }

    bool operator==(const TrackedValue& o) const {
        return kind == o.kind && value == o.value && allowed == o.allowed;
    }

    std::string describe() const {
        switch (kind) {
            case Kind::Concrete: return value.is_string() ? value.get<std::string>() : value.dump();
            case Kind::Null: return "<null>";
            case Kind::UnknownNonNull: return "<unknown>";
            case Kind::UnknownOneOf: {
                std::string s = "<one of ";
                for (size_t i = 0; i < allowed.size(); ++i) {
                    if (i) s += '|';
                    s += allowed[i];
                }
                return s + ">";
            }
        }
        return "<?>";
    }
};

// Tracked validator state: variable -> TrackedValue.
using TrackedState = std::map<std::string, TrackedValue>;

// Pattern state as declared in manifests: variable -> pattern.
using PatternState = std::map<std::string, StatePattern>;

struct UnboundParam : std::runtime_error {
    explicit UnboundParam(const std::string& name)
        : std::runtime_error("unbound parameter reference: $" + name), param(name) {}
    std::string param;
};

using ArgBindings = std::map<std::string, TrackedValue>;

namespace detail {
inline bool concrete_in(const Json& v, const std::vector<std::string>& vals) {
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    return std::find(vals.begin(), vals.end(), s) != vals.end();
}
}  // namespace detail

// Static matching of one pattern against one tracked value. Unknown values
// are widened conservatively: they satisfy Any/ParamRef but not Concrete.
inline bool matches(const StatePattern& pattern, const TrackedValue& value,
                    const ArgBindings& args) {
    using K = TrackedValue::Kind;
    struct V {
        const TrackedValue& val;
        const ArgBindings& args;
        bool operator()(const StatePattern::Null&) const { return val.kind == K::Null; }
        bool operator()(const StatePattern::Any&) const { return val.kind != K::Null; }
        bool operator()(const StatePattern::Concrete& c) const {
            switch (val.kind) {
                case K::Concrete: return val.value == c.value;
                case K::UnknownOneOf:
                    return val.allowed.size() == 1 && detail::concrete_in(c.value, val.allowed);
                default: return false;
            }
        }
        bool operator()(const StatePattern::OneOf& o) const {
            switch (val.kind) {
                case K::Concrete: return detail::concrete_in(val.value, o.values);
                case K::UnknownOneOf:
                    return std::all_of(val.allowed.begin(), val.allowed.end(),
                                       [&](const std::string& a) {
                                           return std::find(o.values.begin(), o.values.end(), a) !=
                                                  o.values.end();
                                       });
                default: return false;
            }
        }
        bool operator()(const StatePattern::ParamRef& r) const {
            auto it = args.find(r.name);
            if (it == args.end()) throw UnboundParam(r.name);
            const TrackedValue& bound = it->second;
            if (val.kind == K::Null) return bound.kind == K::Null;
            // Either side unknown: widen to satisfied.
            if (val.kind != K::Concrete || bound.kind != K::Concrete) return true;
            return val.value == bound.value;
        }
    };
    return std::visit(V{value, args}, pattern.variant);
}

struct ViolationDetail {
    std::string key;
    std::string expected;  // rendered pattern
    std::string actual;    // rendered tracked value or "<missing>"
};

// Checks state |= requirement; reports every violated key, not just the first.
inline std::vector<ViolationDetail> satisfies(const TrackedState& state,
                                              const PatternState& requirement,
                                              const ArgBindings& args) {
    std::vector<ViolationDetail> out;
    for (const auto& [key, pattern] : requirement) {
        auto it = state.find(key);
        if (it == state.end()) {
            // Absent keys count as null: only a Null pattern accepts them.
            if (!pattern.is_null()) out.push_back({key, render_pattern(pattern), "<missing>"});
            continue;
        }
        if (!matches(pattern, it->second, args))
            out.push_back({key, render_pattern(pattern), it->second.describe()});
    }
    return out;
}

// Applies a postcondition to tracked state. Keys absent from post are kept.
inline TrackedState apply_post(TrackedState state, const PatternState& post,
                               const ArgBindings& args) {
    for (const auto& [key, pattern] : post) {
        struct V {
            const ArgBindings& args;
            TrackedValue operator()(const StatePattern::Concrete& c) const {
                return TrackedValue::concrete(c.value);
            }
            TrackedValue operator()(const StatePattern::Null&) const { return TrackedValue::null(); }
            TrackedValue operator()(const StatePattern::Any&) const {
                return TrackedValue::unknown();
            }
            TrackedValue operator()(const StatePattern::OneOf& o) const {
                return TrackedValue::one_of(o.values);
            }
            TrackedValue operator()(const StatePattern::ParamRef& r) const {
                auto it = args.find(r.name);
                if (it == args.end()) throw UnboundParam(r.name);
                // Statically known argument propagates; anything else widens.
                if (it->second.kind == TrackedValue::Kind::Concrete) return it->second;
                return TrackedValue::unknown();
            }
        };
        state[key] = std::visit(V{args}, pattern.variant);
    }
    return state;
}

inline Json tracked_state_to_json(const TrackedState& s) {
    Json out = Json::object();
    for (const auto& [k, v] : s) out[k] = v.describe();
    return out;
}

}  // namespace agentjit

#endif
