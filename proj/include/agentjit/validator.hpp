#ifndef AGENTJIT_VALIDATOR_HPP
#define AGENTJIT_VALIDATOR_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfg.hpp"
#include "manifest.hpp"
#include "pattern.hpp"
#include "schema.hpp"

namespace agentjit {

enum class ViolationKind {
    PreconditionUnmet,
    UnknownTool,
    ArgTypeError,
    ReturnUseError,
    ProvenanceLint,
};

inline const char* violation_kind_name(ViolationKind k) {
    switch (k) {
        case ViolationKind::PreconditionUnmet: return "PreconditionUnmet";
        case ViolationKind::UnknownTool: return "UnknownTool";
        case ViolationKind::ArgTypeError: return "ArgTypeError";
        case ViolationKind::ReturnUseError: return "ReturnUseError";
        case ViolationKind::ProvenanceLint: return "ProvenanceLint";
    }
    return "?";
}

struct Violation {
    ViolationKind kind;
    std::string tool;  // tool name or "ai_eval"
    SourceSpan span;
    std::string detail;
};

struct ValidationReport {
    bool valid = true;  // no violations other than ProvenanceLint
    std::vector<Violation> violations;
    TrackedState final_state;

    void add(Violation v) {
        if (v.kind != ViolationKind::ProvenanceLint) valid = false;
        violations.push_back(std::move(v));
    }

    Json to_json() const {
        Json vs = Json::array();
        for (const auto& v : violations) {
            vs.push_back({{"kind", violation_kind_name(v.kind)},
                          {"tool", v.tool},
                          {"line", v.span.line},
                          {"col", v.span.col},
                          {"detail", v.detail}});
        }
        return Json{{"schema_version", 1},
                    {"valid", valid},
                    {"violations", vs},
                    {"final_state", tracked_state_to_json(final_state)}};
    }
};

namespace detail {

// Static facts carried through the walk: abstract state, the schema of each
// bound variable (when known), and which tools each variable's data came from.
struct ValidatorCtx {
    TrackedState state;
    std::map<std::string, ValueSchema> schemas;
    std::map<std::string, std::set<std::string>> sources;
};

inline std::optional<std::string> expr_root_var(const ExprPtr& e) {
    if (!e) return std::nullopt;
    if (auto* v = std::get_if<Expr::Var>(&e->node)) return v->name;
    if (auto* f = std::get_if<Expr::Field>(&e->node)) return expr_root_var(f->base);
    if (auto* i = std::get_if<Expr::Index>(&e->node)) return expr_root_var(i->base);
    if (auto* s = std::get_if<Expr::Slice>(&e->node)) return expr_root_var(s->base);
    return std::nullopt;
}

// Resolves the static schema of an expression rooted at a bound tool output,
// when the path stays inside known structure. Second result reports a field
// access that provably does not exist.
inline std::pair<std::optional<ValueSchema>, std::string> resolve_static_schema(
    const ExprPtr& e, const ValidatorCtx& ctx) {
    if (!e) return {std::nullopt, ""};
    if (auto* l = std::get_if<Expr::Lit>(&e->node)) {
        (void)l;
        return {std::nullopt, ""};
    }
    if (auto* v = std::get_if<Expr::Var>(&e->node)) {
        auto it = ctx.schemas.find(v->name);
        if (it != ctx.schemas.end()) return {it->second, ""};
        return {std::nullopt, ""};
    }
    if (auto* f = std::get_if<Expr::Field>(&e->node)) {
        auto [base, err] = resolve_static_schema(f->base, ctx);
        if (!err.empty()) return {std::nullopt, err};
        if (!base) return {std::nullopt, ""};
        if (base->kind != ValueSchema::Kind::Object) return {std::nullopt, ""};
        auto it = base->properties.find(f->name);
        if (it == base->properties.end()) {
            if (!base->properties.empty())
                return {std::nullopt, "field '" + f->name + "' not in output schema"};
            return {std::nullopt, ""};
        }
        return {it->second, ""};
    }
    if (auto* i = std::get_if<Expr::Index>(&e->node)) {
        auto [base, err] = resolve_static_schema(i->base, ctx);
        if (!err.empty()) return {std::nullopt, err};
        if (base && base->kind == ValueSchema::Kind::Array) return {*base->items, ""};
        return {std::nullopt, ""};
    }
    if (auto* s = std::get_if<Expr::Slice>(&e->node)) {
        auto [base, err] = resolve_static_schema(s->base, ctx);
        if (!err.empty()) return {std::nullopt, err};
        if (base && base->kind == ValueSchema::Kind::Array) return {base, ""};
        return {std::nullopt, ""};
    }
    return {std::nullopt, ""};
}

inline TrackedValue static_arg_value(const ExprPtr& e) {
    if (e) {
        if (auto* l = std::get_if<Expr::Lit>(&e->node)) return TrackedValue::concrete(l->value);
    }
    return TrackedValue::unknown();
}

inline ArgBindings call_arg_bindings(const CallSite& site) {
    ArgBindings args;
    for (const auto& [name, expr] : site.args) args[name] = static_arg_value(expr);
    return args;
}

inline TrackedState join_states(const TrackedState& a, const TrackedState& b) {
    TrackedState out;
    auto add = [&](const std::string& k) {
        auto ia = a.find(k), ib = b.find(k);
        if (ia != a.end() && ib != b.end() && ia->second == ib->second) out[k] = ia->second;
        else out[k] = TrackedValue::unknown();
    };
    for (const auto& [k, _] : a) add(k);
    for (const auto& [k, _] : b)
        if (!out.count(k)) add(k);
    return out;
}

inline void join_ctx(ValidatorCtx& into, const ValidatorCtx& other) {
    into.state = join_states(into.state, other.state);
    // keep only schemas agreeing on both paths
    for (auto it = into.schemas.begin(); it != into.schemas.end();) {
        auto o = other.schemas.find(it->first);
        if (o == other.schemas.end() || o->second.kind != it->second.kind)
            it = into.schemas.erase(it);
        else
            ++it;
    }
    for (const auto& [k, s] : other.sources) {
        auto& dst = into.sources[k];
        dst.insert(s.begin(), s.end());
    }
}

}  // namespace detail

// Argument/return type checking of one call against its manifest.
inline std::vector<TypeError> typecheck_call(const CallSite& site, const ToolManifest& manifest,
                                             const std::map<std::string, ValueSchema>& env) {
    std::vector<TypeError> errors;
    const ValueSchema& in = manifest.input_schema;
    std::set<std::string> provided;
    detail::ValidatorCtx ctx;
    ctx.schemas = env;
    for (const auto& [name, expr] : site.args) {
        provided.insert(name);
        auto pit = in.properties.find(name);
        if (pit == in.properties.end()) {
            if (!in.properties.empty())
                errors.push_back({name, "unknown parameter '" + name + "'"});
            continue;
        }
        if (auto* l = std::get_if<Expr::Lit>(&expr->node)) {
            for (auto& e : check_value(pit->second, l->value))
                errors.push_back({name + e.path.substr(1), e.message});
            continue;
        }
        auto [schema, err] = detail::resolve_static_schema(expr, ctx);
        if (!err.empty()) {
            errors.push_back({name, err});
        } else if (schema && schema->kind != pit->second.kind) {
            errors.push_back({name, std::string("expected ") +
                                        ValueSchema::kind_name(pit->second.kind) + ", bound value is " +
                                        ValueSchema::kind_name(schema->kind)});
        }
    }
    for (const auto& req : in.required)
        if (!provided.count(req))
            errors.push_back({req, "missing required parameter '" + req + "'"});
    return errors;
}

namespace detail {

class ValidateWalk {
public:
    ValidateWalk(const PlanCfg& cfg, const ManifestSet& manifests, ValidationReport& report)
        : cfg_(cfg), manifests_(manifests), report_(report) {}

    void walk(const CfgNodeList& nodes, ValidatorCtx& ctx) {
        for (const CfgNode& n : nodes) {
            if (auto* c = std::get_if<CfgNode::Calls>(&n.node)) {
                for (const CallSite& site : cfg_.blocks[static_cast<size_t>(c->block_index)].calls)
                    visit_call(site, ctx);
            } else if (auto* loop = std::get_if<CfgNode::Loop>(&n.node)) {
                ValidatorCtx body_ctx = ctx;
                walk(*loop->body, body_ctx);
                reentry_check(*loop->body, body_ctx);
                // loop exit: zero-or-more iterations
                join_ctx(body_ctx, ctx);
                ctx = std::move(body_ctx);
            } else if (auto* br = std::get_if<CfgNode::Branch>(&n.node)) {
                ValidatorCtx then_ctx = ctx, else_ctx = ctx;
                walk(*br->then_nodes, then_ctx);
                walk(*br->else_nodes, else_ctx);
                join_ctx(then_ctx, else_ctx);
                ctx = std::move(then_ctx);
            }
        }
    }

private:
    void visit_call(const CallSite& site, ValidatorCtx& ctx) {
        if (site.kind == CallSite::Kind::AiEval) {
            // ai_eval is opaque text generation; it does not touch tracked state
            if (site.bind) {
                ctx.schemas.erase(*site.bind);
                ctx.sources[*site.bind] = {"ai_eval"};
            }
            return;
        }
        const ToolManifest* m = manifests_.find(site.tool_name);
        if (!m) {
            report_.add({ViolationKind::UnknownTool, site.tool_name, site.source_span,
                         "no manifest for tool '" + site.tool_name + "'"});
            if (site.bind) ctx.schemas.erase(*site.bind);
            return;
        }
        ArgBindings args = call_arg_bindings(site);
        try {
            for (const auto& v : satisfies(ctx.state, m->pre, args)) {
                report_.add({ViolationKind::PreconditionUnmet, site.tool_name, site.source_span,
                             "precondition on '" + v.key + "' unmet: expected " + v.expected +
                                 ", state has " + v.actual});
            }
        } catch (const UnboundParam& e) {
            report_.add(
                {ViolationKind::PreconditionUnmet, site.tool_name, site.source_span, e.what()});
        }
        for (const auto& e : typecheck_call(site, *m, ctx.schemas))
            report_.add({e.message.find("not in output schema") != std::string::npos
                             ? ViolationKind::ReturnUseError
                             : ViolationKind::ArgTypeError,
                         site.tool_name, site.source_span, e.path + ": " + e.message});
        lint_provenance(site, *m, ctx);
        try {
            ctx.state = apply_post(std::move(ctx.state), m->post, args);
        } catch (const UnboundParam& e) {
            report_.add(
                {ViolationKind::PreconditionUnmet, site.tool_name, site.source_span, e.what()});
        }
        if (site.bind) {
            ctx.schemas[*site.bind] = m->output_schema;
            ctx.sources[*site.bind] = {site.tool_name};
        }
        // a pre pattern using $param is legal but unusual; surface it as lint
        for (const auto& [key, pat] : m->pre) {
            if (pat.is_param_ref())
                report_.add({ViolationKind::ProvenanceLint, site.tool_name, site.source_span,
                             "pre." + key + " uses a parameter reference"});
        }
    }

    void lint_provenance(const CallSite& site, const ToolManifest& m, const ValidatorCtx& ctx) {
        for (const auto& [param, allowed] : m.pre_tools) {
            for (const auto& [name, expr] : site.args) {
                if (name != param) continue;
                auto root = expr_root_var(expr);
                bool ok = false;
                if (root) {
                    auto it = ctx.sources.find(*root);
                    if (it != ctx.sources.end())
                        ok = std::any_of(it->second.begin(), it->second.end(),
                                         [&](const std::string& src) {
                                             return std::find(allowed.begin(), allowed.end(), src) !=
                                                    allowed.end();
                                         });
                }
                if (!ok)
                    report_.add({ViolationKind::ProvenanceLint, site.tool_name, site.source_span,
                                 "argument '" + param + "' does not flow from " +
                                     (allowed.empty() ? "?" : allowed.front())});
            }
        }
    }

    // The loop body was validated once from the pre-loop state; the body's
    // exit state must still meet the first tool call's precondition so a
    // second iteration cannot fail.
    void reentry_check(const CfgNodeList& body, const ValidatorCtx& exit_ctx) {
        const CallSite* first = first_tool_call(body);
        if (!first) return;
        const ToolManifest* m = manifests_.find(first->tool_name);
        if (!m) return;
        try {
            for (const auto& v : satisfies(exit_ctx.state, m->pre, call_arg_bindings(*first))) {
                report_.add({ViolationKind::PreconditionUnmet, first->tool_name, first->source_span,
                             "loop re-entry: precondition on '" + v.key + "' unmet: expected " +
                                 v.expected + ", state has " + v.actual});
            }
        } catch (const UnboundParam&) {
            // already reported on the first pass
        }
    }

    const CallSite* first_tool_call(const CfgNodeList& nodes) const {
        for (const CfgNode& n : nodes) {
            if (auto* c = std::get_if<CfgNode::Calls>(&n.node)) {
                for (const CallSite& site : cfg_.blocks[static_cast<size_t>(c->block_index)].calls)
                    if (site.kind == CallSite::Kind::Tool) return &site;
            } else if (auto* loop = std::get_if<CfgNode::Loop>(&n.node)) {
                if (const CallSite* s = first_tool_call(*loop->body)) return s;
            } else if (auto* br = std::get_if<CfgNode::Branch>(&n.node)) {
                if (const CallSite* s = first_tool_call(*br->then_nodes)) return s;
                if (const CallSite* s = first_tool_call(*br->else_nodes)) return s;
            }
        }
        return nullptr;
    }

    const PlanCfg& cfg_;
    const ManifestSet& manifests_;
    ValidationReport& report_;
};

}  // namespace detail

// Static state-flow + type check of a plan CFG against a manifest set.
// Collects every violation rather than stopping at the first.
inline ValidationReport validate(const PlanCfg& cfg, const ManifestSet& manifests,
                                 TrackedState initial_state = {}) {
    ValidationReport report;
    detail::ValidatorCtx ctx;
    ctx.state = std::move(initial_state);
    detail::ValidateWalk(cfg, manifests, report).walk(cfg.structure, ctx);
    report.final_state = std::move(ctx.state);
    return report;
}

}  // namespace agentjit

#endif
