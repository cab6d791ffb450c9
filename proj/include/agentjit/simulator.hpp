#ifndef AGENTJIT_SIMULATOR_HPP
#define AGENTJIT_SIMULATOR_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "distributions.hpp"
#include "manifest.hpp"
#include "planlang.hpp"
#include "rng.hpp"
#include "scheduler.hpp"
#include "traces.hpp"

namespace agentjit {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised (and caught inside run_plan) when a tool's precondition does not
// hold against the concrete state at call time.
struct RuntimePreconditionFailure : std::runtime_error {
    std::string tool;
    std::string key;
    RuntimePreconditionFailure(std::string tool_, std::string key_)
        : std::runtime_error("runtime precondition failure: " + tool_ + " on '" + key_ + "'"),
          tool(std::move(tool_)),
          key(std::move(key_)) {}
};

struct SimEvent {
    double time = 0;
    std::string tool;
    bool ok = true;
};

// Simulated web application: concrete state machine driven by manifests, with
// per-tool latency draws and fixture data for tool outputs and eval answers.
struct SimEnv {
    std::map<std::string, Json> state;
    std::map<std::string, LatencyDistribution> tool_latency;
    std::optional<LatencyDistribution> eval_latency;       // default: no cost
    std::map<std::string, Json> tool_outputs;              // tool -> returned value
    std::map<std::string, Json> eval_answers;              // template text -> answer
    double clock = 0;
    std::vector<SimEvent> log;
};

struct RunResult {
    double latency_s = 0;
    bool ok = true;
    TraceRecord trace;
    Json result;  // value of the plan's return statement, if any
    std::optional<std::string> failure;
};

namespace detail {

inline bool truthy(const Json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_null()) return false;
    if (v.is_number()) return v.get<double>() != 0.0;
    if (v.is_string()) return !v.get<std::string>().empty();
    if (v.is_array() || v.is_object()) return !v.empty();
    return true;
}

inline std::string stringify(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

inline std::string format_template(const std::string& tmpl, const NamedArgs& /*unused*/,
                                   const std::map<std::string, Json>& values) {
    std::string out;
    for (size_t i = 0; i < tmpl.size();) {
        if (tmpl[i] == '{') {
            size_t end = tmpl.find('}', i);
            if (end != std::string::npos) {
                std::string name = tmpl.substr(i + 1, end - i - 1);
                auto it = values.find(name);
                if (it != values.end()) {
                    out += stringify(it->second);
                    i = end + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

class PlanInterp {
public:
    PlanInterp(const ManifestSet& manifests, SimEnv& env, RngStream& rng)
        : manifests_(manifests), env_(env), rng_(rng) {}

    // Returns the plan's return value; throws RuntimePreconditionFailure /
    // SimError upward, caller turns them into RunResult fields.
    Json run(const StmtList& stmts, TraceRecord& trace) {
        trace_ = &trace;
        exec_block(stmts);
        return result_;
    }

private:
    using Env = std::map<std::string, Json>;

    void exec_block(const StmtList& stmts) {
        for (const Stmt& s : stmts) {
            if (returned_) return;
            exec_stmt(s);
        }
    }

    void exec_stmt(const Stmt& s) {
        if (auto* tc = std::get_if<Stmt::ToolCall>(&s.node)) {
            Json out = exec_tool(*tc);
            if (tc->bind) vars_[*tc->bind] = std::move(out);
        } else if (auto* ev = std::get_if<Stmt::AiEval>(&s.node)) {
            Json out = exec_eval(*ev);
            if (ev->bind) vars_[*ev->bind] = std::move(out);
        } else if (auto* a = std::get_if<Stmt::Assign>(&s.node)) {
            vars_[a->var] = eval(a->value);
        } else if (auto* f = std::get_if<Stmt::For>(&s.node)) {
            Json iterable = eval(f->iterable);
            if (!iterable.is_array())
                throw SimError("for-loop iterable is not an array: " + iterable.dump());
            for (const Json& item : iterable) {
                vars_[f->var] = item;
                exec_block(*f->body);
                if (returned_) return;
            }
        } else if (auto* i = std::get_if<Stmt::If>(&s.node)) {
            exec_block(truthy(eval(i->cond)) ? *i->then_body : *i->else_body);
        } else if (auto* r = std::get_if<Stmt::Return>(&s.node)) {
            result_ = eval(r->value);
            returned_ = true;
        }
    }

    Json exec_tool(const Stmt::ToolCall& tc) {
        const ToolManifest* m = manifests_.find(tc.tool);
        if (!m) throw SimError("no manifest for tool '" + tc.tool + "'");
        std::map<std::string, Json> args;
        ArgBindings bindings;
        for (const auto& [name, expr] : tc.args) {
            args[name] = eval(expr);
            bindings[name] = TrackedValue::concrete(args[name]);
        }
        // runtime pre_check analogue against the concrete state
        for (const auto& [key, pattern] : m->pre) {
            auto it = env_.state.find(key);
            TrackedValue actual = it == env_.state.end() || it->second.is_null()
                                      ? TrackedValue::null()
                                      : TrackedValue::concrete(it->second);
            bool ok;
            try {
                ok = matches(pattern, actual, bindings);
            } catch (const UnboundParam&) {
                ok = false;
            }
            if (!ok) {
                record_step(tc.tool, 0.0, false);
                env_.log.push_back({env_.clock, tc.tool, false});
                throw RuntimePreconditionFailure(tc.tool, key);
            }
        }
        double latency = 0;
        auto lt = env_.tool_latency.find(tc.tool);
        if (lt != env_.tool_latency.end()) latency = sample(lt->second, rng_);
        env_.clock += latency;
        apply_post_concrete(*m, args);
        env_.log.push_back({env_.clock, tc.tool, true});
        record_step(tc.tool, latency, true);
        auto out = env_.tool_outputs.find(tc.tool);
        return out == env_.tool_outputs.end() ? Json::object() : out->second;
    }

    Json exec_eval(const Stmt::AiEval& ev) {
        double latency = 0;
        if (env_.eval_latency) latency = sample(*env_.eval_latency, rng_);
        env_.clock += latency;
        env_.log.push_back({env_.clock, "ai_eval", true});
        record_step("ai_eval", latency, true);
        auto it = env_.eval_answers.find(ev.template_text);
        if (it != env_.eval_answers.end()) return it->second;
        std::map<std::string, Json> values;
        for (const auto& [name, expr] : ev.args) values[name] = eval(expr);
        return Json(format_template(ev.template_text, ev.args, values));
    }

    void apply_post_concrete(const ToolManifest& m, const std::map<std::string, Json>& args) {
        for (const auto& [key, pattern] : m.post) {
            if (auto* c = std::get_if<StatePattern::Concrete>(&pattern.variant)) {
                env_.state[key] = c->value;
            } else if (std::holds_alternative<StatePattern::Null>(pattern.variant)) {
                env_.state[key] = nullptr;
            } else if (auto* p = std::get_if<StatePattern::ParamRef>(&pattern.variant)) {
                auto it = args.find(p->name);
                if (it == args.end())
                    throw SimError("post." + key + " references missing argument $" + p->name);
                env_.state[key] = it->second;
            } else if (auto* o = std::get_if<StatePattern::OneOf>(&pattern.variant)) {
                // concrete machine must land somewhere; first alternative
                env_.state[key] = o->values.front();
            }
            // Any: the tool may change the value arbitrarily; leave as is
        }
    }

    void record_step(const std::string& element, double latency, bool success) {
        std::string page;
        auto it = env_.state.find("page_type");
        if (it != env_.state.end() && it->second.is_string()) page = it->second.get<std::string>();
        trace_->steps.push_back(
            {static_cast<int>(trace_->steps.size()), element, page, latency, success, false, {}});
    }

    // -- expression evaluation over concrete Json values ---------------------

    Json eval(const ExprPtr& e) {
        if (!e) return nullptr;
        if (auto* l = std::get_if<Expr::Lit>(&e->node)) return l->value;
        if (auto* v = std::get_if<Expr::Var>(&e->node)) {
            auto it = vars_.find(v->name);
            if (it == vars_.end()) throw SimError("unbound variable '" + v->name + "'");
            return it->second;
        }
        if (auto* f = std::get_if<Expr::Field>(&e->node)) {
            Json base = eval(f->base);
            if (base.is_object() && base.contains(f->name)) return base.at(f->name);
            return nullptr;
        }
        if (auto* ix = std::get_if<Expr::Index>(&e->node)) {
            Json base = eval(ix->base);
            Json idx = eval(ix->index);
            if (base.is_array() && idx.is_number_integer()) {
                auto i = idx.get<std::int64_t>();
                auto n = static_cast<std::int64_t>(base.size());
                if (i < 0) i += n;
                if (i >= 0 && i < n) return base.at(static_cast<size_t>(i));
            }
            if (base.is_object() && idx.is_string() && base.contains(idx.get<std::string>()))
                return base.at(idx.get<std::string>());
            return nullptr;
        }
        if (auto* sl = std::get_if<Expr::Slice>(&e->node)) {
            Json base = eval(sl->base);
            if (!base.is_array()) return Json::array();
            auto n = static_cast<std::int64_t>(base.size());
            std::int64_t lo = sl->lo ? eval(sl->lo).get<std::int64_t>() : 0;
            std::int64_t hi = sl->hi ? eval(sl->hi).get<std::int64_t>() : n;
            if (lo < 0) lo += n;
            if (hi < 0) hi += n;
            lo = std::clamp<std::int64_t>(lo, 0, n);
            hi = std::clamp<std::int64_t>(hi, 0, n);
            Json out = Json::array();
            for (std::int64_t i = lo; i < hi; ++i) out.push_back(base.at(static_cast<size_t>(i)));
            return out;
        }
        if (auto* u = std::get_if<Expr::Unary>(&e->node)) {
            Json v = eval(u->operand);
            if (u->op == "not") return !truthy(v);
            if (u->op == "-" && v.is_number_integer()) return -v.get<std::int64_t>();
            if (u->op == "-" && v.is_number()) return -v.get<double>();
            throw SimError("bad unary '" + u->op + "' on " + v.dump());
        }
        if (auto* b = std::get_if<Expr::Binary>(&e->node)) return eval_binary(*b);
        if (auto* c = std::get_if<Expr::Call>(&e->node)) return eval_builtin(*c);
        if (auto* l = std::get_if<Expr::ListLit>(&e->node)) {
            Json out = Json::array();
            for (const auto& item : l->items) out.push_back(eval(item));
            return out;
        }
        throw SimError("unhandled expression");
    }

    Json eval_binary(const Expr::Binary& b) {
        if (b.op == "and") {
            Json l = eval(b.lhs);
            return truthy(l) ? Json(truthy(eval(b.rhs))) : Json(false);
        }
        if (b.op == "or") {
            Json l = eval(b.lhs);
            return truthy(l) ? Json(true) : Json(truthy(eval(b.rhs)));
        }
        Json l = eval(b.lhs), r = eval(b.rhs);
        if (b.op == "==") return l == r;
        if (b.op == "!=") return l != r;
        if (b.op == "in") {
            if (r.is_array()) return std::find(r.begin(), r.end(), l) != r.end();
            if (r.is_string() && l.is_string())
                return r.get<std::string>().find(l.get<std::string>()) != std::string::npos;
            if (r.is_object() && l.is_string()) return r.contains(l.get<std::string>());
            return false;
        }
        if (b.op == "<" || b.op == "<=" || b.op == ">" || b.op == ">=") {
            if (!l.is_number() || !r.is_number()) return false;  // null-safe comparisons
            double x = l.get<double>(), y = r.get<double>();
            if (b.op == "<") return x < y;
            if (b.op == "<=") return x <= y;
            if (b.op == ">") return x > y;
            return x >= y;
        }
        if (b.op == "+") {
            if (l.is_array() && r.is_array()) {
                Json out = l;
                for (const auto& v : r) out.push_back(v);
                return out;
            }
            if (l.is_string() || r.is_string()) return stringify(l) + stringify(r);
            if (l.is_number_integer() && r.is_number_integer())
                return l.get<std::int64_t>() + r.get<std::int64_t>();
            if (l.is_number() && r.is_number()) return l.get<double>() + r.get<double>();
        }
        if (b.op == "-" || b.op == "*" || b.op == "/") {
            if (l.is_number() && r.is_number()) {
                double x = l.get<double>(), y = r.get<double>();
                if (b.op == "-") return x - y;
                if (b.op == "*") return x * y;
                if (y == 0) throw SimError("division by zero");
                return x / y;
            }
        }
        throw SimError("bad binary '" + b.op + "' on " + l.dump() + ", " + r.dump());
    }

    Json eval_builtin(const Expr::Call& c) {
        if (c.fn == "format") {
            if (c.args.empty()) throw SimError("format() needs a template string");
            Json tmpl = eval(c.args[0]);
            std::map<std::string, Json> values;
            for (const auto& [name, expr] : c.kwargs) values[name] = eval(expr);
            return Json(format_template(tmpl.get<std::string>(), c.kwargs, values));
        }
        if (c.fn == "len") {
            if (c.args.size() != 1) throw SimError("len() takes one argument");
            Json v = eval(c.args[0]);
            if (v.is_array() || v.is_object()) return static_cast<std::int64_t>(v.size());
            if (v.is_string()) return static_cast<std::int64_t>(v.get<std::string>().size());
            return 0;
        }
        if (c.fn == "str") {
            if (c.args.size() != 1) throw SimError("str() takes one argument");
            return Json(stringify(eval(c.args[0])));
        }
        throw SimError("unknown builtin '" + c.fn + "'");
    }

    const ManifestSet& manifests_;
    SimEnv& env_;
    RngStream& rng_;
    Env vars_;
    TraceRecord* trace_ = nullptr;
    Json result_;
    bool returned_ = false;
};

}  // namespace detail

// Interprets a plan against a copy of the env template. Precondition failures
// mark the run failed rather than throwing; interpreter bugs (unknown tool,
// type confusion in fixtures) surface as SimError.
inline RunResult run_plan(const PlanProgram& program, const ManifestSet& manifests, SimEnv env,
                          RngStream& rng, const std::string& task_id = "sim") {
    RunResult out;
    out.trace.task_id = task_id;
    detail::PlanInterp interp(manifests, env, rng);
    try {
        out.result = interp.run(program.statements, out.trace);
    } catch (const RuntimePreconditionFailure& e) {
        out.ok = false;
        out.failure = e.what();
    }
    out.latency_s = env.clock;
    return out;
}

struct SimStrategyConfig {
    int n_workers = 4;
    double delta_h = 5.0;
    double delta_p = 20.0;
};

// Simulated-time strategy execution: hedge is the min over replicas, parallel
// the max over declared per-worker sub-plans; no real threads involved.
inline double run_strategy(const PlanProgram& program,
                           const std::vector<PlanProgram>& worker_programs, Strategy strategy,
                           const ManifestSet& manifests, const SimEnv& env_template,
                           const SimStrategyConfig& config, RngStream& rng) {
    switch (strategy) {
        case Strategy::Serial: {
            RngStream r = rng.derive(0);
            return run_plan(program, manifests, env_template, r).latency_s;
        }
        case Strategy::Hedge: {
            double best = 0;
            for (int w = 0; w < config.n_workers; ++w) {
                RngStream r = rng.derive(static_cast<std::uint64_t>(w));
                double l = run_plan(program, manifests, env_template, r).latency_s;
                best = w == 0 ? l : std::min(best, l);
            }
            return best + config.delta_h;
        }
        case Strategy::Parallel: {
            if (worker_programs.empty()) throw NotParallelizable{};
            double worst = 0;
            for (size_t w = 0; w < worker_programs.size(); ++w) {
                RngStream r = rng.derive(static_cast<std::uint64_t>(w));
                worst = std::max(worst,
                                 run_plan(worker_programs[w], manifests, env_template, r).latency_s);
            }
            return worst + config.delta_p;
        }
    }
    throw SimError("unknown strategy");
}

// Ground truth for scheduler evaluation: run every applicable strategy on
// common per-trial seeds and return the one with the lowest mean latency.
inline Strategy oracle_strategy(const PlanProgram& program,
                                const std::vector<PlanProgram>& worker_programs,
                                const ManifestSet& manifests, const SimEnv& env_template,
                                const SimStrategyConfig& config, int trials, std::uint64_t seed) {
    std::vector<Strategy> strategies{Strategy::Serial, Strategy::Hedge};
    if (!worker_programs.empty()) strategies.push_back(Strategy::Parallel);
    RngStream master(seed);
    Strategy best = Strategy::Serial;
    double best_mean = 0;
    bool first = true;
    for (Strategy s : strategies) {
        double sum = 0;
        for (int t = 0; t < trials; ++t) {
            RngStream r = master.derive(static_cast<std::uint64_t>(t));
            sum += run_strategy(program, worker_programs, s, manifests, env_template, config, r);
        }
        double mean = sum / trials;
        if (first || mean < best_mean) {
            best = s;
            best_mean = mean;
            first = false;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Env fixture I/O: initial state, tool latency map, outputs, eval answers.

inline SimEnv sim_env_from_json(const Json& j) {
    SimEnv env;
    // keep the default-able objects alive across iteration
    const Json state = j.value("state", Json::object());
    for (const auto& [k, v] : state.items()) env.state[k] = v;
    const Json latencies = j.value("tool_latency", Json::object());
    for (const auto& [k, v] : latencies.items())
        env.tool_latency.emplace(k, distribution_from_json(v));
    if (j.contains("eval_latency") && !j.at("eval_latency").is_null())
        env.eval_latency = distribution_from_json(j.at("eval_latency"));
    const Json outputs = j.value("tool_outputs", Json::object());
    for (const auto& [k, v] : outputs.items()) env.tool_outputs[k] = v;
    const Json answers = j.value("eval_answers", Json::object());
    for (const auto& [k, v] : answers.items()) env.eval_answers[k] = v;
    return env;
}

}  // namespace agentjit

#endif
