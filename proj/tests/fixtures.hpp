// Shared fixtures: the Dashdish-style tool set and the three candidate plans
// used across validator, cost, planner, and simulator tests.
#ifndef AGENTJIT_TESTS_FIXTURES_HPP
#define AGENTJIT_TESTS_FIXTURES_HPP

#include <string>

#include <agentjit/manifest.hpp>
#include <agentjit/pattern.hpp>
#include <agentjit/scheduler.hpp>
#include <agentjit/simulator.hpp>

namespace fixtures {

using agentjit::Json;

inline agentjit::ManifestSet dashdish_manifests() {
    agentjit::ManifestSet set;
    set.add(agentjit::parse_manifest(Json::parse(R"({
        "name": "goto_home",
        "type": "gotoItem",
        "description": "Navigates to the home page.",
        "input_schema": {"type": "object", "properties": {}},
        "output_schema": {"type": "object", "properties": {}},
        "pre": {"page_type": "*"},
        "post": {"page_type": "home"},
        "execute": "location.href = '/';"
    })")));
    set.add(agentjit::parse_manifest(Json::parse(R"({
        "name": "list_all_stores",
        "type": "listItems",
        "description": "Lists every store visible on the home page.",
        "input_schema": {
            "type": "object",
            "properties": {"detailed": {"type": "boolean"}}
        },
        "output_schema": {
            "type": "object",
            "properties": {
                "items": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "name": {"type": "string"},
                            "rating": {"type": "number"},
                            "review_count": {"type": "integer"}
                        },
                        "required": ["name"]
                    }
                }
            },
            "required": ["items"]
        },
        "pre": {"page_type": "home"},
        "post": {"page_type": "home"},
        "execute": "// scrape store cards"
    })")));
    set.add(agentjit::parse_manifest(Json::parse(R"({
        "name": "goto_store",
        "type": "gotoItem",
        "description": "Opens one store's page.",
        "input_schema": {
            "type": "object",
            "properties": {"store_name": {"type": "string"}},
            "required": ["store_name"]
        },
        "output_schema": {"type": "object", "properties": {}},
        "pre": {"page_type": "home"},
        "post": {"page_type": "store", "selected_store": "$store_name"},
        "execute": "// click the card",
        "pre_tools": {"store_name": ["list_all_stores"]}
    })")));
    set.add(agentjit::parse_manifest(Json::parse(R"({
        "name": "get_store_details",
        "type": "getFields",
        "description": "Reads details from the open store page.",
        "input_schema": {"type": "object", "properties": {}},
        "output_schema": {
            "type": "object",
            "properties": {
                "review_count": {"type": "integer"},
                "delivery": {"type": "boolean"}
            },
            "required": ["review_count"]
        },
        "pre": {"page_type": "store"},
        "post": {"page_type": "store"},
        "execute": "// scrape details"
    })")));
    set.add(agentjit::parse_manifest(Json::parse(R"({
        "name": "add_to_cart",
        "type": "setFields",
        "description": "Adds an item to the cart from a store page.",
        "input_schema": {
            "type": "object",
            "properties": {
                "item_name": {"type": "string"},
                "customizations": {"type": "string"}
            },
            "required": ["item_name"]
        },
        "output_schema": {
            "type": "object",
            "properties": {"success": {"type": "boolean"}},
            "required": ["success"]
        },
        "pre": {"page_type": "store"},
        "post": {"page_type": "store"},
        "execute": "// modal interaction"
    })")));
    return set;
}

inline agentjit::TrackedState initial_home_state() {
    return {{"page_type", agentjit::TrackedValue::concrete("home")}};
}

// Loops over store cards but never navigates to a store page first.
inline std::string plan_a_text() {
    return R"(
stores = call list_all_stores(detailed=true)
best_near_you_stores = stores.items[0:5]
count = 0
for store in best_near_you_stores {
  d = call get_store_details()
  if d.review_count < 20 {
    count = count + 1
  }
}
result = eval "The number of restaurants with under 20 reviews is {count}."(count=count)
return result
)";
}

// Valid, but formats the answer with an unnecessary model call.
inline std::string plan_b_text() {
    return R"(
stores = call list_all_stores(detailed=true)
best_near_you = []
for s in stores.items {
  if s.rating != null {
    best_near_you = best_near_you + [s]
  }
}
first_five = best_near_you[0:5]
count = 0
for store in first_five {
  if store.review_count != null and store.review_count < 20 {
    count = count + 1
  }
}
result = eval "The number of restaurants with under 20 reviews is {count}."(count=count)
return result
)";
}

// Valid and cheapest: pure code everywhere, no model calls.
inline std::string plan_c_text() {
    return R"(
call goto_home()
stores = call list_all_stores(detailed=true)
first_five = stores.items[0:5]
count = 0
for store in first_five {
  if store.review_count != null and store.review_count < 20 {
    count = count + 1
  }
}
result = format("Out of the first five restaurants, {count} have under 20 reviews.", count=count)
return result
)";
}

// Deterministic sample source for worked-example arithmetic: replays a fixed
// list of draws in order. Found by the scheduler's generic cache via ADL.
struct ScriptedSource {
    std::vector<double> values;
    mutable std::size_t next = 0;
};

inline double sample(const ScriptedSource& s, agentjit::RngStream&) {
    return s.values[s.next++ % s.values.size()];
}

using ScriptedCache = std::map<std::string, ScriptedSource>;

// Single-navigation lookup task: one restaurantCard click, prices readable
// from the open page. Parallel split re-navigates per worker.
inline std::map<agentjit::Strategy, agentjit::UsagePlan> ex1_usage() {
    using namespace agentjit;
    UsagePlan serial;
    serial.sequential = {{"restaurantCard", 1, 1}, {"fullMenuItemCard", 0, 0}};
    UsagePlan parallel;
    parallel.parallelizable = true;
    ParallelSplit split;
    split.num_workers = 4;
    for (int w = 0; w < 4; ++w) split.per_worker.push_back({{"restaurantCard", 1, 1}});
    split.rediscovery = {"restaurantCard"};
    parallel.parallel = std::move(split);
    return {{Strategy::Serial, serial}, {Strategy::Hedge, serial}, {Strategy::Parallel, parallel}};
}

inline agentjit::SchedulerCache ex1_cache() {
    using agentjit::LatencyDistribution;
    return {{"restaurantCard", LatencyDistribution::weibull(3.60, 10.25)},
            {"fullMenuItemCard", LatencyDistribution::fixed(0.5)}};
}

// Six-step ordering task across four pages; the add-button is a heavy-tailed
// Gamma bottleneck. Not parallelizable, so Serial and Hedge compete.
// LogNormal entries are moment-matched to the observed mean/sigma pairs
// (35.8/12.4 and 14.9/6.5).
inline agentjit::SchedulerCache ex2_cache() {
    using agentjit::LatencyDistribution;
    return {{"restaurantCard", LatencyDistribution::weibull(3.60, 10.25)},
            {"fullMenuItemAddButton", LatencyDistribution::gamma(1.31, 18.95)},
            {"modal.addToCartButton", LatencyDistribution::fixed(9.0)},
            {"cartIconButton", LatencyDistribution::lognormal(3.5214, 0.3366)},
            {"modal.checkoutButton", LatencyDistribution::lognormal(2.6143, 0.4174)},
            {"placeOrderButton", LatencyDistribution::fixed(10.4)}};
}

inline std::map<agentjit::Strategy, agentjit::UsagePlan> ex2_usage() {
    using namespace agentjit;
    UsagePlan plan;
    plan.sequential = {{"restaurantCard", 1, 1},     {"fullMenuItemAddButton", 1, 1},
                       {"modal.addToCartButton", 1, 0}, {"cartIconButton", 1, 1},
                       {"modal.checkoutButton", 1, 1},  {"placeOrderButton", 1, 1}};
    return {{Strategy::Serial, plan}, {Strategy::Hedge, plan}};
}

// Simulated Dashdish with deterministic tool latencies and store data.
inline agentjit::SimEnv dashdish_env() {
    using agentjit::LatencyDistribution;
    agentjit::SimEnv env;
    env.state = {{"page_type", Json("home")}};
    env.tool_latency = {{"goto_home", LatencyDistribution::fixed(2.0)},
                        {"list_all_stores", LatencyDistribution::fixed(3.0)},
                        {"goto_store", LatencyDistribution::fixed(2.5)},
                        {"get_store_details", LatencyDistribution::fixed(4.0)},
                        {"add_to_cart", LatencyDistribution::fixed(9.0)}};
    env.eval_latency = LatencyDistribution::fixed(6.0);
    env.tool_outputs["list_all_stores"] = Json::parse(R"({
        "items": [
            {"name": "Stonemill Matcha", "rating": 4.7, "review_count": 5},
            {"name": "Taco Trux",        "rating": 4.2, "review_count": 25},
            {"name": "Pho Corner",       "rating": null, "review_count": 12},
            {"name": "Burger Barn",      "rating": 3.9, "review_count": 100},
            {"name": "Sushi Go",         "rating": 4.9, "review_count": 30},
            {"name": "Crepe Cart",       "rating": 4.0, "review_count": 2}
        ]
    })");
    env.tool_outputs["get_store_details"] = Json{{"review_count", 12}, {"delivery", true}};
    env.tool_outputs["add_to_cart"] = Json{{"success", true}};
    return env;
}

}  // namespace fixtures

#endif
