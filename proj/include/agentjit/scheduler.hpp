#ifndef AGENTJIT_SCHEDULER_HPP
#define AGENTJIT_SCHEDULER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "distributions.hpp"
#include "rng.hpp"

namespace agentjit {

struct SchedulerConfig {
    int n_mc = 1000;
    int n_workers = 4;
    double delta_p = 20.0;  // parallel strategy overhead, seconds
    double delta_h = 5.0;   // hedge strategy overhead, seconds
    double c_read = 5.0;    // per page-read cost, seconds
    double c_repeat = 5.0;  // repeat-interaction cost, seconds
    std::uint64_t seed = 0;
};

// Predicted interactions with one element: how many times it is used and how
// many page navigations it triggers.
struct ElementUsage {
    std::string element;
    int count = 1;
    int navigations = 0;
};

struct ParallelSplit {
    int num_workers = 0;
    std::vector<std::vector<ElementUsage>> per_worker;
    // navigation elements each worker repeats to re-find its target; they
    // also appear inside per_worker, this records why
    std::vector<std::string> rediscovery;
};

struct UsagePlan {
    std::vector<ElementUsage> sequential;
    bool parallelizable = false;
    std::optional<ParallelSplit> parallel;
};

using SchedulerCache = std::map<std::string, LatencyDistribution>;

struct UnknownElement : std::runtime_error {
    explicit UnknownElement(const std::string& element)
        : std::runtime_error("no cached latency distribution for element '" + element + "'") {}
};

struct NotParallelizable : std::runtime_error {
    NotParallelizable()
        : std::runtime_error("usage plan is not parallelizable or has no worker split") {}
};

enum class Strategy { Serial, Parallel, Hedge };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Serial: return "serial";
        case Strategy::Parallel: return "parallel";
        case Strategy::Hedge: return "hedge";
    }
    return "?";
}

struct StrategyEstimate {
    Strategy strategy;
    double mean_s = 0;
    std::vector<double> trials;
    double win_rate = 0;  // fraction of trials where strictly fastest
};

struct ScheduleResult {
    Strategy selected;
    std::vector<StrategyEstimate> estimates;
};

namespace detail {

// One pass over a usage list: first interaction of each element sampled from
// its latency source, repeats at the flat c_repeat rate. Read cost is added by
// the callers, whose floor conventions differ. The cache is generic so tests
// can script exact draws; sample() is found by argument-dependent lookup.
template <typename Cache>
double usage_work(const std::vector<ElementUsage>& usage, const Cache& cache,
                  const SchedulerConfig& config, RngStream& rng) {
    double total = 0;
    for (const ElementUsage& u : usage) {
        if (u.count <= 0) continue;
        auto it = cache.find(u.element);
        if (it == cache.end()) throw UnknownElement(u.element);
        total += sample(it->second, rng) + (u.count - 1) * config.c_repeat;
    }
    return total;
}

inline int total_navigations(const std::vector<ElementUsage>& usage) {
    int n = 0;
    for (const ElementUsage& u : usage)
        if (u.count > 0) n += u.navigations;
    return n;
}

}  // namespace detail

// One full serial pass: element work plus the (1 + navigations) page reads.
template <typename Cache>
double estimate_serial_trial(const UsagePlan& usage, const Cache& cache,
                             const SchedulerConfig& config, RngStream& rng) {
    double work = detail::usage_work(usage.sequential, cache, config, rng);
    return work + (1 + detail::total_navigations(usage.sequential)) * config.c_read;
}

// First of n_workers redundant serial replicas, plus the hedge overhead.
template <typename Cache>
double estimate_hedge_trial(const UsagePlan& usage, const Cache& cache,
                            const SchedulerConfig& config, RngStream& rng) {
    double best = estimate_serial_trial(usage, cache, config, rng);
    for (int w = 1; w < config.n_workers; ++w)
        best = std::min(best, estimate_serial_trial(usage, cache, config, rng));
    return best + config.delta_h;
}

// Sequential prefix, then workers in batches of n_workers (batch maxima add),
// plus the parallel overhead. Every worker runs an isolated session and pays
// its own page reads; an empty prefix costs nothing.
template <typename Cache>
double estimate_parallel_trial(const UsagePlan& usage, const Cache& cache,
                               const SchedulerConfig& config, RngStream& rng) {
    if (!usage.parallelizable || !usage.parallel) throw NotParallelizable{};
    const ParallelSplit& split = *usage.parallel;
    double total = 0;
    if (!usage.sequential.empty()) {
        total += detail::usage_work(usage.sequential, cache, config, rng) +
                 (1 + detail::total_navigations(usage.sequential)) * config.c_read;
    }
    size_t i = 0;
    while (i < split.per_worker.size()) {
        double batch_max = 0;
        for (int b = 0; b < config.n_workers && i < split.per_worker.size(); ++b, ++i) {
            const auto& wu = split.per_worker[i];
            double cost = detail::usage_work(wu, cache, config, rng) +
                          (1 + detail::total_navigations(wu)) * config.c_read;
            batch_max = std::max(batch_max, cost);
        }
        total += batch_max;
    }
    return total + config.delta_p;
}

// Algorithm: run n_mc trials per applicable strategy with common random
// numbers (per-trial derived substreams, hedge worker 0 sharing the serial
// draw), pick the minimum mean. win_rate counts trials strictly fastest.
template <typename Cache = SchedulerCache>
ScheduleResult select_strategy(const std::map<Strategy, UsagePlan>& usage_per_strategy,
                               const Cache& cache, const SchedulerConfig& config) {
    if (usage_per_strategy.empty()) throw std::invalid_argument("no strategies to compare");
    RngStream master(config.seed);
    std::vector<StrategyEstimate> estimates;
    for (const auto& [strategy, usage] : usage_per_strategy) {
        if (strategy == Strategy::Parallel && (!usage.parallelizable || !usage.parallel)) continue;
        StrategyEstimate est{strategy, 0, {}, 0};
        est.trials.reserve(static_cast<size_t>(config.n_mc));
        for (int trial = 0; trial < config.n_mc; ++trial) {
            // common random numbers: the trial id picks the substream, the
            // strategy picks a lane inside it; serial and hedge share lane 0
            // so the hedge's first replica sees the serial draw
            RngStream trial_rng = master.derive(static_cast<std::uint64_t>(trial));
            double l = 0;
            switch (strategy) {
                case Strategy::Serial: {
                    RngStream r = trial_rng.derive(0);
                    l = estimate_serial_trial(usage, cache, config, r);
                    break;
                }
                case Strategy::Hedge: {
                    RngStream r = trial_rng.derive(0);
                    l = estimate_hedge_trial(usage, cache, config, r);
                    break;
                }
                case Strategy::Parallel: {
                    RngStream r = trial_rng.derive(1);
                    l = estimate_parallel_trial(usage, cache, config, r);
                    break;
                }
            }
            est.trials.push_back(l);
        }
        for (double l : est.trials) est.mean_s += l;
        est.mean_s /= static_cast<double>(est.trials.size());
        estimates.push_back(std::move(est));
    }
    if (estimates.empty()) throw std::invalid_argument("no applicable strategies");
    // paired win rates over the common trial index
    for (size_t t = 0; t < static_cast<size_t>(config.n_mc); ++t) {
        size_t best = 0;
        bool tie = false;
        for (size_t s = 1; s < estimates.size(); ++s) {
            if (estimates[s].trials[t] < estimates[best].trials[t]) {
                best = s;
                tie = false;
            } else if (estimates[s].trials[t] == estimates[best].trials[t]) {
                tie = true;
            }
        }
        if (!tie) estimates[best].win_rate += 1.0;
    }
    for (auto& e : estimates) e.win_rate /= static_cast<double>(config.n_mc);
    size_t selected = 0;
    for (size_t s = 1; s < estimates.size(); ++s)
        if (estimates[s].mean_s < estimates[selected].mean_s) selected = s;
    return {estimates[selected].strategy, std::move(estimates)};
}

// ---------------------------------------------------------------------------
// Fixture I/O.

namespace detail {

inline std::vector<ElementUsage> usage_list_from_json(const Json& arr) {
    std::vector<ElementUsage> out;
    for (const Json& j : arr)
        out.push_back({j.at("element"), j.value("count", 1), j.value("navigations", 0)});
    return out;
}

}  // namespace detail

inline UsagePlan usage_plan_from_json(const Json& j) {
    UsagePlan plan;
    plan.sequential = detail::usage_list_from_json(j.value("sequential", Json::array()));
    plan.parallelizable = j.value("parallelizable", false);
    if (j.contains("parallel") && !j.at("parallel").is_null()) {
        const Json& p = j.at("parallel");
        ParallelSplit split;
        split.num_workers = p.value("num_workers", 0);
        for (const Json& w : p.value("per_worker", Json::array()))
            split.per_worker.push_back(detail::usage_list_from_json(w));
        split.rediscovery = p.value("rediscovery", std::vector<std::string>{});
        if (split.num_workers == 0) split.num_workers = static_cast<int>(split.per_worker.size());
        if (static_cast<int>(split.per_worker.size()) != split.num_workers)
            throw std::invalid_argument("per_worker length must equal num_workers");
        plan.parallel = std::move(split);
    }
    return plan;
}

inline Json usage_plan_to_json(const UsagePlan& plan) {
    auto list_to_json = [](const std::vector<ElementUsage>& us) {
        Json arr = Json::array();
        for (const auto& u : us)
            arr.push_back({{"element", u.element}, {"count", u.count}, {"navigations", u.navigations}});
        return arr;
    };
    Json j{{"sequential", list_to_json(plan.sequential)}, {"parallelizable", plan.parallelizable}};
    if (plan.parallel) {
        Json workers = Json::array();
        for (const auto& w : plan.parallel->per_worker) workers.push_back(list_to_json(w));
        j["parallel"] = Json{{"num_workers", plan.parallel->num_workers},
                             {"per_worker", workers},
                             {"rediscovery", plan.parallel->rediscovery}};
    }
    return j;
}

// Usage fixture file: {"serial": UsagePlan, "hedge": ..., "parallel": ...} or
// a single UsagePlan applied to every strategy.
inline std::map<Strategy, UsagePlan> strategy_usage_from_json(const Json& j) {
    std::map<Strategy, UsagePlan> out;
    if (j.contains("sequential")) {
        UsagePlan plan = usage_plan_from_json(j);
        out[Strategy::Serial] = plan;
        out[Strategy::Hedge] = plan;
        if (plan.parallelizable && plan.parallel) out[Strategy::Parallel] = plan;
        return out;
    }
    if (j.contains("serial")) out[Strategy::Serial] = usage_plan_from_json(j.at("serial"));
    if (j.contains("hedge")) out[Strategy::Hedge] = usage_plan_from_json(j.at("hedge"));
    if (j.contains("parallel")) out[Strategy::Parallel] = usage_plan_from_json(j.at("parallel"));
    if (out.empty()) throw std::invalid_argument("usage document defines no strategies");
    return out;
}

inline Json schedule_result_to_json(const ScheduleResult& r, bool include_trials = false) {
    Json est = Json::array();
    for (const auto& e : r.estimates) {
        Json j{{"strategy", strategy_name(e.strategy)},
               {"mean_s", e.mean_s},
               {"win_rate", e.win_rate},
               {"n_trials", e.trials.size()}};
        if (include_trials) j["trials"] = e.trials;
        est.push_back(std::move(j));
    }
    return Json{{"schema_version", 1}, {"selected", strategy_name(r.selected)}, {"estimates", est}};
}

}  // namespace agentjit

#endif
