#ifndef AGENTJIT_TRACES_HPP
#define AGENTJIT_TRACES_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "distributions.hpp"
#include "scheduler.hpp"

namespace agentjit {

// One executed task: ordered, labeled interaction steps with latencies.
struct TraceStep {
    int index = 0;
    std::string element;
    std::string page;
    double latency_s = 0;
    bool success = true;
    bool is_modal = false;
    std::optional<std::string> modal_name;
};

struct TraceRecord {
    std::string task_id;
    std::vector<TraceStep> steps;
};

struct MalformedTrace : std::runtime_error {
    MalformedTrace(const std::string& path, const std::string& reason)
        : std::runtime_error("malformed trace " + path + ": " + reason) {}
};

inline Json trace_record_to_json(const TraceRecord& t) {
    Json steps = Json::array();
    for (const auto& s : t.steps) {
        Json j{{"index", s.index},       {"element", s.element},   {"page", s.page},
               {"latency_s", s.latency_s}, {"success", s.success}, {"is_modal", s.is_modal}};
        if (s.modal_name) j["modal_name"] = *s.modal_name;
        steps.push_back(std::move(j));
    }
    return Json{{"task_id", t.task_id}, {"steps", steps}};
}

inline TraceRecord trace_record_from_json(const Json& j, const std::string& origin = "<memory>") {
    TraceRecord t;
    try {
        t.task_id = j.at("task_id");
        int last_index = -1;
        for (const Json& sj : j.at("steps")) {
            TraceStep s;
            s.index = sj.at("index");
            s.element = sj.at("element");
            s.page = sj.value("page", "");
            s.latency_s = sj.at("latency_s");
            s.success = sj.value("success", true);
            s.is_modal = sj.value("is_modal", false);
            if (sj.contains("modal_name") && !sj.at("modal_name").is_null())
                s.modal_name = sj.at("modal_name").get<std::string>();
            if (s.latency_s < 0) throw MalformedTrace(origin, "negative latency at step " +
                                                                  std::to_string(s.index));
            if (s.index <= last_index)
                throw MalformedTrace(origin, "step indices must be strictly increasing");
            last_index = s.index;
            t.steps.push_back(std::move(s));
        }
    } catch (const Json::exception& e) {
        throw MalformedTrace(origin, e.what());
    }
    return t;
}

using Observations = std::map<std::string, std::vector<double>>;

// Groups per-element latencies across traces. Failed steps are excluded by
// default: a failure's latency reflects retry pathology, not the element.
inline Observations ingest(const std::vector<TraceRecord>& traces, bool include_failures = false) {
    Observations obs;
    for (const TraceRecord& t : traces)
        for (const TraceStep& s : t.steps)
            if (s.success || include_failures) obs[s.element].push_back(s.latency_s);
    return obs;
}

inline Observations ingest_files(const std::vector<std::filesystem::path>& files,
                                 bool include_failures = false) {
    std::vector<TraceRecord> traces;
    for (const auto& path : files) {
        std::ifstream in(path);
        if (!in) throw MalformedTrace(path.string(), "cannot open");
        Json j;
        try {
            in >> j;
        } catch (const Json::exception& e) {
            throw MalformedTrace(path.string(), e.what());
        }
        traces.push_back(trace_record_from_json(j, path.string()));
    }
    return ingest(traces, include_failures);
}

// ---------------------------------------------------------------------------
// Scheduler cache: element -> {family, params, n_obs, mean_s, std_s, page}.

inline Json build_scheduler_cache(const Observations& observations,
                                  const std::map<std::string, std::string>& pages = {}) {
    Json cache = Json::object();
    for (const auto& [element, latencies] : observations) {  // std::map: alphabetical
        if (latencies.empty()) throw DistributionError("no observations for element " + element);
        LatencyDistribution dist = fit(latencies);
        Json entry = distribution_to_json(dist);
        entry["n_obs"] = latencies.size();
        entry["mean_s"] = dist.mean();
        entry["std_s"] = dist.stddev();
        auto pit = pages.find(element);
        entry["page"] = pit == pages.end() ? "" : pit->second;
        cache[element] = std::move(entry);
    }
    return cache;
}

inline SchedulerCache load_scheduler_cache(const Json& doc) {
    SchedulerCache cache;
    for (const auto& [element, entry] : doc.items())
        cache.emplace(element, distribution_from_json(entry));
    return cache;
}

inline std::vector<ElementStats> cache_stats(const Json& doc) {
    std::vector<ElementStats> out;
    for (const auto& [element, entry] : doc.items()) {
        out.push_back({element, entry.value("page", ""), distribution_from_json(entry),
                       entry.value("n_obs", 0), entry.value("mean_s", 0.0),
                       entry.value("std_s", 0.0)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Planner cache index: action -> {manifest: path, created_from: [task_ids]}.

struct PlannerCacheEntry {
    std::string action;
    std::string manifest_path;
    std::vector<std::string> created_from;
};

inline Json planner_cache_to_json(const std::vector<PlannerCacheEntry>& entries) {
    Json doc = Json::object();
    for (const auto& e : entries)
        doc[e.action] = Json{{"manifest", e.manifest_path}, {"created_from", e.created_from}};
    return doc;
}

inline std::vector<PlannerCacheEntry> planner_cache_from_json(const Json& doc) {
    std::vector<PlannerCacheEntry> out;
    for (const auto& [action, entry] : doc.items())
        out.push_back({action, entry.at("manifest"),
                       entry.value("created_from", std::vector<std::string>{})});
    return out;
}

}  // namespace agentjit

#endif
