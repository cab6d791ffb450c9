#ifndef AGENTJIT_PLANNER_HPP
#define AGENTJIT_PLANNER_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfg.hpp"
#include "cost.hpp"
#include "distributions.hpp"
#include "manifest.hpp"
#include "planlang.hpp"
#include "rng.hpp"
#include "validator.hpp"

namespace agentjit {

struct PlannerConfig {
    int n_workers = 8;
    int k_valid = 32;  // early-stop once this many valid candidates exist
    int m_max = 1;     // retry budget per worker
    CostModel cost_model;
    TrackedState initial_state;
    std::uint64_t seed = 0;
};

struct GeneratedPlan {
    std::string text;
    double latency_s = 0;  // simulated generation latency
};

// Candidate-plan source. Implementations must be deterministic given their
// inputs plus the rng-stream, so planner runs replay exactly under a seed.
class PlanGenerator {
public:
    virtual ~PlanGenerator() = default;
    virtual GeneratedPlan generate(const std::string& task, const ManifestSet& manifests,
                                   const std::optional<std::string>& feedback, RngStream& rng) = 0;
};

// Round-robin over a fixed corpus of plan texts.
class CorpusGenerator : public PlanGenerator {
public:
    explicit CorpusGenerator(std::vector<std::string> texts, double latency_s = 1.0)
        : texts_(std::move(texts)), latency_s_(latency_s) {}

    GeneratedPlan generate(const std::string&, const ManifestSet&,
                           const std::optional<std::string>&, RngStream&) override {
        GeneratedPlan out{texts_[next_ % texts_.size()], latency_s_};
        ++next_;
        return out;
    }

private:
    std::vector<std::string> texts_;
    double latency_s_;
    size_t next_ = 0;
};

// Emits a trivially valid plan with probability p, else a plan that fails
// validation (unknown tool); generation latency drawn per call.
class BernoulliMockGenerator : public PlanGenerator {
public:
    explicit BernoulliMockGenerator(double p,
                                    LatencyDistribution latency = LatencyDistribution::fixed(1.0))
        : p_(p), latency_(std::move(latency)) {}

    GeneratedPlan generate(const std::string&, const ManifestSet&,
                           const std::optional<std::string>&, RngStream& rng) override {
        double latency = sample(latency_, rng);
        if (rng.uniform() < p_) return {"result = \"ok\"\nreturn result", latency};
        return {"call __mock_invalid__()", latency};
    }

private:
    double p_;
    LatencyDistribution latency_;
};

struct PlannerCandidate {
    std::string text;
    double cost = 0;
    int worker_id = 0;
    int iteration = 0;
    double elapsed = 0;  // simulated completion time
};

struct PlannerRejection {
    std::string text;
    int worker_id = 0;
    int iteration = 0;
    Json report;  // validation report, or {"parse_error": ...}
};

struct PlannerOutcome {
    std::optional<PlannerCandidate> selected;
    std::vector<PlannerCandidate> candidates;
    std::vector<PlannerRejection> rejected;
};

// Deterministic text form of an invalid report, fed back to the generator.
inline std::string render_feedback(const ValidationReport& report) {
    std::string out;
    for (const auto& v : report.violations) {
        if (v.kind == ViolationKind::ProvenanceLint) continue;
        out += "line " + std::to_string(v.span.line) + ":" + std::to_string(v.span.col) + " " +
               v.tool + ": " + violation_kind_name(v.kind) + " - " + v.detail + "\n";
    }
    return out;
}

namespace detail {

struct PlannerIteration {
    int worker = 0;
    int iteration = 0;
    double start = 0;
    double end = 0;
    std::string text;
    bool valid = false;
    double cost = 0;
    Json report;
};

}  // namespace detail

// Outer sampling loop: n_workers concurrent generator workers, each retrying
// up to m_max times with validation feedback, early-stopping at k_valid
// candidates. Worker concurrency runs in simulated time — per-worker derived
// rng-streams and generator-reported latencies — so the outcome is a pure
// function of (inputs, seed) regardless of host scheduling.
inline PlannerOutcome plan(const std::string& task, const ManifestSet& manifests,
                           PlanGenerator& generator, const PlannerConfig& config) {
    RngStream master(config.seed);
    std::vector<detail::PlannerIteration> iterations;
    for (int w = 0; w < config.n_workers; ++w) {
        RngStream worker_rng = master.derive(static_cast<std::uint64_t>(w));
        double t = 0;
        std::optional<std::string> feedback;
        for (int m = 0; m < config.m_max; ++m) {
            GeneratedPlan gen = generator.generate(task, manifests, feedback, worker_rng);
            detail::PlannerIteration it;
            it.worker = w;
            it.iteration = m;
            it.start = t;
            it.end = t + gen.latency_s;
            t = it.end;
            it.text = gen.text;
            try {
                PlanProgram program = parse_plan(gen.text);
                ValidationReport report =
                    validate(build_cfg(program), manifests, config.initial_state);
                it.report = report.to_json();
                if (report.valid) {
                    it.valid = true;
                    it.cost = estimate_cost(build_cfg(program), config.cost_model).total;
                } else {
                    feedback = render_feedback(report);
                }
            } catch (const ParseError& e) {
                it.report = Json{{"parse_error", e.what()}};
                feedback = std::string("parse error: ") + e.what();
            }
            iterations.push_back(std::move(it));
            if (iterations.back().valid) break;
        }
    }
    // canonical simulated-time order
    std::sort(iterations.begin(), iterations.end(),
              [](const detail::PlannerIteration& a, const detail::PlannerIteration& b) {
                  if (a.end != b.end) return a.end < b.end;
                  if (a.worker != b.worker) return a.worker < b.worker;
                  return a.iteration < b.iteration;
              });
    // completion time of the k-th valid candidate; in-flight work at that
    // moment still completes and is included
    double stop_time = -1;
    int valid_seen = 0;
    for (const auto& it : iterations) {
        if (!it.valid) continue;
        if (++valid_seen == config.k_valid) {
            stop_time = it.end;
            break;
        }
    }
    PlannerOutcome outcome;
    for (const auto& it : iterations) {
        if (stop_time >= 0 && it.start >= stop_time) continue;  // never started
        if (it.valid)
            outcome.candidates.push_back({it.text, it.cost, it.worker, it.iteration, it.end});
        else
            outcome.rejected.push_back({it.text, it.worker, it.iteration, it.report});
    }
    if (!outcome.candidates.empty()) {
        struct Costed {
            double cost;
        };
        std::vector<Costed> costs;
        for (const auto& c : outcome.candidates) costs.push_back({c.cost});
        outcome.selected = outcome.candidates[rank(costs)];
    }
    return outcome;
}

inline Json planner_outcome_to_json(const PlannerOutcome& outcome) {
    auto candidate_to_json = [](const PlannerCandidate& c) {
        return Json{{"plan", c.text},
                    {"cost", c.cost},
                    {"worker_id", c.worker_id},
                    {"iteration", c.iteration},
                    {"elapsed", c.elapsed}};
    };
    Json candidates = Json::array();
    for (const auto& c : outcome.candidates) candidates.push_back(candidate_to_json(c));
    Json rejected = Json::array();
    for (const auto& r : outcome.rejected)
        rejected.push_back({{"plan", r.text},
                            {"worker_id", r.worker_id},
                            {"iteration", r.iteration},
                            {"report", r.report}});
    return Json{{"schema_version", 1},
                {"selected", outcome.selected ? candidate_to_json(*outcome.selected) : Json()},
                {"candidates", candidates},
                {"rejected", rejected}};
}

}  // namespace agentjit

#endif
