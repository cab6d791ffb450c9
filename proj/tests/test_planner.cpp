#include <doctest.h>

#include <agentjit/planner.hpp>

#include "fixtures.hpp"

using namespace agentjit;

namespace {

PlannerConfig dashdish_config() {
    PlannerConfig cfg;
    cfg.initial_state = fixtures::initial_home_state();
    return cfg;
}

// Emits an invalid plan until it sees feedback, then a valid one.
class FeedbackProbeGenerator : public PlanGenerator {
public:
    GeneratedPlan generate(const std::string&, const ManifestSet&,
                           const std::optional<std::string>& feedback, RngStream&) override {
        if (feedback) last_feedback = *feedback;
        if (feedback) return {fixtures::plan_c_text(), 1.0};
        return {fixtures::plan_a_text(), 1.0};
    }
    std::string last_feedback;
};

}  // namespace

TEST_CASE("corpus planning selects the cheapest valid candidate") {
    CorpusGenerator gen({fixtures::plan_a_text(), fixtures::plan_b_text(),
                         fixtures::plan_c_text()});
    PlannerConfig cfg = dashdish_config();
    cfg.n_workers = 3;
    cfg.k_valid = 2;
    auto outcome = plan("count cheap restaurants", fixtures::dashdish_manifests(), gen, cfg);
    REQUIRE(outcome.selected.has_value());
    CHECK(outcome.selected->cost == doctest::Approx(0.20));
    CHECK(outcome.selected->text == fixtures::plan_c_text());
    CHECK(outcome.candidates.size() == 2);  // plans B and C
    REQUIRE(outcome.rejected.size() == 1);  // plan A
    CHECK(outcome.rejected[0].report.at("valid") == false);
    // the winner's cost is the minimum over candidates
    for (const auto& c : outcome.candidates) CHECK(outcome.selected->cost <= c.cost);
}

TEST_CASE("an always-invalid generator yields the empty outcome") {
    CorpusGenerator gen({fixtures::plan_a_text()});
    PlannerConfig cfg = dashdish_config();
    cfg.n_workers = 4;
    auto outcome = plan("t", fixtures::dashdish_manifests(), gen, cfg);
    CHECK_FALSE(outcome.selected.has_value());
    CHECK(outcome.candidates.empty());
    CHECK(outcome.rejected.size() == 4);
}

TEST_CASE("retry feeds the validation report back to the generator") {
    FeedbackProbeGenerator gen;
    PlannerConfig cfg = dashdish_config();
    cfg.n_workers = 1;
    cfg.m_max = 2;
    cfg.k_valid = 1;
    auto outcome = plan("t", fixtures::dashdish_manifests(), gen, cfg);
    REQUIRE(outcome.selected.has_value());
    CHECK(outcome.selected->iteration == 1);
    CHECK(gen.last_feedback.find("page_type") != std::string::npos);
    CHECK(gen.last_feedback.find("get_store_details") != std::string::npos);
}

TEST_CASE("unparseable generator output is rejected with a parse report") {
    CorpusGenerator gen({"call ("});
    PlannerConfig cfg = dashdish_config();
    cfg.n_workers = 1;
    auto outcome = plan("t", fixtures::dashdish_manifests(), gen, cfg);
    CHECK_FALSE(outcome.selected.has_value());
    REQUIRE(outcome.rejected.size() == 1);
    CHECK(outcome.rejected[0].report.contains("parse_error"));
}

TEST_CASE("early stop keeps in-flight work but not unstarted iterations") {
    // worker latencies are 1.0 each; with k_valid=2 the stop time is the
    // second valid completion, and every worker's first iteration (started at
    // time 0) is included
    CorpusGenerator gen({fixtures::plan_c_text()});
    PlannerConfig cfg = dashdish_config();
    cfg.n_workers = 8;
    cfg.k_valid = 2;
    cfg.m_max = 3;
    auto outcome = plan("t", fixtures::dashdish_manifests(), gen, cfg);
    CHECK(outcome.candidates.size() == 8);  // all first iterations were in flight
    CHECK(outcome.rejected.empty());
    for (const auto& c : outcome.candidates) CHECK(c.iteration == 0);
}

TEST_CASE("mock generator success rate follows the closed form") {
    const double p = 0.5;
    const int n_workers = 8;
    int successes = 0;
    const int runs = 1000;
    for (int i = 0; i < runs; ++i) {
        BernoulliMockGenerator gen(p);
        PlannerConfig cfg;
        cfg.n_workers = n_workers;
        cfg.k_valid = 1;
        cfg.seed = static_cast<std::uint64_t>(i);
        if (plan("t", fixtures::dashdish_manifests(), gen, cfg).selected) ++successes;
    }
    double expect = 1.0 - std::pow(1.0 - p, n_workers);
    CHECK(static_cast<double>(successes) / runs == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("outcome is byte-identical under a fixed seed") {
    auto run_once = [](std::uint64_t seed) {
        BernoulliMockGenerator gen(0.6, LatencyDistribution::weibull(2.0, 3.0));
        PlannerConfig cfg;
        cfg.n_workers = 8;
        cfg.k_valid = 4;
        cfg.m_max = 2;
        cfg.seed = seed;
        return planner_outcome_to_json(plan("t", fixtures::dashdish_manifests(), gen, cfg)).dump();
    };
    std::string first = run_once(42);
    for (int i = 0; i < 4; ++i) CHECK(run_once(42) == first);
    CHECK(run_once(43) != first);
}

TEST_CASE("feedback rendering") {
    auto report = validate(build_cfg(parse_plan(fixtures::plan_a_text())),
                           fixtures::dashdish_manifests(), fixtures::initial_home_state());
    REQUIRE_FALSE(report.valid);
    auto text = render_feedback(report);
    CHECK(text.find("page_type") != std::string::npos);
    CHECK(text.find("get_store_details") != std::string::npos);
    CHECK(text.find("line ") != std::string::npos);

    // one line per hard violation
    auto multi = validate(build_cfg(parse_plan("call nope()\ncall also_nope()")),
                          fixtures::dashdish_manifests());
    std::string multi_text = render_feedback(multi);
    CHECK(std::count(multi_text.begin(), multi_text.end(), '\n') == 2);

    // lint-only reports produce no feedback
    auto linted = validate(build_cfg(parse_plan("call goto_store(store_name=\"X\")")),
                           fixtures::dashdish_manifests(), fixtures::initial_home_state());
    REQUIRE(linted.valid);
    CHECK(render_feedback(linted).empty());
}

TEST_CASE("planner outcome JSON shape") {
    CorpusGenerator gen({fixtures::plan_c_text()});
    PlannerConfig cfg = dashdish_config();
    cfg.n_workers = 2;
    cfg.k_valid = 1;
    auto j = planner_outcome_to_json(plan("t", fixtures::dashdish_manifests(), gen, cfg));
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("selected").at("cost") == doctest::Approx(0.20));
    CHECK(j.at("candidates").is_array());
    CHECK(j.at("rejected").is_array());

    PlannerOutcome empty;
    CHECK(planner_outcome_to_json(empty).at("selected").is_null());
}
