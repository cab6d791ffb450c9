// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Each criterion is self-contained and seeded.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <agentjit/cost.hpp>
#include <agentjit/distributions.hpp>
#include <agentjit/metrics.hpp>
#include <agentjit/planlang.hpp>
#include <agentjit/planner.hpp>
#include <agentjit/scheduler.hpp>
#include <agentjit/simulator.hpp>
#include <agentjit/validator.hpp>

#include "fixtures.hpp"

using namespace agentjit;

namespace {

struct Criterion {
    int number;
    std::string title;
    std::vector<std::string> failures;

    void require(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void require_near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream os;
            os << what << ": got " << got << ", want " << want << " +/- " << tol;
            failures.push_back(os.str());
        }
    }
};

int run_criterion(Criterion& c, double time_limit_s, const std::function<void(Criterion&)>& body) {
    auto start = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("exception: ") + e.what());
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (time_limit_s > 0 && elapsed > time_limit_s) {
        std::ostringstream os;
        os << "runtime " << elapsed << "s exceeds limit " << time_limit_s << "s";
        c.failures.push_back(os.str());
    }
    std::printf("criterion %d: %s — %s (%.2fs)\n", c.number, c.failures.empty() ? "PASS" : "FAIL",
                c.title.c_str(), elapsed);
    for (const auto& f : c.failures) std::printf("    %s\n", f.c_str());
    std::fflush(stdout);
    return c.failures.empty() ? 0 : 1;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<size_t> order(v.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        size_t i = 0;
        while (i < v.size()) {
            size_t j = i;
            while (j + 1 < v.size() && v[order[j + 1]] == v[order[i]]) ++j;
            double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    std::vector<double> ra = ranks(a), rb = ranks(b);
    double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
    double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
    double num = 0, da = 0, db = 0;
    for (size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return num / std::sqrt(da * db);
}

// A manifest whose contract is a single concrete state variable transition
// (or no contract at all when `pre` is empty).
ToolManifest transition_tool(const std::string& name, const std::string& var,
                             const std::string& pre, const std::string& post) {
    Json j{{"name", name},
           {"type", "clickItem"},
           {"description", "synthetic fixture tool"},
           {"input_schema", Json{{"type", "object"}, {"properties", Json::object()}}},
           {"output_schema", Json{{"type", "object"}, {"properties", Json::object()}}},
           {"pre", Json::object()},
           {"post", Json::object()},
           {"execute", "/* fixture */"}};
    if (!pre.empty()) j["pre"][var] = pre;
    if (!post.empty()) j["post"][var] = post;
    return parse_manifest(j);
}

double closed_form_pass_at_k(int n, int c, int k) { return pass_at_k(n, c, k); }

// Enumeration oracle for Pass@k (same as the unit-test oracle, kept
// independent of metrics.hpp internals).
double pass_at_k_enumerated(int n, int c, int k) {
    long long hits = 0, total = 0;
    std::vector<int> idx(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<size_t>(i)] = i;
    while (true) {
        ++total;
        bool any = false;
        for (int i : idx)
            if (i < c) any = true;
        if (any) ++hits;
        int pos = k - 1;
        while (pos >= 0 && idx[static_cast<size_t>(pos)] == n - k + pos) --pos;
        if (pos < 0) break;
        ++idx[static_cast<size_t>(pos)];
        for (int j = pos + 1; j < k; ++j)
            idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

// --------------------------------------------------------------------------
// 1. Worked-example costs and state-flow rejection.
static void criterion1(Criterion& c) {
    auto manifests = fixtures::dashdish_manifests();
    auto cost_of = [](const std::string& text) {
        return estimate_cost(build_cfg(parse_plan(text))).total;
    };
    c.require_near(cost_of(fixtures::plan_b_text()), 10.10, 1e-9, "deep-plan cost");
    c.require_near(cost_of(fixtures::plan_c_text()), 0.20, 1e-9, "shallow-plan cost");

    auto report = validate(build_cfg(parse_plan(fixtures::plan_a_text())), manifests,
                           fixtures::initial_home_state());
    c.require(!report.valid, "state-invalid plan must be rejected");
    bool found = false;
    for (const auto& v : report.violations)
        if (v.kind == ViolationKind::PreconditionUnmet &&
            v.detail.find("page_type") != std::string::npos)
            found = true;
    c.require(found, "rejection must be a PreconditionUnmet naming page_type");
}

// --------------------------------------------------------------------------
// 2. Single-navigation trial arithmetic with injected samples.
static void criterion2(Criterion& c) {
    SchedulerConfig cfg;
    RngStream rng(0);
    auto usage = fixtures::ex1_usage();

    fixtures::ScriptedCache serial_cache{{"restaurantCard", {{8.4}}}};
    c.require_near(estimate_serial_trial(usage.at(Strategy::Serial), serial_cache, cfg, rng), 18.4,
                   5e-4, "serial trial");

    fixtures::ScriptedCache hedge_cache{{"restaurantCard", {{8.4, 9.1, 7.6, 10.2}}}};
    c.require_near(estimate_hedge_trial(usage.at(Strategy::Hedge), hedge_cache, cfg, rng), 22.6,
                   5e-4, "hedge trial");

    fixtures::ScriptedCache parallel_cache{{"restaurantCard", {{8.4, 11.5, 7.2, 9.8}}}};
    c.require_near(estimate_parallel_trial(usage.at(Strategy::Parallel), parallel_cache, cfg, rng),
                   41.5, 5e-4, "parallel trial");
}

// --------------------------------------------------------------------------
// 3. Heavy-tailed checkout task: Monte Carlo selection and margins.
static void criterion3(Criterion& c) {
    SchedulerConfig cfg;
    cfg.seed = 11;  // n_mc = 1000 default
    auto result = select_strategy(fixtures::ex2_usage(), fixtures::ex2_cache(), cfg);
    c.require(result.selected == Strategy::Hedge, "Hedge must be selected");
    for (const auto& e : result.estimates) {
        if (e.strategy == Strategy::Serial) c.require_near(e.mean_s, 133.5, 10.0, "serial mean");
        if (e.strategy == Strategy::Hedge) {
            c.require_near(e.mean_s, 114.7, 10.0, "hedge mean");
            c.require_near(e.win_rate, 0.726, 0.05, "hedge win rate");
        }
    }
}

// --------------------------------------------------------------------------
// 4. Latency-model sanity: sampler moments and CDF monotonicity.
static void criterion4(Criterion& c) {
    auto dist = LatencyDistribution::weibull(3.60, 10.25);
    RngStream rng(404);
    const int n = 1000000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        double x = sample(dist, rng);
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double sd = std::sqrt(sq / n - mean * mean);
    // closed-form moments of Weibull(k=3.60, lambda=10.25):
    // mean = lambda*Gamma(1+1/k), var = lambda^2*(Gamma(1+2/k)-Gamma(1+1/k)^2)
    c.require_near(mean, 9.2363, 0.05, "sampled mean vs closed form");
    c.require_near(sd, 2.8497, 0.05, "sampled stddev vs closed form");

    RngStream prng(405);
    for (int i = 0; i < 10000; ++i) {
        LatencyDistribution d = LatencyDistribution::fixed(1.0);
        switch (prng.below(3)) {
            case 0:
                d = LatencyDistribution::weibull(0.3 + 5.0 * prng.uniform(),
                                                 0.1 + 50.0 * prng.uniform());
                break;
            case 1:
                d = LatencyDistribution::gamma(0.2 + 6.0 * prng.uniform(),
                                               0.1 + 40.0 * prng.uniform());
                break;
            default:
                d = LatencyDistribution::lognormal(-1.0 + 5.0 * prng.uniform(),
                                                   0.05 + 1.5 * prng.uniform());
                break;
        }
        double t1 = 100.0 * prng.uniform();
        double t2 = t1 + 100.0 * prng.uniform();
        double f1 = cdf(d, t1), f2 = cdf(d, t2);
        if (!(f1 >= 0.0 && f2 <= 1.0 + 1e-12 && f1 <= f2 + 1e-12 && cdf(d, 0.0) <= 1e-12)) {
            c.require(false, std::string("CDF monotonicity/bounds violated for ") +
                                 d.family_name());
            return;
        }
    }
}

// --------------------------------------------------------------------------
// 5. Pass@k oracle equivalence plus the large-suite anchor.
static void criterion5(Criterion& c) {
    for (int n = 1; n <= 12; ++n)
        for (int cc = 0; cc <= n; ++cc)
            for (int k = 1; k <= n; ++k)
                if (std::abs(closed_form_pass_at_k(n, cc, k) - pass_at_k_enumerated(n, cc, k)) >
                    1e-12) {
                    std::ostringstream os;
                    os << "mismatch at n=" << n << " c=" << cc << " k=" << k;
                    c.require(false, os.str());
                    return;
                }

    std::vector<RunRecord> suite;
    for (int i = 0; i < 1184; ++i) suite.push_back({i < 1077, 1.0});
    auto curves = pass_curves(suite, {1}, {}, 1);
    c.require_near(curves.pass_k[0].second, 0.910, 0.001, "Pass@1 on the 1184-record suite");
}

// --------------------------------------------------------------------------
// 6. Pass@t plateau and Monte Carlo cross-check.
static void criterion6(Criterion& c) {
    const double p = 0.22;
    const int n_parallel = 8;
    auto full = [](double) { return 1.0; };
    c.require_near(pass_at_t(full, p, n_parallel, 1e9), 0.863, 0.01, "plateau value");

    auto dist = LatencyDistribution::gamma(1.31, 18.95);
    auto cdf_fn = [&](double t) { return cdf(dist, t); };
    const double t = 25.0;
    double closed = pass_at_t(cdf_fn, p, n_parallel, t);
    RngStream rng(606);
    const int n = 1000000;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        bool any = false;
        for (int w = 0; w < n_parallel; ++w) {
            double latency = sample(dist, rng);
            bool valid = rng.uniform() < p;
            if (valid && latency <= t) any = true;
        }
        if (any) ++hits;
    }
    c.require_near(static_cast<double>(hits) / n, closed, 0.002, "Monte Carlo vs closed form");
}

// --------------------------------------------------------------------------
// 7. Cost-rank fidelity over a generated corpus.
static void criterion7(Criterion& c) {
    ManifestSet manifests;
    manifests.add(transition_tool("probe", "page", "", ""));

    SimEnv env;
    env.tool_latency.emplace("probe", LatencyDistribution::weibull(3.0, 0.55));
    env.eval_latency = LatencyDistribution::gamma(4.0, 1.5);  // mean 6s model call

    // 50 plans spanning 1..10 cheap tool calls and 0..4 expensive model calls
    std::vector<std::string> corpus;
    for (int tools = 1; tools <= 10; ++tools)
        for (int evals = 0; evals <= 4; ++evals) {
            std::string text;
            for (int i = 0; i < tools; ++i) text += "call probe()\n";
            for (int i = 0; i < evals; ++i)
                text += "a" + std::to_string(i) + " = eval \"subtask " + std::to_string(i) +
                        "\"()\n";
            corpus.push_back(text);
        }

    std::vector<double> costs, latencies;
    RngStream master(707);
    for (size_t p = 0; p < corpus.size(); ++p) {
        auto program = parse_plan(corpus[p]);
        costs.push_back(estimate_cost(build_cfg(program)).total);
        double sum = 0;
        const int trials = 500;
        for (int t = 0; t < trials; ++t) {
            RngStream r = master.derive(p, static_cast<std::uint64_t>(t));
            auto result = run_plan(program, manifests, env, r);
            if (!result.ok) {
                c.require(false, "corpus plan failed to execute");
                return;
            }
            sum += result.latency_s;
        }
        latencies.push_back(sum / trials);
    }

    double rho = spearman(costs, latencies);
    c.require(rho >= 0.8, "Spearman(cost, latency) = " + std::to_string(rho) + " < 0.8");
    size_t best = static_cast<size_t>(
        std::min_element(costs.begin(), costs.end()) - costs.begin());
    size_t worst = static_cast<size_t>(
        std::max_element(costs.begin(), costs.end()) - costs.begin());
    double ratio = latencies[worst] / latencies[best];
    c.require(ratio >= 1.5, "best/worst latency ratio = " + std::to_string(ratio) + " < 1.5");
}

// --------------------------------------------------------------------------
// 8. Validator soundness fuzz on concrete contracts.
static void criterion8(Criterion& c) {
    // A five-step page chain: step_i requires page=p_i and moves to p_{i+1};
    // "idle" has no contract at all.
    const int chain = 5;
    ManifestSet manifests;
    for (int i = 0; i < chain; ++i)
        manifests.add(transition_tool("step_" + std::to_string(i), "page",
                                      "p" + std::to_string(i), "p" + std::to_string(i + 1)));
    manifests.add(transition_tool("idle", "page", "", ""));

    TrackedState initial{{"page", TrackedValue::concrete("p0")}};
    SimEnv env;
    env.state["page"] = "p0";

    auto check_plan = [&](const PlanProgram& program) -> int {
        bool accepted = validate(build_cfg(program), manifests, initial).valid;
        RngStream r(0);
        bool ran_clean = run_plan(program, manifests, env, r).ok;
        return accepted && !ran_clean ? 1 : 0;
    };

    RngStream rng(808);
    int unsound = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::string text;
        int len = 1 + static_cast<int>(rng.below(6));
        for (int i = 0; i < len; ++i) {
            if (rng.below(4) == 0)
                text += "call idle()\n";
            else
                text += "call step_" + std::to_string(rng.below(chain)) + "()\n";
        }
        unsound += check_plan(parse_plan(text));
    }
    c.require(unsound == 0,
              std::to_string(unsound) + " accepted plans failed at runtime (fuzz)");

    // Call-swap mutants of the valid full chain: every runtime failure must
    // already be a static rejection.
    std::vector<std::string> base;
    for (int i = 0; i < chain; ++i) base.push_back("call step_" + std::to_string(i) + "()");
    int mutant_unsound = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        auto mutant = base;
        size_t a = rng.below(mutant.size());
        size_t b = rng.below(mutant.size());
        std::swap(mutant[a], mutant[b]);
        std::string text;
        for (const auto& line : mutant) text += line + "\n";
        mutant_unsound += check_plan(parse_plan(text));
    }
    c.require(mutant_unsound == 0,
              std::to_string(mutant_unsound) + " accepted mutants failed at runtime");
}

// --------------------------------------------------------------------------
// 9. Scheduler-vs-oracle agreement and planner determinism.
static void criterion9(Criterion& c) {
    // 30 fixtures: 10 low-variance, 10 heavy-tail, 10 parallelizable. Each
    // fixture is expressed twice with identical latencies: as a usage plan +
    // cache for the Monte Carlo scheduler and as a plan + env for the
    // simulator oracle. Page-read/repeat surcharges are zeroed so the two
    // models describe the same process.
    RngStream gen(909);
    int agree = 0;
    const int total = 30;
    for (int f = 0; f < total; ++f) {
        int regime = f % 3;  // 0 = low-variance, 1 = heavy-tail, 2 = parallelizable
        int m = 3 + static_cast<int>(gen.below(2));
        SchedulerCache cache;
        ManifestSet manifests;
        SimEnv env;
        UsagePlan serial_usage;
        std::string program_text;
        std::vector<PlanProgram> workers;

        for (int i = 0; i < m; ++i) {
            std::string e = "elem" + std::to_string(i);
            LatencyDistribution d = LatencyDistribution::fixed(2.0 + 4.0 * gen.uniform());
            if (regime == 1 && i == 0)
                d = LatencyDistribution::gamma(0.9, 40.0 + 20.0 * gen.uniform());
            if (regime == 2) d = LatencyDistribution::fixed(8.0 + 4.0 * gen.uniform());
            cache.emplace(e, d);
            manifests.add(transition_tool(e, "page", "", ""));
            env.tool_latency.emplace(e, d);
            serial_usage.sequential.push_back({e, 1, 0});
            program_text += "call " + e + "()\n";
            if (regime == 2) workers.push_back(parse_plan("call " + e + "()"));
        }

        std::map<Strategy, UsagePlan> usage{{Strategy::Serial, serial_usage},
                                            {Strategy::Hedge, serial_usage}};
        if (regime == 2) {
            UsagePlan par;
            par.parallelizable = true;
            ParallelSplit split;
            split.num_workers = m;
            for (int i = 0; i < m; ++i)
                split.per_worker.push_back({{"elem" + std::to_string(i), 1, 0}});
            par.parallel = std::move(split);
            usage[Strategy::Parallel] = std::move(par);
        }

        SchedulerConfig scfg;
        scfg.c_read = 0;
        scfg.c_repeat = 0;
        scfg.seed = static_cast<std::uint64_t>(1000 + f);
        auto predicted = select_strategy(usage, cache, scfg).selected;

        SimStrategyConfig sim_cfg;  // same n_workers / delta_h / delta_p defaults
        auto actual = oracle_strategy(parse_plan(program_text), workers, manifests, env, sim_cfg,
                                      600, static_cast<std::uint64_t>(2000 + f));
        if (predicted == actual) ++agree;
    }
    c.require(agree * 5 >= total * 4, "scheduler/oracle agreement " + std::to_string(agree) + "/" +
                                          std::to_string(total) + " < 80%");

    // Planner determinism: one seed, five runs, byte-identical outcome JSON.
    auto run_once = [] {
        BernoulliMockGenerator g(0.6, LatencyDistribution::weibull(2.0, 3.0));
        PlannerConfig cfg;
        cfg.n_workers = 8;
        cfg.k_valid = 4;
        cfg.m_max = 2;
        cfg.seed = 31337;
        return planner_outcome_to_json(plan("task", fixtures::dashdish_manifests(), g, cfg))
            .dump();
    };
    std::string first = run_once();
    for (int i = 0; i < 4; ++i)
        if (run_once() != first) {
            c.require(false, "planner outcome JSON differs across seeded runs");
            return;
        }
}

int main() {
    struct Entry {
        int number;
        const char* title;
        double limit_s;
        void (*body)(Criterion&);
    };
    const Entry entries[] = {
        {1, "worked-example plan costs and state-flow rejection", 1.0, criterion1},
        {2, "trial arithmetic with injected samples", 1.0, criterion2},
        {3, "heavy-tail task strategy selection and margins", 5.0, criterion3},
        {4, "latency sampler moments and CDF monotonicity", 30.0, criterion4},
        {5, "Pass@k enumeration equivalence and large-suite anchor", 10.0, criterion5},
        {6, "Pass@t plateau and Monte Carlo cross-check", 30.0, criterion6},
        {7, "cost-rank fidelity over a generated corpus", 120.0, criterion7},
        {8, "validator soundness fuzz on concrete contracts", 120.0, criterion8},
        {9, "scheduler-vs-oracle agreement and planner determinism", 120.0, criterion9},
    };
    int failures = 0;
    for (const auto& e : entries) {
        Criterion c{e.number, e.title, {}};
        failures += run_criterion(c, e.limit_s, e.body);
    }
    std::printf("%d/9 criteria passed\n", 9 - failures);
    return failures;
}
