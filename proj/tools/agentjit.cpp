// agentjit: validate / cost / plan / schedule / fit / simulate / passk.
//
// Exit codes: 0 success, 1 validation-rejected plan (validate subcommand),
// 2 usage or input error. Machine-readable output goes to stdout,
// diagnostics to stderr.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <agentjit/cost.hpp>
#include <agentjit/distributions.hpp>
#include <agentjit/manifest.hpp>
#include <agentjit/metrics.hpp>
#include <agentjit/planlang.hpp>
#include <agentjit/planner.hpp>
#include <agentjit/scheduler.hpp>
#include <agentjit/simulator.hpp>
#include <agentjit/traces.hpp>
#include <agentjit/validator.hpp>

namespace fs = std::filesystem;
using agentjit::Json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
    return j;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

agentjit::ManifestSet load_manifests(const fs::path& path) {
    if (fs::is_directory(path)) return agentjit::load_manifest_dir(path);
    Json doc = read_json_file(path);
    agentjit::ManifestSet set;
    if (doc.is_array())
        for (const auto& j : doc) set.add(agentjit::parse_manifest(j));
    else
        set.add(agentjit::parse_manifest(doc));
    return set;
}

// State file: a JSON object of variable -> concrete value; null means
// known-null, "*" means present-but-unknown.
agentjit::TrackedState load_state(const fs::path& path) {
    agentjit::TrackedState state;
    const Json doc = read_json_file(path);
    for (const auto& [k, v] : doc.items()) {
        if (v.is_null())
            state.emplace(k, agentjit::TrackedValue::null());
        else if (v == Json("*"))
            state.emplace(k, agentjit::TrackedValue::unknown());
        else
            state.emplace(k, agentjit::TrackedValue::concrete(v));
    }
    return state;
}

agentjit::PlanProgram load_plan(const fs::path& path) {
    try {
        return agentjit::parse_plan(read_text_file(path));
    } catch (const agentjit::ParseError& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

std::vector<fs::path> expand_json_files(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& input : inputs) {
        fs::path p(input);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p))
                if (e.is_regular_file() && e.path().extension() == ".json")
                    found.push_back(e.path());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(p);
        }
    }
    return files;
}

int cmd_validate(const std::string& plan_path, const std::string& manifests_path,
                 const std::optional<std::string>& state_path) {
    auto manifests = load_manifests(manifests_path);
    agentjit::TrackedState initial;
    if (state_path) initial = load_state(*state_path);
    auto report =
        agentjit::validate(agentjit::build_cfg(load_plan(plan_path)), manifests, initial);
    std::cout << report.to_json().dump(2) << "\n";
    return report.valid ? 0 : 1;
}

int cmd_cost(const std::string& plan_path, const agentjit::CostModel& model) {
    // the estimate's per-call entries point into the CFG; keep it alive
    auto cfg = agentjit::build_cfg(load_plan(plan_path));
    auto est = agentjit::estimate_cost(cfg, model);
    Json per_call = Json::array();
    for (const auto& c : est.per_call)
        per_call.push_back(
            {{"kind", c.site->kind == agentjit::CallSite::Kind::Tool ? "tool" : "ai_eval"},
             {"name", c.site->kind == agentjit::CallSite::Kind::Tool ? c.site->tool_name
                                                                     : c.site->template_text},
             {"depth", c.site->depth},
             {"line", c.site->source_span.line},
             {"contribution", c.contribution}});
    std::cout << Json{{"schema_version", 1}, {"total", est.total}, {"per_call", per_call}}.dump(2)
              << "\n";
    return 0;
}

int cmd_plan(const std::string& task, const std::string& manifests_path,
             const std::vector<std::string>& corpus_inputs, double mock_p,
             const agentjit::PlannerConfig& config) {
    auto manifests = load_manifests(manifests_path);
    std::unique_ptr<agentjit::PlanGenerator> generator;
    if (!corpus_inputs.empty()) {
        std::vector<std::string> texts;
        for (const auto& input : corpus_inputs) {
            fs::path p(input);
            if (fs::is_directory(p)) {
                std::vector<fs::path> found;
                for (const auto& e : fs::directory_iterator(p))
                    if (e.is_regular_file()) found.push_back(e.path());
                std::sort(found.begin(), found.end());
                for (const auto& f : found) texts.push_back(read_text_file(f));
            } else {
                texts.push_back(read_text_file(p));
            }
        }
        if (texts.empty()) throw UsageError("corpus is empty");
        generator = std::make_unique<agentjit::CorpusGenerator>(std::move(texts));
    } else {
        generator = std::make_unique<agentjit::BernoulliMockGenerator>(mock_p);
    }
    auto outcome = agentjit::plan(task, manifests, *generator, config);
    std::cout << agentjit::planner_outcome_to_json(outcome).dump(2) << "\n";
    return 0;
}

int cmd_schedule(const std::string& usage_path, const std::string& cache_path,
                 const agentjit::SchedulerConfig& config, bool emit_trials) {
    auto usage = agentjit::strategy_usage_from_json(read_json_file(usage_path));
    auto cache = agentjit::load_scheduler_cache(read_json_file(cache_path));
    auto result = agentjit::select_strategy(usage, cache, config);
    std::cout << agentjit::schedule_result_to_json(result, emit_trials).dump(2) << "\n";
    return 0;
}

int cmd_fit(const std::vector<std::string>& trace_inputs, bool include_failures) {
    auto files = expand_json_files(trace_inputs);
    if (files.empty()) throw UsageError("no trace files found");
    std::vector<agentjit::TraceRecord> traces;
    std::map<std::string, std::string> pages;
    for (const auto& f : files) {
        try {
            traces.push_back(agentjit::trace_record_from_json(read_json_file(f), f.string()));
        } catch (const agentjit::MalformedTrace& e) {
            throw UsageError(e.what());
        }
        for (const auto& step : traces.back().steps)
            if (!step.page.empty()) pages[step.element] = step.page;
    }
    auto observations = agentjit::ingest(traces, include_failures);
    std::cout << agentjit::build_scheduler_cache(observations, pages).dump(2) << "\n";
    return 0;
}

int cmd_simulate(const std::string& plan_path, const std::string& env_path,
                 const std::string& manifests_path, const std::string& strategy_name,
                 const std::vector<std::string>& worker_plan_paths, int trials,
                 std::uint64_t seed, const agentjit::SimStrategyConfig& config,
                 bool emit_trials) {
    auto manifests = load_manifests(manifests_path);
    auto env = agentjit::sim_env_from_json(read_json_file(env_path));
    auto program = load_plan(plan_path);
    std::vector<agentjit::PlanProgram> workers;
    for (const auto& p : worker_plan_paths) workers.push_back(load_plan(p));

    agentjit::Strategy strategy;
    if (strategy_name == "serial")
        strategy = agentjit::Strategy::Serial;
    else if (strategy_name == "hedge")
        strategy = agentjit::Strategy::Hedge;
    else if (strategy_name == "parallel")
        strategy = agentjit::Strategy::Parallel;
    else
        throw UsageError("unknown strategy: " + strategy_name);

    agentjit::RngStream master(seed);
    std::vector<double> latencies;
    int ok_count = 0;
    for (int t = 0; t < trials; ++t) {
        agentjit::RngStream rng = master.derive(static_cast<std::uint64_t>(t));
        if (strategy == agentjit::Strategy::Serial) {
            auto result = agentjit::run_plan(program, manifests, env, rng);
            latencies.push_back(result.latency_s);
            if (result.ok) ++ok_count;
        } else {
            latencies.push_back(agentjit::run_strategy(program, workers, strategy, manifests, env,
                                                       config, rng));
            ++ok_count;  // hedge/parallel latency is defined on completion
        }
    }
    double sum = 0;
    for (double l : latencies) sum += l;
    Json out{{"schema_version", 1},
             {"strategy", strategy_name},
             {"trials", trials},
             {"mean_latency_s", sum / trials},
             {"ok_rate", static_cast<double>(ok_count) / trials}};
    if (emit_trials) out["latencies_s"] = latencies;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_passk(const std::string& runs_path, const std::vector<int>& ks,
              const std::vector<double>& ts, int n_parallel, bool as_json) {
    auto records = agentjit::run_records_from_json(read_json_file(runs_path));
    auto curves = agentjit::pass_curves(records, ks, ts, n_parallel);
    if (as_json) {
        Json pass_k = Json::array(), pass_t = Json::array();
        for (const auto& [k, v] : curves.pass_k) pass_k.push_back({{"k", k}, {"value", v}});
        for (const auto& [t, v] : curves.pass_t) pass_t.push_back({{"t", t}, {"value", v}});
        std::cout << Json{{"schema_version", 1},
                          {"p_empirical", curves.p_empirical},
                          {"pass_at_k", pass_k},
                          {"pass_at_t", pass_t}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << agentjit::pass_curves_csv(curves);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Plan validation, cost ranking, latency-aware scheduling, and simulation"};
    app.require_subcommand(1);
    app.set_config("--config")->description("INI config file; flags override it");

    // validate ---------------------------------------------------------------
    auto* validate = app.add_subcommand("validate", "Statically check a plan against manifests");
    std::string v_plan, v_manifests;
    std::optional<std::string> v_state;
    validate->add_option("--plan", v_plan, "plan source file")->required();
    validate->add_option("--manifests", v_manifests, "manifest dir or JSON file")->required();
    validate->add_option("--state", v_state, "initial-state JSON file");

    // cost -------------------------------------------------------------------
    auto* cost = app.add_subcommand("cost", "Estimate a plan's inference-cost score");
    std::string c_plan;
    agentjit::CostModel model;
    cost->add_option("--plan", c_plan, "plan source file")->required();
    cost->add_option("--c-tool", model.c_tool, "per tool-call cost")->capture_default_str();
    cost->add_option("--c-eval", model.c_eval, "per model-call cost")->capture_default_str();
    cost->add_option("--gamma", model.gamma, "loop-depth multiplier")->capture_default_str();

    // plan -------------------------------------------------------------------
    auto* planc = app.add_subcommand("plan", "Generate-validate-rank candidate plans");
    std::string p_task, p_manifests;
    std::vector<std::string> p_corpus;
    std::optional<std::string> p_state;
    double p_mock = 0.5;
    agentjit::PlannerConfig pconfig;
    planc->add_option("--task", p_task, "task description")->required();
    planc->add_option("--manifests", p_manifests, "manifest dir or JSON file")->required();
    planc->add_option("--corpus", p_corpus, "candidate plan file(s) or dir (round-robin)");
    planc->add_option("--mock-p", p_mock, "validity rate of the mock generator (no corpus)")
        ->capture_default_str();
    planc->add_option("--state", p_state, "initial-state JSON file");
    planc->add_option("--workers", pconfig.n_workers, "parallel generation workers")
        ->capture_default_str();
    planc->add_option("--k-valid", pconfig.k_valid, "early-stop after this many valid plans")
        ->capture_default_str();
    planc->add_option("--m-max", pconfig.m_max, "refinement retries per worker")
        ->capture_default_str();
    planc->add_option("--seed", pconfig.seed, "random seed")->capture_default_str();
    planc->add_option("--c-tool", pconfig.cost_model.c_tool, "per tool-call cost")
        ->capture_default_str();
    planc->add_option("--c-eval", pconfig.cost_model.c_eval, "per model-call cost")
        ->capture_default_str();
    planc->add_option("--gamma", pconfig.cost_model.gamma, "loop-depth multiplier")
        ->capture_default_str();

    // schedule ---------------------------------------------------------------
    auto* sched = app.add_subcommand("schedule",
                                     "Pick serial/parallel/hedge by Monte Carlo estimation");
    std::string s_usage, s_cache;
    agentjit::SchedulerConfig sconfig;
    bool s_trials = false;
    sched->add_option("--usage", s_usage, "usage-plan JSON file")->required();
    sched->add_option("--cache", s_cache, "element latency cache JSON file")->required();
    sched->add_option("--n-mc", sconfig.n_mc, "Monte Carlo trials per strategy")
        ->capture_default_str();
    sched->add_option("--workers", sconfig.n_workers, "worker budget")->capture_default_str();
    sched->add_option("--delta-p", sconfig.delta_p, "parallel coordination overhead (s)")
        ->capture_default_str();
    sched->add_option("--delta-h", sconfig.delta_h, "hedge coordination overhead (s)")
        ->capture_default_str();
    sched->add_option("--c-read", sconfig.c_read, "page read cost (s)")->capture_default_str();
    sched->add_option("--c-repeat", sconfig.c_repeat, "repeat interaction cost (s)")
        ->capture_default_str();
    sched->add_option("--seed", sconfig.seed, "random seed")->capture_default_str();
    sched->add_flag("--emit-trials", s_trials, "include per-trial samples in the output");

    // fit --------------------------------------------------------------------
    auto* fitc = app.add_subcommand("fit", "Fit element latency distributions from trace files");
    std::vector<std::string> f_traces;
    bool f_failures = false;
    fitc->add_option("--traces", f_traces, "trace JSON file(s) or dir(s)")->required();
    fitc->add_flag("--include-failures", f_failures, "keep observations from failed steps");

    // simulate ---------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Execute a plan against a fixture environment");
    std::string sim_plan, sim_env, sim_manifests, sim_strategy = "serial";
    std::vector<std::string> sim_workers;
    int sim_trials = 1;
    std::uint64_t sim_seed = 0;
    agentjit::SimStrategyConfig sim_config;
    bool sim_emit = false;
    sim->add_option("--plan", sim_plan, "plan source file")->required();
    sim->add_option("--env", sim_env, "environment JSON file")->required();
    sim->add_option("--manifests", sim_manifests, "manifest dir or JSON file")->required();
    sim->add_option("--strategy", sim_strategy, "serial | hedge | parallel")
        ->capture_default_str();
    sim->add_option("--worker-plan", sim_workers, "per-worker sub-plan files (parallel)");
    sim->add_option("--trials", sim_trials, "number of simulated runs")->capture_default_str();
    sim->add_option("--seed", sim_seed, "random seed")->capture_default_str();
    sim->add_option("--workers", sim_config.n_workers, "hedge replicas")->capture_default_str();
    sim->add_option("--delta-h", sim_config.delta_h, "hedge coordination overhead (s)")
        ->capture_default_str();
    sim->add_option("--delta-p", sim_config.delta_p, "parallel coordination overhead (s)")
        ->capture_default_str();
    sim->add_flag("--emit-trials", sim_emit, "include per-trial latencies in the output");

    // passk ------------------------------------------------------------------
    auto* passk = app.add_subcommand("passk", "Pass@k / Pass@t curves from run records");
    std::string pk_runs;
    std::vector<int> pk_ks{1};
    std::vector<double> pk_ts;
    int pk_parallel = 8;
    bool pk_json = false;
    passk->add_option("--runs", pk_runs, "run-record JSON file")->required();
    passk->add_option("--k", pk_ks, "k values")->capture_default_str();
    passk->add_option("--t", pk_ts, "latency budgets (s)");
    passk->add_option("--n-parallel", pk_parallel, "parallel attempts for Pass@t")
        ->capture_default_str();
    passk->add_flag("--json", pk_json, "JSON output instead of CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*validate) return cmd_validate(v_plan, v_manifests, v_state);
        if (*cost) return cmd_cost(c_plan, model);
        if (*planc) {
            if (p_state) pconfig.initial_state = load_state(*p_state);
            return cmd_plan(p_task, p_manifests, p_corpus, p_mock, pconfig);
        }
        if (*sched) return cmd_schedule(s_usage, s_cache, sconfig, s_trials);
        if (*fitc) return cmd_fit(f_traces, f_failures);
        if (*sim)
            return cmd_simulate(sim_plan, sim_env, sim_manifests, sim_strategy, sim_workers,
                                sim_trials, sim_seed, sim_config, sim_emit);
        if (*passk) return cmd_passk(pk_runs, pk_ks, pk_ts, pk_parallel, pk_json);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
