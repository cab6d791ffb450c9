#ifndef AGENTJIT_COST_HPP
#define AGENTJIT_COST_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cfg.hpp"

namespace agentjit {

// Unitless cost model: ranks plans by call mix and loop nesting, it does not
// predict wall-clock seconds. Defaults: C_tool=0.1, C_eval=10.0, gamma=10.
struct CostModel {
    double c_tool = 0.1;
    double c_eval = 10.0;
    double gamma = 10.0;
};

struct CallContribution {
    const CallSite* site;
    double contribution;
};

struct CostEstimate {
    double total = 0.0;
    std::vector<CallContribution> per_call;
};

// total = sum over call sites of C_kind * gamma^depth. Both If branches are
// counted: an upper bound, since block traversal has no branch weighting.
inline CostEstimate estimate_cost(const PlanCfg& cfg, const CostModel& model = {}) {
    CostEstimate est;
    for (const auto& block : cfg.blocks) {
        for (const auto& site : block.calls) {
            double base = site.kind == CallSite::Kind::Tool ? model.c_tool : model.c_eval;
            double c = base * std::pow(model.gamma, site.depth);
            est.per_call.push_back({&site, c});
            est.total += c;
        }
    }
    return est;
}

struct EmptyCandidateSet : std::runtime_error {
    EmptyCandidateSet() : std::runtime_error("no valid candidates to rank") {}
};

// Index of the minimum-cost candidate; ties go to the earliest collected.
template <typename Costed>
size_t rank(const std::vector<Costed>& candidates) {
    if (candidates.empty()) throw EmptyCandidateSet{};
    size_t best = 0;
    for (size_t i = 1; i < candidates.size(); ++i)
        if (candidates[i].cost < candidates[best].cost) best = i;
    return best;
}

}  // namespace agentjit

#endif
