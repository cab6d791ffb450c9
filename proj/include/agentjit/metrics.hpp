#ifndef AGENTJIT_METRICS_HPP
#define AGENTJIT_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace agentjit {

using Json = nlohmann::json;

struct MetricsDomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// P(at least one of k draws without replacement from n candidates, c of them
// valid, is valid) = 1 - C(n-c,k)/C(n,k), in overflow-safe product form.
inline double pass_at_k(int n, int c, int k) {
    if (n < 1 || c < 0 || c > n || k < 1 || k > n)
        throw MetricsDomainError("pass_at_k needs 0 <= c <= n and 1 <= k <= n");
    if (n - c < k) return 1.0;
    double miss = 1.0;
    for (int i = 0; i < k; ++i)
        miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    return 1.0 - miss;
}

// P(some of n_parallel independent workers produces a valid plan within t),
// validity (rate p) independent of latency (CDF F).
inline double pass_at_t(const std::function<double(double)>& latency_cdf, double p, int n_parallel,
                        double t) {
    if (p < 0.0 || p > 1.0) throw MetricsDomainError("success rate must be in [0,1]");
    if (n_parallel < 1) throw MetricsDomainError("n_parallel must be >= 1");
    double f = latency_cdf(t);
    if (f < 0.0 || f > 1.0) throw MetricsDomainError("latency_cdf must return probabilities");
    return 1.0 - std::pow(1.0 - f * p, n_parallel);
}

struct RunRecord {
    bool valid = false;
    double latency_s = 0;
};

struct PassCurves {
    double p_empirical = 0;
    std::vector<std::pair<int, double>> pass_k;     // (k, Pass@k)
    std::vector<std::pair<double, double>> pass_t;  // (t, Pass@t)
};

// Right-continuous empirical CDF over the records' latencies.
inline std::function<double(double)> empirical_latency_cdf(const std::vector<RunRecord>& records) {
    std::vector<double> xs;
    xs.reserve(records.size());
    for (const auto& r : records) xs.push_back(r.latency_s);
    std::sort(xs.begin(), xs.end());
    return [xs = std::move(xs)](double t) {
        auto it = std::upper_bound(xs.begin(), xs.end(), t);
        return static_cast<double>(it - xs.begin()) / static_cast<double>(xs.size());
    };
}

inline PassCurves pass_curves(const std::vector<RunRecord>& records, const std::vector<int>& ks,
                              const std::vector<double>& ts, int n_parallel) {
    if (records.empty()) throw MetricsDomainError("pass_curves needs at least one record");
    int n = static_cast<int>(records.size());
    int c = static_cast<int>(std::count_if(records.begin(), records.end(),
                                           [](const RunRecord& r) { return r.valid; }));
    PassCurves out;
    out.p_empirical = static_cast<double>(c) / static_cast<double>(n);
    for (int k : ks) out.pass_k.emplace_back(k, pass_at_k(n, c, k));
    auto cdf = empirical_latency_cdf(records);
    for (double t : ts) out.pass_t.emplace_back(t, pass_at_t(cdf, out.p_empirical, n_parallel, t));
    return out;
}

inline std::string pass_curves_csv(const PassCurves& curves) {
    std::ostringstream os;
    os << "metric,x,value\n";
    for (const auto& [k, v] : curves.pass_k) os << "pass_at_k," << k << "," << v << "\n";
    for (const auto& [t, v] : curves.pass_t) os << "pass_at_t," << t << "," << v << "\n";
    return os.str();
}

inline std::vector<RunRecord> run_records_from_json(const Json& arr) {
    std::vector<RunRecord> out;
    for (const Json& j : arr) out.push_back({j.at("valid"), j.value("latency_s", 0.0)});
    return out;
}

}  // namespace agentjit

#endif
