#ifndef AGENTJIT_DISTRIBUTIONS_HPP
#define AGENTJIT_DISTRIBUTIONS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rng.hpp"

namespace agentjit {

using Json = nlohmann::json;

namespace special {

// Digamma via recurrence up to x >= 6 then asymptotic series.
inline double digamma(double x) {
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    double inv = 1.0 / x, inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
    return result;
}

inline double trigamma(double x) {
    double result = 0.0;
    while (x < 6.0) {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    double inv = 1.0 / x, inv2 = inv * inv;
    result += inv * (1.0 + 0.5 * inv +
                     inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0))));
    return result;
}

// Regularized lower incomplete gamma P(a, x); series for x < a+1,
// continued fraction otherwise.
inline double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    // Lentz's continued fraction for Q(a,x)
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1.0 - q;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace special

struct NegativeObservation : std::runtime_error {
    NegativeObservation() : std::runtime_error("latency observations must be nonnegative") {}
};

struct DistributionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parametric or empirical per-element latency model.
struct LatencyDistribution {
    struct Weibull { double k; double lambda; };      // shape, scale
    struct Gamma { double k; double theta; };         // shape, scale
    struct LogNormal { double mu; double sigma; };
    struct Fixed { double v; };
    struct Empirical { std::vector<double> samples; };

    std::variant<Weibull, Gamma, LogNormal, Fixed, Empirical> family;

    static LatencyDistribution weibull(double k, double lambda) {
        if (k <= 0 || lambda <= 0) throw DistributionError("weibull parameters must be > 0");
        return {Weibull{k, lambda}};
    }
    static LatencyDistribution gamma(double k, double theta) {
        if (k <= 0 || theta <= 0) throw DistributionError("gamma parameters must be > 0");
        return {Gamma{k, theta}};
    }
    static LatencyDistribution lognormal(double mu, double sigma) {
        if (sigma <= 0) throw DistributionError("lognormal sigma must be > 0");
        return {LogNormal{mu, sigma}};
    }
    static LatencyDistribution fixed(double v) {
        if (v < 0) throw DistributionError("fixed latency must be >= 0");
        return {Fixed{v}};
    }
    static LatencyDistribution empirical(std::vector<double> samples) {
        if (samples.empty()) throw DistributionError("empirical needs samples");
        for (double s : samples)
            if (s < 0) throw NegativeObservation{};
        return {Empirical{std::move(samples)}};
    }

    const char* family_name() const {
        struct V {
            const char* operator()(const Weibull&) const { return "weibull"; }
            const char* operator()(const Gamma&) const { return "gamma"; }
            const char* operator()(const LogNormal&) const { return "lognormal"; }
            const char* operator()(const Fixed&) const { return "fixed"; }
            const char* operator()(const Empirical&) const { return "empirical"; }
        };
        return std::visit(V{}, family);
    }

    double mean() const {
        struct V {
            double operator()(const Weibull& w) const {
                return w.lambda * std::tgamma(1.0 + 1.0 / w.k);
            }
            double operator()(const Gamma& g) const { return g.k * g.theta; }
            double operator()(const LogNormal& l) const {
                return std::exp(l.mu + 0.5 * l.sigma * l.sigma);
            }
            double operator()(const Fixed& f) const { return f.v; }
            double operator()(const Empirical& e) const {
                return std::accumulate(e.samples.begin(), e.samples.end(), 0.0) /
                       static_cast<double>(e.samples.size());
            }
        };
        return std::visit(V{}, family);
    }

    double stddev() const {
        struct V {
            double operator()(const Weibull& w) const {
                double g1 = std::tgamma(1.0 + 1.0 / w.k);
                double g2 = std::tgamma(1.0 + 2.0 / w.k);
                return w.lambda * std::sqrt(std::max(0.0, g2 - g1 * g1));
            }
            double operator()(const Gamma& g) const { return std::sqrt(g.k) * g.theta; }
            double operator()(const LogNormal& l) const {
                double s2 = l.sigma * l.sigma;
                return std::exp(l.mu + 0.5 * s2) * std::sqrt(std::exp(s2) - 1.0);
            }
            double operator()(const Fixed&) const { return 0.0; }
            double operator()(const Empirical& e) const {
                double m = std::accumulate(e.samples.begin(), e.samples.end(), 0.0) /
                           static_cast<double>(e.samples.size());
                double acc = 0;
                for (double s : e.samples) acc += (s - m) * (s - m);
                return std::sqrt(acc / static_cast<double>(e.samples.size()));
            }
        };
        return std::visit(V{}, family);
    }
};

namespace detail {
// Standard normal draw via Box-Muller on the stream's own uniforms, so the
// sequence is identical across platforms.
inline double normal_draw(RngStream& rng) {
    double u1 = rng.uniform(), u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Marsaglia-Tsang gamma(k, 1) for k >= 1; boost for k < 1.
inline double gamma_draw(double k, RngStream& rng) {
    if (k < 1.0) {
        double u = rng.uniform();
        return gamma_draw(k + 1.0, rng) * std::pow(u, 1.0 / k);
    }
    double d = k - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x = normal_draw(rng);
        double v = 1.0 + c * x;
        if (v <= 0) continue;
        v = v * v * v;
        double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}
}  // namespace detail

inline double sample(const LatencyDistribution& dist, RngStream& rng) {
    struct V {
        RngStream& rng;
        double operator()(const LatencyDistribution::Weibull& w) const {
            // inverse CDF
            return w.lambda * std::pow(-std::log(1.0 - rng.uniform()), 1.0 / w.k);
        }
        double operator()(const LatencyDistribution::Gamma& g) const {
            return detail::gamma_draw(g.k, rng) * g.theta;
        }
        double operator()(const LatencyDistribution::LogNormal& l) const {
            return std::exp(l.mu + l.sigma * detail::normal_draw(rng));
        }
        double operator()(const LatencyDistribution::Fixed& f) const { return f.v; }
        double operator()(const LatencyDistribution::Empirical& e) const {
            return e.samples[static_cast<size_t>(rng.below(e.samples.size()))];
        }
    };
    return std::visit(V{rng}, dist.family);
}

inline double cdf(const LatencyDistribution& dist, double t) {
    if (t < 0) return 0.0;
    struct V {
        double t;
        double operator()(const LatencyDistribution::Weibull& w) const {
            return 1.0 - std::exp(-std::pow(t / w.lambda, w.k));
        }
        double operator()(const LatencyDistribution::Gamma& g) const {
            return special::gamma_p(g.k, t / g.theta);
        }
        double operator()(const LatencyDistribution::LogNormal& l) const {
            if (t <= 0) return 0.0;
            return special::normal_cdf((std::log(t) - l.mu) / l.sigma);
        }
        double operator()(const LatencyDistribution::Fixed& f) const { return t >= f.v ? 1.0 : 0.0; }
        double operator()(const LatencyDistribution::Empirical& e) const {
            size_t n = 0;
            for (double s : e.samples)
                if (s <= t) ++n;
            return static_cast<double>(n) / static_cast<double>(e.samples.size());
        }
    };
    return std::visit(V{t}, dist.family);
}

// ---------------------------------------------------------------------------
// Maximum-likelihood fitting.

namespace detail {

struct FitResult {
    LatencyDistribution dist;
    double log_likelihood;
};

inline double mean_of(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Newton on the Weibull shape profile equation:
//   sum x^k ln x / sum x^k - 1/k - mean(ln x) = 0
inline FitResult fit_weibull(const std::vector<double>& xs) {
    double n = static_cast<double>(xs.size());
    double mean_ln = 0;
    for (double x : xs) mean_ln += std::log(x);
    mean_ln /= n;
    double k = 1.0;
    for (int iter = 0; iter < 200; ++iter) {
        double s0 = 0, s1 = 0, s2 = 0;
        for (double x : xs) {
            double xk = std::pow(x, k), lx = std::log(x);
            s0 += xk;
            s1 += xk * lx;
            s2 += xk * lx * lx;
        }
        double f = s1 / s0 - 1.0 / k - mean_ln;
        double fp = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (k * k);
        double step = f / fp;
        k -= step;
        if (k <= 1e-6) k = 1e-6;
        if (std::fabs(step) < 1e-12) break;
    }
    double s0 = 0;
    for (double x : xs) s0 += std::pow(x, k);
    double lambda = std::pow(s0 / n, 1.0 / k);
    double ll = 0;
    for (double x : xs)
        ll += std::log(k / lambda) + (k - 1.0) * std::log(x / lambda) - std::pow(x / lambda, k);
    return {LatencyDistribution::weibull(k, lambda), ll};
}

// Newton on  ln k - psi(k) = ln(mean) - mean(ln x), method-of-moments start.
inline FitResult fit_gamma(const std::vector<double>& xs) {
    double n = static_cast<double>(xs.size());
    double m = mean_of(xs);
    double mean_ln = 0;
    for (double x : xs) mean_ln += std::log(x);
    mean_ln /= n;
    double s = std::log(m) - mean_ln;
    double k = s > 0 ? (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s) : 10.0;
    for (int iter = 0; iter < 200; ++iter) {
        double f = std::log(k) - special::digamma(k) - s;
        double fp = 1.0 / k - special::trigamma(k);
        double step = f / fp;
        k -= step;
        if (k <= 1e-6) k = 1e-6;
        if (std::fabs(step) < 1e-12) break;
    }
    double theta = m / k;
    double ll = 0;
    for (double x : xs)
        ll += (k - 1.0) * std::log(x) - x / theta - std::lgamma(k) - k * std::log(theta);
    return {LatencyDistribution::gamma(k, theta), ll};
}

inline FitResult fit_lognormal(const std::vector<double>& xs) {
    double n = static_cast<double>(xs.size());
    double mu = 0;
    for (double x : xs) mu += std::log(x);
    mu /= n;
    double var = 0;
    for (double x : xs) var += (std::log(x) - mu) * (std::log(x) - mu);
    var /= n;
    double sigma = std::sqrt(std::max(var, 1e-12));
    double ll = 0;
    for (double x : xs) {
        double z = (std::log(x) - mu) / sigma;
        ll += -std::log(x * sigma * std::sqrt(2.0 * M_PI)) - 0.5 * z * z;
    }
    return {LatencyDistribution::lognormal(mu, sigma), ll};
}

}  // namespace detail

// Small-sample observations fall back to Fixed / Empirical; otherwise the
// best of Weibull / Gamma / LogNormal by maximum likelihood (ties -> Gamma).
inline LatencyDistribution fit(const std::vector<double>& observations,
                               size_t parametric_threshold = 8) {
    if (observations.empty()) throw DistributionError("fit needs at least one observation");
    for (double x : observations)
        if (x < 0) throw NegativeObservation{};
    double m = detail::mean_of(observations);
    bool zero_var = std::all_of(observations.begin(), observations.end(),
                                [&](double x) { return std::fabs(x - m) < 1e-12; });
    if (observations.size() == 1 || zero_var) return LatencyDistribution::fixed(m);
    if (observations.size() < parametric_threshold)
        return LatencyDistribution::empirical(observations);
    // MLE needs ln x; nudge exact zeros off the boundary
    std::vector<double> xs = observations;
    for (double& x : xs)
        if (x < 1e-9) x = 1e-9;
    auto wb = detail::fit_weibull(xs);
    auto gm = detail::fit_gamma(xs);
    auto ln = detail::fit_lognormal(xs);
    detail::FitResult best = gm;
    if (wb.log_likelihood > best.log_likelihood) best = wb;
    if (ln.log_likelihood > best.log_likelihood) best = ln;
    return best.dist;
}

// ---------------------------------------------------------------------------
// Serialization (scheduler cache entries).

struct ElementStats {
    std::string element;
    std::string page;
    LatencyDistribution distribution;
    int n_obs = 0;
    double mean_s = 0;
    double std_s = 0;
};

inline Json distribution_to_json(const LatencyDistribution& d) {
    Json params = Json::object();
    struct V {
        Json& params;
        void operator()(const LatencyDistribution::Weibull& w) const {
            params["k"] = w.k;
            params["lambda"] = w.lambda;
        }
        void operator()(const LatencyDistribution::Gamma& g) const {
            params["k"] = g.k;
            params["theta"] = g.theta;
        }
        void operator()(const LatencyDistribution::LogNormal& l) const {
            params["mu"] = l.mu;
            params["sigma"] = l.sigma;
        }
        void operator()(const LatencyDistribution::Fixed& f) const { params["v"] = f.v; }
        void operator()(const LatencyDistribution::Empirical& e) const {
            params["samples"] = e.samples;
        }
    };
    std::visit(V{params}, d.family);
    return Json{{"family", d.family_name()}, {"params", params}};
}

inline LatencyDistribution distribution_from_json(const Json& j) {
    std::string family = j.at("family");
    const Json& p = j.at("params");
    if (family == "weibull") return LatencyDistribution::weibull(p.at("k"), p.at("lambda"));
    if (family == "gamma") return LatencyDistribution::gamma(p.at("k"), p.at("theta"));
    if (family == "lognormal") return LatencyDistribution::lognormal(p.at("mu"), p.at("sigma"));
    if (family == "fixed") return LatencyDistribution::fixed(p.at("v"));
    if (family == "empirical")
        return LatencyDistribution::empirical(p.at("samples").get<std::vector<double>>());
    throw DistributionError("unknown distribution family: " + family);
}

}  // namespace agentjit

#endif
