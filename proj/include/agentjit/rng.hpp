#ifndef AGENTJIT_RNG_HPP
#define AGENTJIT_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace agentjit {

// Seeded random stream with cheap deterministic splitting. Every consumer
// (planner worker, MC trial, simulator run) derives its own stream from the
// master seed plus a path of indices, so results are reproducible regardless
// of thread scheduling.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : base_(mix(seed)), engine_(base_) {}

    // Derives an independent substream; the path ids select the child.
    RngStream derive(std::initializer_list<std::uint64_t> path) const {
        std::uint64_t s = base_;
        for (std::uint64_t p : path) s = mix(s ^ (p + 0x9e3779b97f4a7c15ULL));
        return RngStream(s, 0);
    }
    RngStream derive(std::uint64_t a) const { return derive({a}); }
    RngStream derive(std::uint64_t a, std::uint64_t b) const { return derive({a, b}); }

    // Uniform in (0, 1); never returns 0 or 1 so log()/inverse-CDF are safe.
    double uniform() {
        std::uint64_t x = engine_();
        return (static_cast<double>(x >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

private:
    RngStream(std::uint64_t mixed, int) : base_(mixed), engine_(mixed) {}

    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t base_ = 0;
    std::mt19937_64 engine_;
};

}  // namespace agentjit

#endif
