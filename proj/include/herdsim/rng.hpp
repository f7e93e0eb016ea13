#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace herdsim {

// Stateless 64-bit mixer (splitmix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Key of an independent stream: a pure function of (master seed, component tag, run id),
// so the order in which replications are executed never changes their randomness.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::string_view tag, std::uint64_t run_id) {
    return mix64(mix64(seed ^ mix64(fnv1a(tag))) + mix64(run_id + 0x632be59bd9b4e019ULL));
}

class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t key) {
        std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                          static_cast<std::uint32_t>(mix64(key)), static_cast<std::uint32_t>(mix64(key) >> 32)};
        engine_.seed(seq);
    }
    Rng(std::uint64_t seed, std::string_view tag, std::uint64_t run_id) : Rng(stream_key(seed, tag, run_id)) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    // Uniform on [0,1).
    double uniform() { return std::generate_canonical<double, 53>(engine_); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }

    // Exponential waiting time; +inf when the rate is zero.
    double exponential(double rate) {
        if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
        return std::exponential_distribution<double>(rate)(engine_);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace herdsim
