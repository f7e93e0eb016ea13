#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace herdsim {

struct SimParams {
    int d = 3;
    double lambda = 1.0;
    double v = 1.0;
    double horizon = 100.0;
    std::uint64_t event_cap = 100'000'000;
    std::uint64_t seed = 1;
    // A run whose particle count reaches this value stops with outcome Exploded (0 disables the cap).
    std::uint64_t population_cap = 0;

    void validate() const {
        if (d < 3) throw std::invalid_argument("d must be at least 3");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and nonnegative");
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("v must be finite and nonnegative");
        if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
    }
};

// How a run ended. Censored and Exploded are reported separately and never folded into Died.
enum class Outcome { Died, Alive, Censored, Exploded };

inline std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Died: return "died";
        case Outcome::Alive: return "alive";
        case Outcome::Censored: return "censored";
        case Outcome::Exploded: return "exploded";
    }
    return "unknown";
}

struct Proportion {
    double p = 0.0;
    double se = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t reps = 0;

    static Proportion of(std::uint64_t hits, std::uint64_t reps) {
        Proportion r;
        r.hits = hits;
        r.reps = reps;
        if (reps == 0) return r;
        r.p = static_cast<double>(hits) / static_cast<double>(reps);
        r.se = std::sqrt(r.p * (1.0 - r.p) / static_cast<double>(reps));
        return r;
    }
};

constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace herdsim
