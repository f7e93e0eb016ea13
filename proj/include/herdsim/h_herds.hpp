#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <json.hpp>
#include <vector>

#include "herdsim/rng.hpp"
#include "herdsim/sim_common.hpp"
#include "herdsim/tree_algebra.hpp"

namespace herdsim {

struct HHerd {
    FiniteTree shape;
    std::vector<TreeAddress> occupied;
};

struct HHerdsState {
    std::map<std::uint64_t, HHerd> herds;
    double clock = 0.0;

    static HHerdsState initial(int d, int h);
};

struct HHerdsOptions {
    // Observer called at multiples of observe_every (0 disables).
    double observe_every = 0.0;
    std::function<void(double, const HHerdsState&)> observer;
    // Stop at the first time some herd lies in this class (empty disables).
    CanonicalCode target_class;
    // Stop at the first time a particle sits on a leaf of its shape.
    bool stop_at_leaf = false;
};

struct HHerdsRun {
    Outcome outcome = Outcome::Alive;
    double end_time = 0.0;
    std::uint64_t events = 0;
    double tau_leaf = kInfinity;
    double target_hit = kInfinity;
    // Splits after which some particle ended closer to the leaves of its shape than before.
    std::uint64_t leaf_distance_violations = 0;
    std::uint64_t final_particles = 0;
    std::uint64_t final_herds = 0;
};

// Total rate of state-changing jumps of one h-herd.
double jump_rate(const HHerd& herd, double lambda, double v);

HHerdsRun run_h_herds(const SimParams& params, int h, const HHerdsState& init, Rng& rng,
                      const HHerdsOptions& options = {});

// First-moment generator of the h-herds branching process over the type table.
struct MeanMatrix {
    std::size_t dim = 0;
    double lambda = 0.0;
    double v = 0.0;
    std::vector<std::size_t> row_start;
    std::vector<int> col;
    std::vector<double> val;
    std::vector<double> outflow;  // total jump rate out of each type

    std::vector<double> apply(const std::vector<double>& g) const;
    double entry(std::size_t r, std::size_t c) const;
};

MeanMatrix mean_matrix(double lambda, double v, const TypeTable& types);

struct PFResult {
    double mu = 0.0;
    std::vector<double> f;
    double f_min = 0.0;
    double f_max = 0.0;
    std::uint64_t iterations = 0;
    double residual = 0.0;
};

struct PFNonConvergence : std::runtime_error {
    PFNonConvergence(std::uint64_t iterations, double residual);
    double residual;
};

// Power iteration on M + cI with c = 1 + max outflow. The returned residual is
// max_t |(Mf)(t) - mu f(t)| for f normalised to max f = 1.
PFResult pf_eigen(const MeanMatrix& M, double tol = 1e-11, std::uint64_t max_iterations = 5'000'000);

struct LambdaBarResult {
    double lambda = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double mu_lo = 0.0;
    double mu_hi = 0.0;
    int evaluations = 0;
};

struct BracketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bisection on the sign of mu(lambda) for fixed (v, h), from [1/d, hi] with hi doubled from 1 up to 32.
LambdaBarResult lambda_bar(double v, const TypeTable& types, double tol = 1e-3);

double growth_exponent(double lambda, double v, const TypeTable& types);

// Monte Carlo estimate of P(tau_leaf <= s) from (B(o,h), {o}), with per-run streams from params.seed.
Proportion tau_leaf_probability(const SimParams& params, int h, double s, std::uint64_t reps);

nlohmann::json pf_to_json(const TypeTable& types, const MeanMatrix& M, const PFResult& pf, bool with_vector);

// f looked up by canonical code of (shape, occupied set).
class TypeFunction {
public:
    TypeFunction(const TypeTable& types, std::vector<double> f);
    double operator()(const CanonicalCode& code) const;
    bool contains(const CanonicalCode& code) const { return index_.count(code) > 0; }
    double min() const { return min_; }
    double max() const { return max_; }

private:
    std::unordered_map<CanonicalCode, double> index_;
    double min_ = 0.0;
    double max_ = 0.0;
};

}  // namespace herdsim
