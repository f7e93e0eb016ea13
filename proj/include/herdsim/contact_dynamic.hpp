#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "herdsim/rng.hpp"
#include "herdsim/sim_common.hpp"
#include "herdsim/switch_graph.hpp"

namespace herdsim {

struct DynamicParams {
    std::uint32_t n = 100;
    std::uint32_t d = 3;
    double lambda = 1.0;
    double v = 1.0;
    double horizon = 100.0;
    std::uint64_t event_cap = 1'000'000'000;
    std::uint64_t seed = 1;

    void validate() const;
};

struct ExtinctionRecord {
    std::uint64_t run_id = 0;
    std::uint64_t seed = 0;
    std::uint32_t n = 0;
    std::uint32_t d = 0;
    double lambda = 0.0;
    double v = 0.0;
    Outcome outcome = Outcome::Censored;  // Died or Censored
    double tau = kInfinity;               // extinction time, +inf when censored
    std::uint64_t events = 0;
    double wall_ms = 0.0;
};

struct JointCounters {
    std::uint64_t recoveries = 0;
    std::uint64_t transmissions = 0;  // attempts, including self-loop and already-infected targets
    std::uint64_t switches = 0;
    double infected_time = 0.0;       // integral of |xi_t| dt
};

struct JointOptions {
    double observe_every = 0.0;
    std::function<void(double, std::size_t)> on_sample;  // (time, infected count)
    JointCounters* counters = nullptr;
};

// Contact process on the switching multigraph; starts from a uniform matching.
// xi0 empty means every vertex infected.
ExtinctionRecord run_joint(const DynamicParams& params, const std::vector<std::uint32_t>& xi0, Rng& rng,
                           const JointOptions& options = {});
ExtinctionRecord run_joint_on(const DynamicParams& params, Matching graph, const std::vector<std::uint32_t>& xi0,
                              Rng& rng, const JointOptions& options = {});

struct CoupledTrace {
    double tau_small = kInfinity;
    double tau_large = kInfinity;
    double first_violation = kInfinity;  // first time the smaller process leaves the larger one
    std::uint64_t events = 0;
    bool identical = true;  // the two infected sets agreed at every event
};

// Two contact processes on one switching graph, sharing every recovery, transmission and switch clock.
CoupledTrace coupled_run(const DynamicParams& params, const std::vector<std::uint32_t>& xi_small,
                         const std::vector<std::uint32_t>& xi_large, Rng& rng);

struct ScanCell {
    std::uint32_t n;
    double lambda;
    double v;
};

struct ScanSummary {
    ScanCell cell;
    std::uint64_t reps = 0;
    std::uint64_t censored = 0;
    double q25 = kInfinity;
    double median = kInfinity;
    double q75 = kInfinity;
    double censor_fraction() const { return reps ? double(censored) / double(reps) : 0.0; }
};

struct ScanOptions {
    std::uint32_t d = 3;
    std::uint64_t reps = 10;
    double horizon = 100.0;
    std::uint64_t event_cap = 1'000'000'000;
    std::uint64_t seed = 1;
    bool record_wall_time = false;  // off keeps the CSV byte-identical across runs
};

// Censored runs count as +inf in the quantiles. Run r of cell c uses stream (seed, "joint", c << 32 | r).
std::vector<ScanSummary> extinction_scan(const std::vector<ScanCell>& grid, const ScanOptions& options,
                                         std::vector<ExtinctionRecord>* runs = nullptr);

void write_runs_csv(std::ostream& out, const std::vector<ExtinctionRecord>& runs);
void write_summary_csv(std::ostream& out, const std::vector<ScanSummary>& cells);

// Lower empirical quantile of a sorted sample (+inf entries allowed).
double sorted_quantile(const std::vector<double>& sorted, double q);

}  // namespace herdsim
