#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <vector>

#include "herdsim/rng.hpp"
#include "herdsim/sim_common.hpp"
#include "herdsim/tree_algebra.hpp"

namespace herdsim {

struct HerdsState {
    std::map<std::uint64_t, std::set<TreeAddress>> herds;
    double clock = 0.0;
    std::uint64_t next_id = 1;

    // One herd holding a single particle at the root.
    static HerdsState initial();
    std::size_t particles() const;
    void validate(int d) const;
};

struct SplitRecord {
    std::uint64_t parent;
    std::uint64_t child_upper;  // side containing the upper end of the split edge
    std::uint64_t child_lower;
    double time;
};

struct HerdsSample {
    double time;
    std::size_t herds;
    std::size_t particles;
};

struct HerdsOptions {
    double observe_every = 0.0;
    std::function<void(const HerdsSample&)> on_sample;
    // Full snapshots at the same grid; expensive for large states.
    std::function<void(double, const HerdsState&)> on_snapshot;
    std::ostream* event_log = nullptr;  // CSV: time,event_kind,herd_id,payload
    bool record_genealogy = false;
};

struct HerdsRun {
    Outcome outcome = Outcome::Alive;
    double end_time = 0.0;  // extinction time when outcome is Died
    std::uint64_t events = 0;
    std::size_t final_herds = 0;
    std::size_t final_particles = 0;
    std::size_t max_herds = 0;
    std::vector<SplitRecord> genealogy;
};

// Herds process: births onto free neighbours at rate lambda each, deaths at rate 1, a split at
// rate v per active edge. Only state-changing births are scheduled.
HerdsRun run_herds(const SimParams& params, const HerdsState& init, Rng& rng, const HerdsOptions& options = {});

struct SurvivalEstimate {
    Proportion survival;  // over runs that were not censored
    std::uint64_t died = 0;
    std::uint64_t alive = 0;
    std::uint64_t exploded = 0;
    std::uint64_t censored = 0;
};

// Runs reaching params.population_cap count as surviving. Run i uses stream (params.seed, "herds", i).
SurvivalEstimate estimate_survival(const SimParams& params, double horizon, std::uint64_t reps);

// Plain contact process on the infinite tree; births are attempted at rate lambda*d per particle.
struct TreeContactRun {
    Outcome outcome = Outcome::Alive;
    double end_time = 0.0;
    std::uint64_t events = 0;
    std::size_t final_particles = 0;
};
TreeContactRun run_tree_contact(const SimParams& params, const std::set<TreeAddress>& init, Rng& rng);

struct MarkedHerd {
    std::set<TreeAddress> particles;
    std::set<TreeAddress> marked;

    bool operator==(const MarkedHerd&) const = default;
};

struct MarkedHerdsState {
    std::map<std::uint64_t, MarkedHerd> herds;
    std::set<std::uint64_t> frozen;
    // Site -> herd holding a marked particle there.
    std::map<TreeAddress, std::uint64_t> exclusion;
    double clock = 0.0;
    std::uint64_t next_id = 1;

    // One herd with a single marked particle at the root.
    static MarkedHerdsState initial();
    // Throws std::invalid_argument when an invariant fails.
    void validate(int d, bool freezing) const;
    std::set<TreeAddress> marked_union() const;
    HerdsState drop_marks() const;
};

struct MarkedJump {
    enum class Kind { Death, Birth, Split };
    Kind kind;
    std::uint64_t herd;
    TreeAddress from;  // dying particle, parent of a birth, or upper end of the split edge
    TreeAddress to;    // birth target or lower end of the split edge
    double rate;
};

// Every enabled jump, including birth attempts without effect. Frozen herds contribute nothing.
std::vector<MarkedJump> enabled_jumps(const MarkedHerdsState& s, const SimParams& params);
MarkedHerdsState apply_jump(const MarkedHerdsState& s, const MarkedJump& jump, bool freezing);

struct MarkedOptions {
    double observe_every = 0.0;
    std::function<void(double, const MarkedHerdsState&)> on_snapshot;
    // Stop as soon as no marked particle remains.
    bool stop_when_unmarked = false;
};

struct MarkedRun {
    Outcome outcome = Outcome::Alive;  // Died: no herd can move any more
    double end_time = 0.0;
    double marked_extinction = kInfinity;  // first time the marked union is empty
    std::uint64_t events = 0;
    std::uint64_t frozen = 0;
    std::size_t final_herds = 0;
    std::size_t final_particles = 0;
    std::size_t final_marked = 0;
};

MarkedRun run_marked(const SimParams& params, const MarkedHerdsState& init, bool freezing, Rng& rng,
                     const MarkedOptions& options = {});

// Ordered pairs (u, v) with u in T, u ~ v, and T meeting the v-side of the edge {u, v} at most in v.
std::vector<std::pair<TreeAddress, TreeAddress>> boundary_star(const std::set<TreeAddress>& T, int d);

// F1: marked particles; F2: boundary pairs with both ends marked in one herd; F3: u marked in i,
// v marked in another herd and absent from i; F4: u marked, v unmarked in the same herd; F5: frozen herds.
double evaluate_functional(int k, const MarkedHerdsState& s, int d);

// Sum over enabled jumps of rate times the change of F_k, for the freezing dynamics.
double generator_apply(const MarkedHerdsState& s, const SimParams& params, int k);

struct FrozenStats {
    double mean_frozen = 0.0;
    double se = 0.0;
    std::uint64_t completed = 0;
    std::uint64_t censored = 0;
    std::vector<double> grid;
    std::vector<std::array<double, 5>> mean_functionals;  // per grid time, averaged over all runs
};

// Runs the freezing dynamics from one marked particle until no herd can move or the horizon.
// Run i uses stream (params.seed, "frozen", i).
FrozenStats run_frozen_stats(const SimParams& params, std::uint64_t reps, double observe_every = 0.0);

}  // namespace herdsim
