#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "herdsim/h_herds.hpp"
#include "herdsim/rng.hpp"
#include "herdsim/sim_common.hpp"
#include "herdsim/switch_graph.hpp"
#include "herdsim/tree_algebra.hpp"

namespace herdsim {

// Edge of the multigraph as its two half-edges, smaller first.
using HalfEdgePair = std::pair<HalfEdgeId, HalfEdgeId>;

// Tree subgraph (B, beta) of the switching graph. The edges are stored by half-edges, so a herd
// stays valid under switches that do not touch it.
struct EmbeddedHerd {
    std::vector<std::uint32_t> vertices;  // sorted
    std::vector<HalfEdgePair> edges;      // sorted
    std::vector<std::uint32_t> occupied;  // sorted subset of vertices
    CanonicalCode shape;                  // class of B
    CanonicalCode code;                   // class of (B, beta)

    // Fills shape and code from vertices, edges and occupied.
    void recode(std::uint32_t d);
};

// Type table and Perron-Frobenius pair for one parameter point.
struct EmbeddedModel {
    int d = 3;
    int h = 2;
    double lambda = 1.0;
    double v = 1.0;
    TypeTable types;
    MeanMatrix mean;
    PFResult pf;

    static EmbeddedModel build(int d, int h, double lambda, double v);
    // f of a class; throws std::logic_error for a code outside the type table.
    double f(const CanonicalCode& code) const;
    int type_of(const CanonicalCode& code) const { return types.find(code); }
    bool known_shape(const CanonicalCode& shape) const { return types.shapes.find(shape) >= 0; }
    // |B_T(o, 2h)|, which bounds the number of vertices of any herd.
    double c_h() const { return static_cast<double>(ball_size(d, 2 * h)); }
};

// Thresholds of the drift monitors. default_constants derives them from the model; the CLI can
// override each one.
struct MonitorConstants {
    double mu = 0.0;
    double f_min = 0.0;
    double f_max = 0.0;
    double c_h = 0.0;
    double eps0 = 0.0;    // mu f_min / (6 v C_h f_max)
    double eps1 = 0.0;    // mu f_min / (32 v C_h f_max)
    double eps2 = 0.01;   // no closed form; plain default
    double delta = 0.0;   // largest delta keeping the second-order term below a quarter of the drift
    double mu_bar = 0.0;  // (e^{4 f_max} + 1) C_h (2(d lambda + 1) + v) / f_min

    nlohmann::json to_json() const;
};

MonitorConstants default_constants(const EmbeddedModel& model);

enum class SwitchClass { Neutral, GoodActive, GoodInactive, Bad };
std::string to_string(SwitchClass c);

// Exact jump sums of one herd, from its class and from explicit surgery in the graph.
struct HerdDriftCheck {
    double f = 0.0;
    double s_death = 0.0;
    double s_birth = 0.0;
    double s_split_tree = 0.0;         // S_split(A, alpha) of the class
    std::size_t admissible = 0;        // edges whose endpoint 2h-balls are trees disjoint from B
    double threshold = 0.0;            // (1 - eps0) dn/2
    double s_split_embedded = 0.0;     // sum over admissible e' of S_split(B, beta, e')
    std::size_t enumerated = 0;        // admissible e' whose surgeries were carried out explicitly
    std::size_t class_mismatches = 0;  // surgeries whose class pair differs from the abstract split
    double lhs = 0.0;                  // s_death + s_birth + s_split_embedded

    bool above_threshold() const { return double(admissible) > threshold; }
    bool holds(double mu) const { return lhs >= 0.5 * mu * f - 1e-12 * (1.0 + std::abs(lhs)); }
};

// Disjoint embedded h-herds in a switching graph, with incremental bookkeeping of X, of the
// safe-edge set Lambda and of the short-loop count.
class EmbeddedProcess {
public:
    EmbeddedProcess(const EmbeddedModel& model, Matching graph);

    const EmbeddedModel& model() const { return *model_; }
    const Matching& graph() const { return g_; }
    const std::map<std::uint64_t, EmbeddedHerd>& herds() const { return herds_; }
    std::size_t particle_count() const { return particles_.size(); }
    std::uint32_t particle(std::size_t i) const { return particles_[i]; }
    std::int64_t owner(std::uint32_t x) const { return vowner_[x]; }
    std::size_t herd_edge_count() const { return herd_edges_; }

    // Installs a herd; throws std::invalid_argument if it is not a valid tree of G of a known class
    // or overlaps another herd.
    std::uint64_t add_herd(EmbeddedHerd herd);

    double X() const { return X_; }
    double X_recomputed() const;
    std::size_t lambda_size() const { return lambda_count_; }
    bool in_lambda(HalfEdgeId edge) const { return lam_[edge] != 0; }
    // Lambda from scratch, as sorted edge names.
    std::vector<HalfEdgeId> lambda_set() const;
    // Loops of length at most h in G.
    std::size_t loops() const { return loops_; }

    SwitchClass classify(const SwitchMark& m) const;
    // Switches G and applies the matching surgery to the herds.
    SwitchClass apply(const SwitchMark& m);
    // Contact jumps. birth along half-edge h (from its vertex to the partner's) takes effect only
    // when h lies on an edge of an occupied vertex's herd and the target is empty.
    bool birth(HalfEdgeId h);
    void death(std::uint32_t x);

    // Number of switch marks classified Bad in the current state.
    double bad_marks() const;
    // Exact generator of exp(-delta X) at the current state.
    double exp_drift(double delta) const;

    // Per-herd drift inequality check; enumerates surgeries for at most max_enumerated admissible edges
    // (0 means all of them), chosen uniformly with rng.
    HerdDriftCheck check_herd(std::uint64_t id, const MonitorConstants& c, std::size_t max_enumerated, Rng& rng) const;

    // Full recomputation of every maintained quantity; empty when all agree.
    std::vector<std::string> integrity_violations() const;

private:
    static constexpr std::int64_t kFree = -1;
    static constexpr std::int64_t kAnyHerd = -2;

    bool edge_active(const EmbeddedHerd& herd, const HalfEdgePair& e) const;
    EmbeddedHerd active_side(const EmbeddedHerd& herd, const HalfEdgePair& e, HalfEdgeId hx, HalfEdgeId hy) const;
    EmbeddedHerd inactive_move(const EmbeddedHerd& herd, const HalfEdgePair& e, HalfEdgeId hx, HalfEdgeId hy) const;
    HalfEdgeId new_partner(const SwitchMark& m, HalfEdgeId h) const;
    void install(std::uint64_t id, EmbeddedHerd herd, std::vector<std::uint32_t>& touched);
    void remove_herd(std::uint64_t id, std::vector<std::uint32_t>& touched);
    void recode_herd(std::uint64_t id);
    void add_particle(std::uint32_t x);
    void remove_particle(std::uint32_t x);
    bool ball_clear(std::uint32_t z, std::int64_t blocking) const;
    std::vector<std::uint32_t> region(const std::vector<std::uint32_t>& sources, int radius) const;
    void refresh(const std::vector<std::uint32_t>& vertices);

    const EmbeddedModel* model_;
    Matching g_;
    int radius_;  // 2h
    std::map<std::uint64_t, EmbeddedHerd> herds_;
    std::uint64_t next_id_ = 0;
    std::vector<std::int64_t> vowner_;
    std::vector<std::int64_t> heowner_;
    std::vector<std::int64_t> ppos_;  // position in particles_, -1 when empty
    std::vector<std::uint32_t> particles_;
    std::vector<char> good_;
    std::vector<char> lam_;
    std::size_t lambda_count_ = 0;
    std::size_t loops_ = 0;
    std::size_t herd_edges_ = 0;
    double X_ = 0.0;
    mutable std::vector<std::uint32_t> stamp_;
    mutable std::uint32_t stamp_now_ = 0;
};

// Greedy choice of vertices in index order whose h-balls are trees and disjoint from the balls
// already chosen; one herd (B(x, h), {x}) per chosen vertex.
std::vector<EmbeddedHerd> build_initial(const Matching& g, int h, std::size_t target_count);

struct MonitorReport {
    double X0 = 0.0;
    double mu = 0.0;
    double delta = 0.0;
    double t_low = kInfinity;
    double t_high = kInfinity;
    double t_lambda = kInfinity;
    double t_loop = kInfinity;
    std::uint64_t bad_switch_count = 0;
    double horizon = 0.0;

    nlohmann::json to_json() const;  // unreached times are null
};

struct EmbeddedOptions {
    double horizon = 5.0;
    std::uint64_t event_cap = 100'000'000;
    double observe_every = 0.0;
    std::function<void(double, const EmbeddedProcess&)> on_sample;
    // Full integrity check every k events (0: only at the start and the end).
    std::uint64_t check_every = 0;
};

struct EmbeddedRun {
    Outcome outcome = Outcome::Alive;  // Died when no herd is left, Censored at the event cap
    double end_time = 0.0;
    std::uint64_t events = 0;
    std::array<std::uint64_t, 4> switches{};  // by SwitchClass
    double bad_compensator = 0.0;             // integral of the Bad-switch rate
    std::uint64_t integrity_checks = 0;
    std::uint64_t violations = 0;
    std::vector<std::string> violation_messages;  // first few
    MonitorReport monitors;
    double final_X = 0.0;
    std::size_t final_herds = 0;
};

EmbeddedRun run_embedded(const EmbeddedModel& model, const MonitorConstants& constants, Matching g0,
                         std::vector<EmbeddedHerd> psi0, Rng& rng, const EmbeddedOptions& options = {});

}  // namespace herdsim
