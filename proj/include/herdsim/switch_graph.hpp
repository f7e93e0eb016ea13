#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "herdsim/rng.hpp"

namespace herdsim {

// Half-edge (x, i) has index x*d + i, so index order is the lexicographic order.
using HalfEdgeId = std::uint32_t;
constexpr HalfEdgeId kNoHalfEdge = 0xffffffffu;

struct HalfEdge {
    std::uint32_t vertex;
    std::uint32_t slot;
};

// Perfect matching of the n*d half-edges of a d-regular multigraph. An edge is named by its
// smaller half-edge; the edges are also kept in an array for uniform sampling.
class Matching {
public:
    Matching() = default;
    // Validates the pairing (fixed-point-free involution of [0, n*d)).
    Matching(std::uint32_t n, std::uint32_t d, std::vector<HalfEdgeId> pairing);

    std::uint32_t n() const { return n_; }
    std::uint32_t d() const { return d_; }
    std::size_t half_edges() const { return pairing_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    HalfEdgeId partner(HalfEdgeId h) const { return pairing_[h]; }
    std::uint32_t vertex_of(HalfEdgeId h) const { return h / d_; }
    HalfEdge half_edge(HalfEdgeId h) const { return {h / d_, h % d_}; }
    HalfEdgeId id(std::uint32_t vertex, std::uint32_t slot) const { return vertex * d_ + slot; }

    // i-th entry of the edge array (its smaller half-edge).
    HalfEdgeId edge_at(std::size_t i) const { return edges_[i]; }
    bool is_edge(HalfEdgeId e) const { return e < pairing_.size() && pairing_[e] > e; }
    // Name of the edge through h.
    HalfEdgeId edge_of(HalfEdgeId h) const { return std::min(h, pairing_[h]); }
    const std::vector<HalfEdgeId>& pairing() const { return pairing_; }

    bool is_self_loop(HalfEdgeId e) const { return vertex_of(e) == vertex_of(pairing_[e]); }
    // Full structural check, including the edge array.
    bool valid() const;

    // Replaces edges e1 = {a, b} and e2 = {a2, b2} by {a, a2}, {b, b2} (plus) or {a, b2}, {b, a2} (minus).
    void rewire(HalfEdgeId e1, HalfEdgeId e2, bool plus);

    // "n d" on the first line, then the n*d partner indices.
    std::string to_text() const;
    static Matching from_text(const std::string& text);

    bool operator==(const Matching& o) const { return n_ == o.n_ && d_ == o.d_ && pairing_ == o.pairing_; }

private:
    void set_edge(std::size_t pos, HalfEdgeId e);

    std::uint32_t n_ = 0;
    std::uint32_t d_ = 0;
    std::vector<HalfEdgeId> pairing_;
    std::vector<HalfEdgeId> edges_;
    std::vector<std::uint32_t> edge_pos_;  // by half-edge; valid for smaller half-edges only
};

// Uniform fixed-point-free involution of the half-edges.
Matching sample_matching(std::uint32_t n, std::uint32_t d, Rng& rng);

struct SwitchMark {
    HalfEdgeId e1;
    HalfEdgeId e2;
    bool plus;
};

struct StaleEdge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Applies m in place. Throws StaleEdge when an edge of m is not present or the two coincide.
void apply_switch(Matching& g, const SwitchMark& m);
Matching switched(const Matching& g, const SwitchMark& m);

// Total switch rate (v/2)((nd/2) - 1): every mark rings at rate v/(nd).
double switch_rate(std::uint32_t n, std::uint32_t d, double v);

struct SwitchEvent {
    double dt;
    SwitchMark mark;
};

// Waiting time and a uniform mark (pair of distinct edges, uniform sign). dt is +inf when v = 0.
SwitchEvent draw_switch_event(const Matching& g, double v, Rng& rng);
SwitchMark draw_switch_mark(const Matching& g, Rng& rng);

// Loops of length exactly m: self-loops for m = 1, otherwise edge sets forming a cycle through
// m distinct vertices (a parallel pair is a loop of length 2).
std::size_t count_loops(const Matching& g, int m);
// Loops of length at most m.
std::size_t loops_up_to(const Matching& g, int m);
// Loops of length at most m that pass through at least one of the given vertices.
std::size_t loops_through(const Matching& g, const std::vector<std::uint32_t>& vertices, int m);

struct LocalBall {
    std::vector<std::uint32_t> vertices;  // BFS order, centre first
    std::vector<int> distance;            // parallel to vertices
    std::vector<HalfEdgeId> edges;        // edges with both ends in the ball, by smaller half-edge
    bool is_tree = false;
};

// Induced multigraph on the vertices within distance r of x.
LocalBall local_ball(const Matching& g, std::uint32_t x, int r);

// Vertex count of the radius-r ball in the d-regular tree.
std::size_t tree_ball_size(std::uint32_t d, int r);

}  // namespace herdsim
