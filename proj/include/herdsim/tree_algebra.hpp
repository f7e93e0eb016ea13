#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace herdsim {

// Vertex of the infinite d-regular tree, addressed by the slot labels of the path from the root o.
// The first label ranges over d slots, every later one over the d-1 non-parent slots.
struct TreeAddress {
    std::vector<std::uint8_t> path;

    auto operator<=>(const TreeAddress&) const = default;
    bool operator==(const TreeAddress&) const = default;

    std::size_t depth() const { return path.size(); }
    bool is_root() const { return path.empty(); }
    TreeAddress parent() const;
    TreeAddress child(int slot) const;
    std::string to_string() const;
    static TreeAddress parse(const std::string& text);
};

struct TreeAddressHash {
    std::size_t operator()(const TreeAddress& a) const noexcept;
};

// Number of children of an address (d at the root, d-1 elsewhere).
int child_count(const TreeAddress& a, int d);
std::vector<TreeAddress> tree_neighbors(const TreeAddress& a, int d);
bool adjacent(const TreeAddress& a, const TreeAddress& b);
int tree_distance(const TreeAddress& a, const TreeAddress& b);
// True iff `a` is `anc` or lies below it.
bool in_subtree(const TreeAddress& a, const TreeAddress& anc);
bool valid_address(const TreeAddress& a, int d);

// Edge of the infinite tree; `lower` is the child of `upper`.
struct TreeEdge {
    TreeAddress upper;
    TreeAddress lower;

    auto operator<=>(const TreeEdge&) const = default;
    bool operator==(const TreeEdge&) const = default;
    static TreeEdge between(const TreeAddress& a, const TreeAddress& b);
};

// Finite connected subtree of the infinite d-regular tree. Vertices are kept sorted by address.
class FiniteTree {
public:
    FiniteTree() = default;
    FiniteTree(int d, std::vector<TreeAddress> vertices);

    int d() const { return d_; }
    std::size_t size() const { return vertices_.size(); }
    bool empty() const { return vertices_.empty(); }
    const std::vector<TreeAddress>& vertices() const { return vertices_; }
    const TreeAddress& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
    int index_of(const TreeAddress& a) const;
    bool contains(const TreeAddress& a) const { return index_of(a) >= 0; }
    const std::vector<std::vector<int>>& adjacency() const { return adj_; }
    int degree(int i) const { return static_cast<int>(adj_[static_cast<std::size_t>(i)].size()); }
    // Vertex closest to the root of the infinite tree.
    const TreeAddress& root_anchor() const { return vertices_[static_cast<std::size_t>(top_)]; }
    std::vector<TreeEdge> edges() const;
    std::vector<int> leaves() const;
    std::vector<int> distances_from(int i) const;
    int diameter() const;
    // Vertices of the component of `from` after deleting the edge {from, other}.
    std::vector<int> side_of(int from, int other) const;

    bool operator==(const FiniteTree& o) const { return d_ == o.d_ && vertices_ == o.vertices_; }

private:
    int d_ = 3;
    int top_ = 0;
    std::vector<TreeAddress> vertices_;
    std::vector<std::vector<int>> adj_;
};

FiniteTree ball(int d, int h);
FiniteTree ball_around(const TreeAddress& center, int d, int h);

struct SplitResult {
    FiniteTree tree;
    int r_star = 0;
};

// The h-splitting of A through edge e, keeping the side containing `side`.
SplitResult h_split(const FiniteTree& A, const TreeEdge& e, const TreeAddress& side, int h);

// Edges of the minimal subtree spanning `occupied` in the infinite tree.
std::vector<TreeEdge> active_edges(int d, const std::vector<TreeAddress>& occupied);
// Same, inside a finite ambient tree (occupied must be a subset of it).
std::vector<TreeEdge> active_edges(const FiniteTree& ambient, const std::vector<TreeAddress>& occupied);

using CanonicalCode = std::string;

struct CanonicalForm {
    CanonicalCode code;
    // order[k] = original index of the vertex placed at canonical position k.
    std::vector<int> order;
};

// Isomorphism-invariant code of a tree given by adjacency lists with per-vertex occupancy flags.
CanonicalForm canonical_form(const std::vector<std::vector<int>>& adj, const std::vector<char>& occupied);
CanonicalCode canonical_code(const std::vector<std::vector<int>>& adj, const std::vector<char>& occupied);
CanonicalCode canonical_code(const FiniteTree& A, const std::vector<TreeAddress>& occupied);
CanonicalCode shape_code(const FiniteTree& A);

FiniteTree regrow_scheme(const FiniteTree& A, const TreeAddress& u, int h);

int dist_to_leaves(const FiniteTree& A, const TreeAddress& w);
int dist_to_leaves(const FiniteTree& A, int w);

// |B(o,r)| in the d-regular tree.
std::size_t ball_size(int d, int r);

struct EnumerationOverflow : std::runtime_error {
    EnumerationOverflow(const std::string& what, std::size_t bound);
    std::size_t bound;
};

struct ShapeTable {
    int d = 3;
    int h = 1;
    std::vector<FiniteTree> shapes;
    std::vector<CanonicalCode> codes;
    std::unordered_map<CanonicalCode, int> index;

    int find(const CanonicalCode& code) const;
    std::size_t size() const { return shapes.size(); }
};

constexpr std::size_t kDefaultEnumerationBound = 1'000'000;

ShapeTable enumerate_shapes(int d, int h, std::size_t bound = kDefaultEnumerationBound);

// Occupied set of a type, as a bit mask over the representative shape's vertex indices.
using VertexMask = std::uint64_t;

struct HerdType {
    int shape = 0;
    VertexMask occupied = 0;
    CanonicalCode code;
    int particles = 0;
};

// Jumps out of one type, independent of the rates.
struct TypeJumps {
    std::vector<int> deaths;                       // one per occupied vertex; -1 when the herd empties
    std::vector<std::pair<int, int>> births;       // (target type, number of occupied neighbours)
    std::vector<std::pair<int, int>> splits;       // one offspring pair per active edge
};

struct TypeTable {
    static constexpr int kCodeVersion = 1;

    int d = 3;
    int h = 1;
    ShapeTable shapes;
    std::vector<HerdType> types;
    std::vector<TypeJumps> jumps;
    std::unordered_map<CanonicalCode, int> index;
    int start_type = 0;

    std::size_t size() const { return types.size(); }
    int find(const CanonicalCode& code) const;
    // Representative (A, alpha) of a type.
    const FiniteTree& shape_of(int type) const { return shapes.shapes[static_cast<std::size_t>(types[static_cast<std::size_t>(type)].shape)]; }
    std::vector<TreeAddress> occupied_of(int type) const;
    // Whether every type reaches every other one through the jump graph.
    bool strongly_connected() const;
};

TypeTable enumerate_types(int d, int h, std::size_t bound = kDefaultEnumerationBound);

}  // namespace herdsim
