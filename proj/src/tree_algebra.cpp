#include "herdsim/tree_algebra.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <set>
#include <sstream>

namespace herdsim {

TreeAddress TreeAddress::parent() const {
    if (path.empty()) throw std::logic_error("root has no parent");
    TreeAddress p{path};
    p.path.pop_back();
    return p;
}

TreeAddress TreeAddress::child(int slot) const {
    TreeAddress c{path};
    c.path.push_back(static_cast<std::uint8_t>(slot));
    return c;
}

std::string TreeAddress::to_string() const {
    if (path.empty()) return "o";
    std::string s;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(path[i]);
    }
    return s;
}

TreeAddress TreeAddress::parse(const std::string& text) {
    TreeAddress a;
    if (text == "o" || text.empty()) return a;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, '.')) a.path.push_back(static_cast<std::uint8_t>(std::stoi(item)));
    return a;
}

std::size_t TreeAddressHash::operator()(const TreeAddress& a) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ a.path.size();
    for (auto c : a.path) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
}

int child_count(const TreeAddress& a, int d) { return a.is_root() ? d : d - 1; }

std::vector<TreeAddress> tree_neighbors(const TreeAddress& a, int d) {
    std::vector<TreeAddress> out;
    const int k = child_count(a, d);
    out.reserve(static_cast<std::size_t>(d));
    for (int s = 0; s < k; ++s) out.push_back(a.child(s));
    if (!a.is_root()) out.push_back(a.parent());
    return out;
}

namespace {
std::size_t common_prefix(const TreeAddress& a, const TreeAddress& b) {
    std::size_t n = std::min(a.depth(), b.depth());
    std::size_t i = 0;
    while (i < n && a.path[i] == b.path[i]) ++i;
    return i;
}
}  // namespace

bool adjacent(const TreeAddress& a, const TreeAddress& b) {
    const TreeAddress& s = a.depth() < b.depth() ? a : b;
    const TreeAddress& l = a.depth() < b.depth() ? b : a;
    return l.depth() == s.depth() + 1 && common_prefix(s, l) == s.depth();
}

int tree_distance(const TreeAddress& a, const TreeAddress& b) {
    auto c = common_prefix(a, b);
    return static_cast<int>(a.depth() + b.depth() - 2 * c);
}

bool in_subtree(const TreeAddress& a, const TreeAddress& anc) {
    return a.depth() >= anc.depth() && common_prefix(a, anc) == anc.depth();
}

bool valid_address(const TreeAddress& a, int d) {
    for (std::size_t i = 0; i < a.path.size(); ++i) {
        const int limit = i == 0 ? d : d - 1;
        if (a.path[i] >= limit) return false;
    }
    return true;
}

TreeEdge TreeEdge::between(const TreeAddress& a, const TreeAddress& b) {
    if (!adjacent(a, b)) throw std::invalid_argument("addresses " + a.to_string() + " and " + b.to_string() + " are not adjacent");
    return a.depth() < b.depth() ? TreeEdge{a, b} : TreeEdge{b, a};
}

FiniteTree::FiniteTree(int d, std::vector<TreeAddress> vertices) : d_(d), vertices_(std::move(vertices)) {
    if (d < 3) throw std::invalid_argument("degree must be at least 3");
    std::sort(vertices_.begin(), vertices_.end());
    vertices_.erase(std::unique(vertices_.begin(), vertices_.end()), vertices_.end());
    adj_.assign(vertices_.size(), {});
    std::size_t edge_count = 0;
    top_ = -1;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const auto& a = vertices_[i];
        if (!valid_address(a, d)) throw std::invalid_argument("invalid address " + a.to_string());
        int j = a.is_root() ? -1 : index_of(a.parent());
        if (j >= 0) {
            adj_[i].push_back(j);
            adj_[static_cast<std::size_t>(j)].push_back(static_cast<int>(i));
            ++edge_count;
        } else {
            top_ = static_cast<int>(i);
        }
    }
    if (!vertices_.empty() && edge_count + 1 != vertices_.size())
        throw std::invalid_argument("vertex set is not connected");
    if (top_ < 0) top_ = 0;
}

int FiniteTree::index_of(const TreeAddress& a) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), a);
    if (it == vertices_.end() || *it != a) return -1;
    return static_cast<int>(it - vertices_.begin());
}

std::vector<TreeEdge> FiniteTree::edges() const {
    std::vector<TreeEdge> out;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        for (int j : adj_[i]) {
            if (vertices_[static_cast<std::size_t>(j)].depth() < vertices_[i].depth())
                out.push_back({vertices_[static_cast<std::size_t>(j)], vertices_[i]});
        }
    }
    return out;
}

std::vector<int> FiniteTree::leaves() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
        if (adj_[i].size() == 1) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> FiniteTree::distances_from(int i) const {
    std::vector<int> dist(vertices_.size(), -1);
    std::deque<int> q{i};
    dist[static_cast<std::size_t>(i)] = 0;
    while (!q.empty()) {
        int x = q.front();
        q.pop_front();
        for (int y : adj_[static_cast<std::size_t>(x)]) {
            if (dist[static_cast<std::size_t>(y)] < 0) {
                dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
                q.push_back(y);
            }
        }
    }
    return dist;
}

int FiniteTree::diameter() const {
    if (vertices_.size() <= 1) return 0;
    auto d0 = distances_from(0);
    int far = static_cast<int>(std::max_element(d0.begin(), d0.end()) - d0.begin());
    auto d1 = distances_from(far);
    return *std::max_element(d1.begin(), d1.end());
}

std::vector<int> FiniteTree::side_of(int from, int other) const {
    std::vector<int> out{from};
    std::vector<char> seen(vertices_.size(), 0);
    seen[static_cast<std::size_t>(from)] = 1;
    seen[static_cast<std::size_t>(other)] = 1;
    for (std::size_t k = 0; k < out.size(); ++k) {
        for (int y : adj_[static_cast<std::size_t>(out[k])]) {
            if (!seen[static_cast<std::size_t>(y)]) {
                seen[static_cast<std::size_t>(y)] = 1;
                out.push_back(y);
            }
        }
    }
    return out;
}

FiniteTree ball_around(const TreeAddress& center, int d, int h) {
    std::vector<TreeAddress> verts{center};
    std::vector<TreeAddress> frontier{center};
    std::vector<TreeAddress> came_from{center};
    for (int r = 0; r < h; ++r) {
        std::vector<TreeAddress> next, next_from;
        for (std::size_t k = 0; k < frontier.size(); ++k) {
            for (auto& y : tree_neighbors(frontier[k], d)) {
                if (r > 0 && y == came_from[k]) continue;
                next.push_back(y);
                next_from.push_back(frontier[k]);
            }
        }
        verts.insert(verts.end(), next.begin(), next.end());
        frontier = std::move(next);
        came_from = std::move(next_from);
    }
    return FiniteTree(d, std::move(verts));
}

FiniteTree ball(int d, int h) { return ball_around(TreeAddress{}, d, h); }

std::size_t ball_size(int d, int r) {
    std::size_t total = 1, shell = static_cast<std::size_t>(d);
    for (int k = 1; k <= r; ++k) {
        total += shell;
        shell *= static_cast<std::size_t>(d - 1);
    }
    return total;
}

SplitResult h_split(const FiniteTree& A, const TreeEdge& e, const TreeAddress& side, int h) {
    if (h < 1) throw std::invalid_argument("h must be at least 1");
    if (side != e.upper && side != e.lower) throw std::invalid_argument("side must be an endpoint of the edge");
    const TreeAddress& other = side == e.upper ? e.lower : e.upper;
    const int iu = A.index_of(side);
    const int iv = A.index_of(other);
    if (iu < 0 || iv < 0 || !adjacent(side, other)) throw std::invalid_argument("edge is not in the tree");

    std::vector<TreeAddress> current;
    for (int i : A.side_of(iu, iv)) current.push_back(A.vertex(i));
    current.push_back(other);

    // Shells of the infinite tree around `other`, away from `side`.
    std::vector<TreeAddress> frontier{other}, came_from{side};
    SplitResult best;
    for (int r = 1; r <= h; ++r) {
        if (r > 1) {
            std::vector<TreeAddress> next, next_from;
            for (std::size_t k = 0; k < frontier.size(); ++k) {
                for (auto& y : tree_neighbors(frontier[k], A.d())) {
                    if (y == came_from[k]) continue;
                    next.push_back(y);
                    next_from.push_back(frontier[k]);
                }
            }
            current.insert(current.end(), next.begin(), next.end());
            frontier = std::move(next);
            came_from = std::move(next_from);
        }
        FiniteTree candidate(A.d(), current);
        if (candidate.diameter() > 2 * h) break;
        best = SplitResult{std::move(candidate), r};
    }
    if (best.r_star == 0) throw std::invalid_argument("tree diameter exceeds 2h");
    return best;
}

std::vector<TreeEdge> active_edges(int d, const std::vector<TreeAddress>& occupied) {
    (void)d;
    if (occupied.empty()) return {};
    std::size_t lca = occupied.front().depth();
    for (const auto& a : occupied) lca = std::min(lca, common_prefix(occupied.front(), a));
    std::set<TreeEdge> edges;
    for (const auto& a : occupied) {
        TreeAddress lower = a;
        while (lower.depth() > lca) {
            TreeAddress upper = lower.parent();
            if (!edges.insert(TreeEdge{upper, lower}).second) break;
            lower = std::move(upper);
        }
    }
    return {edges.begin(), edges.end()};
}

std::vector<TreeEdge> active_edges(const FiniteTree& ambient, const std::vector<TreeAddress>& occupied) {
    for (const auto& a : occupied)
        if (!ambient.contains(a)) throw std::invalid_argument("occupied vertex " + a.to_string() + " outside the ambient tree");
    return active_edges(ambient.d(), occupied);
}

namespace {

struct RootedCodes {
    std::vector<std::string> code;
    std::vector<std::vector<int>> children;  // sorted by code
};

RootedCodes rooted_codes(const std::vector<std::vector<int>>& adj, const std::vector<char>& occ, int root) {
    const std::size_t n = adj.size();
    RootedCodes rc;
    rc.code.assign(n, {});
    rc.children.assign(n, {});
    std::vector<int> parent(n, -1), order;
    order.reserve(n);
    order.push_back(root);
    parent[static_cast<std::size_t>(root)] = root;
    for (std::size_t k = 0; k < order.size(); ++k) {
        int x = order[k];
        for (int y : adj[static_cast<std::size_t>(x)]) {
            if (parent[static_cast<std::size_t>(y)] < 0) {
                parent[static_cast<std::size_t>(y)] = x;
                rc.children[static_cast<std::size_t>(x)].push_back(y);
                order.push_back(y);
            }
        }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto x = static_cast<std::size_t>(*it);
        auto& ch = rc.children[x];
        std::sort(ch.begin(), ch.end(), [&](int a, int b) {
            return rc.code[static_cast<std::size_t>(a)] < rc.code[static_cast<std::size_t>(b)];
        });
        std::string s = occ[x] ? "(1" : "(0";
        for (int c : ch) s += rc.code[static_cast<std::size_t>(c)];
        s += ')';
        rc.code[x] = std::move(s);
    }
    return rc;
}

std::vector<int> centroids(const std::vector<std::vector<int>>& adj) {
    const std::size_t n = adj.size();
    std::vector<int> parent(n, -1), order{0}, size(n, 1);
    parent[0] = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        int x = order[k];
        for (int y : adj[static_cast<std::size_t>(x)])
            if (parent[static_cast<std::size_t>(y)] < 0) {
                parent[static_cast<std::size_t>(y)] = x;
                order.push_back(y);
            }
    }
    std::vector<int> biggest(n, 0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        auto x = static_cast<std::size_t>(*it);
        if (x != 0) {
            auto p = static_cast<std::size_t>(parent[x]);
            size[p] += size[x];
            biggest[p] = std::max(biggest[p], size[x]);
        }
    }
    std::vector<int> out;
    for (std::size_t x = 0; x < n; ++x) {
        int worst = std::max(biggest[x], static_cast<int>(n) - size[x]);
        if (2 * worst <= static_cast<int>(n)) out.push_back(static_cast<int>(x));
    }
    return out;
}

}  // namespace

CanonicalForm canonical_form(const std::vector<std::vector<int>>& adj, const std::vector<char>& occupied) {
    CanonicalForm best;
    if (adj.empty()) return best;
    bool have = false;
    RootedCodes best_rc;
    int best_root = 0;
    for (int c : centroids(adj)) {
        RootedCodes rc = rooted_codes(adj, occupied, c);
        if (!have || rc.code[static_cast<std::size_t>(c)] < best.code) {
            best.code = rc.code[static_cast<std::size_t>(c)];
            best_rc = std::move(rc);
            best_root = c;
            have = true;
        }
    }
    std::vector<int> stack{best_root};
    while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        best.order.push_back(x);
        const auto& ch = best_rc.children[static_cast<std::size_t>(x)];
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    return best;
}

CanonicalCode canonical_code(const std::vector<std::vector<int>>& adj, const std::vector<char>& occupied) {
    return canonical_form(adj, occupied).code;
}

CanonicalCode canonical_code(const FiniteTree& A, const std::vector<TreeAddress>& occupied) {
    std::vector<char> occ(A.size(), 0);
    for (const auto& a : occupied) {
        int i = A.index_of(a);
        if (i < 0) throw std::invalid_argument("occupied vertex " + a.to_string() + " outside the tree");
        occ[static_cast<std::size_t>(i)] = 1;
    }
    return canonical_code(A.adjacency(), occ);
}

CanonicalCode shape_code(const FiniteTree& A) { return canonical_code(A.adjacency(), std::vector<char>(A.size(), 0)); }

int dist_to_leaves(const FiniteTree& A, int w) {
    if (A.size() <= 1) return 0;
    auto dist = A.distances_from(w);
    int best = static_cast<int>(A.size());
    for (int l : A.leaves()) best = std::min(best, dist[static_cast<std::size_t>(l)]);
    return best;
}

int dist_to_leaves(const FiniteTree& A, const TreeAddress& w) {
    int i = A.index_of(w);
    if (i < 0) throw std::invalid_argument("vertex " + w.to_string() + " not in tree");
    return dist_to_leaves(A, i);
}

FiniteTree regrow_scheme(const FiniteTree& A, const TreeAddress& u, int h) {
    const int iu = A.index_of(u);
    if (iu < 0) throw std::invalid_argument("vertex " + u.to_string() + " not in tree");
    if (A.degree(iu) != A.d()) throw std::invalid_argument("vertex " + u.to_string() + " is not interior");
    const auto dist = A.distances_from(iu);
    struct Nb {
        int depth;
        TreeAddress addr;
    };
    std::vector<Nb> nbs;
    for (int v : A.adjacency()[static_cast<std::size_t>(iu)]) {
        int depth = 0;
        for (int w : A.side_of(v, iu)) depth = std::max(depth, dist[static_cast<std::size_t>(w)]);
        nbs.push_back({depth, A.vertex(v)});
    }
    std::stable_sort(nbs.begin(), nbs.end(), [](const Nb& a, const Nb& b) {
        if (a.depth != b.depth) return a.depth > b.depth;
        return a.addr < b.addr;
    });
    FiniteTree cur = A;
    for (const auto& nb : nbs) cur = h_split(cur, TreeEdge::between(u, nb.addr), u, h).tree;
    return cur;
}

EnumerationOverflow::EnumerationOverflow(const std::string& what, std::size_t b)
    : std::runtime_error("enumeration overflow: " + what + " exceeds the bound of " + std::to_string(b)), bound(b) {}

int ShapeTable::find(const CanonicalCode& code) const {
    auto it = index.find(code);
    return it == index.end() ? -1 : it->second;
}

ShapeTable enumerate_shapes(int d, int h, std::size_t bound) {
    if (h < 1) throw std::invalid_argument("h must be at least 1");
    ShapeTable t;
    t.d = d;
    t.h = h;
    auto add = [&](FiniteTree tree) {
        auto code = shape_code(tree);
        if (t.index.count(code)) return;
        if (t.shapes.size() >= bound) throw EnumerationOverflow("shape class count", bound);
        t.index.emplace(code, static_cast<int>(t.shapes.size()));
        t.codes.push_back(std::move(code));
        t.shapes.push_back(std::move(tree));
    };
    add(ball(d, h));
    for (std::size_t i = 0; i < t.shapes.size(); ++i) {
        const FiniteTree s = t.shapes[i];
        for (const auto& e : s.edges()) {
            add(h_split(s, e, e.upper, h).tree);
            add(h_split(s, e, e.lower, h).tree);
        }
    }
    return t;
}

int TypeTable::find(const CanonicalCode& code) const {
    auto it = index.find(code);
    return it == index.end() ? -1 : it->second;
}

std::vector<TreeAddress> TypeTable::occupied_of(int type) const {
    const auto& ty = types[static_cast<std::size_t>(type)];
    const auto& tree = shapes.shapes[static_cast<std::size_t>(ty.shape)];
    std::vector<TreeAddress> out;
    for (std::size_t i = 0; i < tree.size(); ++i)
        if (ty.occupied >> i & 1U) out.push_back(tree.vertex(static_cast<int>(i)));
    return out;
}

bool TypeTable::strongly_connected() const {
    const std::size_t n = types.size();
    if (n == 0) return true;
    std::vector<std::vector<int>> reverse(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto& j = jumps[t];
        auto link = [&](int target) {
            if (target >= 0) reverse[static_cast<std::size_t>(target)].push_back(static_cast<int>(t));
        };
        for (int x : j.deaths) link(x);
        for (auto [x, k] : j.births) link(x);
        for (auto [a, b] : j.splits) {
            link(a);
            link(b);
        }
    }
    // Every type is reachable from the start type by construction; check the converse.
    std::vector<char> seen(n, 0);
    std::vector<int> stack{start_type};
    seen[static_cast<std::size_t>(start_type)] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        for (int y : reverse[static_cast<std::size_t>(x)])
            if (!seen[static_cast<std::size_t>(y)]) {
                seen[static_cast<std::size_t>(y)] = 1;
                ++count;
                stack.push_back(y);
            }
    }
    return count == n;
}

namespace {

struct SplitMap {
    int target = -1;
    VertexMask side = 0;      // vertices of the kept side, in the parent's indexing
    std::vector<int> image;   // parent index -> representative index of the target shape
};

VertexMask bit(int i) { return VertexMask{1} << static_cast<unsigned>(i); }

}  // namespace

TypeTable enumerate_types(int d, int h, std::size_t bound) {
    TypeTable T;
    T.d = d;
    T.h = h;
    T.shapes = enumerate_shapes(d, h, bound);
    const auto& shapes = T.shapes.shapes;
    const std::size_t S = shapes.size();

    std::vector<std::vector<int>> canon_order(S);
    std::vector<std::vector<VertexMask>> nbr_mask(S);
    for (std::size_t s = 0; s < S; ++s) {
        const auto& A = shapes[s];
        if (A.size() > 64) throw EnumerationOverflow("vertex count of a shape", 64);
        canon_order[s] = canonical_form(A.adjacency(), std::vector<char>(A.size(), 0)).order;
        nbr_mask[s].assign(A.size(), 0);
        for (std::size_t i = 0; i < A.size(); ++i)
            for (int j : A.adjacency()[i]) nbr_mask[s][i] |= bit(j);
    }

    // split_maps[s][a * V + b]: split of shape s through edge {a,b}, keeping a's side.
    std::vector<std::vector<SplitMap>> split_maps(S);
    for (std::size_t s = 0; s < S; ++s) {
        const auto& A = shapes[s];
        const std::size_t V = A.size();
        split_maps[s].assign(V * V, {});
        for (std::size_t a = 0; a < V; ++a) {
            for (int b : A.adjacency()[a]) {
                SplitMap m;
                auto res = h_split(A, TreeEdge::between(A.vertex(static_cast<int>(a)), A.vertex(b)), A.vertex(static_cast<int>(a)), h).tree;
                auto form = canonical_form(res.adjacency(), std::vector<char>(res.size(), 0));
                m.target = T.shapes.find(form.code);
                if (m.target < 0) throw std::logic_error("split result missing from shape closure");
                const auto& rep_order = canon_order[static_cast<std::size_t>(m.target)];
                std::vector<int> res_to_rep(res.size(), -1);
                for (std::size_t k = 0; k < form.order.size(); ++k)
                    res_to_rep[static_cast<std::size_t>(form.order[k])] = rep_order[k];
                m.image.assign(V, -1);
                for (int x : A.side_of(static_cast<int>(a), b)) {
                    m.side |= bit(x);
                    m.image[static_cast<std::size_t>(x)] = res_to_rep[static_cast<std::size_t>(res.index_of(A.vertex(x)))];
                }
                split_maps[s][a * V + static_cast<std::size_t>(b)] = std::move(m);
            }
        }
    }

    auto type_of = [&](int s, VertexMask mask) -> int {
        const auto& A = shapes[static_cast<std::size_t>(s)];
        std::vector<char> occ(A.size(), 0);
        for (std::size_t i = 0; i < A.size(); ++i) occ[i] = static_cast<char>(mask >> i & 1U);
        auto code = canonical_code(A.adjacency(), occ);
        auto it = T.index.find(code);
        if (it != T.index.end()) return it->second;
        if (T.types.size() >= bound) throw EnumerationOverflow("type class count", bound);
        int id = static_cast<int>(T.types.size());
        T.index.emplace(code, id);
        T.types.push_back(HerdType{s, mask, std::move(code), std::popcount(mask)});
        return id;
    };
    auto transport = [](VertexMask mask, const SplitMap& m) {
        VertexMask out = 0;
        for (VertexMask rest = mask & m.side; rest; rest &= rest - 1) out |= bit(m.image[static_cast<std::size_t>(std::countr_zero(rest))]);
        return out;
    };

    const int ball_shape = T.shapes.find(shape_code(ball(d, h)));
    T.start_type = type_of(ball_shape, bit(shapes[static_cast<std::size_t>(ball_shape)].index_of(TreeAddress{})));

    for (std::size_t t = 0; t < T.types.size(); ++t) {
        const int s = T.types[t].shape;
        const VertexMask mask = T.types[t].occupied;
        const auto& A = shapes[static_cast<std::size_t>(s)];
        const std::size_t V = A.size();
        TypeJumps jumps;
        for (VertexMask rest = mask; rest; rest &= rest - 1) {
            VertexMask after = mask & ~bit(std::countr_zero(rest));
            jumps.deaths.push_back(after ? type_of(s, after) : -1);
        }
        for (std::size_t w = 0; w < V; ++w) {
            if (mask >> w & 1U) continue;
            int k = std::popcount(nbr_mask[static_cast<std::size_t>(s)][w] & mask);
            if (k > 0) jumps.births.emplace_back(type_of(s, mask | bit(static_cast<int>(w))), k);
        }
        for (std::size_t a = 0; a < V; ++a) {
            for (int b : A.adjacency()[a]) {
                if (static_cast<std::size_t>(b) < a) continue;
                const auto& ma = split_maps[static_cast<std::size_t>(s)][a * V + static_cast<std::size_t>(b)];
                const auto& mb = split_maps[static_cast<std::size_t>(s)][static_cast<std::size_t>(b) * V + a];
                if (!(mask & ma.side) || !(mask & mb.side)) continue;
                int ta = type_of(ma.target, transport(mask, ma));
                int tb = type_of(mb.target, transport(mask, mb));
                jumps.splits.emplace_back(ta, tb);
            }
        }
        T.jumps.push_back(std::move(jumps));
    }
    return T;
}

}  // namespace herdsim
