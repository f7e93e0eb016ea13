#include "herdsim/switch_graph.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace herdsim {

Matching::Matching(std::uint32_t n, std::uint32_t d, std::vector<HalfEdgeId> pairing)
    : n_(n), d_(d), pairing_(std::move(pairing)) {
    if (d == 0 || n == 0) throw std::invalid_argument("matching needs n, d >= 1");
    if ((std::uint64_t(n) * d) % 2 != 0) throw std::invalid_argument("n*d must be even");
    if (pairing_.size() != std::size_t(n) * d) throw std::invalid_argument("pairing has the wrong length");
    edge_pos_.assign(pairing_.size(), 0xffffffffu);
    for (HalfEdgeId h = 0; h < pairing_.size(); ++h) {
        const HalfEdgeId p = pairing_[h];
        if (p >= pairing_.size() || p == h || pairing_[p] != h)
            throw std::invalid_argument("pairing is not a fixed-point-free involution");
        if (p > h) {
            edge_pos_[h] = static_cast<std::uint32_t>(edges_.size());
            edges_.push_back(h);
        }
    }
}

bool Matching::valid() const {
    if (pairing_.size() != std::size_t(n_) * d_ || edges_.size() * 2 != pairing_.size()) return false;
    for (HalfEdgeId h = 0; h < pairing_.size(); ++h) {
        const HalfEdgeId p = pairing_[h];
        if (p >= pairing_.size() || p == h || pairing_[p] != h) return false;
    }
    for (std::size_t i = 0; i < edges_.size(); ++i)
        if (!is_edge(edges_[i]) || edge_pos_[edges_[i]] != i) return false;
    return true;
}

void Matching::set_edge(std::size_t pos, HalfEdgeId e) {
    edges_[pos] = e;
    edge_pos_[e] = static_cast<std::uint32_t>(pos);
}

void Matching::rewire(HalfEdgeId e1, HalfEdgeId e2, bool plus) {
    const HalfEdgeId a = e1, b = pairing_[e1], a2 = e2, b2 = pairing_[e2];
    const std::size_t p1 = edge_pos_[e1], p2 = edge_pos_[e2];
    HalfEdgeId x = a, y = plus ? a2 : b2, z = b, w = plus ? b2 : a2;
    pairing_[x] = y;
    pairing_[y] = x;
    pairing_[z] = w;
    pairing_[w] = z;
    set_edge(p1, std::min(x, y));
    set_edge(p2, std::min(z, w));
}

std::string Matching::to_text() const {
    std::ostringstream out;
    out << n_ << ' ' << d_ << '\n';
    for (std::size_t h = 0; h < pairing_.size(); ++h) out << pairing_[h] << (h + 1 == pairing_.size() ? '\n' : ' ');
    return out.str();
}

Matching Matching::from_text(const std::string& text) {
    std::istringstream in(text);
    std::uint64_t n = 0, d = 0;
    if (!(in >> n >> d) || n == 0 || d == 0 || n > 0xffffffffu / d) throw std::invalid_argument("bad matching header");
    std::vector<HalfEdgeId> p(n * d);
    for (auto& x : p) {
        std::uint64_t v;
        if (!(in >> v)) throw std::invalid_argument("truncated matching");
        x = static_cast<HalfEdgeId>(v);
    }
    return Matching(static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(d), std::move(p));
}

Matching sample_matching(std::uint32_t n, std::uint32_t d, Rng& rng) {
    if ((std::uint64_t(n) * d) % 2 != 0) throw std::invalid_argument("n*d must be even");
    std::vector<HalfEdgeId> order(std::size_t(n) * d);
    std::iota(order.begin(), order.end(), 0u);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<HalfEdgeId> pairing(order.size());
    for (std::size_t i = 0; i < order.size(); i += 2) {
        pairing[order[i]] = order[i + 1];
        pairing[order[i + 1]] = order[i];
    }
    return Matching(n, d, std::move(pairing));
}

void apply_switch(Matching& g, const SwitchMark& m) {
    if (!g.is_edge(m.e1) || !g.is_edge(m.e2)) throw StaleEdge("switch refers to an edge not in the graph");
    if (m.e1 == m.e2) throw StaleEdge("switch needs two distinct edges");
    g.rewire(m.e1, m.e2, m.plus);
}

Matching switched(const Matching& g, const SwitchMark& m) {
    Matching out = g;
    apply_switch(out, m);
    return out;
}

double switch_rate(std::uint32_t n, std::uint32_t d, double v) {
    const double edges = 0.5 * double(n) * double(d);
    return 0.5 * v * (edges - 1.0);
}

SwitchMark draw_switch_mark(const Matching& g, Rng& rng) {
    const std::size_t E = g.edge_count();
    if (E < 2) throw std::invalid_argument("switching needs at least two edges");
    std::size_t i, j;
    do {
        i = rng.below(E);
        j = rng.below(E);
    } while (i == j);
    return SwitchMark{g.edge_at(i), g.edge_at(j), rng.bernoulli(0.5)};
}

SwitchEvent draw_switch_event(const Matching& g, double v, Rng& rng) {
    if (!(v > 0.0)) return SwitchEvent{std::numeric_limits<double>::infinity(), SwitchMark{kNoHalfEdge, kNoHalfEdge, true}};
    const double dt = rng.exponential(switch_rate(g.n(), g.d(), v));
    return SwitchEvent{dt, draw_switch_mark(g, rng)};
}

std::size_t count_loops(const Matching& g, int m) {
    if (m < 1) throw std::invalid_argument("loop length must be positive");
    if (m == 1) {
        std::size_t c = 0;
        for (std::size_t i = 0; i < g.edge_count(); ++i) c += g.is_self_loop(g.edge_at(i));
        return c;
    }
    // Closed walks x1 -> ... -> x1 through distinct vertices whose minimum is x1; each cycle is
    // met once per direction.
    std::size_t walks = 0;
    std::vector<std::uint32_t> path;
    const std::uint32_t d = g.d();
    auto on_path = [&](std::uint32_t y) { return std::find(path.begin(), path.end(), y) != path.end(); };
    std::function<void(std::uint32_t, HalfEdgeId)> extend = [&](std::uint32_t cur, HalfEdgeId first_edge) {
        const int depth = static_cast<int>(path.size());
        for (std::uint32_t s = 0; s < d; ++s) {
            const HalfEdgeId h = g.id(cur, s);
            const std::uint32_t y = g.vertex_of(g.partner(h));
            if (y == cur) continue;
            const HalfEdgeId e = g.edge_of(h);
            if (depth == m) {
                if (y == path.front() && (m > 2 || e != first_edge)) ++walks;
            } else if (y > path.front() && !on_path(y)) {
                path.push_back(y);
                extend(y, depth == 1 ? e : first_edge);
                path.pop_back();
            }
        }
    };
    for (std::uint32_t x = 0; x < g.n(); ++x) {
        path.assign(1, x);
        extend(x, kNoHalfEdge);
    }
    return walks / 2;
}

std::size_t loops_up_to(const Matching& g, int m) {
    std::size_t total = 0;
    for (int k = 1; k <= m; ++k) total += count_loops(g, k);
    return total;
}

std::size_t loops_through(const Matching& g, const std::vector<std::uint32_t>& vertices, int m) {
    if (m < 1) throw std::invalid_argument("loop length must be positive");
    // A loop is identified by its sorted edge set; every loop through a source is found from it.
    std::set<std::vector<HalfEdgeId>> found;
    std::vector<std::uint32_t> path;
    std::vector<HalfEdgeId> used;
    std::function<void(std::uint32_t)> extend = [&](std::uint32_t cur) {
        for (std::uint32_t s = 0; s < g.d(); ++s) {
            const HalfEdgeId h = g.id(cur, s);
            const std::uint32_t y = g.vertex_of(g.partner(h));
            const HalfEdgeId e = g.edge_of(h);
            if (std::find(used.begin(), used.end(), e) != used.end()) continue;
            if (y == path.front()) {
                auto key = used;
                key.push_back(e);
                std::sort(key.begin(), key.end());
                found.insert(std::move(key));
            } else if (static_cast<int>(used.size()) + 1 < m && std::find(path.begin(), path.end(), y) == path.end()) {
                path.push_back(y);
                used.push_back(e);
                extend(y);
                path.pop_back();
                used.pop_back();
            }
        }
    };
    for (std::uint32_t x : vertices) {
        if (x >= g.n()) throw std::invalid_argument("vertex out of range");
        path.assign(1, x);
        used.clear();
        extend(x);
    }
    return found.size();
}

LocalBall local_ball(const Matching& g, std::uint32_t x, int r) {
    if (x >= g.n()) throw std::invalid_argument("vertex out of range");
    LocalBall b;
    std::unordered_map<std::uint32_t, int> dist{{x, 0}};
    b.vertices.push_back(x);
    b.distance.push_back(0);
    for (std::size_t k = 0; k < b.vertices.size(); ++k) {
        const std::uint32_t u = b.vertices[k];
        if (b.distance[k] == r) continue;
        for (std::uint32_t s = 0; s < g.d(); ++s) {
            const std::uint32_t y = g.vertex_of(g.partner(g.id(u, s)));
            if (dist.emplace(y, b.distance[k] + 1).second) {
                b.vertices.push_back(y);
                b.distance.push_back(b.distance[k] + 1);
            }
        }
    }
    for (std::uint32_t u : b.vertices)
        for (std::uint32_t s = 0; s < g.d(); ++s) {
            const HalfEdgeId h = g.id(u, s), p = g.partner(h);
            if (h < p && dist.count(g.vertex_of(p))) b.edges.push_back(h);
        }
    b.is_tree = b.edges.size() + 1 == b.vertices.size();
    return b;
}

std::size_t tree_ball_size(std::uint32_t d, int r) {
    std::size_t total = 1, layer = d;
    for (int k = 1; k <= r; ++k) {
        total += layer;
        layer *= (d - 1);
    }
    return total;
}

}  // namespace herdsim
