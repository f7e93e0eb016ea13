#include "herdsim/embedded_herds.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace herdsim {

namespace {

// Adjacency of a herd over local indices; each entry is (neighbour, half-edge at this vertex).
struct LocalTree {
    std::vector<std::vector<std::pair<int, HalfEdgeId>>> nbr;
    const std::vector<std::uint32_t>* vertices = nullptr;

    int index(std::uint32_t x) const {
        auto it = std::lower_bound(vertices->begin(), vertices->end(), x);
        if (it == vertices->end() || *it != x) return -1;
        return static_cast<int>(it - vertices->begin());
    }
    std::size_t size() const { return nbr.size(); }
};

LocalTree local_tree(const EmbeddedHerd& herd, std::uint32_t d) {
    LocalTree t;
    t.vertices = &herd.vertices;
    t.nbr.resize(herd.vertices.size());
    for (auto [lo, hi] : herd.edges) {
        const int a = t.index(lo / d), b = t.index(hi / d);
        if (a < 0 || b < 0) throw std::invalid_argument("herd edge leaves the herd");
        t.nbr[static_cast<std::size_t>(a)].emplace_back(b, lo);
        t.nbr[static_cast<std::size_t>(b)].emplace_back(a, hi);
    }
    return t;
}

std::vector<std::vector<int>> plain_adjacency(const LocalTree& t) {
    std::vector<std::vector<int>> adj(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        for (auto [j, h] : t.nbr[i]) adj[i].push_back(j);
    return adj;
}

// Local indices on the side of `from` once the edge from-other is cut.
std::vector<int> cut_side(const LocalTree& t, int from, int other) {
    std::vector<int> out{from};
    std::vector<char> seen(t.size(), 0);
    seen[static_cast<std::size_t>(from)] = 1;
    seen[static_cast<std::size_t>(other)] = 1;
    for (std::size_t k = 0; k < out.size(); ++k)
        for (auto [j, h] : t.nbr[static_cast<std::size_t>(out[k])])
            if (!seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = 1;
                out.push_back(j);
            }
    return out;
}

std::vector<int> tree_distances(const std::vector<std::vector<int>>& adj, int from) {
    std::vector<int> dist(adj.size(), -1);
    std::vector<int> queue{from};
    dist[static_cast<std::size_t>(from)] = 0;
    for (std::size_t k = 0; k < queue.size(); ++k)
        for (int j : adj[static_cast<std::size_t>(queue[k])])
            if (dist[static_cast<std::size_t>(j)] < 0) {
                dist[static_cast<std::size_t>(j)] = dist[static_cast<std::size_t>(queue[k])] + 1;
                queue.push_back(j);
            }
    return dist;
}

int tree_diameter(const std::vector<std::vector<int>>& adj) {
    if (adj.empty()) return 0;
    auto d0 = tree_distances(adj, 0);
    const int far = static_cast<int>(std::max_element(d0.begin(), d0.end()) - d0.begin());
    auto d1 = tree_distances(adj, far);
    return *std::max_element(d1.begin(), d1.end());
}

HalfEdgePair ordered(HalfEdgeId a, HalfEdgeId b) { return a < b ? HalfEdgePair{a, b} : HalfEdgePair{b, a}; }

// Herd from a vertex list and edge list given as graph objects; sorts and recodes.
EmbeddedHerd make_herd(std::vector<std::uint32_t> vertices, std::vector<HalfEdgePair> edges,
                       std::vector<std::uint32_t> occupied, std::uint32_t d) {
    EmbeddedHerd h;
    std::sort(vertices.begin(), vertices.end());
    std::sort(edges.begin(), edges.end());
    std::sort(occupied.begin(), occupied.end());
    h.vertices = std::move(vertices);
    h.edges = std::move(edges);
    h.occupied = std::move(occupied);
    h.recode(d);
    return h;
}

}  // namespace

void EmbeddedHerd::recode(std::uint32_t d) {
    const LocalTree t = local_tree(*this, d);
    const auto adj = plain_adjacency(t);
    std::vector<char> occ(vertices.size(), 0);
    for (auto x : occupied) {
        const int i = t.index(x);
        if (i < 0) throw std::invalid_argument("occupied vertex outside the herd");
        occ[static_cast<std::size_t>(i)] = 1;
    }
    shape = canonical_code(adj, std::vector<char>(vertices.size(), 0));
    code = canonical_code(adj, occ);
}

EmbeddedModel EmbeddedModel::build(int d, int h, double lambda, double v) {
    EmbeddedModel m;
    m.d = d;
    m.h = h;
    m.lambda = lambda;
    m.v = v;
    m.types = enumerate_types(d, h);
    m.mean = mean_matrix(lambda, v, m.types);
    m.pf = pf_eigen(m.mean);
    return m;
}

double EmbeddedModel::f(const CanonicalCode& code) const {
    const int t = types.find(code);
    if (t < 0) throw std::logic_error("class outside the type table: " + code);
    return pf.f[static_cast<std::size_t>(t)];
}

nlohmann::json MonitorConstants::to_json() const {
    return {{"mu", mu},     {"f_min", f_min}, {"f_max", f_max}, {"C_h", c_h},    {"eps0", eps0},
            {"eps1", eps1}, {"eps2", eps2},   {"delta", delta}, {"mu_bar", mu_bar}};
}

MonitorConstants default_constants(const EmbeddedModel& m) {
    MonitorConstants c;
    c.mu = m.pf.mu;
    c.f_min = m.pf.f_min;
    c.f_max = m.pf.f_max;
    c.c_h = m.c_h();
    const double d = m.d, lam = m.lambda, v = m.v;
    if (c.mu > 0 && c.f_min > 0 && v > 0) {
        c.eps0 = c.mu * c.f_min / (6.0 * v * c.c_h * c.f_max);
        c.eps1 = c.mu * c.f_min / (32.0 * v * c.c_h * c.f_max);
    }
    if (c.mu > 0 && c.f_min > 0) {
        // |E(z)|/delta <= 8 delta f_max^2 e^{4 delta f_max} for |z| <= 4 delta f_max; the
        // second-order sum then stays below mu f_min |J| / 8.
        auto excess = [&](double delta) {
            return 16.0 * delta * c.f_max * c.f_max * std::exp(4.0 * delta * c.f_max) * c.c_h * (d * lam + 1.0 + v / 2.0) -
                   c.mu * c.f_min / 8.0;
        };
        double lo = 0.0, hi = 1.0;
        while (excess(hi) < 0) hi *= 2;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (excess(mid) <= 0 ? lo : hi) = mid;
        }
        c.delta = lo;
    }
    if (c.f_min > 0) c.mu_bar = (std::exp(4.0 * c.f_max) + 1.0) * c.c_h * (2.0 * (d * lam + 1.0) + v) / c.f_min;
    return c;
}

std::string to_string(SwitchClass c) {
    switch (c) {
        case SwitchClass::Neutral: return "neutral";
        case SwitchClass::GoodActive: return "good_active";
        case SwitchClass::GoodInactive: return "good_inactive";
        case SwitchClass::Bad: return "bad";
    }
    return "unknown";
}

EmbeddedProcess::EmbeddedProcess(const EmbeddedModel& model, Matching graph)
    : model_(&model), g_(std::move(graph)), radius_(2 * model.h) {
    if (static_cast<int>(g_.d()) != model.d) throw std::invalid_argument("graph degree does not match the model");
    const std::size_t n = g_.n(), H = g_.half_edges();
    vowner_.assign(n, kFree);
    heowner_.assign(H, kFree);
    ppos_.assign(n, -1);
    good_.assign(n, 0);
    lam_.assign(H, 0);
    stamp_.assign(n, 0);
    std::vector<std::uint32_t> all(n);
    for (std::uint32_t x = 0; x < n; ++x) all[x] = x;
    refresh(all);
    loops_ = loops_up_to(g_, model.h);
}

bool EmbeddedProcess::ball_clear(std::uint32_t z, std::int64_t blocking) const {
    if (++stamp_now_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0);
        stamp_now_ = 1;
    }
    const std::uint32_t d = g_.d();
    thread_local std::vector<std::pair<std::uint32_t, int>> queue;
    queue.clear();
    queue.emplace_back(z, 0);
    stamp_[z] = stamp_now_;
    for (std::size_t k = 0; k < queue.size(); ++k) {
        const auto [u, du] = queue[k];
        const std::int64_t o = vowner_[u];
        if (o != kFree && (blocking == kAnyHerd || o == blocking)) return false;
        if (du == radius_) continue;
        for (std::uint32_t s = 0; s < d; ++s) {
            const std::uint32_t w = g_.vertex_of(g_.partner(g_.id(u, s)));
            if (stamp_[w] != stamp_now_) {
                stamp_[w] = stamp_now_;
                queue.emplace_back(w, du + 1);
            }
        }
    }
    std::size_t half = 0;
    for (auto [u, du] : queue)
        for (std::uint32_t s = 0; s < d; ++s) half += stamp_[g_.vertex_of(g_.partner(g_.id(u, s)))] == stamp_now_;
    return half / 2 + 1 == queue.size();
}

std::vector<std::uint32_t> EmbeddedProcess::region(const std::vector<std::uint32_t>& sources, int radius) const {
    if (++stamp_now_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0);
        stamp_now_ = 1;
    }
    std::vector<std::uint32_t> out;
    std::vector<int> dist;
    for (auto x : sources)
        if (stamp_[x] != stamp_now_) {
            stamp_[x] = stamp_now_;
            out.push_back(x);
            dist.push_back(0);
        }
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (dist[k] == radius) continue;
        for (std::uint32_t s = 0; s < g_.d(); ++s) {
            const std::uint32_t w = g_.vertex_of(g_.partner(g_.id(out[k], s)));
            if (stamp_[w] != stamp_now_) {
                stamp_[w] = stamp_now_;
                out.push_back(w);
                dist.push_back(dist[k] + 1);
            }
        }
    }
    return out;
}

void EmbeddedProcess::refresh(const std::vector<std::uint32_t>& vertices) {
    for (auto z : vertices) good_[z] = ball_clear(z, kAnyHerd);
    for (auto z : vertices)
        for (std::uint32_t s = 0; s < g_.d(); ++s) {
            const HalfEdgeId h = g_.id(z, s), p = g_.partner(h);
            const HalfEdgeId name = std::min(h, p);
            const char flag = good_[z] && good_[g_.vertex_of(p)];
            if (lam_[name] != flag) {
                lam_[name] = flag;
                flag ? ++lambda_count_ : --lambda_count_;
            }
        }
}

void EmbeddedProcess::add_particle(std::uint32_t x) {
    ppos_[x] = static_cast<std::int64_t>(particles_.size());
    particles_.push_back(x);
}

void EmbeddedProcess::remove_particle(std::uint32_t x) {
    const auto i = static_cast<std::size_t>(ppos_[x]);
    particles_[i] = particles_.back();
    ppos_[particles_[i]] = static_cast<std::int64_t>(i);
    particles_.pop_back();
    ppos_[x] = -1;
}

void EmbeddedProcess::install(std::uint64_t id, EmbeddedHerd herd, std::vector<std::uint32_t>& touched) {
    for (auto x : herd.vertices)
        if (vowner_[x] != kFree) throw std::logic_error("herd overlaps herd " + std::to_string(vowner_[x]));
    for (auto [lo, hi] : herd.edges)
        if (g_.partner(lo) != hi) throw std::logic_error("herd edge is not an edge of the graph");
    for (auto x : herd.vertices) {
        vowner_[x] = static_cast<std::int64_t>(id);
        touched.push_back(x);
    }
    for (auto [lo, hi] : herd.edges) heowner_[lo] = heowner_[hi] = static_cast<std::int64_t>(id);
    for (auto x : herd.occupied) add_particle(x);
    herd_edges_ += herd.edges.size();
    X_ += model_->f(herd.code);
    herds_.emplace(id, std::move(herd));
}

void EmbeddedProcess::remove_herd(std::uint64_t id, std::vector<std::uint32_t>& touched) {
    auto it = herds_.find(id);
    const EmbeddedHerd& herd = it->second;
    for (auto x : herd.vertices) {
        vowner_[x] = kFree;
        touched.push_back(x);
    }
    for (auto [lo, hi] : herd.edges) heowner_[lo] = heowner_[hi] = kFree;
    for (auto x : herd.occupied) remove_particle(x);
    herd_edges_ -= herd.edges.size();
    X_ -= model_->f(herd.code);
    herds_.erase(it);
    if (herds_.empty()) X_ = 0.0;  // drop accumulated rounding
}

void EmbeddedProcess::recode_herd(std::uint64_t id) {
    EmbeddedHerd& herd = herds_.at(id);
    X_ -= model_->f(herd.code);
    herd.recode(g_.d());
    X_ += model_->f(herd.code);
}

std::uint64_t EmbeddedProcess::add_herd(EmbeddedHerd herd) {
    const std::uint32_t d = g_.d();
    if (herd.vertices.empty() || herd.occupied.empty()) throw std::invalid_argument("herd must have particles");
    if (herd.edges.size() + 1 != herd.vertices.size()) throw std::invalid_argument("herd is not a tree");
    for (auto x : herd.vertices)
        if (x >= g_.n()) throw std::invalid_argument("herd vertex out of range");
    for (auto [lo, hi] : herd.edges)
        if (hi >= g_.half_edges() || g_.partner(lo) != hi) throw std::invalid_argument("herd edge is not an edge of G");
    herd.recode(d);
    const auto dist = tree_distances(plain_adjacency(local_tree(herd, d)), 0);
    if (std::find(dist.begin(), dist.end(), -1) != dist.end()) throw std::invalid_argument("herd is not connected");
    if (model_->type_of(herd.code) < 0) throw std::invalid_argument("herd class is not in the type table");
    for (auto x : herd.vertices)
        if (vowner_[x] != kFree) throw std::invalid_argument("herd overlaps an existing herd");
    const std::uint64_t id = next_id_++;
    std::vector<std::uint32_t> touched;
    install(id, std::move(herd), touched);
    refresh(region(touched, radius_));
    return id;
}

double EmbeddedProcess::X_recomputed() const {
    double x = 0;
    for (auto& [id, herd] : herds_) x += model_->f(herd.code);
    return x;
}

std::vector<HalfEdgeId> EmbeddedProcess::lambda_set() const {
    std::vector<char> good(g_.n());
    for (std::uint32_t z = 0; z < g_.n(); ++z) good[z] = ball_clear(z, kAnyHerd);
    std::vector<HalfEdgeId> out;
    for (std::size_t i = 0; i < g_.edge_count(); ++i) {
        const HalfEdgeId e = g_.edge_at(i);
        if (good[g_.vertex_of(e)] && good[g_.vertex_of(g_.partner(e))]) out.push_back(e);
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool EmbeddedProcess::edge_active(const EmbeddedHerd& herd, const HalfEdgePair& e) const {
    const std::uint32_t d = g_.d();
    const LocalTree t = local_tree(herd, d);
    const int a = t.index(e.first / d), b = t.index(e.second / d);
    std::size_t on_a = 0;
    for (int i : cut_side(t, a, b)) on_a += std::binary_search(herd.occupied.begin(), herd.occupied.end(), herd.vertices[static_cast<std::size_t>(i)]);
    return on_a > 0 && on_a < herd.occupied.size();
}

HalfEdgeId EmbeddedProcess::new_partner(const SwitchMark& m, HalfEdgeId h) const {
    const HalfEdgeId a = m.e1, b = g_.partner(m.e1), a2 = m.e2, b2 = g_.partner(m.e2);
    if (m.plus) {
        if (h == a) return a2;
        if (h == a2) return a;
        if (h == b) return b2;
        if (h == b2) return b;
    } else {
        if (h == a) return b2;
        if (h == b2) return a;
        if (h == b) return a2;
        if (h == a2) return b;
    }
    throw std::invalid_argument("half-edge not touched by the switch");
}

// Side of the herd at hx, joined by the new edge {hx, hy} to the fresh region behind hy, grown
// as deep as the diameter bound allows.
EmbeddedHerd EmbeddedProcess::active_side(const EmbeddedHerd& herd, const HalfEdgePair& e, HalfEdgeId hx,
                                          HalfEdgeId hy) const {
    const std::uint32_t d = g_.d();
    const int h = model_->h;
    const LocalTree t = local_tree(herd, d);
    const HalfEdgeId hother = hx == e.first ? e.second : e.first;
    const int ix = t.index(hx / d), io = t.index(hother / d);
    const auto side = cut_side(t, ix, io);
    std::vector<char> in_side(t.size(), 0);
    for (int i : side) in_side[static_cast<std::size_t>(i)] = 1;

    std::vector<std::uint32_t> base_vertices;
    std::vector<std::uint32_t> occupied;
    for (int i : side) {
        const std::uint32_t x = herd.vertices[static_cast<std::size_t>(i)];
        base_vertices.push_back(x);
        if (std::binary_search(herd.occupied.begin(), herd.occupied.end(), x)) occupied.push_back(x);
    }
    std::vector<HalfEdgePair> base_edges;
    for (auto pr : herd.edges)
        if (in_side[static_cast<std::size_t>(t.index(pr.first / d))] && in_side[static_cast<std::size_t>(t.index(pr.second / d))])
            base_edges.push_back(pr);

    // Fresh region: vertices reached from y without the half-edge hy, by depth.
    struct Grown {
        std::uint32_t vertex;
        int depth;
        HalfEdgePair edge;  // edge to the parent; unused for y
    };
    const std::uint32_t y = g_.vertex_of(hy);
    std::vector<Grown> grown{{y, 0, {kNoHalfEdge, kNoHalfEdge}}};
    std::vector<HalfEdgeId> entry{hy};  // half-edge of each grown vertex pointing to its parent
    for (std::size_t k = 0; k < grown.size(); ++k) {
        if (grown[k].depth == h - 1) continue;
        for (std::uint32_t s = 0; s < d; ++s) {
            const HalfEdgeId a = g_.id(grown[k].vertex, s);
            if (a == entry[k]) continue;
            const HalfEdgeId b = g_.partner(a);
            const std::uint32_t w = g_.vertex_of(b);
            for (auto& gv : grown)
                if (gv.vertex == w) throw std::logic_error("regrowth region is not a tree");
            if (std::binary_search(herd.vertices.begin(), herd.vertices.end(), w))
                throw std::logic_error("regrowth region meets the herd");
            grown.push_back({w, grown[k].depth + 1, ordered(a, b)});
            entry.push_back(b);
        }
    }
    if (std::binary_search(herd.vertices.begin(), herd.vertices.end(), y)) throw std::logic_error("regrowth region meets the herd");

    for (int k = h; k >= 1; --k) {
        auto vertices = base_vertices;
        auto edges = base_edges;
        edges.push_back(ordered(hx, hy));
        for (auto& gv : grown) {
            if (gv.depth > k - 1) continue;
            vertices.push_back(gv.vertex);
            if (gv.depth > 0) edges.push_back(gv.edge);
        }
        EmbeddedHerd out = make_herd(std::move(vertices), std::move(edges), occupied, d);
        if (tree_diameter(plain_adjacency(local_tree(out, d))) <= 2 * h) return out;
    }
    throw std::logic_error("no regrowth depth keeps the diameter within 2h");
}

// The empty side (behind hx's partner in the herd) is re-embedded behind hy; hx is on the
// occupied side. Children are matched in increasing half-edge order on both sides.
EmbeddedHerd EmbeddedProcess::inactive_move(const EmbeddedHerd& herd, const HalfEdgePair& e, HalfEdgeId hx,
                                            HalfEdgeId hy) const {
    const std::uint32_t d = g_.d();
    const LocalTree t = local_tree(herd, d);
    const HalfEdgeId hother = hx == e.first ? e.second : e.first;
    const int ix = t.index(hx / d), io = t.index(hother / d);
    std::vector<char> in_keep(t.size(), 0);
    for (int i : cut_side(t, ix, io)) in_keep[static_cast<std::size_t>(i)] = 1;

    std::vector<std::uint32_t> vertices;
    std::vector<HalfEdgePair> edges;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (in_keep[i]) vertices.push_back(herd.vertices[i]);
    for (auto pr : herd.edges)
        if (in_keep[static_cast<std::size_t>(t.index(pr.first / d))] && in_keep[static_cast<std::size_t>(t.index(pr.second / d))])
            edges.push_back(pr);
    edges.push_back(ordered(hx, hy));

    // (local vertex in the moved side, its image, half-edge of the source toward its parent,
    //  half-edge of the image toward its parent)
    struct Item {
        int w;
        std::uint32_t z;
        HalfEdgeId w_up;
        HalfEdgeId z_up;
    };
    std::vector<Item> queue{{io, g_.vertex_of(hy), hother, hy}};
    std::vector<std::uint32_t> images{g_.vertex_of(hy)};
    for (std::size_t k = 0; k < queue.size(); ++k) {
        const Item it = queue[k];
        vertices.push_back(it.z);
        std::vector<std::pair<HalfEdgeId, int>> children;  // (half-edge at w, child)
        for (auto [j, hw] : t.nbr[static_cast<std::size_t>(it.w)])
            if (hw != it.w_up) children.emplace_back(hw, j);
        std::sort(children.begin(), children.end());
        std::vector<HalfEdgeId> slots;
        for (std::uint32_t s = 0; s < d; ++s)
            if (g_.id(it.z, s) != it.z_up) slots.push_back(g_.id(it.z, s));
        if (children.size() > slots.size()) throw std::logic_error("re-embedding ran out of half-edges");
        for (std::size_t c = 0; c < children.size(); ++c) {
            const HalfEdgeId a = slots[c], b = g_.partner(a);
            const std::uint32_t z2 = g_.vertex_of(b);
            if (vowner_[z2] != kFree || std::find(images.begin(), images.end(), z2) != images.end())
                throw std::logic_error("re-embedding target is not free");
            images.push_back(z2);
            edges.push_back(ordered(a, b));
            const auto [hw, j] = children[c];
            // The child's half-edge toward w is the partner of hw inside the herd.
            HalfEdgeId up = kNoHalfEdge;
            for (auto [k2, hc] : t.nbr[static_cast<std::size_t>(j)])
                if (k2 == it.w) up = hc;
            queue.push_back({j, z2, up, b});
        }
    }
    EmbeddedHerd out = make_herd(std::move(vertices), std::move(edges), herd.occupied, d);
    if (out.code != herd.code) throw std::logic_error("re-embedding changed the class of the herd");
    return out;
}

SwitchClass EmbeddedProcess::classify(const SwitchMark& m) const {
    if (!g_.is_edge(m.e1) || !g_.is_edge(m.e2) || m.e1 == m.e2) throw StaleEdge("switch refers to an edge not in the graph");
    const std::int64_t i1 = heowner_[m.e1], i2 = heowner_[m.e2];
    if (i1 == kFree && i2 == kFree) return SwitchClass::Neutral;
    if (i1 != kFree && i2 != kFree) return SwitchClass::Bad;
    const HalfEdgeId eh = i1 != kFree ? m.e1 : m.e2, eo = i1 != kFree ? m.e2 : m.e1;
    if (!lam_[eo]) return SwitchClass::Bad;
    const EmbeddedHerd& herd = herds_.at(static_cast<std::uint64_t>(heowner_[eh]));
    return edge_active(herd, {eh, g_.partner(eh)}) ? SwitchClass::GoodActive : SwitchClass::GoodInactive;
}

SwitchClass EmbeddedProcess::apply(const SwitchMark& m) {
    const SwitchClass cls = classify(m);
    const std::uint32_t d = g_.d();
    const std::vector<std::uint32_t> ends{g_.vertex_of(m.e1), g_.vertex_of(g_.partner(m.e1)), g_.vertex_of(m.e2),
                                          g_.vertex_of(g_.partner(m.e2))};
    std::vector<std::uint32_t> touched_region = region(ends, radius_);
    const std::size_t loops_before = loops_through(g_, ends, model_->h);

    std::vector<EmbeddedHerd> plans;
    std::int64_t target = kFree;
    if (cls == SwitchClass::GoodActive || cls == SwitchClass::GoodInactive) {
        const HalfEdgeId eh = heowner_[m.e1] != kFree ? m.e1 : m.e2;
        target = heowner_[eh];
        const EmbeddedHerd& herd = herds_.at(static_cast<std::uint64_t>(target));
        const HalfEdgePair e{eh, g_.partner(eh)};
        if (cls == SwitchClass::GoodActive) {
            plans.push_back(active_side(herd, e, e.first, new_partner(m, e.first)));
            plans.push_back(active_side(herd, e, e.second, new_partner(m, e.second)));
        } else {
            // Keep the side holding the particles.
            const LocalTree t = local_tree(herd, d);
            const int a = t.index(e.first / d), b = t.index(e.second / d);
            bool first_holds = false;
            for (int i : cut_side(t, a, b))
                first_holds |= std::binary_search(herd.occupied.begin(), herd.occupied.end(), herd.vertices[static_cast<std::size_t>(i)]);
            const HalfEdgeId hx = first_holds ? e.first : e.second;
            plans.push_back(inactive_move(herd, e, hx, new_partner(m, hx)));
        }
    }

    for (HalfEdgeId e : {m.e1, m.e2})
        if (lam_[e]) {
            lam_[e] = 0;
            --lambda_count_;
        }
    std::vector<std::uint32_t> touched;
    if (cls == SwitchClass::Bad) {
        const std::int64_t i1 = heowner_[m.e1], i2 = heowner_[m.e2];
        if (i1 != kFree) remove_herd(static_cast<std::uint64_t>(i1), touched);
        if (i2 != kFree && i2 != i1) remove_herd(static_cast<std::uint64_t>(i2), touched);
    } else if (target != kFree) {
        remove_herd(static_cast<std::uint64_t>(target), touched);
    }
    apply_switch(g_, m);
    if (cls == SwitchClass::GoodActive) {
        install(next_id_++, std::move(plans[0]), touched);
        install(next_id_++, std::move(plans[1]), touched);
    } else if (cls == SwitchClass::GoodInactive) {
        install(static_cast<std::uint64_t>(target), std::move(plans[0]), touched);
    }
    loops_ = loops_ - loops_before + loops_through(g_, ends, model_->h);

    for (auto x : region(ends, radius_)) touched_region.push_back(x);
    if (!touched.empty())
        for (auto x : region(touched, radius_)) touched_region.push_back(x);
    std::sort(touched_region.begin(), touched_region.end());
    touched_region.erase(std::unique(touched_region.begin(), touched_region.end()), touched_region.end());
    refresh(touched_region);
    return cls;
}

bool EmbeddedProcess::birth(HalfEdgeId h) {
    const std::uint32_t x = g_.vertex_of(h), y = g_.vertex_of(g_.partner(h));
    const std::int64_t id = vowner_[x];
    if (id == kFree || ppos_[x] < 0 || heowner_[h] != id || ppos_[y] >= 0) return false;
    EmbeddedHerd& herd = herds_.at(static_cast<std::uint64_t>(id));
    herd.occupied.insert(std::upper_bound(herd.occupied.begin(), herd.occupied.end(), y), y);
    add_particle(y);
    recode_herd(static_cast<std::uint64_t>(id));
    return true;
}

void EmbeddedProcess::death(std::uint32_t x) {
    const std::int64_t id = vowner_[x];
    if (id == kFree || ppos_[x] < 0) throw std::invalid_argument("death of an empty vertex");
    EmbeddedHerd& herd = herds_.at(static_cast<std::uint64_t>(id));
    if (herd.occupied.size() == 1) {
        std::vector<std::uint32_t> touched;
        remove_herd(static_cast<std::uint64_t>(id), touched);
        refresh(region(touched, radius_));
        return;
    }
    herd.occupied.erase(std::lower_bound(herd.occupied.begin(), herd.occupied.end(), x));
    remove_particle(x);
    recode_herd(static_cast<std::uint64_t>(id));
}

double EmbeddedProcess::bad_marks() const {
    const double b = static_cast<double>(herd_edges_), E = static_cast<double>(g_.edge_count());
    const double L = static_cast<double>(lambda_count_);
    return 2.0 * (b * (b - 1.0) / 2.0 + b * (E - b - L));
}

double EmbeddedProcess::exp_drift(double delta) const {
    const auto& T = model_->types;
    const auto& f = model_->pf.f;
    const double lam = model_->lambda, v = model_->v;
    const double E = static_cast<double>(g_.edge_count()), L = static_cast<double>(lambda_count_);
    const double b = static_cast<double>(herd_edges_);
    const double ups = v / (2.0 * E);  // v / (nd)
    const double base = std::exp(-delta * X_);
    auto jump = [&](double dX) { return std::exp(-delta * (X_ + dX)) - base; };
    double total = 0.0;
    std::vector<std::pair<double, double>> herd_f_edges;  // (f, edge count)
    for (auto& [id, herd] : herds_) {
        const int t = T.find(herd.code);
        const double fi = f[static_cast<std::size_t>(t)];
        const auto& J = T.jumps[static_cast<std::size_t>(t)];
        for (int to : J.deaths) total += jump((to >= 0 ? f[static_cast<std::size_t>(to)] : 0.0) - fi);
        for (auto [to, k] : J.births) total += lam * k * jump(f[static_cast<std::size_t>(to)] - fi);
        for (auto [p, q] : J.splits)
            total += ups * 2.0 * L * jump(f[static_cast<std::size_t>(p)] + f[static_cast<std::size_t>(q)] - fi);
        const double bi = static_cast<double>(herd.edges.size());
        total += ups * 2.0 * (bi * (bi - 1.0) / 2.0 + bi * (E - b - L)) * jump(-fi);
        herd_f_edges.emplace_back(fi, bi);
    }
    for (std::size_t i = 0; i < herd_f_edges.size(); ++i)
        for (std::size_t j = i + 1; j < herd_f_edges.size(); ++j)
            total += ups * 2.0 * herd_f_edges[i].second * herd_f_edges[j].second *
                     jump(-herd_f_edges[i].first - herd_f_edges[j].first);
    return total;
}

HerdDriftCheck EmbeddedProcess::check_herd(std::uint64_t id, const MonitorConstants& c, std::size_t max_enumerated,
                                           Rng& rng) const {
    const auto& T = model_->types;
    const auto& f = model_->pf.f;
    const double lam = model_->lambda, v = model_->v;
    const EmbeddedHerd& herd = herds_.at(id);
    const int t = T.find(herd.code);
    const auto& J = T.jumps[static_cast<std::size_t>(t)];
    HerdDriftCheck r;
    r.f = f[static_cast<std::size_t>(t)];
    for (int to : J.deaths) r.s_death += (to >= 0 ? f[static_cast<std::size_t>(to)] : 0.0) - r.f;
    for (auto [to, k] : J.births) r.s_birth += lam * k * (f[static_cast<std::size_t>(to)] - r.f);
    double unit = 0.0;  // sum over active edges of f(side 1) + f(side 2) - f
    std::vector<std::pair<int, int>> abstract;
    for (auto [p, q] : J.splits) {
        unit += f[static_cast<std::size_t>(p)] + f[static_cast<std::size_t>(q)] - r.f;
        for (int s = 0; s < 2; ++s) abstract.emplace_back(std::min(p, q), std::max(p, q));
    }
    std::sort(abstract.begin(), abstract.end());
    r.s_split_tree = v * unit;

    const double E = static_cast<double>(g_.edge_count());
    const double ups = v / (2.0 * E);
    std::vector<char> ok(g_.n());
    for (std::uint32_t z = 0; z < g_.n(); ++z) ok[z] = ball_clear(z, static_cast<std::int64_t>(id));
    std::vector<HalfEdgeId> admissible;
    for (std::size_t i = 0; i < g_.edge_count(); ++i) {
        const HalfEdgeId e = g_.edge_at(i);
        if (ok[g_.vertex_of(e)] && ok[g_.vertex_of(g_.partner(e))]) admissible.push_back(e);
    }
    std::sort(admissible.begin(), admissible.end());
    r.admissible = admissible.size();
    r.threshold = (1.0 - c.eps0) * E;

    std::vector<HalfEdgeId> pick = admissible;
    if (max_enumerated > 0 && pick.size() > max_enumerated) {
        std::shuffle(pick.begin(), pick.end(), rng);
        pick.resize(max_enumerated);
    }
    std::vector<HalfEdgePair> active;
    for (auto pr : herd.edges)
        if (edge_active(herd, pr)) active.push_back(pr);
    double enumerated_sum = 0.0;
    for (HalfEdgeId ep : pick) {
        std::vector<std::pair<int, int>> classes;
        double sum = 0.0;
        for (auto e : active)
            for (bool plus : {true, false}) {
                const SwitchMark m{e.first, ep, plus};
                const EmbeddedHerd s1 = active_side(herd, e, e.first, new_partner(m, e.first));
                const EmbeddedHerd s2 = active_side(herd, e, e.second, new_partner(m, e.second));
                const int t1 = T.find(s1.code), t2 = T.find(s2.code);
                if (t1 < 0 || t2 < 0) {
                    ++r.class_mismatches;
                    continue;
                }
                classes.emplace_back(std::min(t1, t2), std::max(t1, t2));
                sum += f[static_cast<std::size_t>(t1)] + f[static_cast<std::size_t>(t2)] - r.f;
            }
        std::sort(classes.begin(), classes.end());
        if (classes != abstract) ++r.class_mismatches;
        enumerated_sum += ups * sum;
    }
    r.enumerated = pick.size();
    r.s_split_embedded = enumerated_sum + static_cast<double>(admissible.size() - pick.size()) * ups * 2.0 * unit;
    r.lhs = r.s_death + r.s_birth + r.s_split_embedded;
    return r;
}

std::vector<std::string> EmbeddedProcess::integrity_violations() const {
    std::vector<std::string> out;
    const std::uint32_t d = g_.d();
    std::vector<std::int64_t> owner(g_.n(), kFree);
    std::vector<std::int64_t> he(g_.half_edges(), kFree);
    std::vector<char> occupied(g_.n(), 0);
    for (auto& [id, herd] : herds_) {
        const std::string tag = "herd " + std::to_string(id) + ": ";
        for (auto x : herd.vertices) {
            if (owner[x] != kFree) out.push_back(tag + "disjointness: vertex " + std::to_string(x) + " shared");
            owner[x] = static_cast<std::int64_t>(id);
        }
        bool tree = herd.edges.size() + 1 == herd.vertices.size();
        for (auto [lo, hi] : herd.edges) {
            tree &= g_.partner(lo) == hi;
            he[lo] = he[hi] = static_cast<std::int64_t>(id);
        }
        if (tree) {
            const auto dist = tree_distances(plain_adjacency(local_tree(herd, d)), 0);
            tree = std::find(dist.begin(), dist.end(), -1) == dist.end();
        }
        if (!tree) out.push_back(tag + "not a tree of G");
        EmbeddedHerd again = herd;
        again.recode(d);
        if (again.shape != herd.shape || again.code != herd.code) out.push_back(tag + "stale class code");
        if (!model_->known_shape(again.shape)) out.push_back(tag + "shape code outside the shape table");
        if (model_->type_of(again.code) < 0) out.push_back(tag + "class outside the type table");
        if (herd.occupied.empty()) out.push_back(tag + "empty herd kept");
        for (auto x : herd.occupied) {
            if (!std::binary_search(herd.vertices.begin(), herd.vertices.end(), x)) out.push_back(tag + "particle outside B");
            occupied[x] = 1;
        }
    }
    if (owner != vowner_) out.push_back("vertex owner map out of date");
    if (he != heowner_) out.push_back("half-edge owner map out of date");
    for (std::uint32_t x = 0; x < g_.n(); ++x)
        if (occupied[x] != (ppos_[x] >= 0)) {
            out.push_back("particle list out of date at vertex " + std::to_string(x));
            break;
        }
    std::size_t b = 0;
    for (auto& [id, herd] : herds_) b += herd.edges.size();
    if (b != herd_edges_) out.push_back("herd edge count out of date");
    const double X = X_recomputed();
    if (std::abs(X - X_) > 1e-9 * std::max(1.0, std::abs(X))) out.push_back("X bookkeeping: incremental " + std::to_string(X_) + " vs " + std::to_string(X));
    const auto lam = lambda_set();
    if (lam.size() != lambda_count_) out.push_back("Lambda bookkeeping: incremental " + std::to_string(lambda_count_) + " vs " + std::to_string(lam.size()));
    for (auto e : lam)
        if (!lam_[e]) {
            out.push_back("Lambda flag missing");
            break;
        }
    if (loops_up_to(g_, model_->h) != loops_) out.push_back("loop bookkeeping out of date");
    return out;
}

std::vector<EmbeddedHerd> build_initial(const Matching& g, int h, std::size_t target_count) {
    std::vector<EmbeddedHerd> out;
    std::vector<char> taken(g.n(), 0);
    for (std::uint32_t x = 0; x < g.n() && out.size() < target_count; ++x) {
        if (taken[x]) continue;
        const LocalBall b = local_ball(g, x, h);
        if (!b.is_tree) continue;
        bool free = true;
        for (auto y : b.vertices) free &= !taken[y];
        if (!free) continue;
        std::vector<HalfEdgePair> edges;
        for (auto e : b.edges) edges.push_back(ordered(e, g.partner(e)));
        out.push_back(make_herd(b.vertices, std::move(edges), {x}, g.d()));
        for (auto y : b.vertices) taken[y] = 1;
    }
    return out;
}

nlohmann::json MonitorReport::to_json() const {
    auto t = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    return {{"X0", X0},         {"mu", mu},         {"delta", delta},       {"t_low", t(t_low)},
            {"t_high", t(t_high)}, {"t_lambda", t(t_lambda)}, {"t_loop", t(t_loop)}, {"bad_switch_count", bad_switch_count},
            {"horizon", horizon}};
}

EmbeddedRun run_embedded(const EmbeddedModel& model, const MonitorConstants& c, Matching g0, std::vector<EmbeddedHerd> psi0,
                         Rng& rng, const EmbeddedOptions& options) {
    EmbeddedProcess P(model, std::move(g0));
    for (auto& herd : psi0) P.add_herd(std::move(herd));
    EmbeddedRun run;
    MonitorReport& rep = run.monitors;
    rep.X0 = P.X();
    rep.mu = c.mu;
    rep.delta = c.delta;
    rep.horizon = options.horizon;

    const std::uint32_t n = P.graph().n(), d = P.graph().d();
    const double S = switch_rate(n, d, model.v);
    const double ups = model.v / (double(n) * d);
    const double per_particle = 1.0 + model.lambda * d;
    const double lambda_floor = (1.0 - c.eps1) * double(n) * d / 2.0;
    const double loop_ceiling = c.eps2 * double(n);
    auto low = [&](double t) { return rep.X0 / 2.0 * std::exp(c.mu * t / 4.0); };
    auto high = [&](double t) { return 2.0 * rep.X0 * std::exp(c.mu_bar * t); };

    auto check = [&] {
        ++run.integrity_checks;
        for (auto& msg : P.integrity_violations()) {
            ++run.violations;
            if (run.violation_messages.size() < 10) run.violation_messages.push_back(msg);
        }
    };
    auto watch = [&](double t) {
        if (rep.t_low == kInfinity && P.X() <= low(t)) rep.t_low = t;
        if (rep.t_high == kInfinity && P.X() >= high(t)) rep.t_high = t;
        if (rep.t_lambda == kInfinity && double(P.lambda_size()) < lambda_floor) rep.t_lambda = t;
        if (rep.t_loop == kInfinity && double(P.loops()) >= loop_ceiling) rep.t_loop = t;
    };

    check();
    double t = 0.0;
    // t_low cannot fire at time 0 unless X0 = 0.
    if (rep.X0 <= 0) rep.t_low = 0.0;
    if (double(P.lambda_size()) < lambda_floor) rep.t_lambda = 0.0;
    if (double(P.loops()) >= loop_ceiling) rep.t_loop = 0.0;
    double next_obs = options.observe_every > 0 ? 0.0 : kInfinity;
    while (true) {
        if (P.herds().empty()) {
            run.outcome = Outcome::Died;
            break;
        }
        const double R = S + per_particle * double(P.particle_count());
        const double next = t + rng.exponential(R);
        const double stop = std::min(next, options.horizon);
        // Between jumps X is constant while the lower curve rises.
        if (rep.t_low == kInfinity && c.mu > 0) {
            const double cross = 4.0 / c.mu * std::log(2.0 * P.X() / rep.X0);
            if (cross >= t && cross < stop) rep.t_low = cross;
        }
        run.bad_compensator += ups * P.bad_marks() * (stop - t);
        while (next_obs <= stop) {
            if (options.on_sample) options.on_sample(next_obs, P);
            next_obs += options.observe_every;
        }
        if (next > options.horizon) {
            t = options.horizon;
            run.outcome = Outcome::Alive;
            break;
        }
        if (run.events >= options.event_cap) {
            run.outcome = Outcome::Censored;
            break;
        }
        t = next;
        ++run.events;
        const double u = rng.uniform() * R;
        if (u < S) {
            const SwitchClass cls = P.apply(draw_switch_mark(P.graph(), rng));
            ++run.switches[static_cast<std::size_t>(cls)];
            if (cls == SwitchClass::Bad) ++rep.bad_switch_count;
        } else {
            const std::uint32_t x = P.particle(rng.below(P.particle_count()));
            if (u - S < double(P.particle_count()))
                P.death(x);
            else
                P.birth(P.graph().id(x, static_cast<std::uint32_t>(rng.below(d))));
        }
        watch(t);
        if (options.check_every > 0 && run.events % options.check_every == 0) check();
    }
    check();
    run.end_time = t;
    run.final_X = P.X();
    run.final_herds = P.herds().size();
    return run;
}

}  // namespace herdsim
