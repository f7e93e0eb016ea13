#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <functional>
#include <limits>
#include <map>
#include <set>

#include "herdsim/switch_graph.hpp"

using namespace herdsim;

namespace {

std::vector<Matching> all_matchings(std::uint32_t n, std::uint32_t d) {
    std::vector<Matching> out;
    std::vector<HalfEdgeId> p(std::size_t(n) * d, kNoHalfEdge);
    std::function<void()> rec = [&] {
        auto it = std::find(p.begin(), p.end(), kNoHalfEdge);
        if (it == p.end()) {
            out.emplace_back(n, d, p);
            return;
        }
        const HalfEdgeId a = static_cast<HalfEdgeId>(it - p.begin());
        for (HalfEdgeId b = a + 1; b < p.size(); ++b) {
            if (p[b] != kNoHalfEdge) continue;
            p[a] = b;
            p[b] = a;
            rec();
            p[a] = p[b] = kNoHalfEdge;
        }
    };
    rec();
    return out;
}

// Edge subsets of size m forming a cycle through m distinct vertices (m >= 2), optionally only
// those touching vertex `through`.
std::size_t brute_loops(const Matching& g, int m, std::uint32_t through = kNoHalfEdge) {
    std::vector<HalfEdgeId> E;
    for (std::size_t i = 0; i < g.edge_count(); ++i) E.push_back(g.edge_at(i));
    std::size_t count = 0;
    for (std::uint32_t mask = 0; mask < (1u << E.size()); ++mask) {
        if (__builtin_popcount(mask) != m) continue;
        std::map<std::uint32_t, int> deg;
        bool loop = false;
        std::vector<std::pair<std::uint32_t, std::uint32_t>> es;
        for (std::size_t i = 0; i < E.size(); ++i)
            if (mask >> i & 1u) {
                auto a = g.vertex_of(E[i]), b = g.vertex_of(g.partner(E[i]));
                loop |= a == b;
                ++deg[a];
                ++deg[b];
                es.emplace_back(a, b);
            }
        if (through != kNoHalfEdge && !deg.count(through)) continue;
        if (m == 1) {
            count += loop;
            continue;
        }
        if (loop || deg.size() != static_cast<std::size_t>(m)) continue;
        bool two = true;
        for (auto& [v, k] : deg) two &= k == 2;
        if (!two) continue;
        // connected: flood from one vertex
        std::set<std::uint32_t> seen{deg.begin()->first};
        for (bool grew = true; grew;) {
            grew = false;
            for (auto [a, b] : es)
                if (seen.count(a) != seen.count(b)) {
                    seen.insert(a);
                    seen.insert(b);
                    grew = true;
                }
        }
        count += seen.size() == deg.size();
    }
    return count;
}

}  // namespace

TEST_CASE("matching validation and text round trip") {
    CHECK_THROWS(Matching(3, 3, std::vector<HalfEdgeId>(9, 0)));
    CHECK_THROWS(Matching(1, 2, {0, 1}));
    Rng rng(1, "sg", 0);
    CHECK_THROWS(sample_matching(3, 3, rng));
    for (int i = 0; i < 20; ++i) {
        auto g = sample_matching(50, 3, rng);
        CHECK(g.valid());
        CHECK(Matching::from_text(g.to_text()) == g);
        CHECK(Matching::from_text(g.to_text()).to_text() == g.to_text());
    }
    CHECK_THROWS(Matching::from_text("2 3\n1 0 3"));
}

TEST_CASE("the 15 matchings of two cubic vertices") {
    auto all = all_matchings(2, 3);
    REQUIRE(all.size() == 15);
    std::size_t simple = 0;
    for (auto& g : all) simple += count_loops(g, 1) == 0;
    CHECK(simple == 6);
    std::map<std::vector<HalfEdgeId>, std::size_t> index;
    for (std::size_t i = 0; i < all.size(); ++i) index[all[i].pairing()] = i;

    Rng rng(2, "sample15", 0);
    std::vector<double> counts(15, 0.0);
    const int N = 100000;
    for (int i = 0; i < N; ++i) counts[index.at(sample_matching(2, 3, rng).pairing())] += 1;
    double chi2 = 0;
    for (double c : counts) chi2 += (c - N / 15.0) * (c - N / 15.0) / (N / 15.0);
    const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(14), chi2));
    CHECK(p > 0.01);
}

TEST_CASE("apply_switch by hand") {
    // Half-edge (x, i) has id 3x + i; edges {(1,1),(2,1)} and {(1,2),(2,2)} get switched.
    const std::uint32_t d = 3;
    auto id = [&](std::uint32_t x, std::uint32_t i) { return x * d + i; };
    std::vector<HalfEdgeId> p(12);
    auto pair = [&](HalfEdgeId a, HalfEdgeId b) {
        p[a] = b;
        p[b] = a;
    };
    pair(id(1, 1), id(2, 1));
    pair(id(1, 2), id(2, 2));
    pair(id(0, 0), id(0, 1));
    pair(id(0, 2), id(3, 0));
    pair(id(1, 0), id(3, 1));
    pair(id(2, 0), id(3, 2));
    Matching g(4, d, p);
    auto h = switched(g, SwitchMark{id(1, 1), id(1, 2), true});
    CHECK(h.partner(id(1, 1)) == id(1, 2));
    CHECK(h.partner(id(2, 1)) == id(2, 2));
    CHECK(count_loops(h, 1) == count_loops(g, 1) + 2);
    auto k = switched(g, SwitchMark{id(1, 1), id(1, 2), false});
    CHECK(k.partner(id(1, 1)) == id(2, 2));
    CHECK(k.partner(id(2, 1)) == id(1, 2));
    CHECK_THROWS_AS(apply_switch(h, SwitchMark{id(1, 2), id(0, 0), true}), StaleEdge);
    CHECK_THROWS_AS(apply_switch(h, SwitchMark{id(0, 0), id(2, 2), true}), StaleEdge);
    CHECK_THROWS_AS(apply_switch(h, SwitchMark{id(0, 0), id(0, 0), true}), StaleEdge);
}

TEST_CASE("switch transitions are symmetric, so the uniform law is stationary") {
    for (std::uint32_t n : {2u, 4u}) {
        auto all = all_matchings(n, 3);
        std::map<std::vector<HalfEdgeId>, std::size_t> index;
        for (std::size_t i = 0; i < all.size(); ++i) index[all[i].pairing()] = i;
        std::map<std::pair<std::size_t, std::size_t>, int> flux;
        for (std::size_t i = 0; i < all.size(); ++i) {
            const auto& g = all[i];
            for (std::size_t a = 0; a < g.edge_count(); ++a)
                for (std::size_t b = a + 1; b < g.edge_count(); ++b)
                    for (bool plus : {true, false}) {
                        auto h = switched(g, SwitchMark{g.edge_at(a), g.edge_at(b), plus});
                        REQUIRE(h.valid());
                        for (std::uint32_t x = 0; x < n; ++x) CHECK(h.vertex_of(h.id(x, 2)) == x);
                        ++flux[{i, index.at(h.pairing())}];
                    }
        }
        for (auto& [key, c] : flux) CHECK(flux[{key.second, key.first}] == c);
    }
}

TEST_CASE("switch rate and marks") {
    CHECK(switch_rate(100, 3, 1.0) == doctest::Approx(74.5));
    Rng rng(3, "marks", 0);
    auto g = sample_matching(100, 3, rng);
    CHECK(draw_switch_event(g, 0.0, rng).dt == std::numeric_limits<double>::infinity());
    for (int i = 0; i < 1000; ++i) {
        auto m = draw_switch_mark(g, rng);
        CHECK(m.e1 != m.e2);
        CHECK(g.is_edge(m.e1));
        CHECK(g.is_edge(m.e2));
        apply_switch(g, m);
    }
    CHECK(g.valid());
}

TEST_CASE("loop counts") {
    // theta graph: three parallel edges
    Matching theta(2, 3, {3, 4, 5, 0, 1, 2});
    CHECK(count_loops(theta, 1) == 0);
    CHECK(count_loops(theta, 2) == 3);
    // K4
    std::vector<HalfEdgeId> p(12);
    int slot[4] = {0, 0, 0, 0};
    for (std::uint32_t a = 0; a < 4; ++a)
        for (std::uint32_t b = a + 1; b < 4; ++b) {
            HalfEdgeId ha = a * 3 + static_cast<HalfEdgeId>(slot[a]++), hb = b * 3 + static_cast<HalfEdgeId>(slot[b]++);
            p[ha] = hb;
            p[hb] = ha;
        }
    Matching k4(4, 3, p);
    CHECK(count_loops(k4, 2) == 0);
    CHECK(count_loops(k4, 3) == 4);
    CHECK(count_loops(k4, 4) == 3);
    CHECK(loops_up_to(k4, 3) == 4);

    Rng rng(4, "loops", 0);
    for (std::uint32_t n : {4u, 6u})
        for (std::uint32_t d : {3u, 4u})
            for (int trial = 0; trial < 60; ++trial) {
                auto g = sample_matching(n, d, rng);
                for (int m = 1; m <= static_cast<int>(n); ++m) CHECK(count_loops(g, m) == brute_loops(g, m));
            }
}

TEST_CASE("loops through a vertex set") {
    Rng rng(6, "loops-through", 0);
    for (std::uint32_t n : {4u, 6u, 8u})
        for (int trial = 0; trial < 40; ++trial) {
            auto g = sample_matching(n, 3, rng);
            std::vector<std::uint32_t> all(n);
            for (std::uint32_t x = 0; x < n; ++x) all[x] = x;
            for (int m = 1; m <= 4; ++m) CHECK(loops_through(g, all, m) == loops_up_to(g, m));
            for (std::uint32_t x : {0u, n - 1}) {
                std::size_t brute = 0;
                for (int m = 1; m <= 3; ++m) brute += brute_loops(g, m, x);
                CHECK(loops_through(g, {x}, 3) == brute);
            }
        }
}

TEST_CASE("local balls") {
    Matching theta(2, 3, {3, 4, 5, 0, 1, 2});
    CHECK(!local_ball(theta, 0, 1).is_tree);
    CHECK(local_ball(theta, 0, 0).is_tree);
    Matching selfloop(2, 3, {1, 0, 3, 2, 5, 4});  // (0,2)-(1,0) plus a loop at each vertex
    CHECK(!local_ball(selfloop, 0, 0).is_tree);
    CHECK(tree_ball_size(3, 2) == 10);
    CHECK(tree_ball_size(4, 3) == 1 + 4 + 12 + 36);

    Rng rng(5, "balls", 0);
    auto g = sample_matching(10000, 3, rng);
    std::size_t trees = 0;
    for (std::uint32_t x = 0; x < 2000; ++x) {
        auto b = local_ball(g, x, 2);
        trees += b.is_tree;
        if (b.is_tree) CHECK(b.vertices.size() == tree_ball_size(3, 2));
        if (b.vertices.size() < tree_ball_size(3, 2)) CHECK(!b.is_tree);
        CHECK(b.vertices.size() <= tree_ball_size(3, 2));
    }
    CHECK(trees >= 0.99 * 2000);
}
