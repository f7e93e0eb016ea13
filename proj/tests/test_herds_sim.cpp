#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "herdsim/herds_sim.hpp"
#include "herdsim/parallel.hpp"
#include "herdsim/site_pool.hpp"

using namespace herdsim;

namespace {

TreeAddress addr(const char* s) { return TreeAddress::parse(s); }

// Exact Gillespie over the explicit jump list.
MarkedHerdsState simulate_reference(MarkedHerdsState s, const SimParams& p, bool freezing, Rng& rng) {
    double t = 0;
    while (true) {
        auto jumps = enabled_jumps(s, p);
        double total = 0;
        for (auto& j : jumps) total += j.rate;
        if (!(total > 0)) return s;
        t += rng.exponential(total);
        if (t > p.horizon) return s;
        double u = rng.uniform() * total;
        std::size_t k = 0;
        while (k + 1 < jumps.size() && u >= jumps[k].rate) u -= jumps[k++].rate;
        s = apply_jump(s, jumps[k], freezing);
    }
}

// Random state reached from one marked particle by a random number of jumps.
MarkedHerdsState random_reachable(Rng& rng, const SimParams& p, int max_steps) {
    auto s = MarkedHerdsState::initial();
    const int steps = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_steps)));
    for (int i = 0; i < steps; ++i) {
        auto jumps = enabled_jumps(s, p);
        // Skip deaths half the time so states grow.
        std::vector<MarkedJump> pool;
        for (auto& j : jumps)
            if (j.kind != MarkedJump::Kind::Death || rng.bernoulli(0.3)) pool.push_back(j);
        if (pool.empty()) break;
        auto next = apply_jump(s, pool[rng.below(pool.size())], true);
        if (next.herds.empty() || next.marked_union().empty()) break;
        s = std::move(next);
    }
    return s;
}

bool star_oracle(const std::set<TreeAddress>& T, const TreeAddress& u, const TreeAddress& v) {
    if (!T.count(u) || !adjacent(u, v)) return false;
    for (auto& w : T) {
        if (w == u || w == v) continue;
        if (tree_distance(w, v) != tree_distance(w, u) + 1) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("TreeHerd keeps the Steiner tree, inner edges and sides exact") {
    Rng rng(2, "treeherd", 0);
    for (int trial = 0; trial < 300; ++trial) {
        const int d = 3 + static_cast<int>(rng.below(2));
        SitePool pool(d);
        TreeHerd herd;
        std::set<TreeAddress> ref;
        std::vector<Site> cand;
        const auto b3 = ball(d, 3), b2 = ball(d, 2);
        for (auto& a : b3.vertices()) cand.push_back(pool.intern(a.child(0).child(0)));
        for (auto& a : b2.vertices()) cand.push_back(pool.intern(a));
        for (int step = 0; step < 40; ++step) {
            Site s = cand[rng.below(cand.size())];
            if (herd.contains(s)) {
                herd.remove(pool, s);
                ref.erase(pool.address(s));
            } else {
                herd.add(pool, s);
                ref.insert(pool.address(s));
            }
            REQUIRE(herd.size() == ref.size());
            std::vector<TreeAddress> occ(ref.begin(), ref.end());
            auto edges = active_edges(d, occ);
            std::set<TreeAddress> lowers;
            for (auto& e : edges) lowers.insert(e.lower);
            std::set<TreeAddress> got;
            for (Site x : herd.active().items()) got.insert(pool.address(x));
            REQUIRE(got == lowers);
            std::size_t inner = 0;
            for (auto& a : ref)
                for (auto& b : ref) inner += (a < b && adjacent(a, b)) ? 1 : 0;
            REQUIRE(herd.inner_edges() == inner);
            if (!herd.active().empty()) {
                Site x = herd.active()[rng.below(herd.active().size())];
                auto below = herd.collect_below(pool, x);
                std::size_t expect = 0;
                for (auto& a : ref) expect += in_subtree(a, pool.address(x)) ? 1 : 0;
                CHECK(below.size() == expect);
                for (Site b : below) CHECK(in_subtree(pool.address(b), pool.address(x)));
            }
        }
    }
}

TEST_CASE("site pool addresses round trip") {
    SitePool pool(4);
    const auto b = ball(4, 3);
    for (auto& a : b.vertices()) {
        Site s = pool.intern(a);
        CHECK(pool.address(s) == a);
        CHECK(pool.depth(s) == static_cast<int>(a.depth()));
        for (int k = 0; k < 4; ++k) CHECK(pool.address(pool.neighbor(s, k)) == tree_neighbors(a, 4)[static_cast<std::size_t>(k)]);
    }
    CHECK(pool.lca(pool.intern(addr("0.1.2")), pool.intern(addr("0.1.0.0"))) == pool.intern(addr("0.1")));
}

TEST_CASE("adjacent pair: total state-changing rate") {
    for (int d : {3, 4, 5}) {
        SitePool pool(d);
        TreeHerd h;
        h.add(pool, pool.intern(addr("o")));
        h.add(pool, pool.intern(addr("1")));
        const double lambda = 0.7, v = 1.3;
        const double rate = 2 + lambda * static_cast<double>(h.boundary_pairs(d)) + v * static_cast<double>(h.active().size());
        CHECK(rate == doctest::Approx(2 + 2 * (d - 1) * lambda + v));
    }
}

TEST_CASE("zero birth rate: extinction time is Exp(1)") {
    SimParams p;
    p.lambda = 0.0;
    p.v = 2.0;
    p.horizon = 1e9;
    const std::size_t reps = 10000;
    std::vector<double> times(reps);
    parallel_for(reps, [&](std::size_t i) {
        Rng rng(p.seed, "exp1", i);
        auto r = run_herds(p, HerdsState::initial(), rng);
        REQUIRE(r.outcome == Outcome::Died);
        times[i] = r.end_time;
    });
    double m = 0, sq = 0;
    for (double x : times) {
        m += x;
        sq += x * x;
    }
    m /= reps;
    const double se = std::sqrt((sq / reps - m * m) / reps);
    CHECK(std::abs(m - 1.0) < 3 * se);
}

TEST_CASE("no splits: herds survival matches the tree contact process") {
    SimParams p;
    p.lambda = 0.6;
    p.v = 0.0;
    p.horizon = 4.0;
    p.population_cap = 400;
    const std::size_t reps = 6000;
    std::vector<int> a(reps), b(reps);
    parallel_for(reps, [&](std::size_t i) {
        Rng r1(7, "herds_v0", i), r2(7, "cp_v0", i);
        a[i] = run_herds(p, HerdsState::initial(), r1).outcome != Outcome::Died;
        b[i] = run_tree_contact(p, {TreeAddress{}}, r2).outcome != Outcome::Died;
    });
    auto pa = Proportion::of(static_cast<std::uint64_t>(std::count(a.begin(), a.end(), 1)), reps);
    auto pb = Proportion::of(static_cast<std::uint64_t>(std::count(b.begin(), b.end(), 1)), reps);
    CHECK(std::abs(pa.p - pb.p) < 3 * std::hypot(pa.se, pb.se));
}

TEST_CASE("estimate_survival examples") {
    SimParams p;
    p.lambda = 0.2;
    p.v = 1.0;
    p.seed = 3;
    auto sub = estimate_survival(p, 200.0, 10000);
    CHECK(sub.survival.p == 0.0);
    CHECK(sub.censored == 0);

    p.lambda = 2.0;
    p.population_cap = 2000;
    auto super = estimate_survival(p, 50.0, 400);
    CHECK(super.survival.p > 0.5);
    CHECK(super.exploded + super.alive + super.died == 400);

    p.lambda = 0.0;
    auto one = estimate_survival(p, 100.0, 1);
    CHECK(one.survival.p == 0.0);
    CHECK(one.survival.se == 0.0);
}

TEST_CASE("event cap yields a censored run") {
    SimParams p;
    p.lambda = 2.0;
    p.horizon = 100;
    p.event_cap = 50;
    Rng rng(1, "cap", 0);
    HerdsState init;
    init.herds[0] = {addr("o"), addr("0"), addr("1"), addr("2")};
    auto r = run_herds(p, init, rng);
    CHECK(r.outcome == Outcome::Censored);
    CHECK(r.events == 50);
}

TEST_CASE("genealogy and event log") {
    SimParams p;
    p.lambda = 1.2;
    p.v = 1.0;
    p.horizon = 3.0;
    p.population_cap = 200;
    Rng rng(4, "genealogy", 0);
    std::ostringstream log;
    HerdsOptions o;
    o.record_genealogy = true;
    o.event_log = &log;
    std::vector<HerdsState> snaps;
    o.observe_every = 0.5;
    o.on_snapshot = [&](double, const HerdsState& s) { snaps.push_back(s); };
    auto r = run_herds(p, HerdsState::initial(), rng, o);
    std::set<std::uint64_t> ids{0};
    for (auto& g : r.genealogy) {
        CHECK(ids.count(g.parent) == 1);
        CHECK(ids.insert(g.child_upper).second);
        CHECK(ids.insert(g.child_lower).second);
    }
    std::istringstream in(log.str());
    std::string line;
    std::uint64_t lines = 0, splits = 0;
    while (std::getline(in, line)) {
        ++lines;
        splits += line.find(",split,") != std::string::npos;
    }
    CHECK(lines == r.events);
    CHECK(splits == r.genealogy.size());
    for (auto& s : snaps) {
        s.validate(3);
        for (auto& [id, h] : s.herds) CHECK(ids.count(id) == 1);
    }
}

TEST_CASE("median herd count grows along surviving supercritical runs") {
    SimParams p;
    p.lambda = 1.5;
    p.v = 1.0;
    p.horizon = 4.0;
    const std::size_t reps = 300;
    std::vector<std::vector<HerdsSample>> samples(reps);
    std::vector<Outcome> outcome(reps);
    parallel_for(reps, [&](std::size_t i) {
        Rng rng(5, "median", i);
        HerdsOptions o;
        o.observe_every = 0.5;
        o.on_sample = [&](const HerdsSample& s) { samples[i].push_back(s); };
        outcome[i] = run_herds(p, HerdsState::initial(), rng, o).outcome;
    });
    std::vector<double> medians;
    for (std::size_t g = 0; g < 9; ++g) {
        std::vector<std::size_t> col;
        for (std::size_t i = 0; i < reps; ++i)
            if (outcome[i] == Outcome::Alive) col.push_back(samples[i][g].herds);
        REQUIRE(!col.empty());
        std::nth_element(col.begin(), col.begin() + static_cast<long>(col.size() / 2), col.end());
        medians.push_back(static_cast<double>(col[col.size() / 2]));
    }
    for (std::size_t g = 1; g < medians.size(); ++g) CHECK(medians[g] >= medians[g - 1]);
}

TEST_CASE("marked birth table") {
    // Herd 1 holds u (marked) and w (normal); herd 2 holds a marked particle at x.
    const auto u = addr("o"), v = addr("0"), w = addr("1"), x = addr("2");
    MarkedHerdsState s;
    s.herds[1] = MarkedHerd{{u, w}, {u}};
    s.herds[2] = MarkedHerd{{x}, {x}};
    s.exclusion = {{u, 1}, {x, 2}};
    s.next_id = 3;
    s.validate(3, true);
    auto birth = [&](const MarkedHerdsState& st, std::uint64_t herd, TreeAddress from, TreeAddress to) {
        return apply_jump(st, MarkedJump{MarkedJump::Kind::Birth, herd, from, to, 1.0}, true);
    };
    // marked u onto x, marked in herd 2 and absent from herd 1: enters herd 1 unmarked
    auto a = birth(s, 1, u, x);
    CHECK(a.herds[1].particles.count(x) == 1);
    CHECK(a.herds[1].marked.count(x) == 0);
    CHECK(a.exclusion.at(x) == 2);
    // ... and when x is already in herd 1, nothing changes
    auto a2 = birth(a, 1, u, x);
    CHECK(a2.herds == a.herds);
    // marked u onto w, unmarked in its own herd: becomes marked
    auto b = birth(s, 1, u, w);
    CHECK(b.herds[1].marked.count(w) == 1);
    CHECK(b.exclusion.at(w) == 1);
    // normal w onto u (marked in the same herd): no effect
    auto c = birth(s, 1, w, u);
    CHECK(c.herds == s.herds);
    // marked u onto a free site: marked offspring; normal w onto a free site: normal offspring
    auto e = birth(s, 1, u, v);
    CHECK(e.herds[1].marked.count(v) == 1);
    auto f = birth(s, 1, w, w.child(0));
    CHECK(f.herds[1].particles.count(w.child(0)) == 1);
    CHECK(f.herds[1].marked.count(w.child(0)) == 0);
    // normal w onto a normal particle in the same herd: no effect
    MarkedHerdsState g = s;
    g.herds[1].particles.insert(w.child(1));
    CHECK(birth(g, 1, w, w.child(1)).herds == g.herds);
    for (auto* st : {&a, &a2, &b, &c, &e, &f}) st->validate(3, true);
    // the marked particle dies and the herd keeps a normal particle: frozen
    auto h = apply_jump(s, MarkedJump{MarkedJump::Kind::Death, 1, u, u, 1.0}, true);
    CHECK(h.frozen.count(1) == 1);
    for (auto& j : enabled_jumps(h, SimParams{})) CHECK(j.herd == 2);
}

TEST_CASE("reference dynamics keep the invariants") {
    Rng rng(6, "invariants", 0);
    for (int trial = 0; trial < 300; ++trial) {
        SimParams p;
        p.lambda = 0.2 + 2 * rng.uniform();
        p.v = 0.1 + 3 * rng.uniform();
        auto s = MarkedHerdsState::initial();
        for (int step = 0; step < 40 && !s.herds.empty(); ++step) {
            auto jumps = enabled_jumps(s, p);
            if (jumps.empty()) break;
            auto before = s;
            s = apply_jump(s, jumps[rng.below(jumps.size())], true);
            s.validate(3, true);
            for (auto id : before.frozen) CHECK(s.herds.at(id).particles == before.herds.at(id).particles);
        }
    }
}

TEST_CASE("marked engine agrees with the reference dynamics") {
    MarkedHerdsState s;
    s.herds[0] = MarkedHerd{{addr("o"), addr("0"), addr("0.1"), addr("2")}, {addr("o"), addr("0.1")}};
    s.herds[1] = MarkedHerd{{addr("1"), addr("1.0")}, {addr("1")}};
    s.exclusion = {{addr("o"), 0}, {addr("0.1"), 0}, {addr("1"), 1}};
    s.next_id = 2;
    for (bool freezing : {true, false}) {
        SimParams p;
        p.lambda = 0.8;
        p.v = 1.5;
        p.horizon = 1.0;
        const std::size_t reps = 6000;
        std::vector<std::array<double, 3>> fast(reps), ref(reps);
        parallel_for(reps, [&](std::size_t i) {
            Rng r1(8, "engine", i), r2(8, "reference", i);
            auto run = run_marked(p, s, freezing, r1);
            fast[i] = {double(run.final_particles), double(run.final_marked), double(run.final_herds)};
            auto st = simulate_reference(s, p, freezing, r2);
            ref[i] = {double(st.drop_marks().particles()), double(st.marked_union().size()), double(st.herds.size())};
        });
        for (std::size_t k = 0; k < 3; ++k) {
            double m1 = 0, m2 = 0, q1 = 0, q2 = 0;
            for (std::size_t i = 0; i < reps; ++i) {
                m1 += fast[i][k];
                q1 += fast[i][k] * fast[i][k];
                m2 += ref[i][k];
                q2 += ref[i][k] * ref[i][k];
            }
            m1 /= reps;
            m2 /= reps;
            const double se = std::sqrt((q1 / reps - m1 * m1 + q2 / reps - m2 * m2) / reps);
            CHECK(std::abs(m1 - m2) < 4 * se);
        }
    }
}

TEST_CASE("marked engine simple cases") {
    SimParams p;
    p.lambda = 0.0;
    p.v = 1.0;
    p.horizon = 1e9;
    for (std::uint64_t i = 0; i < 100; ++i) {
        Rng rng(1, "lonely", i);
        auto r = run_marked(p, MarkedHerdsState::initial(), true, rng);
        CHECK(r.outcome == Outcome::Died);
        CHECK(r.frozen == 0);
    }
    MarkedHerdsState bad;
    bad.herds[0] = MarkedHerd{{addr("o")}, {addr("o")}};
    bad.herds[1] = MarkedHerd{{addr("o")}, {addr("o")}};
    bad.exclusion = {{addr("o"), 0}};
    bad.next_id = 2;
    Rng rng(1, "bad", 0);
    CHECK_THROWS_AS(run_marked(p, bad, true, rng), std::invalid_argument);
}

TEST_CASE("marked union is a contact process and unmarked dynamics are the herds process") {
    SimParams p;
    p.lambda = 0.45;
    p.v = 1.0;
    p.horizon = 3.0;
    const std::size_t reps = 6000;
    std::vector<int> marked_dead(reps), cp_dead(reps), eta_dead(reps), herds_dead(reps);
    parallel_for(reps, [&](std::size_t i) {
        Rng r1(9, "marked", i), r2(9, "cp", i), r3(9, "herds", i);
        auto m = run_marked(p, MarkedHerdsState::initial(), false, r1);
        marked_dead[i] = m.marked_extinction <= p.horizon;
        eta_dead[i] = m.outcome == Outcome::Died;
        cp_dead[i] = run_tree_contact(p, {TreeAddress{}}, r2).outcome == Outcome::Died;
        herds_dead[i] = run_herds(p, HerdsState::initial(), r3).outcome == Outcome::Died;
    });
    auto prop = [&](const std::vector<int>& x) {
        return Proportion::of(static_cast<std::uint64_t>(std::count(x.begin(), x.end(), 1)), reps);
    };
    auto a = prop(marked_dead), b = prop(cp_dead), c = prop(eta_dead), e = prop(herds_dead);
    CHECK(std::abs(a.p - b.p) < 3 * std::hypot(a.se, b.se));
    CHECK(std::abs(c.p - e.p) < 3 * std::hypot(c.se, e.se));
}

TEST_CASE("frozen herds never change") {
    SimParams p;
    p.lambda = 0.5;
    p.v = 2.0;
    p.horizon = 6.0;
    for (std::uint64_t r = 0; r < 40; ++r) {
        Rng rng(10, "frozen_snap", r);
        std::map<std::uint64_t, MarkedHerd> seen;
        MarkedOptions o;
        o.observe_every = 0.25;
        o.on_snapshot = [&](double, const MarkedHerdsState& s) {
            s.validate(3, true);
            for (auto id : s.frozen) {
                auto [it, fresh] = seen.emplace(id, s.herds.at(id));
                if (!fresh) {
                    CHECK(it->second.particles == s.herds.at(id).particles);
                    CHECK(it->second.marked.empty());
                }
            }
            for (auto& [id, h] : seen) CHECK(s.herds.count(id) == 1);
        };
        run_marked(p, MarkedHerdsState::initial(), true, rng, o);
    }
}

TEST_CASE("boundary pairs") {
    auto star = boundary_star({TreeAddress{}}, 3);
    CHECK(star.size() == 3);
    for (auto& [u, v] : star) CHECK(u.is_root());
    Rng rng(11, "star", 0);
    for (int trial = 0; trial < 500; ++trial) {
        const int d = 3 + static_cast<int>(rng.below(2));
        auto B = ball(d, 3).vertices();
        std::set<TreeAddress> T;
        const auto n = 1 + rng.below(8);
        while (T.size() < n) T.insert(B[rng.below(B.size())]);
        auto got = boundary_star(T, d);
        std::set<std::pair<TreeAddress, TreeAddress>> gs(got.begin(), got.end());
        std::size_t outside = 0;
        for (auto& u : T)
            for (auto& v : tree_neighbors(u, d)) CHECK(gs.count({u, v}) == static_cast<std::size_t>(star_oracle(T, u, v)));
        for (auto& [u, v] : got) outside += T.count(v) ? 0 : 1;
        CHECK(static_cast<double>(outside) >= (1.0 - 1.0 / (d - 1)) * static_cast<double>(T.size()) - 1e-12);
    }
}

TEST_CASE("functionals at simple states") {
    auto s = MarkedHerdsState::initial();
    CHECK(evaluate_functional(1, s, 3) == 1);
    for (int k = 2; k <= 5; ++k) CHECK(evaluate_functional(k, s, 3) == 0);
    CHECK_THROWS(evaluate_functional(6, s, 3));
    SimParams p;
    p.lambda = 0.0;
    p.v = 2.0;
    CHECK(generator_apply(s, p, 1) == doctest::Approx(-1.0));

    // u marked in herd 1 with an unmarked neighbour w there; v marked in herd 2.
    const auto u = addr("o"), w = addr("0"), v = addr("1");
    MarkedHerdsState t;
    t.herds[1] = MarkedHerd{{u, w}, {u}};
    t.herds[2] = MarkedHerd{{v}, {v}};
    t.exclusion = {{u, 1}, {v, 2}};
    t.next_id = 3;
    CHECK(evaluate_functional(3, t, 3) == 2);  // (u,v) and (v,u)
    CHECK(evaluate_functional(4, t, 3) == 1);  // (u,w)
    CHECK(evaluate_functional(2, t, 3) == 0);
}

TEST_CASE("exact drifts at the three-step state") {
    // Herd A = {u marked, v unmarked}, herd B = {v' marked} with u ~ v and v' ~ u on the other side.
    // Reached from one marked particle: birth, split, birth of u into the marked site of B.
    const int d = 3;
    for (double lambda : {0.3, 1.0})
        for (double v : {0.5, 2.0}) {
            SimParams p;
            p.d = d;
            p.lambda = lambda;
            p.v = v;
            auto s = MarkedHerdsState::initial();
            s = apply_jump(s, {MarkedJump::Kind::Birth, 0, addr("o"), addr("0"), lambda}, true);
            s = apply_jump(s, {MarkedJump::Kind::Split, 0, addr("o"), addr("0"), v}, true);
            const std::uint64_t A = 1;  // upper side, holds o
            s = apply_jump(s, {MarkedJump::Kind::Birth, A, addr("o"), addr("0"), lambda}, true);
            s.validate(d, true);
            CHECK(evaluate_functional(3, s, d) == 1);
            CHECK(evaluate_functional(4, s, d) == 1);
            CHECK(generator_apply(s, p, 4) == doctest::Approx(-2 - v - lambda * (d - 2)));
            CHECK(generator_apply(s, p, 5) >= v * evaluate_functional(4, s, d));
        }
}

TEST_CASE("generator inequalities for F2 and F5 on random reachable states") {
    Rng rng(12, "drift", 0);
    for (int trial = 0; trial < 200; ++trial) {
        SimParams p;
        p.lambda = 0.2 + 1.5 * rng.uniform();
        p.v = 0.2 + 2.5 * rng.uniform();
        auto s = random_reachable(rng, p, 25);
        const double f1 = evaluate_functional(1, s, 3), f2 = evaluate_functional(2, s, 3), f4 = evaluate_functional(4, s, 3);
        CHECK(generator_apply(s, p, 2) >= p.lambda * 0.5 * f1 - (2 + p.v + 2 * p.lambda) * f2 - 1e-9);
        CHECK(generator_apply(s, p, 5) >= p.v * f4 - 1e-9);
    }
}

TEST_CASE("frozen-herd statistics in degenerate cells") {
    SimParams p;
    p.horizon = 200;
    p.lambda = 0.5;
    p.v = 0.0;
    auto none = run_frozen_stats(p, 300);
    CHECK(none.completed + none.censored == 300);
    CHECK(none.mean_frozen <= 1.0);
    p.lambda = 0.0;
    p.v = 1.0;
    auto zero = run_frozen_stats(p, 300, 1.0);
    CHECK(zero.mean_frozen == 0.0);
    CHECK(zero.completed == 300);
    CHECK(zero.mean_functionals.size() == zero.grid.size());
    CHECK(zero.mean_functionals[0][0] == doctest::Approx(1.0));
}
