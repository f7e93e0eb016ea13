#include "herdsim/validation.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "herdsim/contact_dynamic.hpp"
#include "herdsim/embedded_herds.hpp"
#include "herdsim/h_herds.hpp"
#include "herdsim/herds_sim.hpp"
#include "herdsim/parallel.hpp"
#include "herdsim/switch_graph.hpp"
#include "herdsim/tree_algebra.hpp"

namespace herdsim {

Level parse_level(const std::string& text) {
    if (text == "quick") return Level::Quick;
    if (text == "full") return Level::Full;
    throw std::invalid_argument("level must be quick or full, got '" + text + "'");
}

nlohmann::json CriterionResult::to_json() const {
    return {{"id", id}, {"name", name}, {"pass", pass}, {"failures", failures}, {"detail", detail}, {"seconds", seconds}};
}

std::string criterion_name(int id) {
    static const char* names[kCriterionCount] = {"switch_chain_stationarity",
                                                 "tagged_edge_switch_rate",
                                                 "short_cycle_counts",
                                                 "tree_algebra_exactness",
                                                 "type_space_and_pf",
                                                 "critical_value_consistency",
                                                 "marked_coupling_fidelity",
                                                 "generator_inequalities",
                                                 "freezing_criterion",
                                                 "monotone_coupling",
                                                 "fast_slow_extinction_contrast",
                                                 "embedded_process_integrity"};
    if (id < 1 || id > kCriterionCount) throw std::invalid_argument("criterion id out of range: " + std::to_string(id));
    return names[id - 1];
}

std::string summary_line(const CriterionResult& r) {
    std::ostringstream out;
    out << (r.pass ? "PASS" : "FAIL") << "  criterion " << (r.id < 10 ? " " : "") << r.id << "  " << r.name;
    out.precision(3);
    out << "  (" << std::fixed << r.seconds << " s)";
    for (auto& f : r.failures) out << "\n        violated: " << f;
    return out.str();
}

Spearman spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: samples differ in length");
    const std::size_t n = x.size();
    auto ranks = [n](const std::vector<double>& v) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * double(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    Spearman s;
    s.n = n;
    const auto rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (n < 3 || sxx == 0 || syy == 0) {
        s.rho = std::nan("");
        return s;
    }
    s.rho = sxy / std::sqrt(sxx * syy);
    if (s.rho >= 1.0) {
        s.p_greater = 0.0;
        return s;
    }
    const double t = s.rho * std::sqrt(double(n - 2) / (1.0 - s.rho * s.rho));
    s.p_greater = boost::math::cdf(boost::math::complement(boost::math::students_t(double(n - 2)), t));
    return s;
}

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t scaled(std::uint64_t full, const ValidationOptions& o, std::uint64_t divisor = 10) {
    return o.level == Level::Full ? full : std::max<std::uint64_t>(1, full / divisor);
}

// Records a named check; a failed check adds "name: observed" to the failure list.
struct Checks {
    CriterionResult& r;
    void operator()(bool ok, const std::string& name, const std::string& observed) {
        if (!ok) r.failures.push_back(name + ": " + observed);
    }
};

std::string fmt(double x) {
    std::ostringstream o;
    o.precision(6);
    o << x;
    return o.str();
}

double within(double a, double b, double se) { return std::abs(a - b) / se; }

std::vector<Matching> all_matchings(std::uint32_t n, std::uint32_t d) {
    std::vector<Matching> out;
    std::vector<HalfEdgeId> p(std::size_t(n) * d, kNoHalfEdge);
    std::function<void()> rec = [&] {
        auto it = std::find(p.begin(), p.end(), kNoHalfEdge);
        if (it == p.end()) {
            out.emplace_back(n, d, p);
            return;
        }
        const auto a = static_cast<HalfEdgeId>(it - p.begin());
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

const TypeTable& types_h2() {
    static const TypeTable t = enumerate_types(3, 2);
    return t;
}

// lambda_bar(v = 1, h = 2) at tolerance 1e-3, computed once per process.
const LambdaBarResult& critical_h2() {
    static const LambdaBarResult r = lambda_bar(1.0, types_h2(), 1e-3);
    return r;
}

// ---------------------------------------------------------------------------------------------

void switch_chain_stationarity(CriterionResult& r, const ValidationOptions& o, Checks& check) {
    const auto all = all_matchings(2, 3);
    std::map<std::vector<HalfEdgeId>, std::size_t> index;
    for (std::size_t i = 0; i < all.size(); ++i) index[all[i].pairing()] = i;
    Rng rng(o.seed, "acc1-stationarity", 0);
    Matching g = sample_matching(2, 3, rng);
    const std::uint64_t samples = scaled(100000, o);
    // Samples are spaced by 10 time units (about 10 switches) to keep them nearly independent.
    const double spacing = 10.0;
    std::vector<double> counts(all.size(), 0.0);
    std::uint64_t switches = 0;
    for (std::uint64_t s = 0; s < samples; ++s) {
        double t = 0;
        while (true) {
            auto ev = draw_switch_event(g, 1.0, rng);
            t += ev.dt;
            if (t > spacing) break;
            apply_switch(g, ev.mark);
            ++switches;
        }
        counts[index.at(g.pairing())] += 1;
    }
    const double expect = double(samples) / double(all.size());
    double chi2 = 0;
    for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
    const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(double(all.size() - 1)), chi2));
    r.detail = {{"matchings", all.size()}, {"samples", samples}, {"switches", switches}, {"chi2", chi2}, {"p", p}};
    check(all.size() == 15, "fifteen_matchings", std::to_string(all.size()));
    check(p > 0.01, "chi2_uniform_p_above_0.01", "p = " + fmt(p));
}

void tagged_edge_switch_rate(CriterionResult& r, const ValidationOptions& o, Checks& check) {
    const double v = 1.0;
    r.detail["cells"] = nlohmann::json::array();
    for (std::uint32_t n : {50u, 200u}) {
        const std::uint32_t d = 3;
        Rng rng(o.seed, "acc2-tagged", n);
        Matching g = sample_matching(n, d, rng);
        const double T = o.level == Level::Full ? 20000.0 : 2000.0;
        const HalfEdgeId tagged = 0;
        std::uint64_t involved = 0, total = 0;
        double t = 0;
        while (true) {
            auto ev = draw_switch_event(g, v, rng);
            t += ev.dt;
            if (t > T) break;
            const HalfEdgeId e = g.edge_of(tagged);
            involved += ev.mark.e1 == e || ev.mark.e2 == e;
            ++total;
            apply_switch(g, ev.mark);
        }
        const double nd = double(n) * d;
        const double tag_expect = v * (1.0 - 2.0 / nd), tag_hat = double(involved) / T;
        const double tag_se = std::sqrt(tag_expect / T);
        const double tot_expect = switch_rate(n, d, v), tot_hat = double(total) / T;
        const double tot_se = std::sqrt(tot_expect / T);
        r.detail["cells"].push_back({{"n", n},
                                     {"time", T},
                                     {"tagged_rate", tag_hat},
                                     {"tagged_expected", tag_expect},
                                     {"tagged_se", tag_se},
                                     {"total_rate", tot_hat},
                                     {"total_expected", tot_expect},
                                     {"total_se", tot_se}});
        check(within(tag_hat, tag_expect, tag_se) <= 3, "tagged_rate_within_3se_n" + std::to_string(n),
              fmt(tag_hat) + " vs " + fmt(tag_expect) + " (se " + fmt(tag_se) + ")");
        check(within(tot_hat, tot_expect, tot_se) <= 3, "total_rate_within_3se_n" + std::to_string(n),
              fmt(tot_hat) + " vs " + fmt(tot_expect) + " (se " + fmt(tot_se) + ")");
    }
}

void short_cycle_counts(CriterionResult& r, const ValidationOptions& o, Checks& check) {
    // Independent counts from the multigraph's edge multiplicities.
    auto brute = [](const Matching& g) {
        const std::uint32_t n = g.n();
        std::vector<std::vector<int>> mult(n, std::vector<int>(n, 0));
        std::size_t self = 0;
        for (std::size_t i = 0; i < g.edge_count(); ++i) {
            const auto a = g.vertex_of(g.edge_at(i)), b = g.vertex_of(g.partner(g.edge_at(i)));
            if (a == b)
                ++self;
            else {
                ++mult[a][b];
                ++mult[b][a];
            }
        }
        std::size_t tri = 0;
        for (std::uint32_t a = 0; a < n; ++a)
            for (std::uint32_t b = a + 1; b < n; ++b)
                for (std::uint32_t c = b + 1; c < n; ++c) tri += std::size_t(mult[a][b] * mult[b][c] * mult[c][a]);
        return std::pair<std::size_t, std::size_t>{self, tri};
    };
    std::size_t mismatches = 0;
    const auto all4 = all_matchings(4, 3);
    for (auto& g : all4) {
        auto [self, tri] = brute(g);
        mismatches += count_loops(g, 1) != self || count_loops(g, 3) != tri;
    }
    const std::size_t samples = 200;
    std::vector<double> loops(samples), triangles(samples);
    parallel_for(samples, [&](std::size_t i) {
        Rng rng(o.seed, "acc3-cycles", i);
        Matching g = sample_matching(1000, 3, rng);
        loops[i] = double(count_loops(g, 1));
        triangles[i] = double(count_loops(g, 3));
    });
    auto mean_se = [](const std::vector<double>& x) {
        double m = 0, m2 = 0;
        for (double v : x) {
            m += v;
            m2 += v * v;
        }
        m /= double(x.size());
        const double var = (m2 - double(x.size()) * m * m) / double(x.size() - 1);
        return std::pair<double, double>{m, std::sqrt(var / double(x.size()))};
    };
    auto [lm, lse] = mean_se(loops);
    auto [tm, tse] = mean_se(triangles);
    r.detail = {{"exhaustive_n4_matchings", all4.size()}, {"exhaustive_mismatches", mismatches},
                {"samples", samples},                   {"self_loop_mean", lm},
                {"self_loop_se", lse},                  {"triangle_mean", tm},
                {"triangle_se", tse}};
    check(mismatches == 0, "exhaustive_n4_cross_check", std::to_string(mismatches) + " mismatches");
    check(within(lm, 1.0, lse) <= 3, "self_loop_mean_within_3se_of_1", fmt(lm) + " (se " + fmt(lse) + ")");
    check(within(tm, 4.0 / 3.0, tse) <= 3, "triangle_mean_within_3se_of_4/3", fmt(tm) + " (se " + fmt(tse) + ")");
    check(r.seconds < 120, "runtime_below_2_min", fmt(r.seconds) + " s");
}

// Minimal spanning subtree by pruning, and the separating edges.
std::pair<std::size_t, std::set<TreeEdge>> steiner_by_pruning(int d, const std::vector<TreeAddress>& occ) {
    std::set<TreeAddress> verts;
    for (auto a : occ) {
        verts.insert(a);
        while (!a.is_root()) {
            a = a.parent();
            verts.insert(a);
        }
    }
    const std::set<TreeAddress> occset(occ.begin(), occ.end());
    for (bool changed = true; changed;) {
        changed = false;
        for (auto it = verts.begin(); it != verts.end();) {
            int deg = 0;
            for (auto& y : tree_neighbors(*it, d)) deg += static_cast<int>(verts.count(y));
            if (!occset.count(*it) && deg <= 1) {
                it = verts.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }
    std::set<TreeEdge> sep;
    for (auto& x : verts) {
        if (x.is_root() || !verts.count(x.parent())) continue;
        std::size_t below = 0;
        for (auto& a : occ) below += in_subtree(a, x);
        if (below > 0 && below < occset.size()) sep.insert(TreeEdge{x.parent(), x});
    }
    return {verts.size(), sep};
}

void tree_algebra_exactness(CriterionResult& r, const ValidationOptions& o, Checks& check) {
    const int d = 3;
    std::vector<ShapeTable> shapes;
    for (int h = 1; h <= 3; ++h) shapes.push_back(enumerate_shapes(d, h));

    // Split monotonicity: leaf distance of a kept vertex never drops.
    Rng rng(o.seed, "acc4-monotone", 0);
    const std::uint64_t cases = 10000;
    std::uint64_t mono_violations = 0, missing = 0;
    for (std::uint64_t c = 0; c < cases; ++c) {
        const int h = 1 + static_cast<int>(rng.below(3));
        const auto& table = shapes[static_cast<std::size_t>(h - 1)].shapes;
        const FiniteTree& A = table[rng.below(table.size())];
        const auto edges = A.edges();
        const TreeEdge& e = edges[rng.below(edges.size())];
        const bool keep_upper = rng.bernoulli(0.5);
        const TreeAddress& u = keep_upper ? e.upper : e.lower;
        const TreeAddress& other = keep_upper ? e.lower : e.upper;
        const auto side = A.side_of(A.index_of(u), A.index_of(other));
        const TreeAddress& w = A.vertex(side[rng.below(side.size())]);
        const FiniteTree split = h_split(A, e, u, h).tree;
        if (!split.contains(w)) {
            ++missing;
            continue;
        }
        mono_violations += dist_to_leaves(A, w) > dist_to_leaves(split, w);
    }

    // Regrowth around an interior vertex of any shape reachable at h = 2 is the 2-ball.
    std::uint64_t regrow_checked = 0, regrow_violations = 0;
    for (const auto& A : shapes[1].shapes)
        for (std::size_t i = 0; i < A.size(); ++i) {
            if (A.degree(static_cast<int>(i)) != d) continue;
            ++regrow_checked;
            const TreeAddress& u = A.vertex(static_cast<int>(i));
            regrow_violations += !(regrow_scheme(A, u, 2) == ball_around(u, d, 2));
        }

    // Active edges are the edges of the minimal spanning subtree.
    Rng srng(o.seed, "acc4-steiner", 0);
    std::uint64_t steiner_violations = 0;
    for (std::uint64_t c = 0; c < cases; ++c) {
        const int k = 1 + static_cast<int>(srng.below(6));
        std::vector<TreeAddress> occ;
        for (int i = 0; i < k; ++i) {
            TreeAddress a;
            const int depth = static_cast<int>(srng.below(6));
            for (int j = 0; j < depth; ++j) a.path.push_back(static_cast<std::uint8_t>(srng.below(j == 0 ? d : d - 1)));
            occ.push_back(a);
        }
        std::sort(occ.begin(), occ.end());
        occ.erase(std::unique(occ.begin(), occ.end()), occ.end());
        const auto edges = active_edges(d, occ);
        const auto [nverts, sep] = steiner_by_pruning(d, occ);
        steiner_violations += edges.size() + 1 != nverts || std::set<TreeEdge>(edges.begin(), edges.end()) != sep;
    }
    r.detail = {{"monotone_cases", cases},         {"monotone_violations", mono_violations},
                {"kept_vertex_missing", missing},  {"regrow_checked", regrow_checked},
                {"regrow_violations", regrow_violations}, {"steiner_cases", cases},
                {"steiner_violations", steiner_violations}};
    check(mono_violations == 0 && missing == 0, "split_monotonicity",
          std::to_string(mono_violations) + " violations, " + std::to_string(missing) + " kept vertices lost");
    check(regrow_checked > 0 && regrow_violations == 0, "regrow_identity", std::to_string(regrow_violations) + " violations");
    check(steiner_violations == 0, "steiner_identity", std::to_string(steiner_violations) + " violations");
}

void type_space_and_pf(CriterionResult& r, const ValidationOptions&, Checks& check) {
    const auto t1 = enumerate_types(3, 1);
    const auto& t2 = types_h2();
    const std::vector<double> lambdas{0.25, 0.5, 1.0, 2.0, 4.0}, vs{0.0, 0.5, 1.0, 2.0, 4.0};
    double worst_residual = 0;
    bool monotone = true;
    double worst_zero = 0;
    nlohmann::json grid = nlohmann::json::array();
    for (double v : vs) {
        const PFResult at_zero = pf_eigen(mean_matrix(0.0, v, t2));
        worst_zero = std::max(worst_zero, std::abs(at_zero.mu + 1.0));
        double previous = at_zero.mu;
        for (double lambda : lambdas) {
            const MeanMatrix M = mean_matrix(lambda, v, t2);
            const PFResult pf = pf_eigen(M);
            const auto Mf = M.apply(pf.f);
            double residual = 0;
            for (std::size_t i = 0; i < Mf.size(); ++i) residual = std::max(residual, std::abs(Mf[i] - pf.mu * pf.f[i]));
            worst_residual = std::max(worst_residual, residual);
            monotone &= pf.mu >= previous - 1e-10;
            previous = pf.mu;
            grid.push_back({{"lambda", lambda}, {"v", v}, {"mu", pf.mu}, {"residual", residual}});
        }
    }
    r.detail = {{"h1_classes", t1.size()}, {"h2_classes", t2.size()},      {"worst_residual", worst_residual},
                {"worst_mu0_error", worst_zero}, {"mu_nondecreasing", monotone}, {"grid", grid}};
    check(t1.size() == 9, "h1_class_count_is_9", std::to_string(t1.size()));
    check(worst_residual <= 1e-8, "pf_residual_at_most_1e-8", fmt(worst_residual));
    check(worst_zero <= 1e-8, "mu_at_lambda_0_is_-1", "error " + fmt(worst_zero));
    check(monotone, "mu_nondecreasing_in_lambda", "decrease found");
}

void critical_value_consistency(CriterionResult& r, const ValidationOptions& o, Checks& check) {
    const auto& lb = critical_h2();
    SimParams p;
    p.d = 3;
    p.lambda = lb.lambda + 0.1;
    p.v = 1.0;
    p.population_cap = 2000;
    p.seed = o.seed;
    const std::uint64_t reps = scaled(10000, o);
    const auto s = estimate_survival(p, 1e9, reps);
    r.detail = {{"lambda_hat", lb.lambda}, {"bracket", {lb.lo, lb.hi}}, {"mu_bracket", {lb.mu_lo, lb.mu_hi}},
                {"lambda_run", p.lambda}, {"reps", reps},            {"population_cap", p.population_cap},
                {"survival", s.survival.p}, {"se", s.survival.se},   {"died", s.died},
                {"reached_cap", s.exploded}, {"censored", s.censored}};
    check(lb.lambda >= 1.0 / 3.0, "lambda_hat_at_least_1/3", fmt(lb.lambda));
    check(s.survival.p - 3 * s.survival.se > 0, "herds_survival_positive", fmt(s.survival.p) + " (se " + fmt(s.survival.se) + ")");
    check(r.seconds < 1800, "runtime_below_30_min", fmt(r.seconds) + " s");
}

void marked_coupling_fidelity(CriterionResult& r, const ValidationOptions& o, Checks& check) {
    const std::uint64_t reps = scaled(10000, o);
    r.detail["cells"] = nlohmann::json::array();
    for (double lambda : {0.3, 0.6}) {
        SimParams p;
        p.d = 3;
        p.lambda = lambda;
        p.v = 1.0;
        p.horizon = 5.0;
        std::vector<char> marked(reps), tree(reps);
        parallel_for(reps, [&](std::size_t i) {
            Rng r1(o.seed, "acc7-marked", i), r2(o.seed, "acc7-tree", i);
            MarkedOptions mo;
            mo.stop_when_unmarked = true;
            marked[i] = run_marked(p, MarkedHerdsState::initial(), false, r1, mo).marked_extinction <= p.horizon;
            tree[i] = run_tree_contact(p, {TreeAddress{}}, r2).outcome == Outcome::Died;
        });
        const auto a = Proportion::of(std::uint64_t(std::count(marked.begin(), marked.end(), 1)), reps);
        const auto b = Proportion::of(std::uint64_t(std::count(tree.begin(), tree.end(), 1)), reps);
        const double se = std::hypot(a.se, b.se);
        r.detail["cells"].push_back({{"lambda", lambda}, {"v", p.v}, {"reps", reps}, {"marked_extinct", a.p},
                                     {"tree_contact_extinct", b.p}, {"se", se}});
        check(std::abs(a.p - b.p) <= 3 * se, "extinction_by_t5_agrees_lambda_" + fmt(lambda),
              fmt(a.p) + " vs " + fmt(b.p) + " (se " + fmt(se) + ")");
    }
}

// State reached from one marked particle by random enabled jumps, deaths thinned so states grow.
MarkedHerdsState random_reachable(Rng& rng, const SimParams& p, int max_steps) {
    auto s = MarkedHerdsState::initial();
    const int steps = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_steps)));
    for (int i = 0; i < steps; ++i) {
        std::vector<MarkedJump> pool;
        for (auto& j : enabled_jumps(s, p))
            if (j.kind != MarkedJump::Kind::Death || rng.bernoulli(0.3)) pool.push_back(j);
        if (pool.empty()) break;
        auto next = apply_jump(s, pool[rng.below(pool.size())], true);
        if (next.herds.empty() || next.marked_union().empty()) break;
        s = std::move(next);
    }
    return s;
}

void generator_inequalities(CriterionResult& r, const ValidationOptions& o, Checks& check) {
    const int d = 3;
    const std::uint64_t states = scaled(1000, o);
    // k = 2..5: lower bound of L F_k in terms of the functionals.
    auto bound = [d](int k, const SimParams& p, const std::array<double, 6>& F) {
        const double lam = p.lambda, v = p.v;
        switch (k) {
            case 2: return lam * (1.0 - 1.0 / (d - 1)) * F[1] - (2 + v + lam * (d - 1)) * F[2];
            case 3: return v * F[2] - (2 + lam * d) * F[3];
            case 4: return lam * F[3] - (2 + lam + v) * F[4];
            default: return v * F[4];
        }
    };
    nlohmann::json per = nlohmann::json::object();
    for (int k = 2; k <= 5; ++k) {
        std::uint64_t violations = 0;
        double worst = 0;
        nlohmann::json example;
        for (std::uint64_t i = 0; i < states; ++i) {
            Rng rng(o.seed, "acc8-generator-F" + std::to_string(k), i);
            SimParams p;
            p.d = d;
            p.lambda = 0.2 + 1.5 * rng.uniform();
            p.v = 0.2 + 2.5 * rng.uniform();
            const auto s = random_reachable(rng, p, 25);
            std::array<double, 6> F{};
            for (int j = 1; j <= 5; ++j) F[static_cast<std::size_t>(j)] = evaluate_functional(j, s, d);
            const double lhs = generator_apply(s, p, k), rhs = bound(k, p, F);
            if (lhs < rhs - 1e-9 * (1 + std::abs(rhs))) {
                ++violations;
                if (rhs - lhs > worst) {
                    worst = rhs - lhs;
                    example = {{"lambda", p.lambda}, {"v", p.v}, {"LF", lhs}, {"bound", rhs},
                               {"F", {F[1], F[2], F[3], F[4], F[5]}}, {"herds", s.herds.size()}};
                }
            }
        }
        per["F" + std::to_string(k)] = {{"states", states}, {"violations", violations}, {"worst_gap", worst}, {"worst_example", example}};
        check(violations == 0, "LF" + std::to_string(k) + "_lower_bound",
              std::to_string(violations) + " of " + std::to_string(states) + " states violate it");
    }
    // Boundary count on random finite subsets of a ball.
    std::uint64_t star_violations = 0;
    Rng srng(o.seed, "acc8-boundary", 0);
    const auto B = ball(d, 3).vertices();
    for (std::uint64_t i = 0; i < states; ++i) {
        std::set<TreeAddress> T;
        const auto size = 1 + srng.below(12);
        while (T.size() < size) T.insert(B[srng.below(B.size())]);
        std::size_t outside = 0;
        for (auto& [u, v] : boundary_star(T, d)) outside += T.count(v) ? 0 : 1;
        star_violations += double(outside) < (1.0 - 1.0 / (d - 1)) * double(T.size()) - 1e-12;
    }
    per["boundary_star"] = {{"sets", states}, {"violations", star_violations}};
    check(star_violations == 0, "boundary_star_bound", std::to_string(star_violations) + " violations");
    r.detail = per;
}

void freezing_criterion(CriterionResult& r, const ValidationOptions& o, Checks& check) {
    // Pilot over a small grid; the cell is then confirmed on fresh streams.
    const std::uint64_t pilot = scaled(1000, o), reps = scaled(10000, o);
    nlohmann::json pilot_rows = nlohmann::json::array();
    double best_lower = -kInfinity, best_lambda = 0, best_v = 0;
    for (double lambda : {0.4, 0.45, 0.5})
        for (double v : {1.0, 2.0}) {
            SimParams p;
            p.lambda = lambda;
            p.v = v;
            p.horizon = 1000;
            p.seed = o.seed ^ 0x9a1f;
            const auto st = run_frozen_stats(p, pilot);
            const double lower = st.mean_frozen - 3 * st.se;
            pilot_rows.push_back({{"lambda", lambda}, {"v", v}, {"mean_K", st.mean_frozen}, {"se", st.se}, {"censored", st.censored}});
            if (lower > best_lower) {
                best_lower = lower;
                best_lambda = lambda;
                best_v = v;
            }
        }
    SimParams p;
    p.lambda = best_lambda;
    p.v = best_v;
    p.horizon = 1000;
    p.seed = o.seed;
    const auto st = run_frozen_stats(p, reps);
    SimParams q = p;
    q.population_cap = 2000;
    const auto surv = estimate_survival(q, 1e9, reps);
    r.detail = {{"pilot", pilot_rows},
                {"cell", {{"lambda", best_lambda}, {"v", best_v}}},
                {"reps", reps},
                {"mean_K", st.mean_frozen},
                {"se_K", st.se},
                {"censored_K_runs", st.censored},
                {"survival", surv.survival.p},
                {"survival_se", surv.survival.se}};
    check(st.mean_frozen - 3 * st.se > 1, "mean_frozen_count_above_1", fmt(st.mean_frozen) + " (se " + fmt(st.se) + ")");
    check(surv.survival.p - 3 * surv.survival.se > 0, "herds_survival_positive",
          fmt(surv.survival.p) + " (se " + fmt(surv.survival.se) + ")");
}

void monotone_coupling(CriterionResult& r, const ValidationOptions& o, Checks& check) {
    DynamicParams p;
    p.n = 100;
    p.lambda = 0.3;
    p.v = 1.0;
    p.horizon = 1e6;
    const std::uint64_t reps = scaled(1000, o);
    std::vector<std::uint32_t> all(p.n);
    std::iota(all.begin(), all.end(), 0u);
    std::vector<CoupledTrace> traces(reps);
    parallel_for(reps, [&](std::size_t i) {
        Rng rng(o.seed, "acc10-coupled", i);
        traces[i] = coupled_run(p, {0}, all, rng);
    });
    std::uint64_t violations = 0, order = 0, unfinished = 0;
    for (auto& t : traces) {
        violations += t.first_violation != kInfinity;
        order += !(t.tau_small <= t.tau_large);
        unfinished += t.tau_large == kInfinity;
    }
    r.detail = {{"n", p.n}, {"lambda", p.lambda}, {"v", p.v}, {"reps", reps}, {"ordering_violations", violations},
                {"tau_order_violations", order}, {"unfinished", unfinished}};
    check(violations == 0, "ordering_preserved", std::to_string(violations) + " runs");
    check(order == 0, "tau_small_at_most_tau_large", std::to_string(order) + " runs");
}

void fast_slow_extinction_contrast(CriterionResult& r, const ValidationOptions& o, Checks& check) {
    const std::size_t reps_fast = scaled(100, o, 4), reps_slow = scaled(60, o, 4), reps_dyn = scaled(60, o, 4);

    // (a) Subcritical on static graphs: P(tau > t) <= n e^{-(1 - lambda d) t}, so the median is at
    // most (ln n + ln 2) / (1 - lambda d).
    {
        const double lambda = 0.2;
        std::vector<ScanCell> grid;
        for (std::uint32_t n : {100u, 1000u, 10000u}) grid.push_back({n, lambda, 0.0});
        ScanOptions so;
        so.reps = reps_fast;
        so.horizon = 1e6;
        so.seed = o.seed;
        const auto s = extinction_scan(grid, so);
        nlohmann::json rows = nlohmann::json::array();
        bool bounded = true;
        for (auto& c : s) {
            const double ln = std::log(double(c.cell.n));
            const double ratio = c.median / ln, cap = (1.0 + std::log(2.0) / ln) / (1.0 - lambda * 3);
            bounded &= ratio <= cap;
            rows.push_back({{"n", c.cell.n}, {"median", c.median}, {"median_over_log_n", ratio}, {"bound", cap}, {"censored", c.censored}});
        }
        r.detail["subcritical"] = rows;
        check(bounded, "subcritical_median_over_log_n_bounded", rows.dump());
    }
    // (b) Supercritical on static graphs: runs censored at a common horizon H; min(tau, H) keeps
    // the order of tau, so its rank correlation with n tests the trend.
    {
        const double H = 1e5;
        std::vector<ScanCell> grid;
        for (std::uint32_t n : {20u, 30u, 40u}) grid.push_back({n, 2.0, 0.0});
        ScanOptions so;
        so.reps = reps_slow;
        so.horizon = H;
        so.event_cap = 4'000'000'000ull;
        so.seed = o.seed;
        std::vector<ExtinctionRecord> runs;
        const auto s = extinction_scan(grid, so, &runs);
        std::vector<double> x, y;
        for (auto& rec : runs) {
            x.push_back(rec.n);
            y.push_back(rec.outcome == Outcome::Died ? rec.tau : H);
        }
        const auto sp = spearman(x, y);
        nlohmann::json rows = nlohmann::json::array();
        for (auto& c : s)
            rows.push_back({{"n", c.cell.n}, {"median", c.median}, {"log_median", std::log(c.median)}, {"censored", c.censored}, {"reps", c.reps}});
        r.detail["supercritical_static"] = {{"horizon", H}, {"cells", rows}, {"spearman_rho", sp.rho}, {"p", sp.p_greater}};
        check(sp.rho > 0 && sp.p_greater < 0.05, "static_supercritical_tau_increases_with_n",
              "rho " + fmt(sp.rho) + ", p " + fmt(sp.p_greater));
    }
    // (c) Dynamic graph just above the h-herds critical value: censor fraction against n.
    {
        const double lambda = critical_h2().lambda + 0.1, H = 1000;
        std::vector<ScanCell> grid;
        for (std::uint32_t n : {100u, 200u, 400u, 800u}) grid.push_back({n, lambda, 1.0});
        ScanOptions so;
        so.reps = reps_dyn;
        so.horizon = H;
        so.event_cap = 4'000'000'000ull;
        so.seed = o.seed;
        std::vector<ExtinctionRecord> runs;
        const auto s = extinction_scan(grid, so, &runs);
        std::vector<double> x, y;
        for (auto& rec : runs) {
            x.push_back(rec.n);
            y.push_back(rec.outcome == Outcome::Censored ? 1.0 : 0.0);
        }
        const auto sp = spearman(x, y);
        nlohmann::json rows = nlohmann::json::array();
        bool nondecreasing = true;
        for (std::size_t i = 0; i < s.size(); ++i) {
            rows.push_back({{"n", s[i].cell.n}, {"censor_fraction", s[i].censor_fraction()}, {"reps", s[i].reps}});
            if (i > 0) nondecreasing &= s[i].censor_fraction() >= s[i - 1].censor_fraction();
        }
        r.detail["dynamic"] = {{"lambda", lambda}, {"horizon", H}, {"cells", rows}, {"nondecreasing", nondecreasing},
                               {"spearman_rho", std::isnan(sp.rho) ? nlohmann::json(nullptr) : nlohmann::json(sp.rho)},
                               {"p", sp.p_greater}};
        check(sp.rho > 0 && sp.p_greater < 0.05, "dynamic_censor_fraction_increases_with_n",
              "rho " + (std::isnan(sp.rho) ? std::string("undefined (no spread)") : fmt(sp.rho)) + ", p " + fmt(sp.p_greater) +
                  ", censor fractions " + rows.dump());
    }
    check(r.seconds < 3600, "runtime_below_1_h", fmt(r.seconds) + " s");
}

void embedded_process_integrity(CriterionResult& r, const ValidationOptions& o, Checks& check) {
    const double lambda = critical_h2().lambda + 0.1;
    const EmbeddedModel model = EmbeddedModel::build(3, 2, lambda, 1.0);
    const MonitorConstants c = default_constants(model);
    const std::uint64_t runs = scaled(100, o), wanted = scaled(1000, o);
    const std::uint32_t n = 2000;

    struct PerRun {
        EmbeddedRun run;
        std::uint64_t sampled = 0, above = 0, above_fail = 0, below_hold = 0, mismatches = 0;
        double max_admissible_fraction = 0;
    };
    std::vector<PerRun> out(runs);
    parallel_for(runs, [&](std::size_t i) {
        Rng rng(o.seed, "acc12-embedded", i), pick(o.seed, "acc12-sample", i);
        Matching g = sample_matching(n, 3, rng);
        auto psi = build_initial(g, 2, 10);
        EmbeddedOptions eo;
        eo.horizon = 5.0;
        eo.check_every = 1000;
        eo.observe_every = 0.5;
        PerRun& pr = out[i];
        eo.on_sample = [&](double, const EmbeddedProcess& P) {
            if (P.herds().empty()) return;
            auto it = P.herds().begin();
            std::advance(it, static_cast<long>(pick.below(P.herds().size())));
            const auto chk = P.check_herd(it->first, c, 5, pick);
            ++pr.sampled;
            pr.mismatches += chk.class_mismatches;
            pr.max_admissible_fraction = std::max(pr.max_admissible_fraction, double(chk.admissible) / (n * 1.5));
            if (chk.above_threshold()) {
                ++pr.above;
                pr.above_fail += !chk.holds(c.mu);
            } else {
                pr.below_hold += chk.holds(c.mu);
            }
        };
        pr.run = run_embedded(model, c, g, psi, rng, eo);
    });
    std::uint64_t violations = 0, checks = 0, sampled = 0, above = 0, above_fail = 0, below_hold = 0, mismatches = 0;
    double max_fraction = 0;
    std::vector<std::string> messages;
    for (auto& pr : out) {
        violations += pr.run.violations;
        checks += pr.run.integrity_checks;
        sampled += pr.sampled;
        above += pr.above;
        above_fail += pr.above_fail;
        below_hold += pr.below_hold;
        mismatches += pr.mismatches;
        max_fraction = std::max(max_fraction, pr.max_admissible_fraction);
        for (auto& m : pr.run.violation_messages)
            if (messages.size() < 10) messages.push_back(m);
    }
    r.detail = {{"lambda", lambda},
                {"n", n},
                {"runs", runs},
                {"constants", c.to_json()},
                {"integrity_checks", checks},
                {"integrity_violations", violations},
                {"violation_messages", messages},
                {"sampled_states", sampled},
                {"threshold_edges", (1.0 - c.eps0) * n * 1.5},
                {"max_admissible_fraction", max_fraction},
                {"states_above_threshold", above},
                {"above_threshold_failures", above_fail},
                {"below_threshold_inequality_holds", below_hold},
                {"surgery_class_mismatches", mismatches}};
    check(violations == 0, "integrity", std::to_string(violations) + " violations");
    check(mismatches == 0, "surgery_classes_match_type_table", std::to_string(mismatches) + " mismatches");
    check(above >= wanted, "states_above_threshold_sampled",
          std::to_string(above) + " of " + std::to_string(wanted) + " required (largest admissible fraction " + fmt(max_fraction) +
              ", threshold fraction " + fmt(1.0 - c.eps0) + ")");
    check(above_fail == 0, "per_herd_drift_inequality", std::to_string(above_fail) + " failures above threshold");
}

}  // namespace

CriterionResult run_criterion(int id, const ValidationOptions& options) {
    CriterionResult r;
    r.id = id;
    r.name = criterion_name(id);
    Checks check{r};
    const auto start = Clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
    try {
        switch (id) {
            case 1: switch_chain_stationarity(r, options, check); break;
            case 2: tagged_edge_switch_rate(r, options, check); break;
            case 3:
                short_cycle_counts(r, options, check);
                break;
            case 4: tree_algebra_exactness(r, options, check); break;
            case 5: type_space_and_pf(r, options, check); break;
            case 6: critical_value_consistency(r, options, check); break;
            case 7: marked_coupling_fidelity(r, options, check); break;
            case 8: generator_inequalities(r, options, check); break;
            case 9: freezing_criterion(r, options, check); break;
            case 10: monotone_coupling(r, options, check); break;
            case 11: fast_slow_extinction_contrast(r, options, check); break;
            case 12: embedded_process_integrity(r, options, check); break;
        }
    } catch (const std::exception& e) {
        r.failures.push_back(std::string("exception: ") + e.what());
    }
    r.seconds = elapsed();
    r.pass = r.failures.empty();
    return r;
}

}  // namespace herdsim
