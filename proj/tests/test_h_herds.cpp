#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "herdsim/h_herds.hpp"
#include "herdsim/parallel.hpp"

using namespace herdsim;

namespace {

const TypeTable& table(int h) {
    static TypeTable t1 = enumerate_types(3, 1);
    static TypeTable t2 = enumerate_types(3, 2);
    return h == 1 ? t1 : t2;
}

// (Mg)(t) rebuilt from the representative with tree operations only.
double generator_oracle(const TypeTable& T, int t, double lambda, double v, const std::vector<double>& g) {
    const FiniteTree& A = T.shape_of(t);
    const auto occ = T.occupied_of(t);
    auto value = [&](const FiniteTree& shape, const std::vector<TreeAddress>& o) {
        if (o.empty()) return 0.0;
        int id = T.find(canonical_code(shape, o));
        REQUIRE(id >= 0);
        return g[static_cast<std::size_t>(id)];
    };
    const double here = value(A, occ);
    double s_death = 0.0, s_birth = 0.0, s_split = 0.0;
    for (std::size_t i = 0; i < occ.size(); ++i) {
        auto rest = occ;
        rest.erase(rest.begin() + static_cast<long>(i));
        s_death += value(A, rest) - here;
    }
    for (const auto& w : A.vertices()) {
        if (std::find(occ.begin(), occ.end(), w) != occ.end()) continue;
        int k = 0;
        for (const auto& x : occ) k += adjacent(x, w) ? 1 : 0;
        if (k == 0) continue;
        auto grown = occ;
        grown.push_back(w);
        s_birth += lambda * k * (value(A, grown) - here);
    }
    for (const auto& e : active_edges(A, occ)) {
        std::vector<TreeAddress> up, down;
        for (const auto& x : occ) (in_subtree(x, e.lower) ? down : up).push_back(x);
        auto tu = h_split(A, e, e.upper, T.h).tree;
        auto td = h_split(A, e, e.lower, T.h).tree;
        s_split += v * (value(tu, up) + value(td, down) - here);
    }
    return s_death + s_birth + s_split;
}

double dense_top_eigenvalue(const MeanMatrix& M) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<long>(M.dim), static_cast<long>(M.dim));
    for (std::size_t r = 0; r < M.dim; ++r)
        for (std::size_t k = M.row_start[r]; k < M.row_start[r + 1]; ++k) D(static_cast<long>(r), M.col[k]) = M.val[k];
    Eigen::EigenSolver<Eigen::MatrixXd> es(D, false);
    double best = -1e300;
    for (long i = 0; i < es.eigenvalues().size(); ++i) best = std::max(best, es.eigenvalues()[i].real());
    return best;
}

}  // namespace

TEST_CASE("mean matrix structure") {
    const auto& T1 = table(1);
    auto M = mean_matrix(1.0, 1.0, T1);
    CHECK(M.dim == 9);
    for (std::size_t r = 0; r < M.dim; ++r)
        for (std::size_t k = M.row_start[r]; k < M.row_start[r + 1]; ++k)
            if (static_cast<std::size_t>(M.col[k]) != r) CHECK(M.val[k] >= 0.0);
    for (std::size_t t = 0; t < T1.size(); ++t)
        if (T1.types[t].particles == 1) CHECK(T1.jumps[t].splits.empty());
}

TEST_CASE("particle count is an exact eigenvector at lambda = 0") {
    for (int h : {1, 2}) {
        const auto& T = table(h);
        for (double v : {0.0, 0.7, 3.0}) {
            auto M = mean_matrix(0.0, v, T);
            std::vector<double> g(T.size());
            for (std::size_t t = 0; t < T.size(); ++t) g[t] = T.types[t].particles;
            auto mg = M.apply(g);
            for (std::size_t t = 0; t < T.size(); ++t) CHECK(mg[t] == doctest::Approx(-g[t]).epsilon(1e-12));
            auto pf = pf_eigen(M);
            CHECK(pf.mu == doctest::Approx(-1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("mean matrix rows equal the generator rebuilt from representatives") {
    Rng rng(1, "mm", 0);
    for (int h : {1, 2}) {
        const auto& T = table(h);
        std::vector<double> g(T.size());
        for (auto& x : g) x = rng.uniform();
        for (double lambda : {0.3, 1.7})
            for (double v : {0.0, 1.3}) {
                auto M = mean_matrix(lambda, v, T);
                auto mg = M.apply(g);
                for (std::size_t t = 0; t < T.size(); ++t)
                    CHECK(mg[t] == doctest::Approx(generator_oracle(T, static_cast<int>(t), lambda, v, g)).epsilon(1e-10));
            }
    }
}

TEST_CASE("pf_eigen trivial and dense cross-check") {
    MeanMatrix one;
    one.dim = 1;
    one.row_start = {0, 1};
    one.col = {0};
    one.val = {-1.0};
    one.outflow = {1.0};
    auto r = pf_eigen(one);
    CHECK(r.mu == doctest::Approx(-1.0));
    CHECK(r.f[0] == doctest::Approx(1.0));

    for (int h : {1, 2})
        for (double lambda : {0.5, 1.2, 2.5})
            for (double v : {0.5, 2.0}) {
                auto M = mean_matrix(lambda, v, table(h));
                auto pf = pf_eigen(M);
                CHECK(pf.mu == doctest::Approx(dense_top_eigenvalue(M)).epsilon(1e-8));
                CHECK(pf.residual <= 1e-8);
                CHECK(pf.f_max == doctest::Approx(1.0));
            }
}

TEST_CASE("h = 1 path block eigenvalue") {
    // Path classes: one particle (a) and two particles (b). Rows: a -> [-1-l, l]; b -> [2+2v, -2-v].
    for (double lambda : {0.5, 4.0, 8.0})
        for (double v : {0.5, 1.0}) {
            double tr = -3.0 - lambda - v;
            double det = (1.0 + lambda) * (2.0 + v) - lambda * (2.0 + 2.0 * v);
            double path_mu = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
            auto M = mean_matrix(lambda, v, table(1));
            CHECK(pf_eigen(M).mu >= path_mu - 1e-9);
            CHECK(dense_top_eigenvalue(M) >= path_mu - 1e-9);
        }
}

TEST_CASE("growth exponent monotone in lambda and lambda_bar bracket contract") {
    const auto& T2 = table(2);
    for (double v : {0.5, 1.0, 2.0}) {
        double prev = -1e300;
        for (double lambda = 0.0; lambda <= 2.0; lambda += 0.25) {
            double mu = growth_exponent(lambda, v, T2);
            CHECK(mu >= prev - 1e-9);
            prev = mu;
        }
    }
    auto lb = lambda_bar(1.0, T2, 1e-3);
    CHECK(lb.lambda >= 1.0 / 3.0);
    CHECK(lb.hi - lb.lo <= 1e-3);
    CHECK(growth_exponent(lb.lambda - 1e-3, 1.0, T2) < 0.0);
    CHECK(growth_exponent(lb.lambda + 1e-3, 1.0, T2) > 0.0);
    auto lb1 = lambda_bar(1.0, table(1), 1e-3);
    CHECK(lb1.lambda >= 1.0 / 3.0);
}

TEST_CASE("initial jump rate of the h = 1 star with its centre occupied") {
    HHerd star{ball(3, 1), {TreeAddress{}}};
    for (double lambda : {0.0, 0.4, 2.0}) CHECK(jump_rate(star, lambda, 5.0) == doctest::Approx(3 * lambda + 1));
    HHerd pair{ball(3, 1), {TreeAddress{}, TreeAddress::parse("1")}};
    // two deaths, births onto the two free leaves, one active edge
    CHECK(jump_rate(pair, 0.5, 2.0) == doctest::Approx(2 + 0.5 * 2 + 2.0));
}

TEST_CASE("zero birth rate: particle count decays like exp(-t)") {
    SimParams p;
    p.lambda = 0.0;
    p.v = 1.0;
    p.horizon = 1.0;
    HHerdsState init;
    init.herds.emplace(0, HHerd{ball(3, 1), ball(3, 1).vertices()});
    const std::size_t reps = 20000;
    std::vector<double> n_end(reps);
    parallel_for(reps, [&](std::size_t i) {
        Rng rng(5, "decay", i);
        double at_one = 0;
        HHerdsOptions o;
        o.observe_every = 1.0;
        o.observer = [&](double t, const HHerdsState& s) {
            if (t == 1.0)
                for (auto& [id, h] : s.herds) at_one += static_cast<double>(h.occupied.size());
        };
        run_h_herds(p, 1, init, rng, o);
        n_end[i] = at_one;
    });
    double mean = 0, sq = 0;
    for (double x : n_end) {
        mean += x;
        sq += x * x;
    }
    mean /= reps;
    double se = std::sqrt((sq / reps - mean * mean) / reps);
    CHECK(std::abs(mean - 4.0 * std::exp(-1.0)) < 3 * se);
}

TEST_CASE("no splits: contact process on a finite ball dies") {
    SimParams p;
    p.lambda = 1.0;
    p.v = 0.0;
    p.horizon = 2000.0;
    int died = 0;
    for (int i = 0; i < 200; ++i) {
        Rng rng(9, "v0", static_cast<std::uint64_t>(i));
        died += run_h_herds(p, 1, HHerdsState::initial(3, 1), rng).outcome == Outcome::Died;
    }
    CHECK(died == 200);
}

TEST_CASE("leaf distance never decreases at splits along trajectories") {
    SimParams p;
    p.lambda = 1.5;
    p.v = 1.0;
    p.horizon = 6.0;
    p.population_cap = 3000;
    std::uint64_t violations = 0;
    for (int h : {1, 2, 3})
        for (int i = 0; i < 30; ++i) {
            Rng rng(3, "leafdist", static_cast<std::uint64_t>(i * 10 + h));
            violations += run_h_herds(p, h, HHerdsState::initial(3, h), rng).leaf_distance_violations;
        }
    CHECK(violations == 0);
}

TEST_CASE("tau_leaf estimates") {
    SimParams p;
    p.lambda = 0.0;
    p.v = 1.0;
    p.seed = 4;
    CHECK(tau_leaf_probability(p, 2, 5.0, 500).p == 0.0);
    p.lambda = 1.0;
    CHECK(tau_leaf_probability(p, 2, 1e-6, 500).p == 0.0);
    auto p2 = tau_leaf_probability(p, 2, 1.0, 4000);
    auto p4 = tau_leaf_probability(p, 4, 1.0, 4000);
    auto p6 = tau_leaf_probability(p, 6, 1.0, 4000);
    CHECK(p2.p > 0.0);
    CHECK(p4.p <= p2.p + 3 * std::hypot(p2.se, p4.se));
    CHECK(p6.p <= p4.p + 3 * std::hypot(p4.se, p6.se) + 1e-12);
}

TEST_CASE("every start type reaches a centred ball with frequency bounded away from zero") {
    const auto& T = table(2);
    const auto target = canonical_code(ball(3, 2), {TreeAddress{}});
    SimParams p;
    p.lambda = 1.0;
    p.v = 1.0;
    p.horizon = 10.0;
    double worst = 1.0;
    for (std::size_t t = 0; t < T.size(); ++t) {
        HHerdsState init;
        init.herds.emplace(0, HHerd{T.shape_of(static_cast<int>(t)), T.occupied_of(static_cast<int>(t))});
        int hits = 0;
        const int reps = 100;
        for (int i = 0; i < reps; ++i) {
            Rng rng(12, "dichotomy", t * 1000 + static_cast<std::size_t>(i));
            HHerdsOptions o;
            o.target_class = target;
            hits += run_h_herds(p, 2, init, rng, o).target_hit < kInfinity;
        }
        worst = std::min(worst, hits / static_cast<double>(reps));
    }
    CHECK(worst >= 0.05);
}
