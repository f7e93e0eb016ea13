#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "herdsim/contact_dynamic.hpp"

using namespace herdsim;

TEST_CASE("parameter validation") {
    DynamicParams p;
    p.n = 5;
    p.d = 3;
    CHECK_THROWS(p.validate());
    p.n = 6;
    CHECK_NOTHROW(p.validate());
    p.lambda = -1;
    CHECK_THROWS(p.validate());
    Rng rng(1, "cd", 0);
    p.lambda = 1;
    CHECK_THROWS(run_joint(p, {7}, rng));
}

TEST_CASE("lambda = 0 from all infected: extinction time is the max of n Exp(1)") {
    DynamicParams p;
    p.n = 50;
    p.lambda = 0.0;
    p.v = 1.0;
    double harmonic = 0;
    for (int k = 1; k <= 50; ++k) harmonic += 1.0 / k;
    const int reps = 1000;
    double sum = 0, sum2 = 0;
    for (int r = 0; r < reps; ++r) {
        Rng rng(3, "lambda0", static_cast<std::uint64_t>(r));
        auto rec = run_joint(p, {}, rng);
        REQUIRE(rec.outcome == Outcome::Died);
        sum += rec.tau;
        sum2 += rec.tau * rec.tau;
    }
    const double mean = sum / reps, se = std::sqrt((sum2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - harmonic) < 3 * se);
}

TEST_CASE("self-loop transmissions never infect anything new") {
    // n = 2, d = 2: two self-loops; no vertex can ever infect the other.
    Matching loops(2, 2, {1, 0, 3, 2});
    DynamicParams p;
    p.n = 2;
    p.d = 2;
    p.lambda = 5.0;
    p.v = 0.0;
    p.horizon = 50;
    for (int r = 0; r < 200; ++r) {
        Rng rng(4, "selfloop", static_cast<std::uint64_t>(r));
        std::size_t max_seen = 0;
        JointOptions opt;
        opt.observe_every = 0.01;
        opt.on_sample = [&](double, std::size_t c) { max_seen = std::max(max_seen, c); };
        auto rec = run_joint_on(p, loops, {0}, rng, opt);
        CHECK(rec.outcome == Outcome::Died);
        CHECK(max_seen <= 1);
    }
}

TEST_CASE("switches alone never change the infected set") {
    DynamicParams p;
    p.n = 40;
    p.lambda = 0.0;
    p.v = 1e6;
    p.horizon = 0.3;
    Rng rng(5, "switch-only", 0);
    JointCounters c;
    JointOptions opt;
    opt.counters = &c;
    std::vector<std::size_t> counts;
    opt.observe_every = 0.001;
    opt.on_sample = [&](double, std::size_t k) { counts.push_back(k); };
    auto rec = run_joint(p, {}, rng, opt);
    CHECK(c.switches > 1000);
    // With no transmissions the count only moves at recoveries, so it is nonincreasing by one step at a time.
    for (std::size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] <= counts[i - 1]);
    CHECK(c.recoveries == p.n - counts.back());
    CHECK(rec.events == c.switches + c.recoveries);
}

TEST_CASE("rate audit: recovery rate 1 per infected vertex, transmission rate lambda per half-edge") {
    DynamicParams p;
    p.n = 200;
    p.lambda = 1.0;
    p.v = 2.0;
    p.horizon = 200;
    Rng rng(6, "audit", 0);
    JointCounters c;
    JointOptions opt;
    opt.counters = &c;
    run_joint(p, {}, rng, opt);
    REQUIRE(c.infected_time > 1e4);
    // Counts are Poisson given the integrated exposure.
    const double rec_rate = c.recoveries / c.infected_time;
    const double tr_rate = c.transmissions / (p.d * c.infected_time);
    CHECK(std::abs(rec_rate - 1.0) < 3 * std::sqrt(1.0 / c.infected_time));
    CHECK(std::abs(tr_rate - p.lambda) < 3 * std::sqrt(p.lambda / (p.d * c.infected_time)));
}

TEST_CASE("same seed gives the same run") {
    DynamicParams p;
    p.n = 80;
    p.lambda = 0.6;
    Rng a(7, "same", 0), b(7, "same", 0);
    auto ra = run_joint(p, {}, a), rb = run_joint(p, {}, b);
    CHECK(ra.tau == rb.tau);
    CHECK(ra.events == rb.events);
}

TEST_CASE("coupled runs: monotone in the initial set, identical from identical starts") {
    DynamicParams p;
    p.n = 100;
    p.lambda = 0.4;
    p.v = 1.0;
    p.horizon = 500;
    std::vector<std::uint32_t> all(p.n);
    for (std::uint32_t i = 0; i < p.n; ++i) all[i] = i;
    for (int r = 0; r < 100; ++r) {
        Rng rng(8, "coupled", static_cast<std::uint64_t>(r));
        auto t = coupled_run(p, {1}, all, rng);
        CHECK(t.first_violation == kInfinity);
        CHECK(t.tau_small <= t.tau_large);
        CHECK(!t.identical);
        Rng rng2(8, "coupled-same", static_cast<std::uint64_t>(r));
        auto s = coupled_run(p, all, all, rng2);
        CHECK(s.identical);
        CHECK(s.tau_small == s.tau_large);
    }
}

TEST_CASE("coupled marginal matches the single-process law at lambda = 0") {
    // Both coordinates are independent Exp(1) recoveries, so the large one dies at the max.
    DynamicParams p;
    p.n = 20;
    p.lambda = 0.0;
    p.v = 3.0;
    double harmonic = 0;
    for (int k = 1; k <= 20; ++k) harmonic += 1.0 / k;
    std::vector<std::uint32_t> all(p.n);
    for (std::uint32_t i = 0; i < p.n; ++i) all[i] = i;
    double sum = 0, sum2 = 0;
    const int reps = 2000;
    for (int r = 0; r < reps; ++r) {
        Rng rng(9, "coupled0", static_cast<std::uint64_t>(r));
        auto t = coupled_run(p, {0}, all, rng);
        sum += t.tau_large;
        sum2 += t.tau_large * t.tau_large;
    }
    const double mean = sum / reps, se = std::sqrt((sum2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - harmonic) < 3 * se);
}

TEST_CASE("sorted_quantile") {
    CHECK(sorted_quantile({}, 0.5) == kInfinity);
    CHECK(sorted_quantile({1, 2, 3, 4}, 0.5) == 2);
    CHECK(sorted_quantile({1, 2, 3, 4}, 0.25) == 1);
    CHECK(sorted_quantile({1, 2, 3, 4}, 0.75) == 3);
    CHECK(sorted_quantile({1, 2, kInfinity}, 0.75) == kInfinity);
}

TEST_CASE("extinction scan: deterministic CSV, lambda = 0 medians near log n") {
    std::vector<ScanCell> grid{{100, 0.0, 1.0}, {400, 0.0, 1.0}, {100, 3.0, 1.0}};
    ScanOptions o;
    o.reps = 60;
    o.horizon = 20;
    o.seed = 11;
    std::vector<ExtinctionRecord> runs1, runs2;
    auto s1 = extinction_scan(grid, o, &runs1);
    auto s2 = extinction_scan(grid, o, &runs2);
    std::ostringstream a, b, c, d;
    write_runs_csv(a, runs1);
    write_runs_csv(b, runs2);
    write_summary_csv(c, s1);
    write_summary_csv(d, s2);
    CHECK(a.str() == b.str());
    CHECK(c.str() == d.str());
    CHECK(a.str().rfind("run_id,seed,n,d,lambda,v,outcome,tau,events,wall_ms\n", 0) == 0);
    REQUIRE(runs1.size() == 180);
    for (int k : {0, 1}) {
        CHECK(s1[k].censored == 0);
        // The max of n Exp(1) is log n plus a Gumbel variable with median -log log 2.
        const double expect = std::log(double(grid[k].n)) - std::log(std::log(2.0));
        CHECK(std::abs(s1[k].median - expect) < 0.5);
        CHECK(s1[k].q25 <= s1[k].median);
        CHECK(s1[k].median <= s1[k].q75);
    }
    CHECK(s1[2].censor_fraction() > 0.9);
    CHECK(s1[2].median == kInfinity);
}
