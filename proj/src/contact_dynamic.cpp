#include "herdsim/contact_dynamic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <stdexcept>

#include "herdsim/parallel.hpp"

namespace herdsim {

void DynamicParams::validate() const {
    if (d < 1 || n < 1) throw std::invalid_argument("n and d must be positive");
    if ((std::uint64_t(n) * d) % 2 != 0) throw std::invalid_argument("n*d must be even");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and nonnegative");
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("v must be finite and nonnegative");
    if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
}

namespace {

class InfectedSet {
public:
    explicit InfectedSet(std::uint32_t n) : pos_(n, -1) {}
    std::size_t size() const { return list_.size(); }
    bool contains(std::uint32_t x) const { return pos_[x] >= 0; }
    std::uint32_t at(std::size_t i) const { return list_[i]; }
    void insert(std::uint32_t x) {
        if (pos_[x] >= 0) return;
        pos_[x] = static_cast<std::int64_t>(list_.size());
        list_.push_back(x);
    }
    void erase(std::uint32_t x) {
        const std::int64_t i = pos_[x];
        if (i < 0) return;
        const std::uint32_t last = list_.back();
        list_[static_cast<std::size_t>(i)] = last;
        pos_[last] = i;
        list_.pop_back();
        pos_[x] = -1;
    }

private:
    std::vector<std::int64_t> pos_;
    std::vector<std::uint32_t> list_;
};

std::vector<std::uint32_t> all_vertices(std::uint32_t n) {
    std::vector<std::uint32_t> v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

ExtinctionRecord run_joint(const DynamicParams& params, const std::vector<std::uint32_t>& xi0, Rng& rng,
                           const JointOptions& options) {
    params.validate();
    return run_joint_on(params, sample_matching(params.n, params.d, rng), xi0, rng, options);
}

ExtinctionRecord run_joint_on(const DynamicParams& params, Matching g, const std::vector<std::uint32_t>& xi0,
                              Rng& rng, const JointOptions& options) {
    params.validate();
    if (g.n() != params.n || g.d() != params.d) throw std::invalid_argument("graph does not match n, d");
    InfectedSet xi(params.n);
    for (std::uint32_t x : xi0.empty() ? all_vertices(params.n) : xi0) {
        if (x >= params.n) throw std::invalid_argument("initial infected vertex out of range");
        xi.insert(x);
    }
    ExtinctionRecord rec;
    rec.seed = params.seed;
    rec.n = params.n;
    rec.d = params.d;
    rec.lambda = params.lambda;
    rec.v = params.v;

    const double S = switch_rate(params.n, params.d, params.v);
    const double per_infected = 1.0 + params.lambda * params.d;
    double t = 0.0;
    double next_obs = options.observe_every > 0 ? 0.0 : kInfinity;
    JointCounters local;
    JointCounters& c = options.counters ? *options.counters : local;

    while (true) {
        if (xi.size() == 0) {
            rec.outcome = Outcome::Died;
            rec.tau = t;
            break;
        }
        const double R = S + per_infected * static_cast<double>(xi.size());
        const double next = t + rng.exponential(R);
        const double stop = std::min(next, params.horizon);
        while (next_obs <= stop) {
            if (options.on_sample) options.on_sample(next_obs, xi.size());
            next_obs += options.observe_every;
        }
        if (next > params.horizon || rec.events >= params.event_cap) {
            c.infected_time += static_cast<double>(xi.size()) * (stop - t);
            rec.outcome = Outcome::Censored;
            break;
        }
        c.infected_time += static_cast<double>(xi.size()) * (next - t);
        t = next;
        ++rec.events;
        double u = rng.uniform() * R;
        if (u < S) {
            apply_switch(g, draw_switch_mark(g, rng));
            ++c.switches;
            continue;
        }
        const std::uint32_t x = xi.at(rng.below(xi.size()));
        if ((u - S) < static_cast<double>(xi.size())) {
            xi.erase(x);
            ++c.recoveries;
        } else {
            ++c.transmissions;
            const auto slot = static_cast<std::uint32_t>(rng.below(params.d));
            const std::uint32_t y = g.vertex_of(g.partner(g.id(x, slot)));
            if (y != x) xi.insert(y);
        }
    }
    return rec;
}

CoupledTrace coupled_run(const DynamicParams& params, const std::vector<std::uint32_t>& xi_small,
                         const std::vector<std::uint32_t>& xi_large, Rng& rng) {
    params.validate();
    const std::uint32_t n = params.n;
    Matching g = sample_matching(n, params.d, rng);
    std::vector<char> a(n, 0), b(n, 0);
    for (auto x : xi_small) a.at(x) = 1;
    for (auto x : xi_large) b.at(x) = 1;
    std::size_t na = 0, nb = 0, outside = 0, differ = 0;
    for (std::uint32_t x = 0; x < n; ++x) {
        na += a[x];
        nb += b[x];
        outside += a[x] && !b[x];
        differ += a[x] != b[x];
    }
    auto set = [&](std::vector<char>& s, std::size_t& count, std::uint32_t x, char value) {
        if (s[x] == value) return;
        outside -= a[x] && !b[x];
        differ -= a[x] != b[x];
        s[x] = value;
        count += value ? 1 : std::size_t(-1);
        outside += a[x] && !b[x];
        differ += a[x] != b[x];
    };

    CoupledTrace trace;
    const double S = switch_rate(n, params.d, params.v);
    const double recover = n, transmit = params.lambda * double(n) * params.d;
    const double R = S + recover + transmit;
    double t = 0.0;
    if (outside > 0) trace.first_violation = 0.0;
    trace.identical = differ == 0;
    if (na == 0) trace.tau_small = 0.0;
    if (nb == 0) trace.tau_large = 0.0;
    while (nb > 0 || na > 0) {
        t += rng.exponential(R);
        if (t > params.horizon || trace.events >= params.event_cap) break;
        ++trace.events;
        const double u = rng.uniform() * R;
        if (u < S) {
            apply_switch(g, draw_switch_mark(g, rng));
        } else if (u < S + recover) {
            const auto x = static_cast<std::uint32_t>(rng.below(n));
            set(a, na, x, 0);
            set(b, nb, x, 0);
        } else {
            const auto h = static_cast<HalfEdgeId>(rng.below(std::uint64_t(n) * params.d));
            const std::uint32_t x = g.vertex_of(h), y = g.vertex_of(g.partner(h));
            const bool from_a = a[x], from_b = b[x];
            if (from_a) set(a, na, y, 1);
            if (from_b) set(b, nb, y, 1);
        }
        if (outside > 0 && trace.first_violation == kInfinity) trace.first_violation = t;
        if (differ > 0) trace.identical = false;
        if (na == 0 && trace.tau_small == kInfinity) trace.tau_small = t;
        if (nb == 0 && trace.tau_large == kInfinity) trace.tau_large = t;
    }
    return trace;
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return kInfinity;
    auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    return sorted[k - 1];
}

std::vector<ScanSummary> extinction_scan(const std::vector<ScanCell>& grid, const ScanOptions& options,
                                         std::vector<ExtinctionRecord>* runs) {
    const std::size_t jobs = grid.size() * options.reps;
    std::vector<ExtinctionRecord> records(jobs);
    parallel_for(jobs, [&](std::size_t j) {
        const std::size_t c = j / options.reps, r = j % options.reps;
        DynamicParams p;
        p.n = grid[c].n;
        p.d = options.d;
        p.lambda = grid[c].lambda;
        p.v = grid[c].v;
        p.horizon = options.horizon;
        p.event_cap = options.event_cap;
        p.seed = options.seed;
        const std::uint64_t run_id = (std::uint64_t(c) << 32) | r;
        Rng rng(options.seed, "joint", run_id);
        const auto start = std::chrono::steady_clock::now();
        ExtinctionRecord rec = run_joint(p, {}, rng);
        if (options.record_wall_time)
            rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        rec.run_id = run_id;
        records[j] = rec;
    });
    std::vector<ScanSummary> out;
    for (std::size_t c = 0; c < grid.size(); ++c) {
        ScanSummary s;
        s.cell = grid[c];
        s.reps = options.reps;
        std::vector<double> taus;
        for (std::size_t r = 0; r < options.reps; ++r) {
            const auto& rec = records[c * options.reps + r];
            s.censored += rec.outcome == Outcome::Censored;
            taus.push_back(rec.tau);
        }
        std::sort(taus.begin(), taus.end());
        s.q25 = sorted_quantile(taus, 0.25);
        s.median = sorted_quantile(taus, 0.5);
        s.q75 = sorted_quantile(taus, 0.75);
        out.push_back(s);
    }
    if (runs) *runs = std::move(records);
    return out;
}

void write_runs_csv(std::ostream& out, const std::vector<ExtinctionRecord>& runs) {
    out << "run_id,seed,n,d,lambda,v,outcome,tau,events,wall_ms\n";
    out << std::setprecision(12);
    for (auto& r : runs)
        out << r.run_id << ',' << r.seed << ',' << r.n << ',' << r.d << ',' << r.lambda << ',' << r.v << ','
            << (r.outcome == Outcome::Died ? "died" : "censored") << ',' << r.tau << ',' << r.events << ','
            << r.wall_ms << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<ScanSummary>& cells) {
    out << "n,lambda,v,reps,censored,censor_fraction,q25,median,q75\n";
    out << std::setprecision(12);
    for (auto& s : cells)
        out << s.cell.n << ',' << s.cell.lambda << ',' << s.cell.v << ',' << s.reps << ',' << s.censored << ','
            << s.censor_fraction() << ',' << s.q25 << ',' << s.median << ',' << s.q75 << '\n';
}

}  // namespace herdsim
