#include "herdsim/h_herds.hpp"

#include <algorithm>
#include <map>

#include "herdsim/parallel.hpp"
#include "herdsim/weighted_index.hpp"

namespace herdsim {

HHerdsState HHerdsState::initial(int d, int h) {
    HHerdsState s;
    s.herds.emplace(0, HHerd{ball(d, h), {TreeAddress{}}});
    return s;
}

namespace {

struct LiveHerd {
    std::uint64_t id = 0;
    FiniteTree shape;
    std::vector<char> occ;
    int count = 0;
};

int occupied_neighbours(const LiveHerd& H, std::size_t w) {
    int k = 0;
    for (int y : H.shape.adjacency()[w]) k += H.occ[static_cast<std::size_t>(y)];
    return k;
}

// Active edges as (child index, parent index) pairs, rooted at vertex 0.
std::vector<std::pair<int, int>> live_active_edges(const LiveHerd& H) {
    const auto& adj = H.shape.adjacency();
    const std::size_t n = adj.size();
    std::vector<int> parent(n, -1), order{0}, below(n, 0);
    parent[0] = 0;
    for (std::size_t k = 0; k < order.size(); ++k)
        for (int y : adj[static_cast<std::size_t>(order[k])])
            if (parent[static_cast<std::size_t>(y)] < 0) {
                parent[static_cast<std::size_t>(y)] = order[k];
                order.push_back(y);
            }
    std::vector<std::pair<int, int>> out;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        auto x = static_cast<std::size_t>(*it);
        below[x] += H.occ[x];
        if (x == 0) continue;
        below[static_cast<std::size_t>(parent[x])] += below[x];
        if (below[x] > 0 && below[x] < H.count) out.emplace_back(static_cast<int>(x), parent[x]);
    }
    return out;
}

double herd_rate(const LiveHerd& H, double lambda, double v) {
    double births = 0.0;
    for (std::size_t w = 0; w < H.occ.size(); ++w)
        if (!H.occ[w]) births += occupied_neighbours(H, w);
    return H.count + lambda * births + v * static_cast<double>(live_active_edges(H).size());
}

bool has_leaf_particle(const LiveHerd& H) {
    for (std::size_t w = 0; w < H.occ.size(); ++w)
        if (H.occ[w] && H.shape.degree(static_cast<int>(w)) <= 1 && H.shape.size() > 1) return true;
    return false;
}

CanonicalCode live_code(const LiveHerd& H) { return canonical_code(H.shape.adjacency(), H.occ); }

}  // namespace

double jump_rate(const HHerd& herd, double lambda, double v) {
    LiveHerd H;
    H.shape = herd.shape;
    H.occ.assign(herd.shape.size(), 0);
    for (const auto& a : herd.occupied) {
        int i = herd.shape.index_of(a);
        if (i < 0) throw std::invalid_argument("occupied vertex outside its shape");
        if (!H.occ[static_cast<std::size_t>(i)]) ++H.count;
        H.occ[static_cast<std::size_t>(i)] = 1;
    }
    return herd_rate(H, lambda, v);
}

HHerdsRun run_h_herds(const SimParams& params, int h, const HHerdsState& init, Rng& rng, const HHerdsOptions& options) {
    params.validate();
    const double lambda = params.lambda, v = params.v;
    std::vector<LiveHerd> slots;
    std::vector<std::size_t> free_slots;
    WeightedIndex rates(16);
    std::uint64_t next_id = 0, particles = 0, herd_count = 0;
    HHerdsRun run;
    double t = init.clock;

    auto place = [&](LiveHerd H) {
        std::size_t slot;
        if (!free_slots.empty()) {
            slot = free_slots.back();
            free_slots.pop_back();
            slots[slot] = std::move(H);
        } else {
            slot = slots.size();
            slots.push_back(std::move(H));
        }
        rates.set(slot, herd_rate(slots[slot], lambda, v));
        ++herd_count;
        return slot;
    };
    auto retire = [&](std::size_t slot) {
        rates.set(slot, 0.0);
        slots[slot] = LiveHerd{};
        free_slots.push_back(slot);
        --herd_count;
    };
    auto snapshot = [&]() {
        HHerdsState s;
        s.clock = t;
        for (const auto& H : slots) {
            if (H.count == 0) continue;
            HHerd out{H.shape, {}};
            for (std::size_t w = 0; w < H.occ.size(); ++w)
                if (H.occ[w]) out.occupied.push_back(H.shape.vertex(static_cast<int>(w)));
            s.herds.emplace(H.id, std::move(out));
        }
        return s;
    };

    for (const auto& [id, herd] : init.herds) {
        LiveHerd H;
        H.id = id;
        H.shape = herd.shape;
        H.occ.assign(herd.shape.size(), 0);
        for (const auto& a : herd.occupied) {
            int i = herd.shape.index_of(a);
            if (i < 0) throw std::invalid_argument("occupied vertex outside its shape");
            if (!H.occ[static_cast<std::size_t>(i)]) ++H.count;
            H.occ[static_cast<std::size_t>(i)] = 1;
        }
        if (H.count == 0) throw std::invalid_argument("initial herd is empty");
        if (herd.shape.diameter() > 2 * h) throw std::invalid_argument("initial shape has diameter above 2h");
        particles += static_cast<std::uint64_t>(H.count);
        next_id = std::max(next_id, id + 1);
        if (has_leaf_particle(H)) run.tau_leaf = t;
        if (!options.target_class.empty() && live_code(H) == options.target_class) run.target_hit = t;
        place(std::move(H));
    }
    double next_observation = options.observe_every > 0.0 ? t : kInfinity;

    auto finish = [&](Outcome o, double end) {
        run.outcome = o;
        run.end_time = end;
        run.final_particles = particles;
        run.final_herds = herd_count;
        return run;
    };
    if (run.target_hit < kInfinity) return finish(Outcome::Alive, t);
    if (options.stop_at_leaf && run.tau_leaf < kInfinity) return finish(Outcome::Alive, t);

    while (true) {
        if (herd_count == 0) {
            while (next_observation <= params.horizon && options.observer) {
                options.observer(next_observation, snapshot());
                next_observation += options.observe_every;
            }
            return finish(Outcome::Died, t);
        }
        const double R = rates.total();
        const double dt = rng.exponential(R);
        while (next_observation <= std::min(t + dt, params.horizon) && options.observer) {
            options.observer(next_observation, snapshot());
            next_observation += options.observe_every;
        }
        if (t + dt > params.horizon) return finish(Outcome::Alive, params.horizon);
        t += dt;
        if (++run.events > params.event_cap) return finish(Outcome::Censored, t);

        const std::size_t slot = rates.find(rng.uniform() * R);
        LiveHerd& H = slots[slot];
        double u = rng.uniform() * rates.weight(slot);
        bool changed_in_place = true;

        if (u < H.count) {
            int k = static_cast<int>(u);
            for (std::size_t w = 0; w < H.occ.size(); ++w) {
                if (!H.occ[w]) continue;
                if (k-- == 0) {
                    H.occ[w] = 0;
                    --H.count;
                    --particles;
                    break;
                }
            }
            if (H.count == 0) {
                retire(slot);
                changed_in_place = false;
            }
        } else {
            u -= H.count;
            bool done = false;
            for (std::size_t w = 0; w < H.occ.size() && !done; ++w) {
                if (H.occ[w]) continue;
                double r = lambda * occupied_neighbours(H, w);
                if (r <= 0.0) continue;
                if (u < r) {
                    H.occ[w] = 1;
                    ++H.count;
                    ++particles;
                    if (H.shape.degree(static_cast<int>(w)) == 1 && run.tau_leaf == kInfinity) run.tau_leaf = t;
                    done = true;
                } else {
                    u -= r;
                }
            }
            if (!done) {
                auto active = live_active_edges(H);
                if (active.empty()) continue;  // rounding at the end of the cumulative range
                std::size_t pick = std::min(active.size() - 1, static_cast<std::size_t>(u / v));
                auto [c, p] = active[pick];
                LiveHerd parent = std::move(H);
                retire(slot);
                changed_in_place = false;
                for (auto [keep, drop] : {std::pair{c, p}, std::pair{p, c}}) {
                    const auto& a = parent.shape.vertex(keep);
                    const auto& b = parent.shape.vertex(drop);
                    LiveHerd child;
                    child.id = next_id++;
                    child.shape = h_split(parent.shape, TreeEdge::between(a, b), a, h).tree;
                    child.occ.assign(child.shape.size(), 0);
                    for (int x : parent.shape.side_of(keep, drop)) {
                        if (!parent.occ[static_cast<std::size_t>(x)]) continue;
                        int y = child.shape.index_of(parent.shape.vertex(x));
                        child.occ[static_cast<std::size_t>(y)] = 1;
                        ++child.count;
                        if (dist_to_leaves(child.shape, y) < dist_to_leaves(parent.shape, x)) ++run.leaf_distance_violations;
                    }
                    if (has_leaf_particle(child) && run.tau_leaf == kInfinity) run.tau_leaf = t;
                    if (!options.target_class.empty() && run.target_hit == kInfinity && live_code(child) == options.target_class)
                        run.target_hit = t;
                    place(std::move(child));
                }
            }
        }
        if (changed_in_place) {
            rates.set(slot, herd_rate(H, lambda, v));
            if (!options.target_class.empty() && run.target_hit == kInfinity && live_code(H) == options.target_class)
                run.target_hit = t;
        }
        if (run.target_hit < kInfinity) return finish(Outcome::Alive, t);
        if (options.stop_at_leaf && run.tau_leaf < kInfinity) return finish(Outcome::Alive, t);
        if (params.population_cap > 0 && particles >= params.population_cap) return finish(Outcome::Exploded, t);
    }
}

std::vector<double> MeanMatrix::apply(const std::vector<double>& g) const {
    std::vector<double> out(dim, 0.0);
    for (std::size_t r = 0; r < dim; ++r) {
        double s = 0.0;
        for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k) s += val[k] * g[static_cast<std::size_t>(col[k])];
        out[r] = s;
    }
    return out;
}

double MeanMatrix::entry(std::size_t r, std::size_t c) const {
    for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k)
        if (static_cast<std::size_t>(col[k]) == c) return val[k];
    return 0.0;
}

MeanMatrix mean_matrix(double lambda, double v, const TypeTable& types) {
    MeanMatrix M;
    M.dim = types.size();
    M.lambda = lambda;
    M.v = v;
    M.row_start.push_back(0);
    for (std::size_t t = 0; t < M.dim; ++t) {
        const auto& j = types.jumps[t];
        std::map<int, double> row;
        double out = 0.0;
        for (int x : j.deaths) {
            out += 1.0;
            if (x >= 0) row[x] += 1.0;
        }
        for (auto [x, k] : j.births) {
            out += lambda * k;
            row[x] += lambda * k;
        }
        for (auto [a, b] : j.splits) {
            out += v;
            row[a] += v;
            row[b] += v;
        }
        row[static_cast<int>(t)] -= out;
        for (auto [c, value] : row) {
            M.col.push_back(c);
            M.val.push_back(value);
        }
        M.outflow.push_back(out);
        M.row_start.push_back(M.col.size());
    }
    return M;
}

PFNonConvergence::PFNonConvergence(std::uint64_t iterations, double r)
    : std::runtime_error("power iteration did not converge after " + std::to_string(iterations) +
                         " iterations (residual " + std::to_string(r) + ")"),
      residual(r) {}

PFResult pf_eigen(const MeanMatrix& M, double tol, std::uint64_t max_iterations) {
    const std::size_t n = M.dim;
    if (n == 0) throw std::invalid_argument("empty mean matrix");
    const double c = 1.0 + *std::max_element(M.outflow.begin(), M.outflow.end());
    std::vector<double> x(n, 1.0), y(n);
    PFResult res;
    double residual = kInfinity;
    for (std::uint64_t it = 1; it <= max_iterations; ++it) {
        y = M.apply(x);
        double top = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] += c * x[i];
            top = std::max(top, y[i]);
        }
        if (!(top > 0.0)) throw std::runtime_error("power iterate vanished");
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / top;
        if (it % 8 == 0 || it == max_iterations) {
            auto mx = M.apply(x);
            const double mu = top - c;
            residual = 0.0;
            for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(mx[i] - mu * x[i]));
            if (residual <= tol) {
                res.mu = mu;
                res.iterations = it;
                break;
            }
        }
        if (it == max_iterations) throw PFNonConvergence(it, residual);
    }
    // Report the eigenvalue from the final normalised vector.
    auto mx = M.apply(x);
    std::size_t arg = static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
    res.mu = mx[arg] / x[arg];
    res.residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) res.residual = std::max(res.residual, std::abs(mx[i] - res.mu * x[i]));
    res.f = std::move(x);
    res.f_min = *std::min_element(res.f.begin(), res.f.end());
    res.f_max = *std::max_element(res.f.begin(), res.f.end());
    return res;
}

double growth_exponent(double lambda, double v, const TypeTable& types) {
    return pf_eigen(mean_matrix(lambda, v, types)).mu;
}

LambdaBarResult lambda_bar(double v, const TypeTable& types, double tol) {
    LambdaBarResult r;
    r.lo = 1.0 / types.d;
    r.mu_lo = growth_exponent(r.lo, v, types);
    ++r.evaluations;
    if (!(r.mu_lo < 0.0)) throw BracketError("growth exponent is not negative at lambda = 1/d");
    r.hi = 1.0;
    while (true) {
        r.mu_hi = growth_exponent(r.hi, v, types);
        ++r.evaluations;
        if (r.mu_hi > 0.0) break;
        r.lo = r.hi;
        r.mu_lo = r.mu_hi;
        r.hi *= 2.0;
        if (r.hi > 32.0) throw BracketError("growth exponent is not positive for any lambda up to 32");
    }
    while (r.hi - r.lo > tol) {
        const double mid = 0.5 * (r.lo + r.hi);
        const double mu = growth_exponent(mid, v, types);
        ++r.evaluations;
        if (mu < 0.0) {
            r.lo = mid;
            r.mu_lo = mu;
        } else {
            r.hi = mid;
            r.mu_hi = mu;
        }
    }
    r.lambda = 0.5 * (r.lo + r.hi);
    return r;
}

Proportion tau_leaf_probability(const SimParams& params, int h, double s, std::uint64_t reps) {
    std::vector<char> hit(reps, 0);
    const HHerdsState init = HHerdsState::initial(params.d, h);
    parallel_for(reps, [&](std::size_t i) {
        SimParams p = params;
        p.horizon = s;
        Rng rng(params.seed, "tau_leaf", i);
        HHerdsOptions opt;
        opt.stop_at_leaf = true;
        auto run = run_h_herds(p, h, init, rng, opt);
        hit[i] = run.tau_leaf <= s;
    });
    std::uint64_t hits = 0;
    for (char c : hit) hits += static_cast<std::uint64_t>(c);
    return Proportion::of(hits, reps);
}

nlohmann::json pf_to_json(const TypeTable& types, const MeanMatrix& M, const PFResult& pf, bool with_vector) {
    nlohmann::json j;
    j["d"] = types.d;
    j["h"] = types.h;
    j["lambda"] = M.lambda;
    j["v"] = M.v;
    j["mu"] = pf.mu;
    j["f_min"] = pf.f_min;
    j["f_max"] = pf.f_max;
    j["dim"] = M.dim;
    j["residual"] = pf.residual;
    j["iterations"] = pf.iterations;
    j["irreducible"] = types.strongly_connected();
    if (with_vector) {
        nlohmann::json f = nlohmann::json::object();
        for (std::size_t t = 0; t < types.size(); ++t) f[types.types[t].code] = pf.f[t];
        j["f"] = std::move(f);
    }
    return j;
}

TypeFunction::TypeFunction(const TypeTable& types, std::vector<double> f) {
    if (f.size() != types.size()) throw std::invalid_argument("vector length does not match the type table");
    for (std::size_t t = 0; t < f.size(); ++t) index_.emplace(types.types[t].code, f[t]);
    min_ = *std::min_element(f.begin(), f.end());
    max_ = *std::max_element(f.begin(), f.end());
}

double TypeFunction::operator()(const CanonicalCode& code) const {
    auto it = index_.find(code);
    if (it == index_.end()) throw std::logic_error("type missing from the table: " + code);
    return it->second;
}

}  // namespace herdsim
