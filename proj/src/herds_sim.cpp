#include "herdsim/herds_sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "herdsim/parallel.hpp"
#include "herdsim/site_pool.hpp"
#include "herdsim/weighted_index.hpp"

namespace herdsim {

// ---------------------------------------------------------------------------------------------
// States

HerdsState HerdsState::initial() {
    HerdsState s;
    s.herds[0] = {TreeAddress{}};
    s.next_id = 1;
    return s;
}

std::size_t HerdsState::particles() const {
    std::size_t n = 0;
    for (auto& [id, h] : herds) n += h.size();
    return n;
}

void HerdsState::validate(int d) const {
    for (auto& [id, h] : herds) {
        if (h.empty()) throw std::invalid_argument("herd " + std::to_string(id) + " is empty");
        if (id >= next_id) throw std::invalid_argument("herd id not below next_id");
        for (auto& a : h)
            if (!valid_address(a, d)) throw std::invalid_argument("invalid address " + a.to_string());
    }
}

MarkedHerdsState MarkedHerdsState::initial() {
    MarkedHerdsState s;
    s.herds[0] = MarkedHerd{{TreeAddress{}}, {TreeAddress{}}};
    s.exclusion[TreeAddress{}] = 0;
    s.next_id = 1;
    return s;
}

void MarkedHerdsState::validate(int d, bool freezing) const {
    std::map<TreeAddress, std::uint64_t> owners;
    for (auto& [id, h] : herds) {
        if (h.particles.empty()) throw std::invalid_argument("herd " + std::to_string(id) + " is empty");
        if (id >= next_id) throw std::invalid_argument("herd id not below next_id");
        for (auto& a : h.particles)
            if (!valid_address(a, d)) throw std::invalid_argument("invalid address " + a.to_string());
        for (auto& a : h.marked) {
            if (!h.particles.count(a)) throw std::invalid_argument("marked particle outside its herd");
            if (!owners.emplace(a, id).second)
                throw std::invalid_argument("two herds hold a marked particle at " + a.to_string());
        }
        const bool should_freeze = freezing && h.marked.empty();
        if (should_freeze != (frozen.count(id) > 0)) throw std::invalid_argument("frozen flag out of sync");
    }
    for (auto id : frozen)
        if (!herds.count(id)) throw std::invalid_argument("frozen id without herd");
    if (owners != exclusion) throw std::invalid_argument("exclusion index out of sync");
}

std::set<TreeAddress> MarkedHerdsState::marked_union() const {
    std::set<TreeAddress> out;
    for (auto& [id, h] : herds) out.insert(h.marked.begin(), h.marked.end());
    return out;
}

HerdsState MarkedHerdsState::drop_marks() const {
    HerdsState s;
    for (auto& [id, h] : herds) s.herds[id] = h.particles;
    s.clock = clock;
    s.next_id = next_id;
    return s;
}

// ---------------------------------------------------------------------------------------------
// Herds engine

namespace {

struct Grid {
    double step;
    double next;

    Grid(double step, double start) : step(step), next(step > 0 ? std::ceil(start / step) * step : kInfinity) {}
    template <class F>
    void emit_before(double t, F&& f) {
        while (next < t) {
            f(next);
            next += step;
        }
    }
};

struct HerdSlot {
    std::uint64_t id = 0;
    bool live = false;
    bool frozen = false;
    TreeHerd herd;
    IndexedSet marked;
};

class Engine {
public:
    Engine(int d, double lambda, double v, bool attempts_all)
        : pool(d), d_(d), lambda_(lambda), v_(v), attempts_all_(attempts_all) {}

    SitePool pool;
    std::vector<HerdSlot> slots;
    WeightedIndex rates;
    std::size_t live = 0;
    std::size_t particles = 0;
    std::size_t marked = 0;
    std::uint64_t frozen_total = 0;

    std::size_t open(std::uint64_t id) {
        std::size_t i;
        if (!free_.empty()) {
            i = free_.back();
            free_.pop_back();
            slots[i] = HerdSlot{};
        } else {
            i = slots.size();
            slots.emplace_back();
        }
        slots[i].id = id;
        slots[i].live = true;
        ++live;
        return i;
    }

    void close(std::size_t i) {
        slots[i].live = false;
        slots[i].herd = TreeHerd{};
        slots[i].marked = IndexedSet{};
        rates.set(i, 0.0);
        free_.push_back(i);
        --live;
    }

    double rate_of(const HerdSlot& s) const {
        if (!s.live || s.frozen) return 0.0;
        const double n = static_cast<double>(s.herd.size());
        const double births = attempts_all_ ? n * d_ : static_cast<double>(s.herd.boundary_pairs(d_));
        return n + lambda_ * births + v_ * static_cast<double>(s.herd.active().size());
    }

    void refresh(std::size_t i) { rates.set(i, rate_of(slots[i])); }

    void add(std::size_t i, Site s) {
        slots[i].herd.add(pool, s);
        ++particles;
    }
    void remove(std::size_t i, Site s) {
        slots[i].herd.remove(pool, s);
        --particles;
    }

    // Particles of slot i on each side of the active edge below x: (upper, lower).
    std::pair<std::vector<Site>, std::vector<Site>> sides(std::size_t i, Site x) const {
        const TreeHerd& h = slots[i].herd;
        std::vector<Site> lower = h.collect_below(pool, x);
        std::unordered_set<Site> low(lower.begin(), lower.end());
        std::vector<Site> upper;
        upper.reserve(h.size() - lower.size());
        for (Site s : h.particles().items())
            if (!low.count(s)) upper.push_back(s);
        return {std::move(upper), std::move(lower)};
    }

private:
    int d_;
    double lambda_;
    double v_;
    bool attempts_all_;
    std::vector<std::size_t> free_;
};

HerdsState snapshot(const Engine& e, double t, std::uint64_t next_id) {
    HerdsState s;
    s.clock = t;
    s.next_id = next_id;
    for (auto& slot : e.slots) {
        if (!slot.live) continue;
        auto& out = s.herds[slot.id];
        for (Site x : slot.herd.particles().items()) out.insert(e.pool.address(x));
    }
    return s;
}

}  // namespace

HerdsRun run_herds(const SimParams& params, const HerdsState& init, Rng& rng, const HerdsOptions& options) {
    params.validate();
    init.validate(params.d);
    const int d = params.d;
    Engine e(d, params.lambda, params.v, false);
    std::uint64_t next_id = init.next_id;
    for (auto& [id, h] : init.herds) {
        std::size_t i = e.open(id);
        for (auto& a : h) e.add(i, e.pool.intern(a));
        e.refresh(i);
    }

    HerdsRun run;
    run.max_herds = e.live;
    double t = init.clock;
    Grid grid(options.observe_every, t);
    auto observe = [&](double at) {
        if (options.on_sample) options.on_sample(HerdsSample{at, e.live, e.particles});
        if (options.on_snapshot) options.on_snapshot(at, snapshot(e, at, next_id));
    };
    auto log = [&](const char* kind, std::uint64_t id, const std::string& payload) {
        if (options.event_log) *options.event_log << t << ',' << kind << ',' << id << ',' << payload << '\n';
    };

    while (true) {
        if (e.live == 0) {
            run.outcome = Outcome::Died;
            break;
        }
        if (params.population_cap > 0 && e.particles >= params.population_cap) {
            run.outcome = Outcome::Exploded;
            break;
        }
        const double total = e.rates.total();
        const double next = t + rng.exponential(total);
        if (next > params.horizon) {
            grid.emit_before(std::nextafter(params.horizon, kInfinity), observe);
            t = params.horizon;
            run.outcome = Outcome::Alive;
            break;
        }
        if (run.events >= params.event_cap) {
            run.outcome = Outcome::Censored;
            break;
        }
        grid.emit_before(next, observe);
        t = next;
        ++run.events;

        const std::size_t i = e.rates.find(rng.uniform() * total);
        HerdSlot& slot = e.slots[i];
        TreeHerd& herd = slot.herd;
        const double n = static_cast<double>(herd.size());
        const double births = params.lambda * static_cast<double>(herd.boundary_pairs(d));
        const double r = rng.uniform() * e.rate_of(slot);

        if (r < n) {
            Site u = herd.particles()[rng.below(herd.size())];
            if (options.event_log) log("death", slot.id, e.pool.address(u).to_string());
            e.remove(i, u);
            if (herd.empty())
                e.close(i);
            else
                e.refresh(i);
        } else if (r < n + births || herd.active().empty()) {
            // Uniform over (particle, free neighbour) pairs by rejection; at least a third of all
            // pairs are free for any finite subset of the tree.
            Site u, w;
            do {
                u = herd.particles()[rng.below(herd.size())];
                w = e.pool.neighbor(u, static_cast<int>(rng.below(static_cast<std::uint64_t>(d))));
            } while (herd.contains(w));
            if (options.event_log) log("birth", slot.id, e.pool.address(u).to_string() + ">" + e.pool.address(w).to_string());
            e.add(i, w);
            e.refresh(i);
        } else {
            Site x = herd.active()[rng.below(herd.active().size())];
            auto [upper, lower] = e.sides(i, x);
            const std::uint64_t parent = slot.id;
            const std::uint64_t id_upper = next_id++;
            const std::uint64_t id_lower = next_id++;
            if (options.event_log)
                log("split", parent,
                    e.pool.address(e.pool.parent(x)).to_string() + "-" + e.pool.address(x).to_string() + ";" +
                        std::to_string(id_upper) + ";" + std::to_string(id_lower));
            // Move the smaller side into a new slot; the larger keeps the existing structure.
            const bool move_lower = lower.size() <= upper.size();
            const auto& moving = move_lower ? lower : upper;
            for (Site s : moving) e.remove(i, s);
            e.slots[i].id = move_lower ? id_upper : id_lower;
            e.refresh(i);
            std::size_t j = e.open(move_lower ? id_lower : id_upper);
            for (Site s : moving) e.add(j, s);
            e.refresh(j);
            if (options.record_genealogy) run.genealogy.push_back(SplitRecord{parent, id_upper, id_lower, t});
            run.max_herds = std::max(run.max_herds, e.live);
        }
    }
    run.end_time = t;
    run.final_herds = e.live;
    run.final_particles = e.particles;
    return run;
}

SurvivalEstimate estimate_survival(const SimParams& params, double horizon, std::uint64_t reps) {
    if (reps == 0) throw std::invalid_argument("reps must be positive");
    SimParams p = params;
    p.horizon = horizon;
    std::vector<Outcome> outcomes(reps);
    parallel_for(reps, [&](std::size_t i) {
        Rng rng(p.seed, "herds", i);
        outcomes[i] = run_herds(p, HerdsState::initial(), rng).outcome;
    });
    SurvivalEstimate est;
    for (auto o : outcomes) {
        switch (o) {
            case Outcome::Died: ++est.died; break;
            case Outcome::Alive: ++est.alive; break;
            case Outcome::Exploded: ++est.exploded; break;
            case Outcome::Censored: ++est.censored; break;
        }
    }
    est.survival = Proportion::of(est.alive + est.exploded, reps - est.censored);
    return est;
}

// ---------------------------------------------------------------------------------------------
// Plain contact process on the tree, kept deliberately separate from the herds engine.

TreeContactRun run_tree_contact(const SimParams& params, const std::set<TreeAddress>& init, Rng& rng) {
    params.validate();
    std::vector<TreeAddress> occupied(init.begin(), init.end());
    std::unordered_map<TreeAddress, std::size_t, TreeAddressHash> pos;
    for (std::size_t i = 0; i < occupied.size(); ++i) pos[occupied[i]] = i;
    const double per_particle = 1.0 + params.lambda * params.d;
    TreeContactRun run;
    double t = 0.0;
    while (true) {
        if (occupied.empty()) {
            run.outcome = Outcome::Died;
            break;
        }
        if (params.population_cap > 0 && occupied.size() >= params.population_cap) {
            run.outcome = Outcome::Exploded;
            break;
        }
        const double next = t + rng.exponential(per_particle * static_cast<double>(occupied.size()));
        if (next > params.horizon) {
            t = params.horizon;
            break;
        }
        if (run.events >= params.event_cap) {
            run.outcome = Outcome::Censored;
            break;
        }
        t = next;
        ++run.events;
        const std::size_t k = rng.below(occupied.size());
        if (rng.uniform() * per_particle < 1.0) {
            pos.erase(occupied[k]);
            if (k + 1 < occupied.size()) {
                occupied[k] = std::move(occupied.back());
                pos[occupied[k]] = k;
            }
            occupied.pop_back();
        } else {
            auto nbrs = tree_neighbors(occupied[k], params.d);
            auto& w = nbrs[rng.below(nbrs.size())];
            if (!pos.count(w)) {
                pos[w] = occupied.size();
                occupied.push_back(w);
            }
        }
    }
    run.end_time = t;
    run.final_particles = occupied.size();
    return run;
}

// ---------------------------------------------------------------------------------------------
// Marked engine

namespace {

MarkedHerdsState marked_snapshot(const Engine& e, double t, std::uint64_t next_id) {
    MarkedHerdsState s;
    s.clock = t;
    s.next_id = next_id;
    for (auto& slot : e.slots) {
        if (!slot.live) continue;
        auto& out = s.herds[slot.id];
        for (Site x : slot.herd.particles().items()) out.particles.insert(e.pool.address(x));
        for (Site x : slot.marked.items()) {
            auto a = e.pool.address(x);
            out.marked.insert(a);
            s.exclusion[a] = slot.id;
        }
        if (slot.frozen) s.frozen.insert(slot.id);
    }
    return s;
}

}  // namespace

MarkedRun run_marked(const SimParams& params, const MarkedHerdsState& init, bool freezing, Rng& rng,
                     const MarkedOptions& options) {
    params.validate();
    init.validate(params.d, freezing);
    const int d = params.d;
    Engine e(d, params.lambda, params.v, true);
    std::unordered_map<Site, std::size_t> owner;  // exclusion index: site -> slot with a mark there
    std::uint64_t next_id = init.next_id;
    for (auto& [id, h] : init.herds) {
        std::size_t i = e.open(id);
        for (auto& a : h.particles) e.add(i, e.pool.intern(a));
        for (auto& a : h.marked) {
            Site s = e.pool.intern(a);
            e.slots[i].marked.insert(s);
            owner[s] = i;
            ++e.marked;
        }
        if (init.frozen.count(id)) {
            e.slots[i].frozen = true;
            ++e.frozen_total;
        }
        e.refresh(i);
    }

    MarkedRun run;
    double t = init.clock;
    if (e.marked == 0) run.marked_extinction = t;
    Grid grid(options.observe_every, t);
    auto observe = [&](double at) {
        if (options.on_snapshot) options.on_snapshot(at, marked_snapshot(e, at, next_id));
    };
    auto settle = [&](std::size_t i) {
        HerdSlot& s = e.slots[i];
        if (s.herd.empty()) {
            e.close(i);
            return;
        }
        if (freezing && s.marked.empty() && !s.frozen) {
            s.frozen = true;
            ++e.frozen_total;
        }
        e.refresh(i);
    };

    while (true) {
        // Frozen herds never die, so the movable ones are the live herds not yet frozen.
        if (e.live == e.frozen_total) {
            run.outcome = Outcome::Died;
            break;
        }
        const double total = e.rates.total();
        if (options.stop_when_unmarked && e.marked == 0) break;
        if (params.population_cap > 0 && e.particles >= params.population_cap) {
            run.outcome = Outcome::Exploded;
            break;
        }
        const double next = t + rng.exponential(total);
        if (next > params.horizon) {
            grid.emit_before(std::nextafter(params.horizon, kInfinity), observe);
            t = params.horizon;
            break;
        }
        if (run.events >= params.event_cap) {
            run.outcome = Outcome::Censored;
            break;
        }
        grid.emit_before(next, observe);
        t = next;
        ++run.events;

        const std::size_t i = e.rates.find(rng.uniform() * total);
        HerdSlot& slot = e.slots[i];
        const double n = static_cast<double>(slot.herd.size());
        const double r = rng.uniform() * e.rate_of(slot);

        if (r < n) {
            Site u = slot.herd.particles()[rng.below(slot.herd.size())];
            if (slot.marked.erase(u)) {
                owner.erase(u);
                --e.marked;
            }
            e.remove(i, u);
            settle(i);
        } else if (r < n * (1.0 + params.lambda * d) || slot.herd.active().empty()) {
            Site u = slot.herd.particles()[rng.below(slot.herd.size())];
            Site w = e.pool.neighbor(u, static_cast<int>(rng.below(static_cast<std::uint64_t>(d))));
            const bool from_marked = slot.marked.contains(u);
            auto it = owner.find(w);
            if (it != owner.end() && it->second != i) {
                // Marked elsewhere: at most a normal particle enters.
                if (!slot.herd.contains(w)) e.add(i, w);
            } else if (slot.marked.contains(w)) {
                // no effect
            } else if (slot.herd.contains(w)) {
                if (from_marked) {
                    slot.marked.insert(w);
                    owner[w] = i;
                    ++e.marked;
                }
            } else {
                e.add(i, w);
                if (from_marked) {
                    slot.marked.insert(w);
                    owner[w] = i;
                    ++e.marked;
                }
            }
            e.refresh(i);
        } else {
            Site x = slot.herd.active()[rng.below(slot.herd.active().size())];
            auto [upper, lower] = e.sides(i, x);
            const std::uint64_t id_upper = next_id++;
            const std::uint64_t id_lower = next_id++;
            const bool move_lower = lower.size() <= upper.size();
            const auto& moving = move_lower ? lower : upper;
            std::size_t j = e.open(move_lower ? id_lower : id_upper);
            HerdSlot& from = e.slots[i];  // open() may have reallocated
            for (Site s : moving) {
                e.remove(i, s);
                e.add(j, s);
                if (from.marked.erase(s)) {
                    e.slots[j].marked.insert(s);
                    owner[s] = j;
                }
            }
            from.id = move_lower ? id_upper : id_lower;
            settle(i);
            settle(j);
        }
        if (e.marked == 0 && run.marked_extinction == kInfinity) run.marked_extinction = t;
#ifndef NDEBUG
        for (auto& [s, k] : owner) assert(e.slots[k].live && e.slots[k].marked.contains(s));
#endif
    }
    run.end_time = t;
    run.frozen = e.frozen_total;
    run.final_herds = e.live;
    run.final_particles = e.particles;
    run.final_marked = e.marked;
    return run;
}

// ---------------------------------------------------------------------------------------------
// Reference dynamics on explicit states

std::vector<MarkedJump> enabled_jumps(const MarkedHerdsState& s, const SimParams& params) {
    std::vector<MarkedJump> out;
    for (auto& [id, h] : s.herds) {
        if (s.frozen.count(id)) continue;
        for (auto& u : h.particles) {
            out.push_back({MarkedJump::Kind::Death, id, u, u, 1.0});
            for (auto& w : tree_neighbors(u, params.d)) out.push_back({MarkedJump::Kind::Birth, id, u, w, params.lambda});
        }
        if (params.v > 0.0) {
            std::vector<TreeAddress> occ(h.particles.begin(), h.particles.end());
            for (auto& e : active_edges(params.d, occ))
                out.push_back({MarkedJump::Kind::Split, id, e.upper, e.lower, params.v});
        }
    }
    return out;
}

MarkedHerdsState apply_jump(const MarkedHerdsState& s, const MarkedJump& jump, bool freezing) {
    MarkedHerdsState out = s;
    auto settle = [&](std::uint64_t id) {
        auto& h = out.herds.at(id);
        if (h.particles.empty()) {
            out.herds.erase(id);
            out.frozen.erase(id);
        } else if (freezing && h.marked.empty()) {
            out.frozen.insert(id);
        }
    };
    auto& h = out.herds.at(jump.herd);
    switch (jump.kind) {
        case MarkedJump::Kind::Death:
            h.particles.erase(jump.from);
            if (h.marked.erase(jump.from)) out.exclusion.erase(jump.from);
            settle(jump.herd);
            break;
        case MarkedJump::Kind::Birth: {
            const auto& v = jump.to;
            const bool from_marked = h.marked.count(jump.from) > 0;
            auto it = out.exclusion.find(v);
            if (it != out.exclusion.end() && it->second != jump.herd) {
                h.particles.insert(v);
            } else if (!h.particles.count(v)) {
                h.particles.insert(v);
                if (from_marked) {
                    h.marked.insert(v);
                    out.exclusion[v] = jump.herd;
                }
            } else if (!h.marked.count(v) && from_marked) {
                h.marked.insert(v);
                out.exclusion[v] = jump.herd;
            }
            break;
        }
        case MarkedJump::Kind::Split: {
            MarkedHerd upper, lower;
            for (auto& a : h.particles) (in_subtree(a, jump.to) ? lower : upper).particles.insert(a);
            for (auto& a : h.marked) (in_subtree(a, jump.to) ? lower : upper).marked.insert(a);
            const std::uint64_t id_upper = out.next_id++;
            const std::uint64_t id_lower = out.next_id++;
            out.herds.erase(jump.herd);
            out.frozen.erase(jump.herd);
            for (auto& a : upper.marked) out.exclusion[a] = id_upper;
            for (auto& a : lower.marked) out.exclusion[a] = id_lower;
            out.herds[id_upper] = std::move(upper);
            out.herds[id_lower] = std::move(lower);
            settle(id_upper);
            settle(id_lower);
            break;
        }
    }
    return out;
}

std::vector<std::pair<TreeAddress, TreeAddress>> boundary_star(const std::set<TreeAddress>& T, int d) {
    std::vector<std::pair<TreeAddress, TreeAddress>> out;
    for (auto& u : T) {
        for (auto& v : tree_neighbors(u, d)) {
            const bool v_below = !v.is_root() && v.parent() == u;
            bool ok = true;
            for (auto& w : T) {
                if (w == u || w == v) continue;
                // w must not lie on the v-side of the edge {u, v}
                if (v_below ? in_subtree(w, v) : !in_subtree(w, u)) {
                    ok = false;
                    break;
                }
            }
            if (ok) out.emplace_back(u, v);
        }
    }
    return out;
}

double evaluate_functional(int k, const MarkedHerdsState& s, int d) {
    if (k < 1 || k > 5) throw std::invalid_argument("functional index must be in 1..5");
    if (k == 1) {
        double n = 0;
        for (auto& [id, h] : s.herds) n += static_cast<double>(h.marked.size());
        return n;
    }
    if (k == 5) return static_cast<double>(s.frozen.size());
    double total = 0;
    for (auto& [u, v] : boundary_star(s.marked_union(), d)) {
        const std::uint64_t i = s.exclusion.at(u);
        const MarkedHerd& hi = s.herds.at(i);
        auto jv = s.exclusion.find(v);
        switch (k) {
            case 2: total += (jv != s.exclusion.end() && jv->second == i) ? 1 : 0; break;
            case 3: total += (jv != s.exclusion.end() && jv->second != i && !hi.particles.count(v)) ? 1 : 0; break;
            case 4: total += (hi.particles.count(v) && !hi.marked.count(v)) ? 1 : 0; break;
        }
    }
    return total;
}

double generator_apply(const MarkedHerdsState& s, const SimParams& params, int k) {
    const double here = evaluate_functional(k, s, params.d);
    double sum = 0.0;
    for (auto& j : enabled_jumps(s, params))
        sum += j.rate * (evaluate_functional(k, apply_jump(s, j, true), params.d) - here);
    return sum;
}

FrozenStats run_frozen_stats(const SimParams& params, std::uint64_t reps, double observe_every) {
    if (reps == 0) throw std::invalid_argument("reps must be positive");
    FrozenStats st;
    if (observe_every > 0)
        for (double g = 0.0; g <= params.horizon; g += observe_every) st.grid.push_back(g);
    struct PerRun {
        MarkedRun run;
        std::vector<std::array<double, 5>> series;
    };
    std::vector<PerRun> runs(reps);
    parallel_for(reps, [&](std::size_t r) {
        Rng rng(params.seed, "frozen", r);
        PerRun& out = runs[r];
        MarkedOptions o;
        o.observe_every = observe_every;
        if (observe_every > 0)
            o.on_snapshot = [&](double, const MarkedHerdsState& s) {
                std::array<double, 5> f{};
                for (int k = 1; k <= 5; ++k) f[static_cast<std::size_t>(k - 1)] = evaluate_functional(k, s, params.d);
                out.series.push_back(f);
            };
        out.run = run_marked(params, MarkedHerdsState::initial(), true, rng, o);
        // After the last move every functional but F5 is zero and F5 is final.
        while (out.series.size() < st.grid.size())
            out.series.push_back({0, 0, 0, 0, static_cast<double>(out.run.frozen)});
    });
    double sum = 0, sq = 0;
    for (auto& r : runs) {
        if (r.run.outcome != Outcome::Died) {
            ++st.censored;
            continue;
        }
        ++st.completed;
        const double k = static_cast<double>(r.run.frozen);
        sum += k;
        sq += k * k;
    }
    if (st.completed > 0) {
        const double n = static_cast<double>(st.completed);
        st.mean_frozen = sum / n;
        st.se = st.completed > 1 ? std::sqrt(std::max(0.0, (sq - n * st.mean_frozen * st.mean_frozen) / (n - 1)) / n) : 0.0;
    }
    st.mean_functionals.assign(st.grid.size(), {0, 0, 0, 0, 0});
    for (auto& r : runs)
        for (std::size_t g = 0; g < st.grid.size(); ++g)
            for (std::size_t k = 0; k < 5; ++k) st.mean_functionals[g][k] += r.series[g][k] / static_cast<double>(reps);
    return st;
}

}  // namespace herdsim
