#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "herdsim/tree_algebra.hpp"

namespace herdsim {

using Site = std::uint32_t;
constexpr Site kNoSite = 0xffffffffu;

// Interned vertices of the infinite d-regular tree, created lazily as the simulation touches them.
// Site 0 is the root o. Neighbour slot k < child count is the k-th child, the last slot the parent.
class SitePool {
public:
    explicit SitePool(int d) : d_(d) { make(kNoSite, 0, 0); }

    int d() const { return d_; }
    std::size_t size() const { return parent_.size(); }
    Site parent(Site s) const { return parent_[s]; }
    int depth(Site s) const { return depth_[s]; }
    int label(Site s) const { return label_[s]; }
    int child_count(Site s) const { return s == 0 ? d_ : d_ - 1; }

    Site child(Site s, int k) {
        Site c = children_[std::size_t(s) * std::size_t(d_) + std::size_t(k)];
        if (c != kNoSite) return c;
        c = make(s, depth_[s] + 1, k);
        children_[std::size_t(s) * std::size_t(d_) + std::size_t(k)] = c;
        return c;
    }
    Site child_if_exists(Site s, int k) const { return children_[std::size_t(s) * std::size_t(d_) + std::size_t(k)]; }

    Site neighbor(Site s, int k) { return k < child_count(s) ? child(s, k) : parent_[s]; }
    Site neighbor_if_exists(Site s, int k) const { return k < child_count(s) ? child_if_exists(s, k) : parent_[s]; }

    bool adjacent(Site a, Site b) const { return parent_[a] == b || parent_[b] == a; }

    // True iff x is `top` or lies below it.
    bool in_subtree(Site x, Site top) const {
        while (depth_[x] > depth_[top]) x = parent_[x];
        return x == top;
    }

    Site lca(Site a, Site b) const {
        while (depth_[a] > depth_[b]) a = parent_[a];
        while (depth_[b] > depth_[a]) b = parent_[b];
        while (a != b) {
            a = parent_[a];
            b = parent_[b];
        }
        return a;
    }

    Site intern(const TreeAddress& a) {
        Site s = 0;
        for (auto k : a.path) s = child(s, k);
        return s;
    }

    TreeAddress address(Site s) const {
        TreeAddress a;
        a.path.resize(static_cast<std::size_t>(depth_[s]));
        for (int i = depth_[s] - 1; i >= 0; --i) {
            a.path[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(label_[s]);
            s = parent_[s];
        }
        return a;
    }

private:
    Site make(Site parent, int depth, int label) {
        Site s = static_cast<Site>(parent_.size());
        parent_.push_back(parent);
        depth_.push_back(depth);
        label_.push_back(label);
        children_.resize(children_.size() + std::size_t(d_), kNoSite);
        return s;
    }

    int d_;
    std::vector<Site> parent_;
    std::vector<int> depth_;
    std::vector<int> label_;
    std::vector<Site> children_;
};

// Vector with O(1) insert, erase and uniform access, used for particle and edge sets.
class IndexedSet {
public:
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    bool contains(Site s) const { return pos_.count(s) > 0; }
    Site operator[](std::size_t i) const { return items_[i]; }
    const std::vector<Site>& items() const { return items_; }

    bool insert(Site s) {
        if (!pos_.emplace(s, items_.size()).second) return false;
        items_.push_back(s);
        return true;
    }
    bool erase(Site s) {
        auto it = pos_.find(s);
        if (it == pos_.end()) return false;
        std::size_t i = it->second;
        pos_.erase(it);
        Site last = items_.back();
        items_.pop_back();
        if (i < items_.size()) {
            items_[i] = last;
            pos_[last] = i;
        }
        return true;
    }

private:
    std::vector<Site> items_;
    std::unordered_map<Site, std::size_t> pos_;
};

// Occupied set of one herd with its Steiner tree kept up to date.
// The Steiner edges are {x, parent(x)} for the sites x strictly below the common ancestor of the
// particles whose subtree holds a particle; `cnt_` stores those subtree counts.
class TreeHerd {
public:
    std::size_t size() const { return particles_.size(); }
    bool empty() const { return particles_.empty(); }
    bool contains(Site s) const { return particles_.contains(s); }
    const IndexedSet& particles() const { return particles_; }
    // Lower endpoints of the active edges.
    const IndexedSet& active() const { return active_; }
    // Ordered pairs (particle, free neighbour).
    std::size_t boundary_pairs(int d) const { return std::size_t(d) * size() - 2 * inner_edges_; }
    std::size_t inner_edges() const { return inner_edges_; }

    void add(SitePool& pool, Site s) {
        if (!particles_.insert(s)) return;
        for (int k = 0; k < pool.d(); ++k) {
            Site w = pool.neighbor_if_exists(s, k);
            if (w != kNoSite && particles_.contains(w)) ++inner_edges_;
        }
        if (size() == 1) {
            top_ = s;
            return;
        }
        Site meet = pool.lca(top_, s);
        if (meet != top_) {
            // The old common ancestor and the path above it now separate all previous particles.
            const int old = static_cast<int>(size()) - 1;
            for (Site x = top_; x != meet; x = pool.parent(x)) bump(x, old);
            top_ = meet;
        }
        for (Site x = s; x != top_; x = pool.parent(x)) bump(x, 1);
    }

    void remove(SitePool& pool, Site s) {
        if (!particles_.erase(s)) return;
        for (int k = 0; k < pool.d(); ++k) {
            Site w = pool.neighbor_if_exists(s, k);
            if (w != kNoSite && particles_.contains(w)) --inner_edges_;
        }
        if (empty()) {
            cnt_.clear();
            active_ = IndexedSet{};
            top_ = kNoSite;
            return;
        }
        for (Site x = s; x != top_; x = pool.parent(x)) bump(x, -1);
        // Descend while the ancestor is empty and only one child branch carries particles.
        while (!particles_.contains(top_)) {
            Site only = kNoSite;
            int branches = 0;
            for (int k = 0; k < pool.child_count(top_); ++k) {
                Site c = pool.child_if_exists(top_, k);
                if (c != kNoSite && cnt_.count(c)) {
                    only = c;
                    ++branches;
                }
            }
            if (branches != 1) break;
            cnt_.erase(only);
            active_.erase(only);
            top_ = only;
        }
    }

    // Particles in the subtree of x, for x the lower end of an active edge.
    std::vector<Site> collect_below(const SitePool& pool, Site x) const {
        std::vector<Site> out, stack{x};
        while (!stack.empty()) {
            Site y = stack.back();
            stack.pop_back();
            if (particles_.contains(y)) out.push_back(y);
            for (int k = 0; k < pool.child_count(y); ++k) {
                Site c = pool.child_if_exists(y, k);
                if (c != kNoSite && cnt_.count(c)) stack.push_back(c);
            }
        }
        return out;
    }

    Site top() const { return top_; }

private:
    void bump(Site x, int delta) {
        int& c = cnt_[x];
        c += delta;
        if (c == 0) {
            cnt_.erase(x);
            active_.erase(x);
        } else {
            active_.insert(x);
        }
    }

    IndexedSet particles_;
    IndexedSet active_;
    std::unordered_map<Site, int> cnt_;
    std::size_t inner_edges_ = 0;
    Site top_ = kNoSite;
};

}  // namespace herdsim
