#pragma once

#include <cstddef>
#include <vector>

namespace herdsim {

// Fenwick tree over nonnegative weights supporting point updates and sampling by cumulative weight.
class WeightedIndex {
public:
    explicit WeightedIndex(std::size_t capacity = 0) { resize(capacity); }

    void resize(std::size_t capacity) {
        if (capacity <= weights_.size()) return;
        std::size_t cap = 1;
        while (cap < capacity) cap <<= 1;
        std::vector<double> w = weights_;
        w.resize(cap, 0.0);
        weights_ = std::move(w);
        rebuild();
    }

    std::size_t capacity() const { return weights_.size(); }
    double weight(std::size_t i) const { return weights_[i]; }
    double total() const { return total_; }

    void set(std::size_t i, double w) {
        if (i >= weights_.size()) resize(i + 1);
        const double delta = w - weights_[i];
        if (delta == 0.0) return;
        weights_[i] = w;
        total_ += delta;
        for (std::size_t k = i + 1; k <= tree_.size(); k += k & (~k + 1)) tree_[k - 1] += delta;
        if (++updates_ >= kRebuildEvery) rebuild();
    }

    // Index whose cumulative range contains u, for u in [0, total()).
    std::size_t find(double u) const {
        std::size_t pos = 0;
        for (std::size_t step = tree_.size(); step > 0; step >>= 1) {
            if (pos + step <= tree_.size() && tree_[pos + step - 1] <= u) {
                pos += step;
                u -= tree_[pos - 1];
            }
        }
        // Guard against rounding at the upper end by stepping back to a positive weight.
        while (pos >= weights_.size() || weights_[pos] <= 0.0) {
            if (pos == 0) break;
            --pos;
        }
        return pos;
    }

    void rebuild() {
        tree_.assign(weights_.size(), 0.0);
        total_ = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            total_ += weights_[i];
            tree_[i] += weights_[i];
            std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
            if (parent <= tree_.size()) tree_[parent - 1] += tree_[i];
        }
        updates_ = 0;
    }

private:
    static constexpr std::size_t kRebuildEvery = 1 << 16;
    std::vector<double> weights_;
    std::vector<double> tree_;
    double total_ = 0.0;
    std::size_t updates_ = 0;
};

}  // namespace herdsim
