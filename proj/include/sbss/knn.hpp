#pragma once

// Small deterministic K-Nearest Neighbors classifier: euclidean metric,
// majority vote. Frozen tie rules: neighbors at equal distance are ordered
// by lowest training index; a tied vote goes to the tied label whose
// nearest representative comes first in neighbor order.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sbss/error.hpp"

namespace sbss {

struct KnnConfig {
    std::size_t n_neighbors = 5;
};

class KnnModel {
public:
    // Stores the training data verbatim (lazy learner).
    KnnModel(std::vector<double> features, std::size_t n, std::size_t dim,
             std::vector<std::int32_t> labels, KnnConfig cfg)
        : features_(std::move(features)), n_(n), dim_(dim), labels_(std::move(labels)), cfg_(cfg) {
        if (n_ == 0) throw ComputeError("knn_fit: empty training set");
        if (cfg_.n_neighbors < 1) throw ComputeError("knn_fit: n_neighbors must be at least 1");
        if (cfg_.n_neighbors > n_)
            throw ComputeError("knn_fit: n_neighbors " + std::to_string(cfg_.n_neighbors) +
                               " exceeds training size " + std::to_string(n_));
        if (features_.size() != n_ * dim_ || labels_.size() != n_)
            throw ComputeError("knn_fit: inconsistent training shapes");
    }

    std::size_t size() const { return n_; }
    std::size_t dim() const { return dim_; }
    const KnnConfig& config() const { return cfg_; }

    std::int32_t predict(std::span<const double> query) const {
        if (query.size() != dim_)
            throw ComputeError("knn_predict: query dimension " + std::to_string(query.size()) +
                               " does not match training dimension " + std::to_string(dim_));

        // Squared distances order identically to euclidean ones.
        std::vector<std::pair<double, std::size_t>> dist(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            const double* row = features_.data() + i * dim_;
            double sum = 0.0;
            for (std::size_t c = 0; c < dim_; ++c) {
                const double d = query[c] - row[c];
                sum += d * d;
            }
            dist[i] = {sum, i};
        }
        const std::size_t k = cfg_.n_neighbors;
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

        std::int32_t max_label = 0;
        for (const auto l : labels_) max_label = std::max(max_label, l);
        std::vector<std::size_t> votes(static_cast<std::size_t>(max_label) + 1, 0);
        for (std::size_t i = 0; i < k; ++i) ++votes[static_cast<std::size_t>(labels_[dist[i].second])];
        const std::size_t top = *std::max_element(votes.begin(), votes.end());

        for (std::size_t i = 0; i < k; ++i) {
            const std::int32_t label = labels_[dist[i].second];
            if (votes[static_cast<std::size_t>(label)] == top) return label;
        }
        return labels_[dist[0].second]; // unreachable
    }

private:
    std::vector<double> features_; // row-major n x dim
    std::size_t n_;
    std::size_t dim_;
    std::vector<std::int32_t> labels_;
    KnnConfig cfg_;
};

inline KnnModel knn_fit(std::vector<double> features, std::size_t n, std::size_t dim,
                        std::vector<std::int32_t> labels, KnnConfig cfg = {}) {
    return KnnModel(std::move(features), n, dim, std::move(labels), cfg);
}

// Percent of positions where the two sequences agree.
inline double accuracy(std::span<const std::int32_t> predicted, std::span<const std::int32_t> truth) {
    if (predicted.empty()) throw ComputeError("accuracy: empty sequences");
    if (predicted.size() != truth.size())
        throw ComputeError("accuracy: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                           std::to_string(truth.size()) + ")");
    std::size_t matches = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++matches;
    return 100.0 * static_cast<double>(matches) / static_cast<double>(predicted.size());
}

} // namespace sbss
