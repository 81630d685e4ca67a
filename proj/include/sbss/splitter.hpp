#pragma once

// Fold assignment. Two strategies share the FoldAssignment contract:
//
//  * sbss        - similarity-based stratified splitting. Per label, in
//                  canonical label order: pick the pivot (smallest total
//                  distance to the other remaining same-label samples),
//                  gather its k-1 nearest remaining same-label samples,
//                  shuffle that group, deal one member per fold, remove the
//                  group, repeat until the label is exhausted.
//  * stratified  - ordinary stratified k-fold: per label, shuffle and deal
//                  round-robin, ignoring the features entirely.
//
// The group extraction is fully deterministic; the seeded shuffle within
// each group is the only stochastic step, so the multiset of groups never
// depends on the seed. Ties anywhere resolve to the lowest sample index /
// lowest fold id.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbss/dataset.hpp"
#include "sbss/error.hpp"
#include "sbss/rng.hpp"
#include "sbss/similarity.hpp"

namespace sbss {

enum class SplitStrategy : std::uint8_t { sbss = 0, stratified = 1 };

inline std::string_view to_string(SplitStrategy s) {
    return s == SplitStrategy::sbss ? "sbss" : "stratified";
}

inline SplitStrategy parse_strategy(std::string_view name) {
    if (name == "sbss") return SplitStrategy::sbss;
    if (name == "stratified") return SplitStrategy::stratified;
    throw DataError("unknown strategy \"" + std::string(name) + "\" (valid: sbss stratified)");
}

struct SplitConfig {
    std::size_t k = 10;
    SimilarityKind kind = SimilarityKind::correlation; // sbss only
    std::uint64_t seed = 0;
    SplitStrategy strategy = SplitStrategy::sbss;
};

// A pivot plus its nearest same-label companions, in selection order
// (pivot first, then increasing distance to the pivot).
struct SimilarityGroup {
    std::int32_t label = 0;
    std::vector<std::size_t> members;
    std::size_t pivot = 0;
};

struct FoldAssignment {
    std::vector<std::vector<std::size_t>> folds;
    std::vector<std::int32_t> fold_of; // sample index -> fold id
    SplitStrategy strategy = SplitStrategy::sbss;
    std::optional<SimilarityKind> kind; // absent for the stratified baseline
    std::uint64_t seed = 0;

    std::size_t k() const { return folds.size(); }
    std::size_t n() const { return fold_of.size(); }
};

// Sample with the smallest total distance to the other candidates, i.e. the
// largest similarity sum. Ties go to the lowest sample index.
inline std::size_t select_pivot(const DistanceMatrix& m, std::span<const std::size_t> candidates) {
    if (candidates.empty()) throw ComputeError("select_pivot: empty candidate set");
    std::size_t best = candidates.front();
    double best_sum = 0.0;
    bool first = true;
    for (const std::size_t i : candidates) {
        double sum = 0.0;
        for (const std::size_t j : candidates)
            if (j != i) sum += m(i, j);
        if (first || sum < best_sum || (sum == best_sum && i < best)) {
            best = i;
            best_sum = sum;
            first = false;
        }
    }
    return best;
}

// The pivot plus the group_size-1 candidates closest to it; distance ties go
// to the lowest sample index.
inline SimilarityGroup select_group(const DistanceMatrix& m, std::size_t pivot,
                                    std::span<const std::size_t> candidates,
                                    std::size_t group_size, std::int32_t label = 0) {
    if (group_size < 1 || group_size > candidates.size())
        throw ComputeError("select_group: group size " + std::to_string(group_size) +
                           " out of range for " + std::to_string(candidates.size()) + " candidates");
    if (std::find(candidates.begin(), candidates.end(), pivot) == candidates.end())
        throw ComputeError("select_group: pivot not among candidates");

    std::vector<std::pair<double, std::size_t>> by_distance;
    by_distance.reserve(candidates.size() - 1);
    for (const std::size_t j : candidates)
        if (j != pivot) by_distance.emplace_back(m(pivot, j), j);
    std::sort(by_distance.begin(), by_distance.end());

    SimilarityGroup group;
    group.label = label;
    group.pivot = pivot;
    group.members.reserve(group_size);
    group.members.push_back(pivot);
    for (std::size_t i = 0; i + 1 < group_size; ++i) group.members.push_back(by_distance[i].second);
    return group;
}

namespace detail {

inline void check_split_args(const Dataset& ds, std::size_t k) {
    if (k < 2) throw ComputeError("number of folds must be at least 2 (got " + std::to_string(k) + ")");
    if (k > ds.n_rows)
        throw ComputeError("number of folds " + std::to_string(k) + " exceeds sample count " +
                           std::to_string(ds.n_rows));
}

inline std::vector<std::vector<std::size_t>> indices_by_label(const Dataset& ds) {
    std::vector<std::vector<std::size_t>> by_label(ds.label_count());
    for (std::size_t i = 0; i < ds.n_rows; ++i)
        by_label[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    return by_label;
}

} // namespace detail

// The seed-independent part of the sbss strategy: the per-label group
// decomposition, labels in canonical order, groups in extraction order.
inline std::vector<SimilarityGroup> extract_groups(const Dataset& ds, const DistanceMatrix& m,
                                                   std::size_t k) {
    detail::check_split_args(ds, k);
    if (m.size() != ds.n_rows)
        throw ComputeError("distance matrix size does not match dataset");

    std::vector<SimilarityGroup> groups;
    auto by_label = detail::indices_by_label(ds);
    for (std::size_t label = 0; label < by_label.size(); ++label) {
        auto& pool = by_label[label]; // ascending sample indices
        while (!pool.empty()) {
            const std::size_t group_size = std::min(k, pool.size());
            const std::size_t pivot = select_pivot(m, pool);
            SimilarityGroup group =
                select_group(m, pivot, pool, group_size, static_cast<std::int32_t>(label));
            for (const std::size_t member : group.members)
                pool.erase(std::find(pool.begin(), pool.end(), member));
            groups.push_back(std::move(group));
        }
    }
    return groups;
}

inline FoldAssignment sbss_split(const Dataset& ds, const DistanceMatrix& m, const SplitConfig& cfg) {
    const std::size_t k = cfg.k;
    std::vector<SimilarityGroup> groups = extract_groups(ds, m, k);

    FoldAssignment fa;
    fa.folds.assign(k, {});
    fa.fold_of.assign(ds.n_rows, -1);
    fa.strategy = SplitStrategy::sbss;
    fa.kind = m.kind();
    fa.seed = cfg.seed;

    // per-label fold occupancy, for placing the final short group of a label
    std::vector<std::vector<std::size_t>> label_fold_count(ds.label_count(),
                                                           std::vector<std::size_t>(k, 0));

    Xoshiro256ss rng(cfg.seed);
    for (auto& group : groups) {
        std::vector<std::size_t> members = group.members;
        fisher_yates_shuffle(members, rng);

        std::vector<std::size_t> targets;
        if (members.size() == k) {
            targets.resize(k);
            std::iota(targets.begin(), targets.end(), 0);
        } else {
            // folds with the fewest samples of this label, ties to the lowest id
            targets.resize(k);
            std::iota(targets.begin(), targets.end(), 0);
            const auto& occupancy = label_fold_count[static_cast<std::size_t>(group.label)];
            std::stable_sort(targets.begin(), targets.end(),
                             [&](std::size_t a, std::size_t b) { return occupancy[a] < occupancy[b]; });
            targets.resize(members.size());
        }

        for (std::size_t i = 0; i < members.size(); ++i) {
            const std::size_t fold = targets[i];
            fa.folds[fold].push_back(members[i]);
            fa.fold_of[members[i]] = static_cast<std::int32_t>(fold);
            ++label_fold_count[static_cast<std::size_t>(group.label)][fold];
        }
    }
    for (auto& fold : fa.folds) std::sort(fold.begin(), fold.end());
    return fa;
}

inline FoldAssignment stratified_kfold_split(const Dataset& ds, const SplitConfig& cfg) {
    const std::size_t k = cfg.k;
    detail::check_split_args(ds, k);

    FoldAssignment fa;
    fa.folds.assign(k, {});
    fa.fold_of.assign(ds.n_rows, -1);
    fa.strategy = SplitStrategy::stratified;
    fa.seed = cfg.seed;

    // The dealing position carries over from one label to the next, so the
    // per-label remainders rotate instead of piling onto fold 0 and total
    // fold sizes stay within one of each other.
    Xoshiro256ss rng(cfg.seed);
    std::size_t next_fold = 0;
    for (auto& pool : detail::indices_by_label(ds)) {
        fisher_yates_shuffle(pool, rng);
        for (const std::size_t idx : pool) {
            fa.folds[next_fold].push_back(idx);
            fa.fold_of[idx] = static_cast<std::int32_t>(next_fold);
            next_fold = (next_fold + 1) % k;
        }
    }
    for (auto& fold : fa.folds) std::sort(fold.begin(), fold.end());
    return fa;
}

// Dispatcher used by the evaluation harness. `m` may be null for the
// stratified baseline; sbss requires it.
inline FoldAssignment make_split(const Dataset& ds, const DistanceMatrix* m, const SplitConfig& cfg) {
    if (cfg.strategy == SplitStrategy::stratified) return stratified_kfold_split(ds, cfg);
    if (m == nullptr) throw ComputeError("sbss split requires a distance matrix");
    return sbss_split(ds, *m, cfg);
}

// Fold file: {dataset, strategy, kind, k, seed, folds}. Indices are
// zero-based positions in the input CSV row order (header excluded).
inline json fold_file_json(const FoldAssignment& fa, const std::string& dataset_name) {
    json folds = json::array();
    for (const auto& fold : fa.folds) folds.push_back(fold);
    return {{"dataset", dataset_name},
            {"strategy", to_string(fa.strategy)},
            {"kind", fa.kind ? json(to_string(*fa.kind)) : json(nullptr)},
            {"k", fa.k()},
            {"seed", fa.seed},
            {"folds", folds}};
}

inline FoldAssignment parse_fold_file(const json& j, std::string* dataset_name = nullptr) {
    try {
        FoldAssignment fa;
        if (dataset_name) *dataset_name = j.at("dataset").get<std::string>();
        fa.strategy = parse_strategy(j.at("strategy").get<std::string>());
        if (!j.at("kind").is_null()) fa.kind = parse_similarity(j.at("kind").get<std::string>());
        fa.seed = j.at("seed").get<std::uint64_t>();
        std::size_t n = 0;
        for (const auto& fold : j.at("folds")) {
            fa.folds.emplace_back();
            for (const auto& idx : fold) {
                const auto i = idx.get<std::size_t>();
                fa.folds.back().push_back(i);
                n = std::max(n, i + 1);
            }
        }
        if (fa.folds.size() != j.at("k").get<std::size_t>())
            throw DataError("fold file: k does not match the number of folds");
        fa.fold_of.assign(n, -1);
        for (std::size_t f = 0; f < fa.folds.size(); ++f)
            for (const std::size_t i : fa.folds[f]) {
                if (fa.fold_of[i] != -1) throw DataError("fold file: sample " + std::to_string(i) + " appears twice");
                fa.fold_of[i] = static_cast<std::int32_t>(f);
            }
        for (std::size_t i = 0; i < n; ++i)
            if (fa.fold_of[i] == -1) throw DataError("fold file: sample " + std::to_string(i) + " is missing");
        return fa;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed fold file: ") + e.what());
    }
}

} // namespace sbss
