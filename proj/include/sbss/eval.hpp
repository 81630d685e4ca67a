#pragma once

// Cross-validation and the repeated-experiment harness: split, train the
// built-in KNN on k-1 folds, score train and test accuracy per fold, repeat
// under a seed schedule of base_seed + repetition so that two strategies
// can be paired repetition-for-repetition.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbss/dataset.hpp"
#include "sbss/error.hpp"
#include "sbss/knn.hpp"
#include "sbss/splitter.hpp"

namespace sbss {

struct FoldScore {
    double train_acc = 0.0;
    double test_acc = 0.0;
};

struct Repetition {
    std::uint64_t seed = 0;
    std::vector<FoldScore> folds;

    double mean_train() const {
        double s = 0.0;
        for (const auto& f : folds) s += f.train_acc;
        return s / static_cast<double>(folds.size());
    }
    double mean_test() const {
        double s = 0.0;
        for (const auto& f : folds) s += f.test_acc;
        return s / static_cast<double>(folds.size());
    }
};

struct EvaluationReport {
    std::string dataset;
    SplitStrategy strategy = SplitStrategy::sbss;
    std::optional<SimilarityKind> kind;
    std::size_t k = 10;
    std::size_t repetitions = 10;
    KnnConfig knn;
    std::vector<Repetition> per_rep;

    // Headline aggregates: mean and population std of the per-repetition
    // means. Per-fold spreads are kept alongside for inspection.
    double mean_train = 0.0, std_train = 0.0;
    double mean_test = 0.0, std_test = 0.0;
    double std_train_perfold = 0.0, std_test_perfold = 0.0;

    std::vector<double> rep_means_test() const {
        std::vector<double> v;
        v.reserve(per_rep.size());
        for (const auto& r : per_rep) v.push_back(r.mean_test());
        return v;
    }
    std::vector<double> rep_means_train() const {
        std::vector<double> v;
        v.reserve(per_rep.size());
        for (const auto& r : per_rep) v.push_back(r.mean_train());
        return v;
    }
    std::vector<double> fold_tests() const {
        std::vector<double> v;
        for (const auto& r : per_rep)
            for (const auto& f : r.folds) v.push_back(f.test_acc);
        return v;
    }
};

namespace detail {

inline double mean_of_values(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population formula (divide by N).
inline double population_std(const std::vector<double>& v) {
    const double mu = mean_of_values(v);
    double s = 0.0;
    for (const double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace detail

// For each fold: train on everything outside it, report accuracy on the
// training samples themselves and on the held-out fold.
inline std::vector<FoldScore> cross_validate(const Dataset& ds, const FoldAssignment& fa,
                                             const KnnConfig& cfg) {
    if (fa.n() != ds.n_rows) throw ComputeError("cross_validate: fold assignment does not match dataset");
    for (std::size_t f = 0; f < fa.k(); ++f)
        if (fa.folds[f].empty()) throw ComputeError("cross_validate: fold " + std::to_string(f) + " is empty");

    std::vector<FoldScore> scores(fa.k());
    for (std::size_t f = 0; f < fa.k(); ++f) {
        const auto& test_idx = fa.folds[f];
        std::vector<std::size_t> train_idx;
        train_idx.reserve(ds.n_rows - test_idx.size());
        for (std::size_t i = 0; i < ds.n_rows; ++i)
            if (fa.fold_of[i] != static_cast<std::int32_t>(f)) train_idx.push_back(i);

        if (cfg.n_neighbors > train_idx.size())
            throw ComputeError("cross_validate: n_neighbors " + std::to_string(cfg.n_neighbors) +
                               " exceeds training partition size " + std::to_string(train_idx.size()));

        std::vector<double> train_features(train_idx.size() * ds.n_cols);
        std::vector<std::int32_t> train_labels(train_idx.size());
        for (std::size_t t = 0; t < train_idx.size(); ++t) {
            const auto row = ds.row(train_idx[t]);
            std::copy(row.begin(), row.end(), train_features.begin() + static_cast<std::ptrdiff_t>(t * ds.n_cols));
            train_labels[t] = ds.labels[train_idx[t]];
        }
        const KnnModel model = knn_fit(std::move(train_features), train_idx.size(), ds.n_cols,
                                       train_labels, cfg);

        std::vector<std::int32_t> predicted(train_idx.size());
        for (std::size_t t = 0; t < train_idx.size(); ++t) predicted[t] = model.predict(ds.row(train_idx[t]));
        scores[f].train_acc = accuracy(predicted, train_labels);

        std::vector<std::int32_t> test_pred(test_idx.size());
        std::vector<std::int32_t> test_truth(test_idx.size());
        for (std::size_t t = 0; t < test_idx.size(); ++t) {
            test_pred[t] = model.predict(ds.row(test_idx[t]));
            test_truth[t] = ds.labels[test_idx[t]];
        }
        scores[f].test_acc = accuracy(test_pred, test_truth);
    }
    return scores;
}

// Report for one pre-computed fold assignment: a single repetition whose
// seed is taken from the assignment's provenance.
inline EvaluationReport evaluate_single(const Dataset& ds, const FoldAssignment& fa,
                                        KnnConfig knn_cfg = {}) {
    EvaluationReport report;
    report.dataset = ds.name;
    report.strategy = fa.strategy;
    report.kind = fa.kind;
    report.k = fa.k();
    report.repetitions = 1;
    report.knn = knn_cfg;

    Repetition rep;
    rep.seed = fa.seed;
    rep.folds = cross_validate(ds, fa, knn_cfg);
    report.per_rep.push_back(std::move(rep));

    report.mean_train = report.per_rep[0].mean_train();
    report.mean_test = report.per_rep[0].mean_test();
    report.std_train = report.std_test = 0.0;

    std::vector<double> fold_train, fold_test;
    for (const auto& f : report.per_rep[0].folds) {
        fold_train.push_back(f.train_acc);
        fold_test.push_back(f.test_acc);
    }
    report.std_train_perfold = detail::population_std(fold_train);
    report.std_test_perfold = detail::population_std(fold_test);
    return report;
}

inline EvaluationReport run_experiment(const Dataset& ds, SplitStrategy strategy, SimilarityKind kind,
                                       std::size_t k, std::size_t repetitions, std::uint64_t base_seed,
                                       KnnConfig knn_cfg = {}, unsigned threads = 0) {
    if (repetitions < 1) throw ComputeError("run_experiment: repetitions must be at least 1");

    EvaluationReport report;
    report.dataset = ds.name;
    report.strategy = strategy;
    if (strategy == SplitStrategy::sbss) report.kind = kind;
    report.k = k;
    report.repetitions = repetitions;
    report.knn = knn_cfg;

    // The matrix depends only on the data, never on the seed: computed once,
    // shared by all repetitions.
    std::optional<DistanceMatrix> matrix;
    if (strategy == SplitStrategy::sbss) matrix.emplace(pairwise_matrix(kind, ds, threads));

    for (std::size_t r = 0; r < repetitions; ++r) {
        SplitConfig cfg;
        cfg.k = k;
        cfg.kind = kind;
        cfg.seed = base_seed + r;
        cfg.strategy = strategy;
        const FoldAssignment fa = make_split(ds, matrix ? &*matrix : nullptr, cfg);
        Repetition rep;
        rep.seed = cfg.seed;
        rep.folds = cross_validate(ds, fa, knn_cfg);
        report.per_rep.push_back(std::move(rep));
    }

    const auto rep_train = report.rep_means_train();
    const auto rep_test = report.rep_means_test();
    report.mean_train = detail::mean_of_values(rep_train);
    report.std_train = detail::population_std(rep_train);
    report.mean_test = detail::mean_of_values(rep_test);
    report.std_test = detail::population_std(rep_test);

    std::vector<double> fold_train, fold_test;
    for (const auto& rep : report.per_rep)
        for (const auto& f : rep.folds) {
            fold_train.push_back(f.train_acc);
            fold_test.push_back(f.test_acc);
        }
    report.std_train_perfold = detail::population_std(fold_train);
    report.std_test_perfold = detail::population_std(fold_test);
    return report;
}

inline json report_json(const EvaluationReport& r) {
    json per_rep = json::array();
    for (const auto& rep : r.per_rep) {
        json folds = json::array();
        for (const auto& f : rep.folds)
            folds.push_back({{"train_acc", f.train_acc}, {"test_acc", f.test_acc}});
        per_rep.push_back({{"seed", rep.seed}, {"folds", folds}});
    }
    return {{"dataset", r.dataset},
            {"strategy", to_string(r.strategy)},
            {"kind", r.kind ? json(to_string(*r.kind)) : json(nullptr)},
            {"k", r.k},
            {"repetitions", r.repetitions},
            {"knn", {{"n_neighbors", r.knn.n_neighbors}}},
            {"per_rep", per_rep},
            {"mean_train", r.mean_train},
            {"std_train", r.std_train},
            {"mean_test", r.mean_test},
            {"std_test", r.std_test},
            {"std_train_perfold", r.std_train_perfold},
            {"std_test_perfold", r.std_test_perfold}};
}

inline EvaluationReport parse_report(const json& j) {
    try {
        EvaluationReport r;
        r.dataset = j.at("dataset").get<std::string>();
        r.strategy = parse_strategy(j.at("strategy").get<std::string>());
        if (!j.at("kind").is_null()) r.kind = parse_similarity(j.at("kind").get<std::string>());
        r.k = j.at("k").get<std::size_t>();
        r.repetitions = j.at("repetitions").get<std::size_t>();
        r.knn.n_neighbors = j.at("knn").at("n_neighbors").get<std::size_t>();
        for (const auto& rep : j.at("per_rep")) {
            Repetition out;
            out.seed = rep.at("seed").get<std::uint64_t>();
            for (const auto& f : rep.at("folds")) {
                const FoldScore score{f.at("train_acc").get<double>(), f.at("test_acc").get<double>()};
                if (!(score.train_acc >= 0.0 && score.train_acc <= 100.0) ||
                    !(score.test_acc >= 0.0 && score.test_acc <= 100.0))
                    throw DataError("report: accuracy outside [0,100]");
                out.folds.push_back(score);
            }
            if (out.folds.size() != r.k)
                throw DataError("report: repetition with " + std::to_string(out.folds.size()) +
                                " folds, expected " + std::to_string(r.k));
            r.per_rep.push_back(std::move(out));
        }
        if (r.per_rep.size() != r.repetitions) throw DataError("report: repetitions does not match per_rep");
        r.mean_train = j.at("mean_train").get<double>();
        r.std_train = j.at("std_train").get<double>();
        r.mean_test = j.at("mean_test").get<double>();
        r.std_test = j.at("std_test").get<double>();
        r.std_train_perfold = j.value("std_train_perfold", 0.0);
        r.std_test_perfold = j.value("std_test_perfold", 0.0);
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed report file: ") + e.what());
    }
}

} // namespace sbss
