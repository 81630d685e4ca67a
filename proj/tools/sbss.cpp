// sbss - similarity-based stratified k-fold splitting toolkit.
//
// Subcommands: imbalance, split, evaluate, compare. All file outputs are
// JSON with a fixed field order and embed a manifest (command, resolved
// flags, toolkit version, input fingerprint), so identical inputs and flags
// produce byte-identical files.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 computation error.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sbss/sbss.hpp"

namespace fs = std::filesystem;
using sbss::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCompute = 3;

unsigned env_threads() {
    const char* raw = std::getenv("SBSS_THREADS");
    if (raw == nullptr || *raw == '\0') return 0; // auto
    char* end = nullptr;
    const unsigned long v = std::strtoul(raw, &end, 10);
    if (end == raw || *end != '\0') return 0;
    return static_cast<unsigned>(v);
}

// FNV-1a over the raw file bytes, printed as 16 hex digits.
std::string file_fingerprint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sbss::DataError("cannot open file: " + path.string());
    std::uint64_t hash = 0xCBF29CE484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001B3ull;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

json make_manifest(const std::string& command, const std::string& fingerprint, json flags) {
    return {{"command", command},
            {"version", sbss::kVersion},
            {"dataset_fingerprint", fingerprint},
            {"flags", std::move(flags)}};
}

void write_json_file(const json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sbss::DataError("cannot open file for writing: " + path.string());
    out << j.dump(2) << '\n';
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sbss::DataError("cannot open file: " + path.string());
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw sbss::DataError(path.string() + ": invalid JSON: " + e.what());
    }
}

void log_done(const std::string& what) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%FT%TZ", std::gmtime(&t));
    std::cerr << "[sbss] " << stamp << " " << what << "\n";
}

struct InputOpts {
    std::string input;
    std::string label_column;
    bool no_header = false;
    bool no_normalize = false;
};

void add_input_options(CLI::App* cmd, InputOpts& opts, bool with_normalize = true) {
    cmd->add_option("input", opts.input, "input CSV file")->required();
    cmd->add_option("-l,--label-column", opts.label_column,
                    "label column, by header name or zero-based index")
        ->required();
    cmd->add_flag("--no-header", opts.no_header, "the CSV has no header row");
    if (with_normalize)
        cmd->add_flag("--no-normalize", opts.no_normalize,
                      "skip per-column min-max normalization (inputs are already normalized)");
}

sbss::Dataset load_input(const InputOpts& opts) {
    sbss::Dataset ds = sbss::load_csv(opts.input, opts.label_column, !opts.no_header);
    if (!opts.no_normalize) ds = sbss::normalize_minmax(ds);
    return ds;
}

json input_flags(const InputOpts& opts) {
    return {{"input", opts.input},
            {"label_column", opts.label_column},
            {"has_header", !opts.no_header},
            {"normalize", !opts.no_normalize}};
}

// Largest fold the strategy can produce: the stratified deal wraps across
// labels, so its folds stay within one of n/k; the sbss remainder rule sends
// every label's short group to fold 0, which therefore holds ceil(count/k)
// of every label. The smallest training partition follows directly, so a
// bad --knn-k is rejected before any matrix work.
std::size_t min_training_size(const sbss::Dataset& ds, std::size_t k, sbss::SplitStrategy strategy) {
    std::size_t max_fold = 0;
    if (strategy == sbss::SplitStrategy::stratified) {
        max_fold = (ds.n_rows + k - 1) / k;
    } else {
        const auto lc = sbss::label_counts(ds);
        for (const std::size_t c : lc.counts) max_fold += (c + k - 1) / k;
    }
    return ds.n_rows - max_fold;
}

// ---------------------------------------------------------------- imbalance

int run_imbalance(const InputOpts& opts, const std::string& output) {
    InputOpts raw = opts;
    raw.no_normalize = true; // counts only, features untouched
    const sbss::Dataset ds = sbss::load_csv(raw.input, raw.label_column, !raw.no_header);
    const json summary = sbss::dataset_summary(ds);
    std::cout << summary.dump(2) << '\n';
    if (!output.empty()) {
        json with_manifest = summary;
        with_manifest["manifest"] =
            make_manifest("imbalance", file_fingerprint(opts.input), input_flags(raw));
        write_json_file(with_manifest, output);
    }
    return kExitOk;
}

// -------------------------------------------------------------------- split

struct SplitOpts {
    InputOpts in;
    std::size_t k = 10;
    std::string strategy = "sbss";
    std::string similarity = "correlation";
    std::uint64_t seed = 0;
    std::string output;
    std::string matrix_dump;
};

int run_split(const SplitOpts& opts) {
    const sbss::Dataset ds = load_input(opts.in);

    sbss::SplitConfig cfg;
    cfg.k = opts.k;
    cfg.strategy = sbss::parse_strategy(opts.strategy);
    cfg.kind = sbss::parse_similarity(opts.similarity);
    cfg.seed = opts.seed;

    std::optional<sbss::DistanceMatrix> matrix;
    if (cfg.strategy == sbss::SplitStrategy::sbss || !opts.matrix_dump.empty())
        matrix.emplace(sbss::pairwise_matrix(cfg.kind, ds, env_threads()));

    const sbss::FoldAssignment fa = sbss::make_split(ds, matrix ? &*matrix : nullptr, cfg);

    json file = sbss::fold_file_json(fa, ds.name);
    json flags = input_flags(opts.in);
    flags["k"] = opts.k;
    flags["strategy"] = opts.strategy;
    flags["similarity"] = cfg.strategy == sbss::SplitStrategy::sbss ? json(opts.similarity) : json(nullptr);
    flags["seed"] = opts.seed;
    flags["output"] = opts.output;
    file["manifest"] = make_manifest("split", file_fingerprint(opts.in.input), std::move(flags));
    write_json_file(file, opts.output);

    if (!opts.matrix_dump.empty()) {
        sbss::write_matrix_dump(*matrix, opts.matrix_dump);
        std::cout << sbss::matrix_summary(*matrix).dump(2) << '\n';
    }
    log_done("split -> " + opts.output);
    return kExitOk;
}

// ----------------------------------------------------------------- evaluate

struct EvaluateOpts {
    InputOpts in;
    std::size_t k = 10;
    std::string strategy = "sbss";
    std::string similarity = "correlation";
    std::size_t repetitions = 10;
    std::uint64_t seed = 0;
    std::size_t knn_k = 5;
    std::string folds_file;
    std::string output;
};

int run_evaluate(const EvaluateOpts& opts) {
    const sbss::Dataset ds = load_input(opts.in);
    const sbss::KnnConfig knn{.n_neighbors = opts.knn_k};

    sbss::EvaluationReport report;
    if (!opts.folds_file.empty()) {
        // evaluate a split file produced earlier (single repetition)
        std::string fold_dataset;
        const sbss::FoldAssignment fa = sbss::parse_fold_file(read_json_file(opts.folds_file), &fold_dataset);
        if (fa.n() != ds.n_rows)
            throw sbss::DataError("fold file covers " + std::to_string(fa.n()) + " samples, dataset has " +
                                  std::to_string(ds.n_rows));
        report = sbss::evaluate_single(ds, fa, knn);
    } else {
        const auto strategy = sbss::parse_strategy(opts.strategy);
        const std::size_t min_train = min_training_size(ds, opts.k, strategy);
        if (opts.knn_k > min_train)
            throw sbss::ComputeError("--knn-k " + std::to_string(opts.knn_k) +
                                     " exceeds the smallest training partition (" +
                                     std::to_string(min_train) + " samples)");
        report = sbss::run_experiment(ds, sbss::parse_strategy(opts.strategy),
                                      sbss::parse_similarity(opts.similarity), opts.k,
                                      opts.repetitions, opts.seed, knn, env_threads());
    }

    json file = sbss::report_json(report);
    json flags = input_flags(opts.in);
    flags["k"] = report.k;
    flags["strategy"] = std::string(sbss::to_string(report.strategy));
    flags["similarity"] = report.kind ? json(std::string(sbss::to_string(*report.kind))) : json(nullptr);
    flags["repetitions"] = report.repetitions;
    flags["seed"] = opts.seed;
    flags["knn_k"] = opts.knn_k;
    if (!opts.folds_file.empty()) flags["folds"] = opts.folds_file;
    flags["output"] = opts.output;
    file["manifest"] = make_manifest("evaluate", file_fingerprint(opts.in.input), std::move(flags));
    write_json_file(file, opts.output);

    char line[160];
    std::snprintf(line, sizeof(line), "%s %s: test %.3f (%.3f), train %.3f (%.3f)",
                  report.dataset.c_str(), std::string(sbss::to_string(report.strategy)).c_str(),
                  report.mean_test, report.std_test, report.mean_train, report.std_train);
    std::cout << line << '\n';
    log_done("evaluate -> " + opts.output);
    return kExitOk;
}

// ------------------------------------------------------------------ compare

struct CompareOpts {
    std::string report_a;
    std::string report_b;
    double alpha = 0.05;
    std::string pairing = "repetition";
    std::string output;
};

int run_compare(const CompareOpts& opts) {
    const json ja = read_json_file(opts.report_a);
    const json jb = read_json_file(opts.report_b);
    const sbss::EvaluationReport a = sbss::parse_report(ja);
    const sbss::EvaluationReport b = sbss::parse_report(jb);

    if (a.k != b.k || a.repetitions != b.repetitions)
        throw sbss::DataError("incomparable reports: k or repetitions differ");
    const auto fingerprint_of = [](const json& j) -> std::string {
        if (j.contains("manifest") && j["manifest"].contains("dataset_fingerprint"))
            return j["manifest"]["dataset_fingerprint"].get<std::string>();
        return {};
    };
    const std::string fa = fingerprint_of(ja), fb = fingerprint_of(jb);
    if (!fa.empty() && !fb.empty()) {
        if (fa != fb) throw sbss::DataError("incomparable reports: dataset fingerprints differ");
    } else if (a.dataset != b.dataset) {
        throw sbss::DataError("incomparable reports: datasets differ");
    }

    sbss::PairedSeries series;
    series.dataset = a.dataset;
    series.model = ja.contains("model") ? ja["model"].get<std::string>() : "knn";
    series.kind = a.kind ? std::string(sbss::to_string(*a.kind))
                         : (b.kind ? std::string(sbss::to_string(*b.kind)) : "none");
    if (opts.pairing == "repetition") {
        series.a = a.rep_means_test();
        series.b = b.rep_means_test();
    } else {
        series.a = a.fold_tests();
        series.b = b.fold_tests();
        if (series.a.size() != series.b.size())
            throw sbss::DataError("incomparable reports: per-fold shapes differ");
    }

    const sbss::ComparisonVerdict verdict = sbss::wilcoxon_signed_rank(series, opts.alpha);
    const json jv = sbss::verdict_json(verdict);
    std::cout << jv.dump(2) << '\n';
    char line[80];
    std::snprintf(line, sizeof(line), "%s (p=%.6g)",
                  verdict.outcome == sbss::Outcome::win    ? "WIN"
                  : verdict.outcome == sbss::Outcome::loss ? "LOSS"
                                                           : "TIE",
                  verdict.p_value);
    std::cout << line << '\n';
    if (!opts.output.empty()) write_json_file(jv, opts.output);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"similarity-based stratified k-fold splitting toolkit"};
    app.set_version_flag("--version", sbss::kVersion);
    app.require_subcommand(1);

    InputOpts imbalance_in;
    std::string imbalance_output;
    CLI::App* imbalance = app.add_subcommand("imbalance", "dataset summary with the class imbalance metric");
    add_input_options(imbalance, imbalance_in, /*with_normalize=*/false);
    imbalance->add_option("-o,--output", imbalance_output, "also write the summary JSON to a file");

    SplitOpts split_opts;
    CLI::App* split = app.add_subcommand("split", "write a k-fold assignment file");
    add_input_options(split, split_opts.in);
    split->add_option("-k,--k", split_opts.k, "number of folds")->check(CLI::Range(2, 1 << 20));
    split->add_option("-s,--strategy", split_opts.strategy, "splitting strategy")
        ->check(CLI::IsMember({"sbss", "stratified"}));
    split->add_option("-m,--similarity", split_opts.similarity, "similarity kind (sbss strategy)")
        ->check(CLI::IsMember({"chebyshev", "cityblock", "euclidean", "cosine", "correlation"}));
    split->add_option("--seed", split_opts.seed, "random seed");
    split->add_option("-o,--output", split_opts.output, "fold file to write")->required();
    split->add_option("--matrix-dump", split_opts.matrix_dump,
                      "also dump the pairwise distance matrix (binary) and print its summary");

    EvaluateOpts eval_opts;
    CLI::App* evaluate = app.add_subcommand("evaluate", "run the KNN cross-validation experiment");
    add_input_options(evaluate, eval_opts.in);
    evaluate->add_option("-k,--k", eval_opts.k, "number of folds")->check(CLI::Range(2, 1 << 20));
    evaluate->add_option("-s,--strategy", eval_opts.strategy, "splitting strategy")
        ->check(CLI::IsMember({"sbss", "stratified"}));
    evaluate->add_option("-m,--similarity", eval_opts.similarity, "similarity kind (sbss strategy)")
        ->check(CLI::IsMember({"chebyshev", "cityblock", "euclidean", "cosine", "correlation"}));
    evaluate->add_option("-r,--repetitions", eval_opts.repetitions, "number of repeated splits")
        ->check(CLI::Range(1, 1 << 20));
    evaluate->add_option("--seed", eval_opts.seed, "base seed; repetition r uses seed + r");
    evaluate->add_option("--knn-k", eval_opts.knn_k, "KNN neighbor count")->check(CLI::Range(1, 1 << 20));
    evaluate->add_option("--folds", eval_opts.folds_file,
                         "evaluate an existing fold file instead of re-splitting");
    evaluate->add_option("-o,--output", eval_opts.output, "report file to write")->required();

    CompareOpts cmp_opts;
    CLI::App* compare = app.add_subcommand("compare", "Wilcoxon signed-rank verdict between two reports");
    compare->add_option("report_a", cmp_opts.report_a, "candidate report JSON")->required();
    compare->add_option("report_b", cmp_opts.report_b, "baseline report JSON")->required();
    compare->add_option("--alpha", cmp_opts.alpha, "significance level")
        ->check(CLI::Range(1e-9, 1.0));
    compare->add_option("--pairing", cmp_opts.pairing, "pair repetition means or individual folds")
        ->check(CLI::IsMember({"repetition", "fold"}));
    compare->add_option("-o,--output", cmp_opts.output, "also write the verdict JSON to a file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (imbalance->parsed()) return run_imbalance(imbalance_in, imbalance_output);
        if (split->parsed()) return run_split(split_opts);
        if (evaluate->parsed()) {
            if (!eval_opts.folds_file.empty() && evaluate->count("--repetitions") > 0 &&
                eval_opts.repetitions != 1) {
                std::cerr << "error: --folds evaluates a single split; --repetitions must be 1\n";
                return kExitUsage;
            }
            return run_evaluate(eval_opts);
        }
        if (compare->parsed()) return run_compare(cmp_opts);
    } catch (const sbss::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const sbss::ComputeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCompute;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCompute;
    }
    return kExitUsage;
}
