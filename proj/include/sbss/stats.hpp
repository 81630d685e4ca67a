#pragma once

// Wilcoxon signed-rank test for paired accuracy series, plus win/tie/loss
// scoring across many comparisons.
//
// Zero differences are dropped (Wilcoxon's prescription), absolute
// differences get average ranks on ties, and the statistic is
// W = min(W+, W-). For n_effective <= 20 the two-sided p-value is exact:
// the fraction of all 2^n sign assignments whose min(W+, W-) is at most
// the observed one. Beyond that, normal approximation with tie correction
// and a 0.5 continuity correction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbss/error.hpp"

namespace sbss {

using json = nlohmann::ordered_json;

struct PairedSeries {
    std::vector<double> a;
    std::vector<double> b;
    // context labels carried into the verdict
    std::string dataset;
    std::string model;
    std::string kind;
};

enum class Outcome : std::uint8_t { win, tie, loss };

inline std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::win: return "win";
        case Outcome::tie: return "tie";
        case Outcome::loss: return "loss";
    }
    return "tie";
}

struct ComparisonVerdict {
    double statistic = 0.0; // W = min(W+, W-)
    double p_value = 1.0;
    double alpha = 0.05;
    Outcome outcome = Outcome::tie;
    std::size_t n_pairs = 0;
    std::size_t n_effective = 0; // pairs left after zero differences drop
    std::string dataset;
    std::string model;
    std::string kind;
};

namespace detail {

// Average ranks of |d| ascending. Ranks are half-integers, so every sum of
// them is exact in double precision.
inline std::vector<double> average_ranks(const std::vector<double>& abs_diffs) {
    const std::size_t n = abs_diffs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return abs_diffs[x] < abs_diffs[y]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_diffs[order[j + 1]] == abs_diffs[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

} // namespace detail

inline ComparisonVerdict wilcoxon_signed_rank(const PairedSeries& series, double alpha = 0.05) {
    if (series.a.empty()) throw DataError("wilcoxon: empty series");
    if (series.a.size() != series.b.size())
        throw DataError("wilcoxon: series lengths differ (" + std::to_string(series.a.size()) + " vs " +
                        std::to_string(series.b.size()) + ")");

    ComparisonVerdict v;
    v.alpha = alpha;
    v.n_pairs = series.a.size();
    v.dataset = series.dataset;
    v.model = series.model;
    v.kind = series.kind;

    std::vector<double> diffs;
    double diff_sum = 0.0;
    for (std::size_t i = 0; i < series.a.size(); ++i) {
        const double d = series.a[i] - series.b[i];
        if (!std::isfinite(d)) throw DataError("wilcoxon: non-finite difference at pair " + std::to_string(i));
        if (d != 0.0) {
            diffs.push_back(d);
            diff_sum += d;
        }
    }
    v.n_effective = diffs.size();
    if (diffs.empty()) {
        // no information: flagged tie, not an error
        v.statistic = 0.0;
        v.p_value = 1.0;
        v.outcome = Outcome::tie;
        return v;
    }

    const std::size_t n = diffs.size();
    std::vector<double> abs_diffs(n);
    for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::abs(diffs[i]);
    const std::vector<double> ranks = detail::average_ranks(abs_diffs);

    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0.0) w_plus += ranks[i];
        else w_minus += ranks[i];
    }
    const double w = std::min(w_plus, w_minus);
    const double rank_sum = w_plus + w_minus; // n(n+1)/2
    v.statistic = w;

    if (n <= 20) {
        const std::uint64_t total = std::uint64_t{1} << n;
        std::uint64_t hits = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double wp = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (std::uint64_t{1} << i)) wp += ranks[i];
            if (std::min(wp, rank_sum - wp) <= w) ++hits;
        }
        v.p_value = static_cast<double>(hits) / static_cast<double>(total);
    } else {
        const double nd = static_cast<double>(n);
        const double mean = nd * (nd + 1.0) / 4.0;
        double variance = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
        // tie correction: subtract sum(t^3 - t)/48 over rank tie groups
        std::vector<double> sorted_abs = abs_diffs;
        std::sort(sorted_abs.begin(), sorted_abs.end());
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && sorted_abs[j + 1] == sorted_abs[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            variance -= (t * t * t - t) / 48.0;
            i = j + 1;
        }
        const double z = (w - mean + 0.5) / std::sqrt(variance);
        v.p_value = std::min(1.0, 2.0 * detail::normal_cdf(z));
    }

    if (v.p_value < alpha && diff_sum > 0.0) v.outcome = Outcome::win;
    else if (v.p_value < alpha && diff_sum < 0.0) v.outcome = Outcome::loss;
    else v.outcome = Outcome::tie;
    return v;
}

// {dataset, model, kind, n_pairs, n_effective, W, p_value, alpha, outcome}
inline json verdict_json(const ComparisonVerdict& v) {
    return {{"dataset", v.dataset},
            {"model", v.model},
            {"kind", v.kind},
            {"n_pairs", v.n_pairs},
            {"n_effective", v.n_effective},
            {"W", v.statistic},
            {"p_value", v.p_value},
            {"alpha", v.alpha},
            {"outcome", std::string(to_string(v.outcome))}};
}

struct ScoreRow {
    std::string model; // empty for per-kind totals
    std::string kind;
    std::size_t loss = 0, tie = 0, win = 0;
    double loss_pct = 0.0, tie_pct = 0.0, win_pct = 0.0;

    std::size_t total() const { return loss + tie + win; }
};

struct ScoreTable {
    std::vector<ScoreRow> rows;   // one per (model, kind) with any verdicts
    std::vector<ScoreRow> totals; // one per kind
};

namespace detail {

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

inline void finish_row(ScoreRow& r) {
    const double total = static_cast<double>(r.total());
    r.loss_pct = round2(100.0 * static_cast<double>(r.loss) / total);
    r.tie_pct = round2(100.0 * static_cast<double>(r.tie) / total);
    r.win_pct = round2(100.0 * static_cast<double>(r.win) / total);
}

// The five built-in kinds first, in their usual column order, then anything
// else lexicographically.
inline int kind_order(const std::string& kind) {
    static constexpr std::string_view known[] = {"chebyshev", "cityblock", "euclidean", "cosine",
                                                 "correlation"};
    for (int i = 0; i < 5; ++i)
        if (kind == known[i]) return i;
    return 5;
}

} // namespace detail

inline ScoreTable score_comparisons(std::span<const ComparisonVerdict> verdicts) {
    if (verdicts.empty()) throw DataError("score_comparisons: no verdicts");

    ScoreTable table;
    const auto row_for = [](std::vector<ScoreRow>& rows, const std::string& model,
                            const std::string& kind) -> ScoreRow& {
        for (auto& r : rows)
            if (r.model == model && r.kind == kind) return r;
        rows.push_back({model, kind});
        return rows.back();
    };

    for (const auto& v : verdicts) {
        auto bump = [&](ScoreRow& r) {
            if (v.outcome == Outcome::win) ++r.win;
            else if (v.outcome == Outcome::loss) ++r.loss;
            else ++r.tie;
        };
        bump(row_for(table.rows, v.model, v.kind));
        bump(row_for(table.totals, "", v.kind));
    }

    const auto order = [](const ScoreRow& x, const ScoreRow& y) {
        if (x.model != y.model) return x.model < y.model;
        const int kx = detail::kind_order(x.kind), ky = detail::kind_order(y.kind);
        if (kx != ky) return kx < ky;
        return x.kind < y.kind;
    };
    std::sort(table.rows.begin(), table.rows.end(), order);
    std::sort(table.totals.begin(), table.totals.end(), order);
    for (auto& r : table.rows) detail::finish_row(r);
    for (auto& r : table.totals) detail::finish_row(r);
    return table;
}

inline json score_table_json(const ScoreTable& table) {
    const auto row_json = [](const ScoreRow& r, bool with_model) {
        json j = json::object();
        if (with_model) j["model"] = r.model;
        j["kind"] = r.kind;
        j["loss"] = r.loss;
        j["tie"] = r.tie;
        j["win"] = r.win;
        j["loss_pct"] = r.loss_pct;
        j["tie_pct"] = r.tie_pct;
        j["win_pct"] = r.win_pct;
        return j;
    };
    json rows = json::array(), totals = json::array();
    for (const auto& r : table.rows) rows.push_back(row_json(r, true));
    for (const auto& r : table.totals) totals.push_back(row_json(r, false));
    return {{"rows", rows}, {"totals", totals}};
}

// Aligned text rendering, one line per (model, kind) plus per-kind totals.
inline std::string render_score_table(const ScoreTable& table) {
    const auto pct = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", x);
        std::string s = buf;
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
        return s;
    };
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-12s %6s %6s %6s %8s %8s %8s\n", "model", "kind", "loss",
                  "tie", "win", "loss%", "tie%", "win%");
    out += line;
    const auto emit = [&](const ScoreRow& r, const char* model) {
        std::snprintf(line, sizeof(line), "%-12s %-12s %6zu %6zu %6zu %8s %8s %8s\n", model,
                      r.kind.c_str(), r.loss, r.tie, r.win, pct(r.loss_pct).c_str(),
                      pct(r.tie_pct).c_str(), pct(r.win_pct).c_str());
        out += line;
    };
    for (const auto& r : table.rows) emit(r, r.model.c_str());
    for (const auto& r : table.totals) emit(r, "total");
    return out;
}

} // namespace sbss
