#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sbss/rng.hpp"
#include "sbss/stats.hpp"

using namespace sbss;

namespace {

// Independent oracle: ranks by pairwise counting instead of sorting, sign
// enumeration by recursion instead of bitmask iteration.
struct OracleResult {
    double w = 0.0;
    double p = 1.0;
    std::size_t n_effective = 0;
};

void enumerate(const std::vector<double>& ranks, std::size_t i, double w_plus, double total,
               double observed, std::size_t& hits) {
    if (i == ranks.size()) {
        if (std::min(w_plus, total - w_plus) <= observed) ++hits;
        return;
    }
    enumerate(ranks, i + 1, w_plus + ranks[i], total, observed, hits);
    enumerate(ranks, i + 1, w_plus, total, observed, hits);
}

OracleResult oracle_wilcoxon(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) diffs.push_back(a[i] - b[i]);
    OracleResult out;
    out.n_effective = diffs.size();
    if (diffs.empty()) return out;

    const std::size_t n = diffs.size();
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(diffs[j]) < std::abs(diffs[i])) ++less;
            if (std::abs(diffs[j]) == std::abs(diffs[i])) ++equal;
        }
        // average rank of a tie run, directly: first = less+1, last = less+equal
        ranks[i] = (static_cast<double>(less + 1) + static_cast<double>(less + equal)) / 2.0;
    }

    double w_plus = 0, w_minus = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += ranks[i];
        if (diffs[i] > 0) w_plus += ranks[i];
        else w_minus += ranks[i];
    }
    out.w = std::min(w_plus, w_minus);

    std::size_t hits = 0;
    enumerate(ranks, 0, 0.0, total, out.w, hits);
    out.p = static_cast<double>(hits) / std::pow(2.0, static_cast<double>(n));
    return out;
}

PairedSeries series(std::vector<double> a, std::vector<double> b) {
    PairedSeries s;
    s.a = std::move(a);
    s.b = std::move(b);
    s.dataset = "d";
    s.model = "knn";
    s.kind = "correlation";
    return s;
}

} // namespace

TEST_CASE("identical series give a flagged tie") {
    const auto v = wilcoxon_signed_rank(series({1, 2, 3}, {1, 2, 3}));
    CHECK(v.outcome == Outcome::tie);
    CHECK(v.n_effective == 0);
    CHECK(v.p_value == 1.0);
    CHECK(v.n_pairs == 3);
}

TEST_CASE("ten strictly positive differences win at alpha 0.05") {
    std::vector<double> a, b;
    for (int i = 1; i <= 10; ++i) {
        a.push_back(i + i * 0.1);
        b.push_back(i);
    }
    const auto v = wilcoxon_signed_rank(series(a, b));
    CHECK(v.n_effective == 10);
    CHECK(v.statistic == 0.0); // W- = 0
    CHECK(v.p_value == doctest::Approx(2.0 / 1024.0).epsilon(1e-15));
    CHECK(v.outcome == Outcome::win);
}

TEST_CASE("differences (+1, -1) are a perfectly symmetric tie") {
    const auto v = wilcoxon_signed_rank(series({1, 0}, {0, 1}));
    CHECK(v.n_effective == 2);
    CHECK(v.statistic == 1.5); // average ranks on the |1| tie
    CHECK(v.p_value == 1.0);
    CHECK(v.outcome == Outcome::tie);
}

TEST_CASE("exact p, W and outcome match the enumeration oracle") {
    sbss::Xoshiro256ss rng(81);
    int checked = 0;
    while (checked < 300) {
        const std::size_t n = 1 + rng.bounded(12);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            // coarse grid forces ties and zeros
            a[i] = static_cast<double>(rng.bounded(5));
            b[i] = static_cast<double>(rng.bounded(5));
        }
        const auto v = wilcoxon_signed_rank(series(a, b));
        const auto o = oracle_wilcoxon(a, b);
        CHECK(v.n_effective == o.n_effective);
        if (o.n_effective > 0) {
            CHECK(v.statistic == o.w);
            CHECK(v.p_value == o.p);
        }
        // outcome consistency with the oracle's p
        double diff_sum = 0;
        for (std::size_t i = 0; i < n; ++i) diff_sum += a[i] - b[i];
        Outcome expected = Outcome::tie;
        if (o.n_effective > 0 && o.p < 0.05 && diff_sum > 0) expected = Outcome::win;
        if (o.n_effective > 0 && o.p < 0.05 && diff_sum < 0) expected = Outcome::loss;
        CHECK(v.outcome == expected);
        ++checked;
    }
}

TEST_CASE("swapping the series flips win and loss, keeps p") {
    sbss::Xoshiro256ss rng(82);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.bounded(24); // crosses the exact/approx boundary
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng.bounded(8));
            b[i] = static_cast<double>(rng.bounded(8));
        }
        const auto fwd = wilcoxon_signed_rank(series(a, b));
        const auto rev = wilcoxon_signed_rank(series(b, a));
        CHECK(fwd.p_value == rev.p_value);
        CHECK(fwd.statistic == rev.statistic);
        if (fwd.outcome == Outcome::win) CHECK(rev.outcome == Outcome::loss);
        if (fwd.outcome == Outcome::loss) CHECK(rev.outcome == Outcome::win);
        if (fwd.outcome == Outcome::tie) CHECK(rev.outcome == Outcome::tie);
    }
}

TEST_CASE("appending a positive difference to an all-positive series never raises p") {
    sbss::Xoshiro256ss rng(83);
    std::vector<double> a, b;
    double last_p = 2.0;
    for (int i = 0; i < 18; ++i) {
        const double base = static_cast<double>(rng.bounded(10));
        const double lift = 0.5 + static_cast<double>(rng.bounded(4));
        b.push_back(base);
        a.push_back(base + lift);
        const auto v = wilcoxon_signed_rank(series(a, b));
        CHECK(v.p_value <= last_p);
        last_p = v.p_value;
    }
}

TEST_CASE("the normal approximation tracks the exact tail just past the crossover") {
    sbss::Xoshiro256ss rng(85);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 21 + rng.bounded(3); // approximation regime
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng.bounded(7)) + 0.5; // no zero differences
            b[i] = static_cast<double>(rng.bounded(7));
        }
        const auto v = wilcoxon_signed_rank(series(a, b));
        REQUIRE(v.n_effective == n);
        const auto o = oracle_wilcoxon(a, b); // full enumeration, 2^n
        CHECK(v.statistic == o.w);
        CHECK(v.p_value == doctest::Approx(o.p).epsilon(0.15));
        CHECK(std::abs(v.p_value - o.p) < 0.02);
    }
}

TEST_CASE("p values stay in [0,1], W is bounded") {
    sbss::Xoshiro256ss rng(84);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.bounded(40);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<double>(rng.bounded(6));
            b[i] = static_cast<double>(rng.bounded(6));
        }
        const auto v = wilcoxon_signed_rank(series(a, b));
        CHECK(v.p_value >= 0.0);
        CHECK(v.p_value <= 1.0);
        const double ne = static_cast<double>(v.n_effective);
        CHECK(v.statistic <= ne * (ne + 1.0) / 2.0);
    }
}

TEST_CASE("verdict json carries the context") {
    auto v = wilcoxon_signed_rank(series({2, 3}, {1, 1}));
    const json j = verdict_json(v);
    CHECK(j["dataset"] == "d");
    CHECK(j["model"] == "knn");
    CHECK(j["kind"] == "correlation");
    CHECK(j["n_pairs"] == 2);
    CHECK(j["alpha"] == 0.05);
    CHECK(j["outcome"] == "tie");
}

TEST_CASE("score_comparisons counts and rounds like the reference layout") {
    std::vector<ComparisonVerdict> verdicts;
    const auto add = [&](const std::string& model, const std::string& kind, Outcome o, int times) {
        for (int i = 0; i < times; ++i) {
            ComparisonVerdict v;
            v.model = model;
            v.kind = kind;
            v.outcome = o;
            verdicts.push_back(v);
        }
    };

    SUBCASE("all wins") {
        add("knn", "correlation", Outcome::win, 22);
        const ScoreTable t = score_comparisons(verdicts);
        REQUIRE(t.rows.size() == 1);
        CHECK(t.rows[0].win == 22);
        CHECK(t.rows[0].loss == 0);
        CHECK(t.rows[0].tie == 0);
        CHECK(t.rows[0].win_pct == 100.0);
    }

    SUBCASE("correlation column of the reference table") {
        // 88 cases: 2 losses, 20 ties, 66 wins split over four models
        add("knn", "correlation", Outcome::loss, 1);
        add("knn", "correlation", Outcome::tie, 5);
        add("knn", "correlation", Outcome::win, 16);
        add("mlp", "correlation", Outcome::loss, 1);
        add("mlp", "correlation", Outcome::tie, 4);
        add("mlp", "correlation", Outcome::win, 17);
        add("rf", "correlation", Outcome::tie, 5);
        add("rf", "correlation", Outcome::win, 17);
        add("svm", "correlation", Outcome::tie, 6);
        add("svm", "correlation", Outcome::win, 16);
        const ScoreTable t = score_comparisons(verdicts);
        REQUIRE(t.totals.size() == 1);
        CHECK(t.totals[0].loss == 2);
        CHECK(t.totals[0].tie == 20);
        CHECK(t.totals[0].win == 66);
        CHECK(t.totals[0].loss_pct == 2.27);
        CHECK(t.totals[0].tie_pct == 22.73);
        CHECK(t.totals[0].win_pct == 75.0);

        const std::string text = render_score_table(t);
        CHECK(text.find("correlation") != std::string::npos);
        CHECK(text.find("75") != std::string::npos);
    }

    SUBCASE("groups without verdicts are omitted") {
        add("knn", "cosine", Outcome::win, 1);
        const ScoreTable t = score_comparisons(verdicts);
        CHECK(t.rows.size() == 1);
        CHECK(t.rows[0].kind == "cosine");
    }

    SUBCASE("empty input is rejected") {
        CHECK_THROWS_AS(score_comparisons(std::vector<ComparisonVerdict>{}), DataError);
    }
}

TEST_CASE("series validation") {
    CHECK_THROWS_AS(wilcoxon_signed_rank(series({}, {})), DataError);
    CHECK_THROWS_AS(wilcoxon_signed_rank(series({1, 2}, {1})), DataError);
    CHECK_THROWS_AS(wilcoxon_signed_rank(series({std::nan("")}, {1})), DataError);
}
