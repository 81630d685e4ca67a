#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>

#include "sbss/dataset.hpp"
#include "sbss/rng.hpp"
#include "testutil.hpp"

using namespace sbss;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("sbss_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

fs::path write_file(const TempDir& dir, const std::string& name, const std::string& content) {
    const fs::path p = dir.path / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
}

} // namespace

TEST_CASE("load_csv parses a basic headered file") {
    TempDir dir;
    const auto p = write_file(dir, "basic.csv", "a,b,y\n1,2,p\n3,4,q\n5,6,p\n");
    const Dataset ds = load_csv(p, "y");
    CHECK(ds.n_rows == 3);
    CHECK(ds.n_cols == 2);
    CHECK(ds.label_count() == 2);
    CHECK(ds.features == std::vector<double>{1, 2, 3, 4, 5, 6});
    // canonical ids follow lexicographic label order: p=0, q=1
    CHECK(ds.labels == std::vector<std::int32_t>{0, 1, 0});
    CHECK(ds.label_names == std::vector<std::string>{"p", "q"});
    CHECK(ds.name == "basic");
}

TEST_CASE("load_csv accepts a label column given as an index") {
    TempDir dir;
    const auto p = write_file(dir, "idx.csv", "y,a\np,1\nq,2\n");
    const Dataset ds = load_csv(p, "0");
    CHECK(ds.n_cols == 1);
    CHECK(ds.label_column == "y");
    CHECK(ds.features == std::vector<double>{1, 2});
}

TEST_CASE("load_csv without header requires an index") {
    TempDir dir;
    const auto p = write_file(dir, "nh.csv", "1,2,p\n3,4,q\n");
    const Dataset ds = load_csv(p, "2", false);
    CHECK(ds.n_rows == 2);
    CHECK(ds.n_cols == 2);
    CHECK_THROWS_AS(load_csv(p, "y", false), DataError);
}

TEST_CASE("load_csv keeps a single-label file") {
    TempDir dir;
    const auto p = write_file(dir, "single.csv", "a,y\n1,p\n2,p\n");
    const Dataset ds = load_csv(p, "y");
    CHECK(ds.label_count() == 1);
}

TEST_CASE("load_csv names the offending cell") {
    TempDir dir;
    const auto p = write_file(dir, "bad.csv", "a,b,y\n1,2,p\n3,x,q\n");
    CHECK_THROWS_WITH_AS(load_csv(p, "y"),
                         doctest::Contains("row 3, column 2"), DataError);
}

TEST_CASE("load_csv error cases") {
    TempDir dir;
    CHECK_THROWS_AS(load_csv(dir.path / "missing.csv", "y"), DataError);
    const auto empty = write_file(dir, "empty.csv", "");
    CHECK_THROWS_AS(load_csv(empty, "y"), DataError);
    const auto header_only = write_file(dir, "h.csv", "a,y\n");
    CHECK_THROWS_AS(load_csv(header_only, "y"), DataError);
    const auto no_col = write_file(dir, "nc.csv", "a,y\n1,p\n");
    CHECK_THROWS_AS(load_csv(no_col, "z"), DataError);
    const auto inf = write_file(dir, "inf.csv", "a,y\ninf,p\n1,q\n");
    CHECK_THROWS_AS(load_csv(inf, "y"), DataError);
}

TEST_CASE("load_csv handles quoted fields") {
    TempDir dir;
    const auto p = write_file(dir, "q.csv", "a,\"the,label\"\n1,\"x\"\"y\"\n2,z\n");
    const Dataset ds = load_csv(p, "the,label");
    CHECK(ds.n_rows == 2);
    CHECK(ds.label_names == std::vector<std::string>{"x\"y", "z"});
}

TEST_CASE("csv round-trips through write_csv") {
    sbss::Xoshiro256ss rng(7);
    const Dataset ds = testutil::random_dataset(rng, 37, 5, 3);
    TempDir dir;
    const auto p = dir.path / "rt.csv";
    write_csv(ds, p);
    const Dataset back = load_csv(p, ds.label_column);
    CHECK(back.n_rows == ds.n_rows);
    CHECK(back.n_cols == ds.n_cols);
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
    CHECK(back.label_names == ds.label_names);
    CHECK(back.feature_names == ds.feature_names);
}

TEST_CASE("normalize_minmax maps columns to [0,1]") {
    const Dataset ds = testutil::make_dataset(1, {0, 5, 10}, {0, 0, 1}, 2);
    const Dataset norm = normalize_minmax(ds);
    CHECK(norm.features == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("normalize_minmax zeroes constant columns") {
    const Dataset ds = testutil::make_dataset(1, {7, 7, 7}, {0, 0, 1}, 2);
    CHECK(normalize_minmax(ds).features == std::vector<double>{0, 0, 0});
}

TEST_CASE("normalize_minmax per-column endpoints") {
    const Dataset ds = testutil::make_dataset(2, {0, -1, 10, 1}, {0, 1}, 2);
    CHECK(normalize_minmax(ds).features == std::vector<double>{0, 0, 1, 1});
}

TEST_CASE("normalize_minmax is idempotent") {
    sbss::Xoshiro256ss rng(11);
    const Dataset ds = testutil::random_dataset(rng, 64, 6, 2);
    const Dataset once = normalize_minmax(ds);
    const Dataset twice = normalize_minmax(once);
    for (std::size_t i = 0; i < once.features.size(); ++i)
        CHECK(twice.features[i] == doctest::Approx(once.features[i]).epsilon(1e-12));
}

TEST_CASE("imbalance is zero for uniform counts") {
    for (std::size_t k = 2; k <= 12; ++k) {
        for (std::size_t c : {1ul, 7ul, 90ul}) {
            LabelCounts lc;
            lc.counts.assign(k, c);
            lc.total = k * c;
            CHECK(imbalance(lc) == 0.0);
        }
    }
}

TEST_CASE("imbalance matches the hand-computed two-class value") {
    LabelCounts lc;
    lc.counts = {600, 200};
    lc.total = 800;
    CHECK(imbalance(lc) == doctest::Approx(0.18872).epsilon(1e-4));
}

TEST_CASE("imbalance rejects a single label") {
    LabelCounts lc;
    lc.counts = {10};
    lc.total = 10;
    CHECK_THROWS_WITH_AS(imbalance(lc), doctest::Contains("single label"), DataError);
}

TEST_CASE("imbalance is permutation-invariant and positive when counts differ") {
    LabelCounts a, b;
    a.counts = {5, 9, 2};
    a.total = 16;
    b.counts = {2, 5, 9};
    b.total = 16;
    CHECK(imbalance(a) == imbalance(b));
    CHECK(imbalance(a) > 0.0);
}

TEST_CASE("imbalance stays in [0,1] over random count vectors") {
    sbss::Xoshiro256ss rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        LabelCounts lc;
        const std::size_t k = 2 + rng.bounded(10);
        lc.total = 0;
        for (std::size_t i = 0; i < k; ++i) {
            lc.counts.push_back(1 + rng.bounded(1000));
            lc.total += lc.counts.back();
        }
        const double v = imbalance(lc);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("dataset_summary reports counts and imbalance") {
    const Dataset ds = testutil::make_dataset(1, {1, 2, 3}, {0, 1, 0}, 2);
    const json s = dataset_summary(ds);
    CHECK(s["n"] == 3);
    CHECK(s["d"] == 1);
    CHECK(s["labels"][0]["label"] == "l0");
    CHECK(s["labels"][0]["count"] == 2);
    CHECK(s["labels"][1]["count"] == 1);
    CHECK(s["imbalance"].get<double>() > 0.0);
}
