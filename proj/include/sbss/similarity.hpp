#pragma once

// The five pairwise distance functions and the dense n x n matrix the
// splitter consumes. Similarity is the negation of distance throughout the
// toolkit: "most similar" always means "smallest distance".

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sbss/dataset.hpp"
#include "sbss/error.hpp"

namespace sbss {

enum class SimilarityKind : std::uint8_t {
    chebyshev = 0,
    cityblock = 1,
    euclidean = 2,
    cosine = 3,
    correlation = 4,
};

inline constexpr std::array<std::string_view, 5> kSimilarityNames = {
    "chebyshev", "cityblock", "euclidean", "cosine", "correlation"};

inline std::string_view to_string(SimilarityKind kind) {
    return kSimilarityNames[static_cast<std::size_t>(kind)];
}

inline SimilarityKind parse_similarity(std::string_view name) {
    for (std::size_t i = 0; i < kSimilarityNames.size(); ++i)
        if (name == kSimilarityNames[i]) return static_cast<SimilarityKind>(i);
    std::string msg = "unknown similarity \"" + std::string(name) + "\" (valid:";
    for (const auto n : kSimilarityNames) msg += " " + std::string(n);
    throw DataError(msg + ")");
}

namespace detail {

inline double chebyshev(std::span<const double> u, std::span<const double> v) {
    double best = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) best = std::max(best, std::abs(u[i] - v[i]));
    return best;
}

inline double cityblock(std::span<const double> u, std::span<const double> v) {
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) sum += std::abs(u[i] - v[i]);
    return sum;
}

inline double euclidean(std::span<const double> u, std::span<const double> v) {
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

// 1 - u.v/(|u||v|), clamped to [0,2]; rounding can otherwise push parallel
// vectors a few ulp below zero.
inline double cosine(std::span<const double> u, std::span<const double> v,
                     const char* who_u = "u", const char* who_v = "v") {
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0) throw ComputeError(std::string("cosine distance undefined: ") + who_u + " has zero norm");
    if (nv == 0.0) throw ComputeError(std::string("cosine distance undefined: ") + who_v + " has zero norm");
    return std::clamp(1.0 - dot / std::sqrt(nu * nv), 0.0, 2.0);
}

inline double mean_of(std::span<const double> u) {
    double sum = 0.0;
    for (const double x : u) sum += x;
    return sum / static_cast<double>(u.size());
}

// Cosine of the mean-centered vectors.
inline double correlation(std::span<const double> u, std::span<const double> v,
                          const char* who_u = "u", const char* who_v = "v") {
    const double mu = mean_of(u);
    const double mv = mean_of(v);
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i] - mu;
        const double b = v[i] - mv;
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0.0) throw ComputeError(std::string("correlation distance undefined: ") + who_u + " is a constant vector");
    if (nv == 0.0) throw ComputeError(std::string("correlation distance undefined: ") + who_v + " is a constant vector");
    return std::clamp(1.0 - dot / std::sqrt(nu * nv), 0.0, 2.0);
}

} // namespace detail

inline double distance(SimilarityKind kind, std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw ComputeError("distance: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                           std::to_string(v.size()) + ")");
    if (u.empty()) throw ComputeError("distance: empty vectors");
    switch (kind) {
        case SimilarityKind::chebyshev: return detail::chebyshev(u, v);
        case SimilarityKind::cityblock: return detail::cityblock(u, v);
        case SimilarityKind::euclidean: return detail::euclidean(u, v);
        case SimilarityKind::cosine: return detail::cosine(u, v);
        case SimilarityKind::correlation: return detail::correlation(u, v);
    }
    throw ComputeError("distance: invalid kind");
}

// Symmetric n x n distance matrix with zero diagonal, immutable once built.
class DistanceMatrix {
public:
    DistanceMatrix(SimilarityKind kind, std::size_t n)
        : kind_(kind), n_(n), values_(n * n, 0.0) {}

    SimilarityKind kind() const { return kind_; }
    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
    double& at(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
    std::span<const double> raw() const { return values_; }

private:
    SimilarityKind kind_;
    std::size_t n_;
    std::vector<double> values_;
};

namespace detail {

// Rejects rows the kind cannot handle before any pair is computed, naming
// the offending sample.
inline void check_rows(SimilarityKind kind, const Dataset& ds) {
    if (kind == SimilarityKind::cosine) {
        for (std::size_t i = 0; i < ds.n_rows; ++i) {
            const auto r = ds.row(i);
            double norm = 0.0;
            for (const double x : r) norm += x * x;
            if (norm == 0.0)
                throw ComputeError("cosine distance undefined: sample " + std::to_string(i) + " has zero norm");
        }
    } else if (kind == SimilarityKind::correlation) {
        for (std::size_t i = 0; i < ds.n_rows; ++i) {
            const auto r = ds.row(i);
            const double first = r[0];
            bool constant = true;
            for (const double x : r)
                if (x != first) { constant = false; break; }
            if (constant)
                throw ComputeError("correlation distance undefined: sample " + std::to_string(i) +
                                   " is a constant vector");
        }
    }
}

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace detail

// Full pairwise matrix, computed once per dataset. Workers take strided
// rows of the upper triangle and mirror into the lower one; every entry
// comes out of the same scalar kernel, so the result is bit-identical at
// any thread count. threads == 0 picks the hardware concurrency.
inline DistanceMatrix pairwise_matrix(SimilarityKind kind, const Dataset& ds, unsigned threads = 0) {
    if (ds.n_rows == 0 || ds.n_cols == 0) throw ComputeError("pairwise_matrix: empty dataset");
    detail::check_rows(kind, ds);

    DistanceMatrix m(kind, ds.n_rows);
    const std::size_t n = ds.n_rows;
    const unsigned workers = std::min<unsigned>(detail::resolve_threads(threads),
                                                static_cast<unsigned>(n));

    const auto fill_rows = [&](std::size_t first_row, std::size_t stride) {
        for (std::size_t i = first_row; i < n; i += stride) {
            const auto ri = ds.row(i);
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d = distance(kind, ri, ds.row(j));
                m.at(i, j) = d;
                m.at(j, i) = d;
            }
        }
    };

    if (workers <= 1) {
        fill_rows(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(fill_rows, t, workers);
        for (auto& th : pool) th.join();
    }
    return m;
}

// Debug dump: "SBSSDM1" magic, one byte of kind, little-endian uint64 n,
// then n*n row-major float64 values.
inline constexpr char kMatrixMagic[7] = {'S', 'B', 'S', 'S', 'D', 'M', '1'};

inline void write_matrix_dump(const DistanceMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    out.write(kMatrixMagic, sizeof(kMatrixMagic));
    const auto kind = static_cast<std::uint8_t>(m.kind());
    out.write(reinterpret_cast<const char*>(&kind), 1);
    const std::uint64_t n = m.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(m.raw().data()),
              static_cast<std::streamsize>(m.raw().size() * sizeof(double)));
    if (!out) throw DataError("short write: " + path.string());
}

inline DistanceMatrix read_matrix_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    char magic[sizeof(kMatrixMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMatrixMagic, sizeof(magic)) != 0)
        throw DataError(path.string() + ": not a matrix dump (bad magic)");
    std::uint8_t kind = 0;
    in.read(reinterpret_cast<char*>(&kind), 1);
    if (kind > 4) throw DataError(path.string() + ": invalid similarity kind");
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    DistanceMatrix m(static_cast<SimilarityKind>(kind), n);
    std::vector<double> values(n * n);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw DataError(path.string() + ": truncated matrix dump");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m.at(i, j) = values[i * n + j];
    return m;
}

// {kind, n, min, max, mean} over the off-diagonal entries (null when n < 2).
inline json matrix_summary(const DistanceMatrix& m) {
    const std::size_t n = m.size();
    json out = {{"kind", to_string(m.kind())}, {"n", n}};
    if (n < 2) {
        out["min"] = nullptr;
        out["max"] = nullptr;
        out["mean"] = nullptr;
        return out;
    }
    double lo = m(0, 1), hi = m(0, 1), sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = m(i, j);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
    out["min"] = lo;
    out["max"] = hi;
    out["mean"] = sum / static_cast<double>(n * n - n);
    return out;
}

} // namespace sbss
