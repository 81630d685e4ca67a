#pragma once

// Tabular classification datasets: CSV ingestion, min-max normalization,
// label bookkeeping, and the entropy-based class imbalance metric.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sbss/error.hpp"

namespace sbss {

using json = nlohmann::ordered_json;

// Immutable after construction; samples are rows of `features` in the
// original file order. Label ids are canonical: distinct label strings
// sorted lexicographically and numbered 0..L-1, so every downstream loop
// that walks "labels in order" is deterministic.
struct Dataset {
    std::string name;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> features; // row-major, n_rows x n_cols
    std::vector<std::int32_t> labels;
    std::vector<std::string> label_names;
    std::vector<std::string> feature_names;
    std::string label_column;

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * n_cols, n_cols};
    }
    std::size_t label_count() const { return label_names.size(); }
};

struct LabelCounts {
    std::vector<std::size_t> counts;
    std::size_t total = 0;
    std::size_t k_labels() const { return counts.size(); }
};

namespace detail {

// One CSV record, RFC-4180 quoting rules (quoted fields, "" escapes,
// embedded commas/newlines). Returns false at end of input.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    int c = in.get();
    if (c == EOF) return false;

    bool in_quotes = false;
    bool any = false;
    while (c != EOF) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                const int next = in.peek();
                if (next == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(static_cast<char>(c));
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get();
            break;
        } else {
            field.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

inline bool parse_double(std::string_view text, double& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && begin != end;
}

inline bool parse_index(std::string_view text, std::size_t& out) {
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

} // namespace detail

// Loads an RFC-4180-style CSV. `label_column` selects the target column by
// header name or, when it parses as an integer, by zero-based position
// (positional selection is the only option for headerless files). All
// remaining columns must parse as finite real numbers.
inline Dataset load_csv(const std::filesystem::path& path,
                        const std::string& label_column,
                        bool has_header = true) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    while (detail::read_csv_record(in, fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue; // blank line
        records.push_back(fields);
    }
    if (records.empty()) throw DataError(path.string() + ": file is empty");

    std::vector<std::string> header;
    if (has_header) {
        header = records.front();
        records.erase(records.begin());
    }
    if (records.empty()) throw DataError(path.string() + ": no data rows");

    const std::size_t n_fields = (has_header ? header : records.front()).size();
    if (n_fields < 2) throw DataError(path.string() + ": need at least one feature column and one label column");

    std::size_t label_idx = n_fields;
    if (std::size_t pos = 0; detail::parse_index(label_column, pos)) {
        if (pos >= n_fields)
            throw DataError(path.string() + ": label column index " + std::to_string(pos) +
                            " out of range (row width " + std::to_string(n_fields) + ")");
        label_idx = pos;
    } else {
        if (!has_header)
            throw DataError("label column must be a zero-based index when the file has no header");
        const auto it = std::find(header.begin(), header.end(), label_column);
        if (it == header.end())
            throw DataError(path.string() + ": label column \"" + label_column + "\" not found in header");
        label_idx = static_cast<std::size_t>(it - header.begin());
    }

    Dataset ds;
    ds.name = path.stem().string();
    ds.n_rows = records.size();
    ds.n_cols = n_fields - 1;
    ds.label_column = has_header ? header[label_idx] : label_column;
    for (std::size_t c = 0; c < n_fields; ++c) {
        if (c == label_idx) continue;
        ds.feature_names.push_back(has_header ? header[c] : "c" + std::to_string(c));
    }

    ds.features.resize(ds.n_rows * ds.n_cols);
    std::vector<std::string> raw_labels(ds.n_rows);
    for (std::size_t r = 0; r < ds.n_rows; ++r) {
        const auto& rec = records[r];
        const std::size_t file_row = r + 1 + (has_header ? 1 : 0);
        if (rec.size() != n_fields)
            throw DataError(path.string() + ": row " + std::to_string(file_row) + " has " +
                            std::to_string(rec.size()) + " fields, expected " + std::to_string(n_fields));
        std::size_t out_c = 0;
        for (std::size_t c = 0; c < n_fields; ++c) {
            if (c == label_idx) {
                raw_labels[r] = rec[c];
                continue;
            }
            double value = 0.0;
            if (!detail::parse_double(rec[c], value))
                throw DataError(path.string() + ": row " + std::to_string(file_row) + ", column " +
                                std::to_string(c + 1) + ": cannot parse \"" + rec[c] + "\" as a number");
            if (!std::isfinite(value))
                throw DataError(path.string() + ": row " + std::to_string(file_row) + ", column " +
                                std::to_string(c + 1) + ": non-finite value");
            ds.features[r * ds.n_cols + out_c] = value;
            ++out_c;
        }
    }

    // Canonical label order: lexicographic over the distinct label strings.
    std::map<std::string, std::int32_t> label_ids;
    for (const auto& l : raw_labels) label_ids.emplace(l, 0);
    std::int32_t next_id = 0;
    for (auto& [text, id] : label_ids) {
        id = next_id++;
        ds.label_names.push_back(text);
    }
    ds.labels.resize(ds.n_rows);
    for (std::size_t r = 0; r < ds.n_rows; ++r) ds.labels[r] = label_ids[raw_labels[r]];
    return ds;
}

// Writes a dataset back out in the same CSV dialect load_csv reads.
// Numbers use shortest round-trip formatting, so load -> write -> load
// reproduces features bit for bit.
inline void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path.string());

    const auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += "\"\"";
            else q.push_back(c);
        }
        return q + "\"";
    };

    for (std::size_t c = 0; c < ds.n_cols; ++c) out << quote(ds.feature_names[c]) << ',';
    out << quote(ds.label_column) << '\n';

    std::array<char, 32> buf{};
    for (std::size_t r = 0; r < ds.n_rows; ++r) {
        for (std::size_t c = 0; c < ds.n_cols; ++c) {
            const double v = ds.features[r * ds.n_cols + c];
            const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
            out.write(buf.data(), res.ptr - buf.data());
            out.put(',');
        }
        out << quote(ds.label_names[static_cast<std::size_t>(ds.labels[r])]) << '\n';
    }
}

// Affine per-column map to [0,1] using the column's global min/max.
// Constant columns map to 0 everywhere. Labels are untouched.
inline Dataset normalize_minmax(const Dataset& ds) {
    Dataset out = ds;
    for (std::size_t c = 0; c < ds.n_cols; ++c) {
        double lo = ds.features[c];
        double hi = ds.features[c];
        for (std::size_t r = 1; r < ds.n_rows; ++r) {
            const double v = ds.features[r * ds.n_cols + c];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double range = hi - lo;
        for (std::size_t r = 0; r < ds.n_rows; ++r) {
            double& v = out.features[r * ds.n_cols + c];
            v = range == 0.0 ? 0.0 : (v - lo) / range;
        }
    }
    return out;
}

inline LabelCounts label_counts(const Dataset& ds) {
    LabelCounts lc;
    lc.counts.assign(ds.label_count(), 0);
    for (const auto id : ds.labels) ++lc.counts[static_cast<std::size_t>(id)];
    lc.total = ds.n_rows;
    return lc;
}

// 1 - H/log(k), H the Shannon entropy of the class proportions: 0 for a
// perfectly balanced dataset, approaching 1 for extreme skew. Evaluated as
// the normalized KL divergence from uniform, sum p_i*log(c_i*k/n)/log(k),
// which is exactly 0 when all counts are equal (c_i*k == n in integer
// arithmetic). Clamped to [0,1] against rounding.
inline double imbalance(const LabelCounts& lc) {
    const std::size_t k = lc.k_labels();
    if (k < 2) throw DataError("imbalance undefined for a single label");
    // summing in sorted count order makes the result permutation-invariant
    // down to the last bit
    std::vector<std::size_t> sorted = lc.counts;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(lc.total);
    double kl = 0.0;
    for (const std::size_t c : sorted) {
        const double ci = static_cast<double>(c);
        kl += ci / n * std::log(ci * static_cast<double>(k) / n);
    }
    return std::clamp(kl / std::log(static_cast<double>(k)), 0.0, 1.0);
}

// {name, n, d, labels: [{label, count}], imbalance}
inline json dataset_summary(const Dataset& ds) {
    const LabelCounts lc = label_counts(ds);
    json labels = json::array();
    for (std::size_t i = 0; i < lc.k_labels(); ++i)
        labels.push_back({{"label", ds.label_names[i]}, {"count", lc.counts[i]}});
    return {{"name", ds.name},
            {"n", ds.n_rows},
            {"d", ds.n_cols},
            {"labels", labels},
            {"imbalance", imbalance(lc)}};
}

} // namespace sbss
