#pragma once

#include <stdexcept>
#include <string>

namespace sbss {

// Base for everything the library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or unusable input data (files, CSV cells, label columns,
// inconsistent report files).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what) {}
};

// A computation that cannot be carried out on otherwise valid data
// (k out of range, degenerate vectors for cosine/correlation, a KNN
// neighbor count larger than the training partition, ...).
class ComputeError : public Error {
public:
    explicit ComputeError(const std::string& what) : Error(what) {}
};

} // namespace sbss
