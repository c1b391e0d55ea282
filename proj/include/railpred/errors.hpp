#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace railpred {

/// Malformed input document (ASC grid, GeoJSON route, model file).
/// `where()` is the 1-based line for text formats, byte offset for binary.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& msg, std::size_t where)
        : std::runtime_error(msg), where_(where) {}

    std::size_t where() const noexcept { return where_; }

private:
    std::size_t where_;
};

class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BoundsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Policy step failed to produce a path while training.
class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& msg, int epoch, int demo)
        : std::runtime_error(msg), epoch_(epoch), demo_(demo) {}

    int epoch() const noexcept { return epoch_; }
    int demo() const noexcept { return demo_; }

private:
    int epoch_;
    int demo_;
};

} // namespace railpred
