#pragma once

#include <cstddef>
#include <vector>

namespace railpred {

/// Dense (channels, height, width) array, double precision, row-major with
/// channel as the slowest axis.
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
                   static_cast<std::size_t>(w),
               0.0) {}

    std::size_t size() const { return data.size(); }

    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }

    double at(int c, int y, int x) const { return data[index(c, y, x)]; }
    double& at(int c, int y, int x) { return data[index(c, y, x)]; }

    bool same_shape(const Tensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    bool operator==(const Tensor&) const = default;
};

} // namespace railpred
