#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace qdd {

// Real-valued pixel grid, row-major within each channel.
struct ImageTensor {
    int channels = 1;
    int height = 0;
    int width = 0;
    std::vector<double> values;
    std::array<double, 2> value_range{0.0, 1.0};

    ImageTensor() = default;
    ImageTensor(int c, int h, int w) : channels(c), height(h), width(w), values(std::size_t(c) * h * w, 0.0) {
        if (c < 1 || h < 1 || w < 1) throw std::invalid_argument("ImageTensor: non-positive shape");
    }

    std::size_t size() const { return values.size(); }
    double& at(int c, int y, int x) { return values[(std::size_t(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return values[(std::size_t(c) * height + y) * width + x]; }
    bool same_shape(const ImageTensor& other) const {
        return channels == other.channels && height == other.height && width == other.width;
    }
};

inline double image_mse(const ImageTensor& a, const ImageTensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("image_mse: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        s += d * d;
    }
    return s / double(a.values.size());
}

inline double image_mean(const ImageTensor& img) {
    double s = 0.0;
    for (double v : img.values) s += v;
    return s / double(img.values.size());
}

/// Per-image min-max rescale onto [lo, hi]; constant images map to lo.
inline ImageTensor rescale_minmax(ImageTensor img, double lo = 0.0, double hi = 1.0) {
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (double v : img.values) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    const double span = mx - mn;
    for (double& v : img.values) v = span > 0.0 ? lo + (hi - lo) * (v - mn) / span : lo;
    img.value_range = {lo, hi};
    return img;
}

inline ImageTensor image_from_flat(std::span<const double> flat, int c, int h, int w) {
    if (flat.size() != std::size_t(c) * h * w) throw std::invalid_argument("image_from_flat: size mismatch");
    ImageTensor img(c, h, w);
    img.values.assign(flat.begin(), flat.end());
    return img;
}

}  // namespace qdd
