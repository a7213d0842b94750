#pragma once

// Dataset ingestion and preprocessing: IDX-format image files, CIFAR binary
// batches, box-filter resizing, grayscale conversion, class filtering, and a
// deterministic synthetic two-class digit set for offline runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "qdd/image.hpp"
#include "qdd/rng.hpp"

namespace qdd {

struct Dataset {
    std::vector<ImageTensor> images;
    std::vector<int> labels;
};

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t offset,
                               const std::string& path) {
    if (offset + 4 > b.size())
        throw std::runtime_error(path + ": truncated at offset " + std::to_string(offset));
    return (std::uint32_t(b[offset]) << 24) | (std::uint32_t(b[offset + 1]) << 16) |
           (std::uint32_t(b[offset + 2]) << 8) | std::uint32_t(b[offset + 3]);
}

}  // namespace detail

/// IDX image file (magic 0x00000803): unsigned bytes mapped onto [0, 1].
inline std::vector<ImageTensor> load_idx_images(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    const std::uint32_t magic = detail::read_be32(bytes, 0, path);
    if (magic != 0x00000803)
        throw std::runtime_error(path + ": bad IDX image magic at offset 0 (got 0x" +
                                 [&] { char buf[16]; std::snprintf(buf, sizeof buf, "%08x", magic); return std::string(buf); }() +
                                 ", want 0x00000803)");
    const std::uint32_t count = detail::read_be32(bytes, 4, path);
    const std::uint32_t rows = detail::read_be32(bytes, 8, path);
    const std::uint32_t cols = detail::read_be32(bytes, 12, path);
    const std::size_t need = 16 + std::size_t(count) * rows * cols;
    if (bytes.size() < need)
        throw std::runtime_error(path + ": truncated at offset " + std::to_string(bytes.size()) +
                                 " (need " + std::to_string(need) + " bytes)");
    std::vector<ImageTensor> images;
    images.reserve(count);
    std::size_t ofs = 16;
    for (std::uint32_t i = 0; i < count; ++i) {
        ImageTensor img(1, int(rows), int(cols));
        for (double& v : img.values) v = double(bytes[ofs++]) / 255.0;
        images.push_back(std::move(img));
    }
    return images;
}

/// IDX label file (magic 0x00000801).
inline std::vector<int> load_idx_labels(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    const std::uint32_t magic = detail::read_be32(bytes, 0, path);
    if (magic != 0x00000801)
        throw std::runtime_error(path + ": bad IDX label magic at offset 0");
    const std::uint32_t count = detail::read_be32(bytes, 4, path);
    if (bytes.size() < 8 + count)
        throw std::runtime_error(path + ": truncated at offset " + std::to_string(bytes.size()));
    std::vector<int> labels(count);
    for (std::uint32_t i = 0; i < count; ++i) labels[i] = int(bytes[8 + i]);
    return labels;
}

inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    Dataset ds{load_idx_images(images_path), load_idx_labels(labels_path)};
    if (ds.images.size() != ds.labels.size())
        throw std::runtime_error("IDX image/label count mismatch: " + std::to_string(ds.images.size()) +
                                 " vs " + std::to_string(ds.labels.size()));
    return ds;
}

inline void write_idx_images(const std::string& path, const std::vector<ImageTensor>& images) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    auto be32 = [&](std::uint32_t v) {
        const unsigned char b[4] = {(unsigned char)(v >> 24), (unsigned char)(v >> 16),
                                    (unsigned char)(v >> 8), (unsigned char)v};
        f.write(reinterpret_cast<const char*>(b), 4);
    };
    be32(0x00000803);
    be32(std::uint32_t(images.size()));
    be32(images.empty() ? 0 : std::uint32_t(images[0].height));
    be32(images.empty() ? 0 : std::uint32_t(images[0].width));
    for (const auto& img : images)
        for (double v : img.values) {
            const auto b = (unsigned char)std::clamp(std::lround(v * 255.0), 0L, 255L);
            f.write(reinterpret_cast<const char*>(&b), 1);
        }
}

inline void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    auto be32 = [&](std::uint32_t v) {
        const unsigned char b[4] = {(unsigned char)(v >> 24), (unsigned char)(v >> 16),
                                    (unsigned char)(v >> 8), (unsigned char)v};
        f.write(reinterpret_cast<const char*>(b), 4);
    };
    be32(0x00000801);
    be32(std::uint32_t(labels.size()));
    for (int l : labels) {
        const auto b = (unsigned char)l;
        f.write(reinterpret_cast<const char*>(&b), 1);
    }
}

/// CIFAR-10 binary batch (records of 1 label byte + 3072 RGB plane bytes);
/// grayscale by RGB channel mean, applied at load.
inline Dataset load_cifar_batch(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    constexpr std::size_t record = 1 + 3 * 1024;
    if (bytes.empty() || bytes.size() % record != 0)
        throw std::runtime_error(path + ": not a whole number of CIFAR records");
    Dataset ds;
    const std::size_t count = bytes.size() / record;
    ds.images.reserve(count);
    ds.labels.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t base = i * record;
        ds.labels.push_back(int(bytes[base]));
        ImageTensor img(1, 32, 32);
        for (std::size_t p = 0; p < 1024; ++p) {
            const double r = bytes[base + 1 + p];
            const double g = bytes[base + 1 + 1024 + p];
            const double b = bytes[base + 1 + 2048 + p];
            img.values[p] = (r + g + b) / (3.0 * 255.0);
        }
        ds.images.push_back(std::move(img));
    }
    return ds;
}

/// Area-averaging downscale with fractional source bins; preserves constants
/// and mean pixel energy exactly.
inline ImageTensor box_downscale(const ImageTensor& in, int out_h, int out_w) {
    if (out_h > in.height || out_w > in.width)
        throw std::invalid_argument("box_downscale: output larger than input");
    ImageTensor out(in.channels, out_h, out_w);
    const double sy = double(in.height) / out_h, sx = double(in.width) / out_w;
    for (int c = 0; c < in.channels; ++c) {
        for (int oy = 0; oy < out_h; ++oy) {
            const double y0 = oy * sy, y1 = (oy + 1) * sy;
            for (int ox = 0; ox < out_w; ++ox) {
                const double x0 = ox * sx, x1 = (ox + 1) * sx;
                double acc = 0.0;
                for (int yy = int(std::floor(y0)); yy < int(std::ceil(y1)); ++yy) {
                    const double wy = std::min(y1, double(yy + 1)) - std::max(y0, double(yy));
                    if (wy <= 0.0) continue;
                    for (int xx = int(std::floor(x0)); xx < int(std::ceil(x1)); ++xx) {
                        const double wx = std::min(x1, double(xx + 1)) - std::max(x0, double(xx));
                        if (wx <= 0.0) continue;
                        acc += wy * wx * in.at(c, std::min(yy, in.height - 1), std::min(xx, in.width - 1));
                    }
                }
                out.at(c, oy, ox) = acc / (sy * sx);
            }
        }
    }
    return out;
}

/// Upscale by centering the image and replicating edge rows/columns.
inline ImageTensor replicate_pad(const ImageTensor& in, int out_h, int out_w) {
    if (out_h < in.height || out_w < in.width)
        throw std::invalid_argument("replicate_pad: output smaller than input");
    ImageTensor out(in.channels, out_h, out_w);
    const int top = (out_h - in.height) / 2, left = (out_w - in.width) / 2;
    for (int c = 0; c < in.channels; ++c)
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x)
                out.at(c, y, x) = in.at(c, std::clamp(y - top, 0, in.height - 1),
                                        std::clamp(x - left, 0, in.width - 1));
    return out;
}

inline ImageTensor to_grayscale(const ImageTensor& in) {
    if (in.channels == 1) return in;
    ImageTensor out(1, in.height, in.width);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            double s = 0.0;
            for (int c = 0; c < in.channels; ++c) s += in.at(c, y, x);
            out.at(0, y, x) = s / in.channels;
        }
    return out;
}

struct PreprocessOptions {
    int target_size = 0;             // 0 keeps the native size
    std::vector<int> classes;        // empty keeps all classes
    bool grayscale_average = false;  // RGB -> channel mean
};

inline Dataset preprocess(const Dataset& in, const PreprocessOptions& opts) {
    Dataset out;
    for (std::size_t i = 0; i < in.images.size(); ++i) {
        const int label = i < in.labels.size() ? in.labels[i] : 0;
        if (!opts.classes.empty() &&
            std::find(opts.classes.begin(), opts.classes.end(), label) == opts.classes.end())
            continue;
        ImageTensor img = opts.grayscale_average ? to_grayscale(in.images[i]) : in.images[i];
        if (opts.target_size > 0 && (img.height != opts.target_size || img.width != opts.target_size)) {
            if (opts.target_size <= std::min(img.height, img.width))
                img = box_downscale(img, opts.target_size, opts.target_size);
            else
                img = replicate_pad(img, opts.target_size, opts.target_size);
        }
        out.images.push_back(std::move(img));
        out.labels.push_back(label);
    }
    if (out.images.empty()) throw std::runtime_error("preprocess: no images left after class filtering");
    return out;
}

/// Procedural 8x8 two-class digit set (rings and vertical strokes) with
/// shape jitter and mild noise; labels alternate 0, 1.
inline Dataset synthetic_digits(int count, Rng& rng) {
    Dataset ds;
    ds.images.reserve(std::size_t(count));
    ds.labels.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
        const int label = i % 2;
        ImageTensor img(1, 8, 8);
        const double bright = uniform_real(rng, 0.75, 1.0);
        if (label == 0) {
            const double cx = 3.5 + uniform_real(rng, -0.5, 0.5);
            const double cy = 3.5 + uniform_real(rng, -0.5, 0.5);
            const double r = uniform_real(rng, 2.0, 2.6);
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const double d = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
                    img.at(0, y, x) = bright * std::exp(-(d - r) * (d - r) / (2 * 0.45 * 0.45));
                }
        } else {
            const double col = 3.5 + uniform_real(rng, -1.0, 1.0);
            const double tilt = uniform_real(rng, -0.15, 0.15);
            for (int y = 1; y < 7; ++y)
                for (int x = 0; x < 8; ++x) {
                    const double cx = col + tilt * (y - 3.5);
                    img.at(0, y, x) = bright * std::exp(-(x - cx) * (x - cx) / (2 * 0.5 * 0.5));
                }
        }
        for (double& v : img.values) v = std::clamp(v + uniform_real(rng, 0.0, 0.04), 0.0, 1.0);
        ds.images.push_back(std::move(img));
        ds.labels.push_back(label);
    }
    return ds;
}

}  // namespace qdd
