#pragma once

// Minimal 8-bit grayscale PNG writer (zlib-deflated, filter type 0 per
// scanline). Output bytes are deterministic for a given input.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "qdd/image.hpp"

namespace qdd {

namespace detail {

inline void png_chunk(std::vector<unsigned char>& out, const char type[4],
                      const std::vector<unsigned char>& payload) {
    auto be32 = [&](std::uint32_t v) {
        out.push_back((unsigned char)(v >> 24));
        out.push_back((unsigned char)(v >> 16));
        out.push_back((unsigned char)(v >> 8));
        out.push_back((unsigned char)v);
    };
    be32(std::uint32_t(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const uLong crc = ::crc32(0L, out.data() + crc_start, uInt(out.size() - crc_start));
    be32(std::uint32_t(crc));
}

}  // namespace detail

inline std::vector<unsigned char> encode_png_gray8(const std::vector<unsigned char>& pixels, int width,
                                                   int height) {
    if (pixels.size() != std::size_t(width) * std::size_t(height))
        throw std::invalid_argument("encode_png_gray8: pixel buffer size mismatch");
    std::vector<unsigned char> raw;
    raw.reserve(std::size_t(height) * (std::size_t(width) + 1));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);  // filter: none
        raw.insert(raw.end(), pixels.begin() + std::ptrdiff_t(y) * width,
                   pixels.begin() + std::ptrdiff_t(y + 1) * width);
    }
    uLongf comp_len = compressBound(uLong(raw.size()));
    std::vector<unsigned char> compressed(comp_len);
    if (compress2(compressed.data(), &comp_len, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw std::runtime_error("encode_png_gray8: deflate failed");
    compressed.resize(comp_len);

    std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<unsigned char> ihdr;
    auto be32 = [&](std::uint32_t v) {
        ihdr.push_back((unsigned char)(v >> 24));
        ihdr.push_back((unsigned char)(v >> 16));
        ihdr.push_back((unsigned char)(v >> 8));
        ihdr.push_back((unsigned char)v);
    };
    be32(std::uint32_t(width));
    be32(std::uint32_t(height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // no interlace
    detail::png_chunk(out, "IHDR", ihdr);
    detail::png_chunk(out, "IDAT", compressed);
    detail::png_chunk(out, "IEND", {});
    return out;
}

/// Maps [0,1] to bytes with clamping, then nearest-neighbor upscales.
inline std::vector<unsigned char> image_to_gray8(const ImageTensor& img, int scale = 1) {
    std::vector<unsigned char> bytes(std::size_t(img.height) * scale * std::size_t(img.width) * scale);
    for (int y = 0; y < img.height * scale; ++y)
        for (int x = 0; x < img.width * scale; ++x) {
            const double v = img.at(0, y / scale, x / scale);
            bytes[std::size_t(y) * std::size_t(img.width) * std::size_t(scale) + std::size_t(x)] =
                (unsigned char)std::clamp(std::lround(v * 255.0), 0L, 255L);
        }
    return bytes;
}

inline void write_png_gray8(const std::string& path, const std::vector<unsigned char>& pixels, int width,
                            int height) {
    const std::vector<unsigned char> bytes = encode_png_gray8(pixels, width, height);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_png_gray8: cannot open " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) throw std::runtime_error("write_png_gray8: write failed for " + path);
}

inline void write_image_png(const std::string& path, const ImageTensor& img, int scale = 1) {
    write_png_gray8(path, image_to_gray8(img, scale), img.width * scale, img.height * scale);
}

/// Horizontal strip of frames with a 1-pixel separator, for trajectories.
inline void write_strip_png(const std::string& path, const std::vector<ImageTensor>& frames,
                            int scale = 4) {
    if (frames.empty()) throw std::invalid_argument("write_strip_png: no frames");
    const int h = frames[0].height * scale;
    const int fw = frames[0].width * scale;
    const int w = int(frames.size()) * (fw + 1) - 1;
    std::vector<unsigned char> canvas(std::size_t(h) * std::size_t(w), 255);
    for (std::size_t fi = 0; fi < frames.size(); ++fi) {
        const std::vector<unsigned char> tile = image_to_gray8(frames[fi], scale);
        const int x0 = int(fi) * (fw + 1);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < fw; ++x)
                canvas[std::size_t(y) * std::size_t(w) + std::size_t(x0 + x)] =
                    tile[std::size_t(y) * std::size_t(fw) + std::size_t(x)];
    }
    write_png_gray8(path, canvas, w, h);
}

// ---------------------------------------------------------------------------
// Raw image-set container (.qimg): magic, version, count, c, h, w, f64 data.

inline constexpr char kQimgMagic[8] = {'Q', 'D', 'D', 'I', 'M', 'G', '1', '\0'};

inline void write_qimg(const std::string& path, const std::vector<ImageTensor>& images) {
    if (images.empty()) throw std::invalid_argument("write_qimg: empty image list");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_qimg: cannot open " + path);
    const std::uint32_t version = 1, count = std::uint32_t(images.size()),
                        c = std::uint32_t(images[0].channels), h = std::uint32_t(images[0].height),
                        w = std::uint32_t(images[0].width);
    f.write(kQimgMagic, sizeof(kQimgMagic));
    for (std::uint32_t v : {version, count, c, h, w}) f.write(reinterpret_cast<const char*>(&v), 4);
    for (const auto& img : images) {
        if (img.channels != int(c) || img.height != int(h) || img.width != int(w))
            throw std::invalid_argument("write_qimg: inconsistent image shapes");
        f.write(reinterpret_cast<const char*>(img.values.data()),
                std::streamsize(img.values.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("write_qimg: write failed for " + path);
}

inline std::vector<ImageTensor> read_qimg(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_qimg: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kQimgMagic, sizeof(magic)) != 0)
        throw std::runtime_error("read_qimg: bad magic in " + path);
    std::uint32_t version = 0, count = 0, c = 0, h = 0, w = 0;
    for (std::uint32_t* v : {&version, &count, &c, &h, &w}) f.read(reinterpret_cast<char*>(v), 4);
    if (!f || version != 1) throw std::runtime_error("read_qimg: unsupported header in " + path);
    std::vector<ImageTensor> images;
    images.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        ImageTensor img{int(c), int(h), int(w)};
        f.read(reinterpret_cast<char*>(img.values.data()),
               std::streamsize(img.values.size() * sizeof(double)));
        if (!f) throw std::runtime_error("read_qimg: truncated file " + path);
        images.push_back(std::move(img));
    }
    return images;
}

}  // namespace qdd
