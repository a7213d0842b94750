#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace qdd {

// Plain SHA-1 (FIPS 180-1), used for content addressing of artifacts.
class Sha1 {
  public:
    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        total_ += len;
        while (len > 0) {
            const std::size_t take = std::min(len, std::size_t(64) - fill_);
            std::memcpy(buf_.data() + fill_, p, take);
            fill_ += take;
            p += take;
            len -= take;
            if (fill_ == 64) {
                process_block(buf_.data());
                fill_ = 0;
            }
        }
    }

    std::string hex_digest() {
        const std::uint64_t bits = total_ * 8;
        unsigned char pad = 0x80;
        update(&pad, 1);
        const unsigned char zero = 0;
        while (fill_ != 56) update(&zero, 1);
        unsigned char len_be[8];
        for (int i = 0; i < 8; ++i) len_be[i] = (unsigned char)(bits >> (56 - 8 * i));
        update(len_be, 8);
        static const char* digits = "0123456789abcdef";
        std::string out;
        out.reserve(40);
        for (std::uint32_t word : h_) {
            for (int i = 28; i >= 0; i -= 4) out.push_back(digits[(word >> i) & 0xF]);
        }
        return out;
    }

  private:
    static std::uint32_t rotl(std::uint32_t x, int n) { return (x << n) | (x >> (32 - n)); }

    void process_block(const unsigned char* p) {
        std::uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 80; ++i) w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDC;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6;
            }
            const std::uint32_t tmp = rotl(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rotl(b, 30);
            b = a;
            a = tmp;
        }
        h_[0] += a;
        h_[1] += b;
        h_[2] += c;
        h_[3] += d;
        h_[4] += e;
    }

    std::array<std::uint32_t, 5> h_{0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0};
    std::array<unsigned char, 64> buf_{};
    std::size_t fill_ = 0;
    std::uint64_t total_ = 0;
};

inline std::string sha1_hex(const void* data, std::size_t len) {
    Sha1 h;
    h.update(data, len);
    return h.hex_digest();
}

inline std::string sha1_hex(const std::string& s) { return sha1_hex(s.data(), s.size()); }

/// Git-style blob hash: sha1("blob <len>\0" + content).
inline std::string git_blob_sha1(const void* data, std::size_t len) {
    Sha1 h;
    const std::string header = "blob " + std::to_string(len) + '\0';
    h.update(header.data(), header.size());
    h.update(data, len);
    return h.hex_digest();
}

inline std::string sha1_of_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("sha1_of_file: cannot open " + path);
    Sha1 h;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof buf);
        h.update(buf, std::size_t(f.gcount()));
    }
    return h.hex_digest();
}

}  // namespace qdd
