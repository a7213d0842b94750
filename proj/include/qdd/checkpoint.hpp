#pragma once

// Versioned binary checkpoint: trainable parameters, Adam state, the noise
// schedule, and the RNG engine state (little-endian).

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdd/diffusion.hpp"
#include "qdd/grad.hpp"
#include "qdd/rng.hpp"

namespace qdd {

struct Checkpoint {
    ParamStore params;
    DiffusionSchedule schedule;
    std::string rng_state;
};

inline constexpr char kCheckpointMagic[8] = {'Q', 'D', 'D', 'C', 'K', 'P', '1', '\0'};

namespace detail {

template <class T>
void write_pod(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void read_pod(std::ifstream& f, T& v) {
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
}

inline void write_doubles(std::ofstream& f, const std::vector<double>& v) {
    write_pod(f, std::uint64_t(v.size()));
    f.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
}

inline std::vector<double> read_doubles(std::ifstream& f) {
    std::uint64_t n = 0;
    read_pod(f, n);
    std::vector<double> v(n);
    f.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(double)));
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    f.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::write_pod(f, std::uint32_t(1));  // version
    detail::write_doubles(f, ckpt.params.values);
    detail::write_doubles(f, ckpt.params.adam_m);
    detail::write_doubles(f, ckpt.params.adam_v);
    detail::write_pod(f, std::int64_t(ckpt.params.step_count));
    detail::write_pod(f, std::uint32_t(ckpt.schedule.tau));
    detail::write_doubles(f, ckpt.schedule.betas);
    detail::write_pod(f, std::uint8_t(ckpt.schedule.target_mode == TargetMode::Noise ? 1 : 0));
    detail::write_pod(f, std::uint64_t(ckpt.rng_state.size()));
    f.write(ckpt.rng_state.data(), std::streamsize(ckpt.rng_state.size()));
    if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    std::uint32_t version = 0;
    detail::read_pod(f, version);
    if (version != 1) throw std::runtime_error("load_checkpoint: unsupported version");
    Checkpoint out;
    out.params.values = detail::read_doubles(f);
    out.params.adam_m = detail::read_doubles(f);
    out.params.adam_v = detail::read_doubles(f);
    std::int64_t steps = 0;
    detail::read_pod(f, steps);
    out.params.step_count = steps;
    std::uint32_t tau = 0;
    detail::read_pod(f, tau);
    out.schedule.tau = int(tau);
    out.schedule.betas = detail::read_doubles(f);
    std::uint8_t mode = 0;
    detail::read_pod(f, mode);
    out.schedule.target_mode = mode ? TargetMode::Noise : TargetMode::Data;
    out.schedule.recompute_alpha_bars();
    std::uint64_t rng_len = 0;
    detail::read_pod(f, rng_len);
    out.rng_state.resize(rng_len);
    f.read(out.rng_state.data(), std::streamsize(rng_len));
    if (!f) throw std::runtime_error("load_checkpoint: truncated file " + path);
    if (out.params.adam_m.size() != out.params.values.size() ||
        out.params.adam_v.size() != out.params.values.size())
        throw std::runtime_error("load_checkpoint: inconsistent parameter buffers");
    out.schedule.validate();
    return out;
}

}  // namespace qdd
