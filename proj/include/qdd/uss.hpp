#pragma once

// Unitary single sampling: compose the per-step circuit into one matrix,
// train on complex states with MAE, sample in one matrix multiplication.
//
// Guided variants fold the fixed label rotation into the per-step circuit,
// so composing U^tau re-applies it each step; the ancilla qubit itself is
// prepared once, as |0>, during input embedding.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdd/diffusion.hpp"
#include "qdd/embed.hpp"
#include "qdd/grad.hpp"
#include "qdd/image.hpp"
#include "qdd/rng.hpp"
#include "qdd/state.hpp"
#include "qdd/vqc.hpp"

namespace qdd {

struct USSConfig {
    int n_image_qubits = 6;
    int n_layers = 56;
    bool with_ancilla = false;  // extra qubit, |0>-prepared, no label
    bool guided = false;        // implies an ancilla carrying the label rotation
    int n_reuploads = 0;
    int n_classes = 2;

    bool has_ancilla() const { return with_ancilla || guided; }
    int circuit_qubits() const { return n_image_qubits + (has_ancilla() ? 1 : 0); }
    std::size_t param_count() const { return std::size_t(n_layers) * 3 * std::size_t(circuit_qubits()); }
};

class USSModel {
  public:
    explicit USSModel(USSConfig cfg) : cfg_(cfg) {
        if (cfg.n_image_qubits < 2) throw std::invalid_argument("USSModel: need at least 2 image qubits");
        if (!cfg.guided && cfg.n_reuploads > 0)
            throw std::invalid_argument("USSModel: re-uploads require guidance");
        const auto reups = evenly_spaced_reuploads(std::max(cfg.n_layers, 1), cfg.n_reuploads);
        const EntanglingStack stack(cfg.circuit_qubits(), cfg.n_layers, {}, reups);
        if (cfg.guided) {
            const int ancilla = cfg.circuit_qubits() - 1;
            for (int c = 0; c < cfg.n_classes; ++c)
                circuits_.push_back(
                    build_entangling_circuit(stack, ancilla, label_angle(c, cfg.n_classes), true));
        } else {
            circuits_.push_back(build_entangling_circuit(stack));
        }
    }

    const USSConfig& config() const { return cfg_; }
    std::size_t param_count() const { return cfg_.param_count(); }

    const CircuitSpec& circuit(std::optional<int> label = std::nullopt) const {
        if (!cfg_.guided) return circuits_.front();
        if (!label) throw std::invalid_argument("USSModel: guided model requires a label");
        if (*label < 0 || *label >= cfg_.n_classes) throw std::out_of_range("USSModel: label out of range");
        return circuits_[std::size_t(*label)];
    }

    StateVector embed_input(const ImageTensor& image) const {
        const Embedded e = amplitude_embed(image.values, cfg_.n_image_qubits);
        return cfg_.has_ancilla() ? tensor_with_zero_ancilla(e.state) : e.state;
    }

    /// Target state for training: the less-noisy image embedded the same way
    /// the input is (ancilla models compare against |image> (x) |0>).
    StateVector embed_target(const ImageTensor& image) const { return embed_input(image); }

  private:
    USSConfig cfg_;
    std::vector<CircuitSpec> circuits_;
};

/// Mean over all entries of |a_i - b_i| (complex modulus); penalizes global
/// phase by construction.
inline double state_mae(const StateVector& a, const StateVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("state_mae: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::abs(a.amps[i] - b.amps[i]);
    return s / double(a.dim());
}

/// MAE between the predicted state and the amplitude-embedded target pixels.
inline double uss_loss(const StateVector& predicted, std::span<const double> target_pixels) {
    const Embedded target = amplitude_embed(target_pixels, predicted.n_qubits);
    return state_mae(predicted, target.state);
}

/// U^tau for U = circuit_unitary(circuit, params).
inline UnitaryMatrix compose_diffusion_unitary(const CircuitSpec& circuit, std::span<const double> params,
                                               int tau) {
    if (tau < 0) throw std::invalid_argument("compose_diffusion_unitary: negative tau");
    const std::size_t dim = std::size_t(1) << circuit.n_qubits;
    if (tau == 0) return UnitaryMatrix::identity(dim);
    const UnitaryMatrix u = circuit_unitary(circuit, params);
    UnitaryMatrix result = u;
    for (int k = 1; k < tau; ++k) result = result.multiply(u);
    if (dim <= 256 && result.unitarity_error() > 1e-9)
        throw std::runtime_error("compose_diffusion_unitary: result failed the unitarity check");
    return result;
}

// ---------------------------------------------------------------------------
// Training

namespace detail {

inline std::vector<cplx> mae_cotangent(const StateVector& psi, const StateVector& target,
                                       double* loss_out) {
    const double d = double(psi.dim());
    std::vector<cplx> w(psi.dim(), cplx(0, 0));
    double loss = 0.0;
    for (std::size_t i = 0; i < psi.dim(); ++i) {
        const cplx diff = psi.amps[i] - target.amps[i];
        const double mag = std::abs(diff);
        loss += mag;
        if (mag > 0.0) w[i] = diff / (2.0 * mag * d);
    }
    if (loss_out) *loss_out = loss / d;
    return w;
}

}  // namespace detail

/// One optimization step over a batch: per sample and step t in 1..tau, a
/// freshly noised pair (x_t, x_{t-1}); the circuit is applied once to the
/// embedded x_t and scored with the complex MAE against the embedded x_{t-1};
/// losses are summed. The default gradient applies the two-point shift rule
/// to the summed scalar loss; the adjoint method differentiates it exactly.
inline TrainStepResult train_uss_step(const USSModel& model, ParamStore& params,
                                      std::span<const ImageTensor> batch, std::span<const int> labels,
                                      const DiffusionSchedule& schedule, double lr, Rng& rng,
                                      GradientMethod method = GradientMethod::ParameterShift) {
    if (batch.empty()) throw std::invalid_argument("train_uss_step: empty batch");
    if (model.config().guided && labels.size() != batch.size())
        throw std::invalid_argument("train_uss_step: guided training requires labels");
    schedule.validate();
    if (schedule.tau < 1) throw std::invalid_argument("train_uss_step: schedule has no steps");

    struct Pair {
        StateVector input;
        StateVector target;
        std::optional<int> label;
    };
    std::vector<Pair> pairs;
    pairs.reserve(batch.size() * std::size_t(schedule.tau));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::optional<int> label =
            model.config().guided ? std::optional<int>(labels[i]) : std::nullopt;
        for (int t = 1; t <= schedule.tau; ++t) {
            const NoisedSample ns = forward_noise(batch[i], t, schedule, rng);
            const ImageTensor x_prev = noised_at(batch[i], ns.epsilon, t - 1, schedule);
            pairs.push_back({model.embed_input(ns.x_t), model.embed_target(x_prev), label});
        }
    }

    auto total_loss = [&](std::span<const double> p) {
        std::vector<double> losses(pairs.size(), 0.0);
        parallel_for(pairs.size(), [&](std::size_t i) {
            const StateVector out = apply_circuit(pairs[i].input, model.circuit(pairs[i].label), p);
            losses[i] = state_mae(out, pairs[i].target);
        });
        double s = 0.0;
        for (double l : losses) s += l;
        return s;
    };

    double loss = 0.0;
    std::vector<double> grad;
    if (method == GradientMethod::Adjoint) {
        std::vector<std::vector<double>> grads(pairs.size());
        std::vector<double> losses(pairs.size(), 0.0);
        parallel_for(pairs.size(), [&](std::size_t i) {
            grads[i] = adjoint_state_grad(
                model.circuit(pairs[i].label), pairs[i].input, params.values,
                [&](const StateVector& psi) { return detail::mae_cotangent(psi, pairs[i].target, &losses[i]); });
        });
        grad.assign(params.size(), 0.0);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            loss += losses[i];
            for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += grads[i][j];
        }
    } else {
        loss = total_loss(params.values);
        grad = parameter_shift_scalar_grad(total_loss, params.values);
    }
    if (!std::isfinite(loss)) throw std::runtime_error("train_uss_step: non-finite loss");
    params = adam_step(std::move(params), grad, lr);
    return {loss};
}

// ---------------------------------------------------------------------------
// Sampling

/// Input noise for single sampling: entrywise real part ~ N(0.4, 0.24) and
/// imaginary part ~ N(0, 0.14), normalized to a unit state.
inline StateVector draw_uss_input(int n_qubits, Rng& rng) {
    StateVector z(n_qubits);
    double sq = 0.0;
    for (cplx& a : z.amps) {
        a = cplx(normal(rng, 0.4, 0.24), normal(rng, 0.0, 0.14));
        sq += std::norm(a);
    }
    const double nrm = std::sqrt(sq);
    for (cplx& a : z.amps) a /= nrm;
    return z;
}

namespace detail {

inline ImageTensor moduli_to_image(const std::vector<double>& moduli, int height, int width) {
    ImageTensor img(1, height, width);
    std::copy(moduli.begin(), moduli.begin() + std::ptrdiff_t(img.values.size()), img.values.begin());
    return rescale_minmax(std::move(img));
}

}  // namespace detail

/// One matrix-vector product per image: pixels are the entrywise moduli of
/// U*z, min-max rescaled to [0,1]. Ancilla models read the ancilla-|0> slice.
inline std::vector<ImageTensor> uss_sample(const UnitaryMatrix& u, int n_images, int height, int width,
                                           bool with_ancilla, Rng& rng) {
    std::size_t dim = u.dim;
    int n_qubits = 0;
    while ((std::size_t(1) << n_qubits) < dim) ++n_qubits;
    if ((std::size_t(1) << n_qubits) != dim) throw std::invalid_argument("uss_sample: non power-of-two dim");
    const std::size_t n_pixels = std::size_t(height) * std::size_t(width);
    if (n_pixels * (with_ancilla ? 2 : 1) > dim)
        throw std::invalid_argument("uss_sample: image does not fit the matrix dimension");
    std::vector<ImageTensor> out;
    out.reserve(std::size_t(n_images));
    for (int i = 0; i < n_images; ++i) {
        const StateVector z = draw_uss_input(n_qubits, rng);
        const std::vector<cplx> y = u.apply(z.amps);
        std::vector<double> moduli(n_pixels);
        for (std::size_t j = 0; j < n_pixels; ++j)
            moduli[j] = std::abs(y[with_ancilla ? 2 * j : j]);
        out.push_back(detail::moduli_to_image(moduli, height, width));
    }
    return out;
}

/// Finite-shot emulation of the same readout: basis outcomes are drawn from
/// |U z|^2 and pixel moduli estimated as sqrt(counts/shots).
inline std::vector<ImageTensor> uss_sample_shots(const UnitaryMatrix& u, int n_images, int height,
                                                 int width, int shots, bool with_ancilla, Rng& rng) {
    if (shots < 1) throw std::invalid_argument("uss_sample_shots: need at least one shot");
    std::size_t dim = u.dim;
    const std::size_t n_pixels = std::size_t(height) * std::size_t(width);
    int n_qubits = 0;
    while ((std::size_t(1) << n_qubits) < dim) ++n_qubits;
    std::vector<ImageTensor> out;
    out.reserve(std::size_t(n_images));
    std::vector<double> cdf(dim);
    std::vector<std::size_t> counts(dim);
    for (int i = 0; i < n_images; ++i) {
        const StateVector z = draw_uss_input(n_qubits, rng);
        const std::vector<cplx> y = u.apply(z.amps);
        double acc = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            acc += std::norm(y[j]);
            cdf[j] = acc;
        }
        std::fill(counts.begin(), counts.end(), std::size_t(0));
        for (int s = 0; s < shots; ++s) {
            const double r = uniform_real(rng) * acc;
            const std::size_t j =
                std::size_t(std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
            ++counts[std::min(j, dim - 1)];
        }
        std::vector<double> moduli(n_pixels);
        for (std::size_t j = 0; j < n_pixels; ++j)
            moduli[j] = std::sqrt(double(counts[with_ancilla ? 2 * j : j]) / double(shots));
        out.push_back(detail::moduli_to_image(moduli, height, width));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: header (magic, version, dim, tau, checksum) followed by
// row-major complex doubles (re, im), little-endian.

inline constexpr char kUnitaryMagic[8] = {'Q', 'D', 'D', 'U', 'N', 'I', '1', '\0'};

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline void save_unitary(const std::string& path, const UnitaryMatrix& u, int tau) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_unitary: cannot open " + path);
    const std::uint32_t version = 1;
    const std::uint64_t dim = u.dim;
    const std::uint64_t tau64 = std::uint64_t(tau);
    const std::uint64_t checksum = fnv1a64(u.entries.data(), u.entries.size() * sizeof(cplx));
    f.write(kUnitaryMagic, sizeof(kUnitaryMagic));
    f.write(reinterpret_cast<const char*>(&version), sizeof(version));
    f.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    f.write(reinterpret_cast<const char*>(&tau64), sizeof(tau64));
    f.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    f.write(reinterpret_cast<const char*>(u.entries.data()),
            std::streamsize(u.entries.size() * sizeof(cplx)));
    if (!f) throw std::runtime_error("save_unitary: write failed for " + path);
}

struct LoadedUnitary {
    UnitaryMatrix matrix;
    int tau = 0;
};

inline LoadedUnitary load_unitary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_unitary: cannot open " + path);
    char magic[8];
    std::uint32_t version = 0;
    std::uint64_t dim = 0, tau = 0, checksum = 0;
    f.read(magic, sizeof(magic));
    f.read(reinterpret_cast<char*>(&version), sizeof(version));
    f.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    f.read(reinterpret_cast<char*>(&tau), sizeof(tau));
    f.read(reinterpret_cast<char*>(&checksum), sizeof(checksum));
    if (!f || std::memcmp(magic, kUnitaryMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_unitary: bad magic in " + path);
    if (version != 1) throw std::runtime_error("load_unitary: unsupported version");
    LoadedUnitary out;
    out.matrix = UnitaryMatrix(std::size_t(dim));
    out.tau = int(tau);
    f.read(reinterpret_cast<char*>(out.matrix.entries.data()),
           std::streamsize(out.matrix.entries.size() * sizeof(cplx)));
    if (!f) throw std::runtime_error("load_unitary: truncated file " + path);
    if (fnv1a64(out.matrix.entries.data(), out.matrix.entries.size() * sizeof(cplx)) != checksum)
        throw std::runtime_error("load_unitary: checksum mismatch in " + path);
    return out;
}

}  // namespace qdd
