#pragma once

// The Q-Dense model, the quantum convolution primitive, the QU-Net, and mask
// guidance.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qdd/embed.hpp"
#include "qdd/image.hpp"
#include "qdd/state.hpp"
#include "qdd/vqc.hpp"

namespace qdd {

inline int ceil_log2(int n) {
    if (n < 1) throw std::invalid_argument("ceil_log2: positive argument required");
    int bits = 0;
    while ((1 << bits) < n) ++bits;
    return bits;
}

// ---------------------------------------------------------------------------
// Q-Dense

struct QDenseConfig {
    int n_image_qubits = 6;
    int n_layers = 47;
    bool guided = false;
    int n_reuploads = 0;
    int n_classes = 2;

    int circuit_qubits() const { return n_image_qubits + (guided ? 1 : 0); }
    std::size_t param_count() const { return std::size_t(n_layers) * 3 * std::size_t(circuit_qubits()); }
};

class QDenseModel {
  public:
    explicit QDenseModel(QDenseConfig cfg) : cfg_(cfg) {
        if (cfg.n_image_qubits < 2) throw std::invalid_argument("QDenseModel: need at least 2 image qubits");
        if (cfg.n_layers < 0) throw std::invalid_argument("QDenseModel: negative layer count");
        if (!cfg.guided && cfg.n_reuploads > 0)
            throw std::invalid_argument("QDenseModel: re-uploads require guidance");
        const auto reups = evenly_spaced_reuploads(std::max(cfg.n_layers, 1), cfg.n_reuploads);
        const EntanglingStack stack(cfg.circuit_qubits(), cfg.n_layers, {}, reups);
        if (cfg.guided) {
            const int ancilla = cfg.circuit_qubits() - 1;
            circuits_.reserve(std::size_t(cfg.n_classes));
            for (int c = 0; c < cfg.n_classes; ++c)
                circuits_.push_back(cfg.n_layers == 0
                                        ? CircuitSpec{cfg.circuit_qubits(), {}, {}}
                                        : build_entangling_circuit(stack, ancilla, label_angle(c, cfg.n_classes)));
        } else {
            circuits_.push_back(cfg.n_layers == 0 ? CircuitSpec{cfg.circuit_qubits(), {}, {}}
                                                  : build_entangling_circuit(stack));
        }
    }

    const QDenseConfig& config() const { return cfg_; }
    std::size_t param_count() const { return cfg_.param_count(); }

    const CircuitSpec& circuit(std::optional<int> label) const {
        if (!cfg_.guided) return circuits_.front();
        if (!label) throw std::invalid_argument("QDenseModel: guided model requires a label");
        if (*label < 0 || *label >= cfg_.n_classes) throw std::out_of_range("QDenseModel: label out of range");
        return circuits_[std::size_t(*label)];
    }

    Embedded embed(const ImageTensor& image, std::optional<int> label) const {
        check_image(image);
        if (cfg_.guided) {
            if (!label) throw std::invalid_argument("QDenseModel: guided model requires a label");
            return embed_guided(image.values, cfg_.n_image_qubits, *label, cfg_.n_classes);
        }
        return amplitude_embed(image.values, cfg_.n_image_qubits);
    }

    /// Embed, run the entangling stack, read out the image qubits, truncate
    /// to the pixel count, rescale by the input norm, reshape.
    ImageTensor forward(std::span<const double> params, const ImageTensor& image,
                        std::optional<int> label = std::nullopt) const {
        const Embedded in = embed(image, label);
        const StateVector out = apply_circuit(in.state, circuit(label), params);
        const std::vector<double> pixels =
            readout(out, cfg_.n_image_qubits, int(image.size()), in.norm);
        ImageTensor result = image_from_flat(pixels, image.channels, image.height, image.width);
        result.value_range = image.value_range;
        return result;
    }

  private:
    void check_image(const ImageTensor& image) const {
        if (image.size() > (std::size_t(1) << cfg_.n_image_qubits))
            throw std::invalid_argument("QDenseModel: image does not fit the image qubits");
    }

    QDenseConfig cfg_;
    std::vector<CircuitSpec> circuits_;  // per class when guided, else one
};

/// Label-encoding stripes added to U-Net inputs:
/// mask value at row y = 0.1 * sin(class_index + y / 20), constant per row.
inline ImageTensor guidance_mask(int class_index, int height, int width) {
    ImageTensor mask(1, height, width);
    for (int y = 0; y < height; ++y) {
        const double v = 0.1 * std::sin(double(class_index) + double(y) / 20.0);
        for (int x = 0; x < width; ++x) mask.at(0, y, x) = v;
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Quantum convolution

struct QConvConfig {
    int c_in = 1;
    int c_out = 1;
    int kernel = 3;
    int n_layers = 1;

    /// max(ceil(log2(c_in*k^2)), ceil(log2(c_out))), at least one wire.
    int wires() const { return std::max({ceil_log2(c_in * kernel * kernel), ceil_log2(c_out), 1}); }
    int measured_wires() const { return ceil_log2(c_out); }
    std::size_t param_count() const { return std::size_t(n_layers) * 3 * std::size_t(wires()); }
};

namespace detail {

/// Patch circuit: an entangling stack, or plain ROT layers on one wire where
/// no entangler is definable.
inline CircuitSpec build_patch_circuit(int wires, int n_layers) {
    if (wires >= 2) return build_entangling_circuit(EntanglingStack(wires, n_layers));
    CircuitSpec c;
    c.n_qubits = 1;
    for (int l = 0; l < n_layers; ++l) {
        c.gates.push_back(Gate::rot(0));
        c.close_layer();
    }
    return c;
}

}  // namespace detail

/// Stride-1, zero-padded convolution: every c_in x k x k slice is amplitude
/// embedded, run through the shared patch circuit, and read out as c_out
/// probabilities rescaled by the slice norm. All-zero slices yield zeros.
inline ImageTensor qconv2d(const QConvConfig& cfg, std::span<const double> params,
                           const ImageTensor& input) {
    if (input.channels != cfg.c_in) throw std::invalid_argument("qconv2d: channel mismatch");
    if (params.size() != cfg.param_count()) throw std::invalid_argument("qconv2d: parameter-count mismatch");
    const CircuitSpec circuit = detail::build_patch_circuit(cfg.wires(), cfg.n_layers);
    const int k = cfg.kernel;
    const int pad = (k - 1) / 2;
    ImageTensor out(cfg.c_out, input.height, input.width);
    std::vector<double> slice(std::size_t(cfg.c_in) * k * k);
    for (int y = 0; y < input.height; ++y) {
        for (int x = 0; x < input.width; ++x) {
            std::size_t s = 0;
            double sq = 0.0;
            for (int c = 0; c < cfg.c_in; ++c) {
                for (int dy = 0; dy < k; ++dy) {
                    for (int dx = 0; dx < k; ++dx, ++s) {
                        const int yy = y + dy - pad, xx = x + dx - pad;
                        const double v = (yy < 0 || yy >= input.height || xx < 0 || xx >= input.width)
                                             ? 0.0
                                             : input.at(c, yy, xx);
                        slice[s] = v;
                        sq += v * v;
                    }
                }
            }
            if (sq == 0.0) continue;  // zero slice cannot be embedded; output stays zero
            const Embedded e = amplitude_embed(slice, cfg.wires());
            const StateVector state = apply_circuit(e.state, circuit, params);
            const std::vector<double> vals = readout(state, cfg.measured_wires(), cfg.c_out, e.norm);
            for (int c = 0; c < cfg.c_out; ++c) out.at(c, y, x) = vals[std::size_t(c)];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// QU-Net

struct QUNetConfig {
    std::vector<int> ladder;  // encoder channel counts, strictly increasing
    int conv_layers = 8;      // entangling layers per quantum convolution
    int kernel = 3;
    bool guided = false;
    int n_classes = 2;

    int depth() const { return int(ladder.size()); }
};

class QUNetModel {
  public:
    explicit QUNetModel(QUNetConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.ladder.empty()) throw std::invalid_argument("QUNetModel: empty channel ladder");
        for (std::size_t i = 1; i < cfg_.ladder.size(); ++i)
            if (cfg_.ladder[i] <= cfg_.ladder[i - 1])
                throw std::invalid_argument("QUNetModel: channel ladder must be strictly increasing");
        const int d = cfg_.depth();
        int c_prev = 1;
        for (int i = 0; i < d; ++i) {
            blocks_.push_back({c_prev, cfg_.ladder[std::size_t(i)], cfg_.kernel, cfg_.conv_layers});
            c_prev = cfg_.ladder[std::size_t(i)];
        }
        for (int i = d - 2; i >= 0; --i)
            blocks_.push_back({cfg_.ladder[std::size_t(i + 1)] + cfg_.ladder[std::size_t(i)],
                               cfg_.ladder[std::size_t(i)], cfg_.kernel, cfg_.conv_layers});
        blocks_.push_back({cfg_.ladder[0], 1, 1, cfg_.conv_layers});  // 1-channel projection
        offsets_.reserve(blocks_.size() + 1);
        std::size_t total = 0;
        for (const auto& b : blocks_) {
            offsets_.push_back(total);
            total += b.param_count();
        }
        offsets_.push_back(total);
    }

    const QUNetConfig& config() const { return cfg_; }
    std::size_t param_count() const { return offsets_.back(); }
    const std::vector<QConvConfig>& blocks() const { return blocks_; }

    ImageTensor forward(std::span<const double> params, const ImageTensor& image,
                        std::optional<int> label = std::nullopt) const {
        if (params.size() != param_count()) throw std::invalid_argument("QUNetModel: parameter-count mismatch");
        if (image.channels != 1) throw std::invalid_argument("QUNetModel: single-channel input expected");
        const int d = cfg_.depth();
        const int div = 1 << (d - 1);
        if (image.height % div != 0 || image.width % div != 0)
            throw std::invalid_argument("QUNetModel: image dimensions must be divisible by 2^(depth-1)");

        ImageTensor cur = image;
        if (cfg_.guided) {
            if (!label) throw std::invalid_argument("QUNetModel: guided model requires a label");
            const ImageTensor mask = guidance_mask(*label, image.height, image.width);
            for (std::size_t i = 0; i < cur.values.size(); ++i) cur.values[i] += mask.values[i];
        }

        std::vector<ImageTensor> skips;
        std::size_t block = 0;
        for (int i = 0; i < d; ++i) {
            cur = qconv2d(blocks_[block], block_params(params, block), cur);
            ++block;
            if (i < d - 1) {
                skips.push_back(cur);
                cur = avg_pool2(cur);
            }
        }
        for (int i = d - 2; i >= 0; --i) {
            cur = concat_channels(upsample2(cur), skips[std::size_t(i)]);
            cur = qconv2d(blocks_[block], block_params(params, block), cur);
            ++block;
        }
        cur = qconv2d(blocks_[block], block_params(params, block), cur);
        cur.value_range = image.value_range;
        return cur;
    }

    static ImageTensor avg_pool2(const ImageTensor& in) {
        ImageTensor out(in.channels, in.height / 2, in.width / 2);
        for (int c = 0; c < in.channels; ++c)
            for (int y = 0; y < out.height; ++y)
                for (int x = 0; x < out.width; ++x)
                    out.at(c, y, x) = (in.at(c, 2 * y, 2 * x) + in.at(c, 2 * y, 2 * x + 1) +
                                       in.at(c, 2 * y + 1, 2 * x) + in.at(c, 2 * y + 1, 2 * x + 1)) /
                                      4.0;
        return out;
    }

    static ImageTensor upsample2(const ImageTensor& in) {
        ImageTensor out(in.channels, in.height * 2, in.width * 2);
        for (int c = 0; c < in.channels; ++c)
            for (int y = 0; y < out.height; ++y)
                for (int x = 0; x < out.width; ++x) out.at(c, y, x) = in.at(c, y / 2, x / 2);
        return out;
    }

    static ImageTensor concat_channels(const ImageTensor& a, const ImageTensor& b) {
        if (a.height != b.height || a.width != b.width)
            throw std::invalid_argument("concat_channels: spatial shape mismatch");
        ImageTensor out(a.channels + b.channels, a.height, a.width);
        std::copy(a.values.begin(), a.values.end(), out.values.begin());
        std::copy(b.values.begin(), b.values.end(), out.values.begin() + std::ptrdiff_t(a.values.size()));
        return out;
    }

  private:
    std::span<const double> block_params(std::span<const double> params, std::size_t block) const {
        return params.subspan(offsets_[block], offsets_[block + 1] - offsets_[block]);
    }

    QUNetConfig cfg_;
    std::vector<QConvConfig> blocks_;   // encoder top-down, decoder bottom-up, projection
    std::vector<std::size_t> offsets_;  // flat-parameter slice per block
};

}  // namespace qdd
