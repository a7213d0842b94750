#pragma once

// Encoding of classical image data and class labels into quantum states.
//
// Amplitude embedding writes normalized pixel values directly into the state
// (no state-preparation circuit is synthesized). The guidance ancilla is the
// last qubit, i.e. the least significant bit of the basis index.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

#include "qdd/state.hpp"

namespace qdd {

struct Embedded {
    StateVector state;
    double norm = 0.0;  // Euclidean norm of the raw input, kept for rescaling
};

/// amplitudes[i] = pixels[i] / ||pixels||, zero-padded up to 2^n_qubits.
inline Embedded amplitude_embed(std::span<const double> pixels, int n_qubits) {
    if (pixels.empty()) throw std::invalid_argument("amplitude_embed: empty input");
    const std::size_t dim = std::size_t(1) << n_qubits;
    if (pixels.size() > dim)
        throw std::invalid_argument("amplitude_embed: " + std::to_string(pixels.size()) +
                                    " values do not fit into " + std::to_string(n_qubits) + " qubits");
    double sq = 0.0;
    for (double p : pixels) sq += p * p;
    if (sq == 0.0) throw std::invalid_argument("amplitude_embed: zero-norm input (degenerate image)");
    const double nrm = std::sqrt(sq);
    Embedded e{StateVector(n_qubits), nrm};
    e.state.amps[0] = 0.0;
    for (std::size_t i = 0; i < pixels.size(); ++i) e.state.amps[i] = pixels[i] / nrm;
    return e;
}

/// class_index * 2*pi / n_classes; labels 0 and 1 of a two-class problem map
/// to angles 0 and pi.
inline double label_angle(int class_index, int n_classes) {
    if (n_classes < 1) throw std::invalid_argument("label_angle: n_classes must be positive");
    if (class_index < 0 || class_index >= n_classes)
        throw std::out_of_range("label_angle: class index " + std::to_string(class_index) +
                                " not in [0, " + std::to_string(n_classes) + ")");
    return double(class_index) * 2.0 * std::numbers::pi / double(n_classes);
}

/// |image> (x) |0>, with the ancilla appended as the last qubit.
inline StateVector tensor_with_zero_ancilla(const StateVector& s) {
    StateVector out(s.n_qubits + 1);
    out.amps[0] = 0.0;
    for (std::size_t j = 0; j < s.amps.size(); ++j) out.amps[2 * j] = s.amps[j];
    return out;
}

/// Amplitude-embedded image on the image qubits plus an ancilla prepared as
/// RX(label_angle)|0>.
inline Embedded embed_guided(std::span<const double> pixels, int n_image_qubits, int class_index,
                             int n_classes) {
    Embedded img = amplitude_embed(pixels, n_image_qubits);
    const double angle = label_angle(class_index, n_classes);
    StateVector out = tensor_with_zero_ancilla(img.state);
    apply_gate_in_place(out, Gate::rx(out.n_qubits - 1, angle, true));
    return {std::move(out), img.norm};
}

}  // namespace qdd
